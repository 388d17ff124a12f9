#include <algorithm>
#include <random>

#include "darth/core.hpp"
#include "darth/cost.hpp"
#include "darth/errors.hpp"
#include "doctest.h"

using namespace darth;

TEST_CASE("fixed point round trip over every raw code") {
    for (int bits : {2, 4, 8, 12}) {
        for (bool sign : {false, true}) {
            FixedPointSpec spec(bits, sign, std::min(bits, 3));
            for (std::int64_t raw = spec.min_raw(); raw <= spec.max_raw(); ++raw) {
                const double v = static_cast<double>(raw) / static_cast<double>(1 << spec.frac_bits);
                const BitPattern p = encode_fixed(v, spec);
                CHECK(p.width == bits);
                CHECK(decode_fixed(p, spec) == doctest::Approx(v));
                CHECK(decode_raw(encode_raw(raw, spec), spec) == raw);
            }
        }
    }
}

TEST_CASE("fixed point overflow and rounding") {
    FixedPointSpec s8(8, true, 0);
    CHECK_THROWS_AS(encode_fixed(128.0, s8), OverflowError);
    CHECK_THROWS_AS(encode_fixed(-129.0, s8), OverflowError);
    CHECK(decode_fixed(encode_fixed(-128.0, s8), s8) == -128.0);
    CHECK(decode_fixed(encode_fixed(2.4, s8), s8) == 2.0);
    FixedPointSpec u4(4, false, 2);
    CHECK(decode_fixed(encode_fixed(1.3, u4), u4) == doctest::Approx(1.25));
    CHECK_THROWS_AS(encode_fixed(-0.5, u4), OverflowError);
}

TEST_CASE("slice and recombine is the identity") {
    std::mt19937_64 rng(7);
    for (int n : {4, 8, 16}) {
        for (int m : {1, 2, 4, 8}) {
            if (m > n) continue;
            SlicePlan plan(n, m);
            for (int trial = 0; trial < 200; ++trial) {
                const std::uint64_t v = rng() & low_mask(n);
                const auto slices = slice_value(BitPattern{v, n}, plan);
                REQUIRE(static_cast<int>(slices.size()) == plan.slice_count());
                std::vector<std::int64_t> partials(slices.begin(), slices.end());
                for (auto s : slices) CHECK(s <= plan.slice_mask());
                CHECK(static_cast<std::uint64_t>(recombine_slices(partials, plan)) == v);
            }
        }
    }
    CHECK_THROWS_AS(slice_value(BitPattern{1, 4}, SlicePlan(8, 2)), PlanMismatchError);
}

TEST_CASE("striped layout places bit b of element e in array b, row e") {
    StripedLayout layout{64, 64, 5};
    const auto loc = layout.locate(17, 3);
    CHECK(loc == StripedLocation{3, 17, 5});
    CHECK_THROWS((void)layout.locate(64, 0));
    CHECK_THROWS((void)layout.locate(0, 64));
}

TEST_CASE("cost table overrides") {
    CostTable t;
    t.set("cost.ramp_conversion_cycles", 128);
    CHECK(t.ramp_conversion_cycles == 128);
    CHECK_THROWS_AS(t.set("cost.no_such_field", 1), ConfigError);
    CHECK_THROWS_AS(t.set("cost.sar_adc_pj", -1), ConfigError);
    Config c = Config::parse("# comment\ncost.frontend_pj = 50\nadc = ramp\n");
    apply_cost_overrides(c, t);
    CHECK(t.frontend_pj == 50.0);
    CHECK(c.get_string("adc", "sar") == "ramp");
}

TEST_CASE("energy breakdown sums to total exactly") {
    CostReport r;
    r.array_ops = 1234;
    r.pipeline_busy_cycles = 99;
    r.sar_unit_cycles = 32;
    r.row_active_cycles = 7;
    r.conversions = 64;
    r.frontend_cycles = 3;
    r.reprogrammed_arrays = 1;
    const auto e = r.energy(CostTable{});
    double sum = 0;
    for (int i = 0; i < kComponentCount; ++i) sum += e.pj[i];
    CHECK(sum == e.total());
    CHECK(e[Component::DigitalArray] == 1234 * 8.0);
}
