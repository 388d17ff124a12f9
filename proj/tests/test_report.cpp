#include <sstream>

#include "darth/errors.hpp"
#include "darth/report.hpp"
#include "darth/sweep.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::report;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

AppOptions quick(std::uint64_t seed = 1) {
    AppOptions o;
    o.chip.noise = ace::NoiseConfig::off();
    o.seed = seed;
    return o;
}

}  // namespace

TEST_CASE("CSV headers are stable") {
    const auto r = run_aes(quick());
    std::ostringstream e;
    write_energy_csv(e, r);
    CHECK(first_line(e.str()) == "component,energy_pj,share");
    CHECK(e.str().find("\ntotal,") != std::string::npos);

    SweepSpec spec;
    spec.families = {dce::LogicFamily::Oscar};
    std::ostringstream s;
    write_sweep_csv(s, run_sweep(spec));
    CHECK(first_line(s.str()) == "config,family,analog_arrays,digital_arrays,lanes,cycles_per_block,blocks_per_s,normalized");

    std::ostringstream a;
    write_adc_csv(a, {});
    CHECK(first_line(a.str()) == "app,adc,items,cycles,throughput_per_s,energy_pj,mix_conversion_cycles");
}

TEST_CASE("energy components add up to the reported total") {
    for (const auto& r : {run_aes(quick()), run_cnn(quick()), run_llm(quick())}) {
        double sum = 0;
        for (double v : r.energy.pj) sum += v;
        CHECK(sum == r.energy_total());
        const auto j = r.to_json();
        double js = 0;
        for (const auto& [k, v] : j["energy_pj"].items()) js += v.get<double>();
        CHECK(js == j["energy_total_pj"].get<double>());
        CHECK(r.oracle_mismatches == 0);
    }
}

TEST_CASE("app reports are deterministic for a seed") {
    auto noisy = quick(7);
    noisy.chip.noise = ace::NoiseConfig::defaults();
    noisy.chip.noise.rng_seed = 7;
    CHECK(run_aes(noisy).to_json().dump() == run_aes(noisy).to_json().dump());
    CHECK(run_cnn(quick(7)).to_json().dump() == run_cnn(quick(7)).to_json().dump());
}

TEST_CASE("AES workload starts with the known-answer block") {
    const auto w = aes_workload(5, 3);
    REQUIRE(w.plaintext.size() == 3);
    CHECK(w.plaintext[0] == apps::parse_block("00112233445566778899aabbccddeeff"));
    CHECK(w.keys[0] == apps::parse_block("000102030405060708090a0b0c0d0e0f"));
    CHECK(aes_workload(5, 3).plaintext == w.plaintext);
    CHECK(aes_workload(6, 3).plaintext[1] != w.plaintext[1]);
}

TEST_CASE("sweep rows and normalization") {
    const auto rows = run_sweep({});
    CHECK(rows.size() == 2 * (9 + 3));
    CHECK(find_row(rows, "D", dce::LogicFamily::Oscar).normalized == 1.0);
    for (const auto& r : rows) {
        CHECK(r.analog_arrays + r.digital_arrays == 640);
        CHECK(r.blocks_per_s > 0);
    }
    const auto h = hybrid_curve(rows, dce::LogicFamily::Oscar);
    REQUIRE(h.size() == 9);
    for (int k = 0; k < 9; ++k) CHECK(h[static_cast<std::size_t>(k)].analog_arrays == 64 * (k + 1));
    CHECK_THROWS_AS(find_row(rows, "H-10", dce::LogicFamily::Oscar), IndexError);
}

TEST_CASE("sweep budget errors") {
    SweepSpec s;
    s.budget = 641;
    CHECK_THROWS_AS(run_sweep(s), BudgetError);
    s.budget = 320;  // 32-array shares
    CHECK_THROWS_AS(run_sweep(s), BudgetError);
    s = {};
    s.families.clear();
    CHECK_THROWS_AS(run_sweep(s), BudgetError);
    s = {};
    s.steps = 0;
    CHECK_THROWS_AS(run_sweep(s), BudgetError);
}

TEST_CASE("unimodal shape check") {
    CHECK(is_unimodal({1, 2, 3, 2, 1}));
    CHECK(is_unimodal({1, 2, 2, 1}));
    CHECK(is_unimodal({3, 2, 1}));
    CHECK(is_unimodal({1, 2, 3}));
    CHECK_FALSE(is_unimodal({1, 3, 2, 3}));
    CHECK_FALSE(is_unimodal({}));
}

TEST_CASE("ADC study rows pair SAR with ramp") {
    const auto rows = run_adc_study({"aes"}, 1, ace::NoiseConfig::off());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].adc == ace::AdcKind::Sar);
    CHECK(rows[1].adc == ace::AdcKind::Ramp);
    CHECK(rows[1].mix_conversion_cycles == 4);
    CHECK_THROWS_AS(run_adc_study({"gpu"}, 1, ace::NoiseConfig::off()), ConfigError);
}
