#include <random>
#include <sstream>

#include "darth/dce.hpp"
#include "darth/errors.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::dce;

namespace {

std::vector<std::int64_t> random_values(std::mt19937_64& rng, int n, int width) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = sign_extend(rng() & low_mask(width), width);
    return v;
}

std::int64_t wrap(std::int64_t v, int width) { return sign_extend(static_cast<std::uint64_t>(v) & low_mask(width), width); }

// Host model of every macro on signed `width`-bit lanes.
std::int64_t host_macro(MacroKind k, std::int64_t a, std::int64_t b, std::int64_t c, int width, int shift, bool arith) {
    const std::uint64_t m = low_mask(width);
    const auto ua = static_cast<std::uint64_t>(a) & m, ub = static_cast<std::uint64_t>(b) & m;
    switch (k) {
        case MacroKind::Not: return wrap(static_cast<std::int64_t>(~ua), width);
        case MacroKind::And: return wrap(static_cast<std::int64_t>(ua & ub), width);
        case MacroKind::Or: return wrap(static_cast<std::int64_t>(ua | ub), width);
        case MacroKind::Xor: return wrap(static_cast<std::int64_t>(ua ^ ub), width);
        case MacroKind::Add: return wrap(a + b, width);
        case MacroKind::Sub: return wrap(a - b, width);
        case MacroKind::Copy: return a;
        case MacroKind::Shl: return wrap(static_cast<std::int64_t>(ua << shift), width);
        case MacroKind::Shr: return arith ? (a >> shift) : wrap(static_cast<std::int64_t>(ua >> shift), width);
        case MacroKind::CmpGe: return a >= b ? -1 : 0;
        case MacroKind::Mux: return wrap(static_cast<std::int64_t>((ua & ub) | (~ua & static_cast<std::uint64_t>(c) & m)), width);
    }
    return 0;
}

}  // namespace

TEST_CASE("every macro matches host integer arithmetic") {
    std::mt19937_64 rng(11);
    for (LogicFamily fam : {LogicFamily::Oscar, LogicFamily::Ideal}) {
        DceParams p;
        p.family = fam;
        Dce dce(p);
        auto& pipe = dce.pipeline(0);
        for (MacroKind k : {MacroKind::Not, MacroKind::And, MacroKind::Or, MacroKind::Xor, MacroKind::Add, MacroKind::Sub,
                            MacroKind::Copy, MacroKind::Shl, MacroKind::Shr, MacroKind::CmpGe, MacroKind::Mux}) {
            for (int trial = 0; trial < 30; ++trial) {
                const int width = std::uniform_int_distribution<int>(2, 64)(rng);
                // CMP_GE needs one bit of headroom for the difference.
                auto a = random_values(rng, 64, k == MacroKind::CmpGe ? width - 1 : width);
                auto b = random_values(rng, 64, k == MacroKind::CmpGe ? width - 1 : width);
                auto c = random_values(rng, 64, width);
                pipe.write_planes(1, a, width);
                pipe.write_planes(2, b, width);
                pipe.write_planes(3, c, width);
                const int shift = std::uniform_int_distribution<int>(0, width - 1)(rng);
                const bool arith = rng() & 1;
                const bool in_place = trial % 3 == 0;
                MacroArgs args{k, in_place ? 1 : 4, 1, 2, 3, width, shift, arith};
                pipe.run_macro(args);
                const auto got = pipe.peek(args.dst, width);
                for (int e = 0; e < 64; ++e) {
                    const std::int64_t want = host_macro(k, a[e], b[e], c[e], width, shift, arith);
                    REQUIRE_MESSAGE(got[e] == want, macro_name(k), " width=", width, " shift=", shift);
                }
            }
        }
    }
}

TEST_CASE("oscar macros use only NOR microops with the canonical counts") {
    Dce dce;
    auto& pipe = dce.pipeline(0);
    const MacroCosts costs;
    for (MacroKind k : {MacroKind::Not, MacroKind::And, MacroKind::Or, MacroKind::Xor, MacroKind::Add, MacroKind::Sub,
                        MacroKind::Copy, MacroKind::Mux}) {
        MacroArgs args{k, 4, 1, 2, 3, 8};
        for (int bit = 0; bit < 8; ++bit) {
            const auto prog = pipe.bit_program(args, bit);
            CHECK(static_cast<int>(prog.size()) == costs.per_bit(k));
            for (const auto& op : prog) {
                CHECK(op.kind == MicroopKind::Nor);
                CHECK_FALSE((op.dst_array == op.array && (op.dst == op.src1 || op.dst == op.src2)));
            }
        }
    }
    CHECK(costs.add == 9);
    CHECK(costs.xor_ == 5);
}

TEST_CASE("carry chain latency and back-to-back issue gap") {
    for (int width : {8, 16, 32}) {
        Dce dce;
        auto& pipe = dce.pipeline(0);
        const auto r = pipe.run_macro({MacroKind::Add, 4, 1, 2, 0, width});
        // Bit b may start once bit b-1 has produced its carry.
        CHECK(r.latency() == static_cast<Cycle>(9 * width + (width - 1)));
        CHECK(r.array_ops == static_cast<std::uint64_t>(9 * width));
        // Independent ADDs stream through the pipeline one ADD-program apart.
        const auto r2 = pipe.run_macro({MacroKind::Add, 5, 1, 2, 0, width});
        CHECK(r2.start - r.start == 9);
    }
}

TEST_CASE("bitwise macros pipeline as a wave") {
    Dce dce;
    auto& pipe = dce.pipeline(0);
    const auto r = pipe.run_macro({MacroKind::Xor, 4, 1, 2, 0, 32});
    CHECK(r.latency() == 5 + 31);
}

TEST_CASE("dependent macro waits per bit, not for the whole register") {
    Dce dce;
    auto& pipe = dce.pipeline(0);
    const auto r1 = pipe.run_macro({MacroKind::Xor, 4, 1, 2, 0, 16});
    const auto r2 = pipe.run_macro({MacroKind::Xor, 5, 4, 2, 0, 16});
    CHECK(r2.start == r1.start + 5);
    CHECK(r2.end == r1.end + 5);
}

TEST_CASE("shift direction and reversal") {
    Dce dce;
    auto& pipe = dce.pipeline(0);
    CHECK(pipe.direction() == Direction::Forward);
    const auto r = pipe.run_macro({MacroKind::Shr, 4, 1, 1, 0, 16, 3});
    CHECK(pipe.direction() == Direction::Reversed);
    CHECK(r.latency() == 64 + 3);  // drain for reversal, then 3 steps
    const auto r2 = pipe.run_macro({MacroKind::Add, 5, 1, 2, 0, 16});
    CHECK(pipe.direction() == Direction::Forward);
    CHECK(r2.start == r.end);
    CHECK(r2.latency() == 64 + 9 * 16 + 15);
}

TEST_CASE("NOR aliasing and reserved registers") {
    Dce dce;
    auto& pipe = dce.pipeline(0);
    CHECK_THROWS_AS(pipe.exec_nor({MicroopKind::Nor, 0, 0, 1, 2, 1}), ColumnConflictError);
    CHECK_NOTHROW(pipe.exec_nor({MicroopKind::Nor, 0, 1, 1, 2, 1}));
    CHECK_THROWS_AS(pipe.exec_nor({MicroopKind::Nor, 0, 0, 1, 2, kOnesColumn}), AddressRangeError);
    pipe.set_reserved(true);
    std::vector<std::int64_t> v(64, 1);
    CHECK_THROWS_AS(pipe.write_planes(3, v, 8), ReservedRegisterError);
    CHECK_THROWS_AS(pipe.run_macro({MacroKind::Add, 4, 1, 2, 0, 8}), ReservedRegisterError);
    pipe.set_mvm_writer(true);
    CHECK_NOTHROW(pipe.write_planes(3, v, 8));
}

TEST_CASE("element load gathers from a table pipeline") {
    Dce dce;
    auto& table = dce.pipeline(1);
    for (int reg = 0; reg < 4; ++reg) {
        std::vector<std::int64_t> vals(64);
        for (int e = 0; e < 64; ++e) vals[e] = (255 - (reg * 64 + e)) & 0xff;
        table.write_planes(reg, vals, 8);
    }
    auto& pipe = dce.pipeline(0);
    std::vector<std::int64_t> addr(64);
    for (int e = 0; e < 64; ++e) addr[e] = static_cast<std::int64_t>((e * 37 + 5) & 0xff) << 8;
    pipe.write_planes(2, addr, 16);
    DigitalPipeline::ElementLoad load{3, 2, 8, 8, 0, 8, 4};
    const auto r = pipe.element_load(load, table);
    CHECK(r.latency() == 64 * 3);
    const auto got = pipe.peek(3, 12, false);
    for (int e = 0; e < 64; ++e) {
        const int a = (e * 37 + 5) & 0xff;
        CHECK(((got[e] >> 4) & 0xff) == (255 - a));
    }
    load.source_base_reg = 60;
    CHECK_THROWS_AS(pipe.element_load(load, table), AddressRangeError);
}

TEST_CASE("trace lines have the documented columns") {
    std::ostringstream trace;
    Dce dce;
    dce.set_trace(&trace);
    dce.pipeline(0).run_macro({MacroKind::Or, 4, 1, 2, 0, 2});
    std::istringstream in(trace.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(lines == 4);
}

TEST_CASE("thermal cap serializes pipelines beyond the limit") {
    DceParams p;
    p.max_active_pipelines = 1;
    Dce dce(p);
    const auto a = dce.pipeline(0).run_macro({MacroKind::Xor, 4, 1, 2, 0, 8});
    const auto b = dce.pipeline(1).run_macro({MacroKind::Xor, 4, 1, 2, 0, 8});
    CHECK(b.start >= a.end);
    Dce free_dce;
    const auto c = free_dce.pipeline(0).run_macro({MacroKind::Xor, 4, 1, 2, 0, 8});
    const auto d = free_dce.pipeline(1).run_macro({MacroKind::Xor, 4, 1, 2, 0, 8});
    CHECK(d.start == c.start);
}

TEST_CASE("element store scatters into a target pipeline") {
    Dce dce;
    auto& src = dce.pipeline(0);
    auto& dst = dce.pipeline(1);
    std::vector<std::int64_t> vals(64), addr(64);
    for (int e = 0; e < 64; ++e) {
        vals[e] = (e * 3) & 0xff;
        addr[e] = 127 - e;  // lands in register 1 (rows 63..0) when base is 0
    }
    src.write_planes(1, vals, 8);
    src.write_planes(2, addr, 8);
    DigitalPipeline::ElementStore st{1, 2, 0, 7, 0, 8, 0};
    const auto r = src.element_store(st, dst);
    CHECK(r.latency() == 64 * 3);
    const auto got = dst.peek(1, 8, false);
    for (int e = 0; e < 64; ++e) CHECK(got[127 - e - 64] == vals[e]);
}
