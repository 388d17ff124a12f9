#include <random>

#include "darth/errors.hpp"
#include "darth/hct.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::hct;

namespace {

HctParams traced() {
    HctParams p;
    p.record_events = true;
    return p;
}

ace::IntMatrix random_matrix(std::mt19937_64& rng, int rows, int cols, std::int64_t lo, std::int64_t hi) {
    ace::IntMatrix m(rows, cols);
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    for (auto& v : m.data) v = d(rng);
    return m;
}

struct MvmRun {
    std::vector<std::int64_t> y;
    CostReport cost;
};

MvmRun run_mvm(Hct& h, int vc, const std::vector<std::int64_t>& x, const MvmOptions& o) {
    h.pipeline(1).write_planes(0, x, o.input_bits, h.horizon());
    MvmRun out;
    out.cost += h.reserve_pipeline(2, h.horizon());
    out.cost += h.exec_mvm(vc, {1, 0}, {2, 5}, o, h.horizon());
    const int w = o.acc_width ? o.acc_width : mvm_acc_width(h.vacore(vc).element_bits, o.input_bits, h.vacore(vc).inputs);
    out.y = h.pipeline(2).peek(5, w);
    out.y.resize(static_cast<std::size_t>(h.vacore(vc).outputs));
    return out;
}

std::vector<std::int64_t> host_mvm(const ace::IntMatrix& a, const std::vector<std::int64_t>& x) {
    std::vector<std::int64_t> y(static_cast<std::size_t>(a.rows), 0);
    for (int r = 0; r < a.rows; ++r) {
        for (int c = 0; c < a.cols; ++c) y[r] += a.at(r, c) * x[c];
    }
    return y;
}

}  // namespace

TEST_CASE("vACore allocation") {
    Hct h(0, {}, nullptr);
    CHECK(h.alloc_vacore(8, 4).slices == 2);
    CHECK(h.alloc_vacore(8, 2).slices == 4);
    CHECK_THROWS_AS(h.alloc_vacore(4, 1), WidthConflictError);
    CHECK(h.vacore(1).shift(3, 2) == 3 + 2 * 2);
    CHECK(h.vacore(1).shift_schedule[2][3] == 7);
    for (int i = 0; i < 14; ++i) h.alloc_vacore(8, 2);
    CHECK(h.free_arrays() == 2);
    CHECK_THROWS_AS(h.alloc_vacore(8, 2), CapacityError);
}

TEST_CASE("transfer bandwidth") {
    Hct h(0, {}, nullptr);
    CHECK(h.transfer({8}).latency() == 1);
    CHECK(h.transfer({64}).latency() == 8);
    CHECK(h.transfer({0}).latency() == 0);
}

TEST_CASE("identity and small MVMs") {
    Hct h(0, {}, nullptr);
    ace::IntMatrix eye(64, 64);
    for (int i = 0; i < 64; ++i) eye.at(i, i) = 1;
    h.alloc_vacore(8, 2);
    h.program_vacore(0, eye, ace::Remap::Raw);
    std::vector<std::int64_t> x(64);
    for (int i = 0; i < 64; ++i) x[i] = (i * 7) % 256;
    CHECK(run_mvm(h, 0, x, {true, 8}).y == x);

    ace::IntMatrix a(2, 2);
    a.data = {1, 2, 3, 4};
    h.alloc_vacore(8, 2);
    h.program_vacore(1, a, ace::Remap::Raw);
    CHECK(run_mvm(h, 1, {1, 1}, {true, 8}).y == std::vector<std::int64_t>{3, 7});
}

TEST_CASE("optimized and unoptimized MVMs are exact; optimized is faster") {
    std::mt19937_64 rng(21);
    for (int n : {4, 8}) {
        for (int m : {1, 2, 4, 8}) {
            if (m > n) continue;
            for (int in_bits : {2, 4, 8}) {
                for (bool sign : {false, true}) {
                    Hct h(0, {}, nullptr);
                    h.alloc_vacore(n, m);
                    const std::int64_t lim = (std::int64_t{1} << n) - 1;
                    const auto a = random_matrix(rng, 64, 64, -lim, lim);
                    h.program_vacore(0, a, ace::Remap::Raw);
                    std::vector<std::int64_t> x(64);
                    const std::int64_t half = std::int64_t{1} << (in_bits - 1);
                    for (auto& v : x) v = sign ? static_cast<std::int64_t>(rng() % (2 * half)) - half : static_cast<std::int64_t>(rng() % (2 * half));
                    const auto opt = run_mvm(h, 0, x, {true, in_bits, sign});
                    const auto slow = run_mvm(h, 0, x, {false, in_bits, sign});
                    const auto want = host_mvm(a, x);
                    CHECK(opt.y == want);
                    CHECK(slow.y == want);
                    CHECK(opt.cost.latency() < slow.cost.latency());
                }
            }
        }
    }
}

TEST_CASE("reduction ADDs stream at the ADD microop interval") {
    Hct h(0, traced(), nullptr);
    h.alloc_vacore(8, 2);
    std::mt19937_64 rng(22);
    h.program_vacore(0, random_matrix(rng, 64, 64, 0, 255), ace::Remap::Raw);
    std::vector<std::int64_t> x(64, 0x5a);
    h.clear_events();
    run_mvm(h, 0, x, {true, 8});
    std::vector<Cycle> starts;
    for (const auto& e : h.events()) {
        if (e.kind == "ADD") starts.push_back(e.cycle);
    }
    REQUIRE(starts.size() == 31);
    for (std::size_t k = 1; k < starts.size(); ++k) CHECK(starts[k] - starts[k - 1] == 9);
}

TEST_CASE("front-end issues per MVM with and without the injector") {
    std::mt19937_64 rng(23);
    std::vector<std::uint64_t> without;
    for (int n : {2, 4, 8}) {
        for (bool iiu : {true, false}) {
            HctParams p;
            p.iiu_enabled = iiu;
            Frontend fe;
            Hct h(0, p, &fe);
            h.alloc_vacore(n, 1);
            h.program_vacore(0, random_matrix(rng, 64, 64, 0, (1 << n) - 1), ace::Remap::Raw);
            std::vector<std::int64_t> x(64, 1);
            const auto r = run_mvm(h, 0, x, {true, n});
            if (iiu) {
                CHECK(r.cost.frontend_issues <= 3);
                CHECK(r.cost.frontend_issues == 2);
            } else {
                without.push_back(r.cost.frontend_issues);
            }
        }
    }
    // n*n partials per MVM: growth is at least linear in n.
    CHECK(without[1] >= 2 * without[0]);
    CHECK(without[2] >= 2 * without[1]);
}

TEST_CASE("reservation semantics") {
    Hct h(0, {}, nullptr);
    h.reserve_pipeline(3);
    CHECK_THROWS_AS(h.reserve_pipeline(3), AlreadyReservedError);
    std::vector<std::int64_t> v(64, 9);
    CHECK_THROWS_AS(h.pipeline(3).write_planes(1, v, 8), ReservedRegisterError);
    CHECK_THROWS_AS(h.digital(3, {dce::MacroKind::Add, 1, 2, 3, 0, 8}), ReservedRegisterError);
    h.release_pipeline(3);
    CHECK_NOTHROW(h.digital(3, {dce::MacroKind::Add, 1, 2, 3, 0, 8}));

    h.alloc_vacore(8, 8);
    h.program_vacore(0, ace::IntMatrix(4, 4), ace::Remap::Raw);
    CHECK_THROWS_AS(h.exec_mvm(0, {1, 0}, {3, 5}, {}), ReservedRegisterError);
    // The MVM releases the pipeline when it retires.
    h.reserve_pipeline(3);
    h.exec_mvm(0, {1, 0}, {3, 5}, {});
    CHECK_FALSE(h.pipeline(3).reserved());
}

TEST_CASE("partials land in the reserved pipeline only") {
    Hct h(0, traced(), nullptr);
    h.alloc_vacore(8, 4);
    std::mt19937_64 rng(24);
    h.program_vacore(0, random_matrix(rng, 64, 64, 0, 255), ace::Remap::Raw);
    std::vector<std::int64_t> x(64, 3);
    run_mvm(h, 0, x, {true, 8});
    for (const auto& e : h.events()) {
        if (e.kind == "LAND") CHECK(e.a == 2);
    }
}

TEST_CASE("ADC outputs leave as soon as they and the link are ready") {
    Hct h(0, traced(), nullptr);
    h.alloc_vacore(8, 2);
    std::mt19937_64 rng(25);
    h.program_vacore(0, random_matrix(rng, 64, 64, -255, 255), ace::Remap::Raw);
    std::vector<std::int64_t> x(64, 77);
    run_mvm(h, 0, x, {true, 8});
    std::vector<Cycle> adc_done, xfer, xfer_cycles;
    for (const auto& e : h.events()) {
        if (e.kind == "ADC_DONE") adc_done.push_back(e.cycle);
        if (e.kind == "XFER") {
            xfer.push_back(e.cycle);
            xfer_cycles.push_back(static_cast<Cycle>((e.a + 7) / 8));
        }
    }
    REQUIRE(adc_done.size() == xfer.size());
    Cycle link_free = 0;
    for (std::size_t i = 0; i < xfer.size(); ++i) {
        CHECK(xfer[i] == std::max(adc_done[i], link_free));
        link_free = xfer[i] + xfer_cycles[i];
    }
}

TEST_CASE("moving a matrix between domains") {
    std::mt19937_64 rng(26);
    Hct h(0, {}, nullptr);
    h.alloc_vacore(8, 2);
    const auto a = random_matrix(rng, 64, 64, -255, 255);
    h.program_vacore(0, a, ace::Remap::Raw);
    const auto a2d = h.move_matrix_between_domains(0, Domain::AnalogToDigital, {10, 0});
    // Input column c lands as register c % 48 of pipeline 10 + c / 48.
    for (int c = 0; c < 64; ++c) {
        const auto col = h.pipeline(10 + c / 48).peek(c % 48, 9);
        for (int r = 0; r < 64; ++r) REQUIRE(col[r] == a.at(r, c));
    }
    CHECK(h.array_mode(0) == ArrayMode::Digital);
    h.pipeline(1).write_planes(0, std::vector<std::int64_t>(64, 1), 8);
    h.reserve_pipeline(2);
    CHECK_THROWS_AS(h.exec_mvm(0, {1, 0}, {2, 5}, {}), ArbiterConflictError);
    h.release_pipeline(2);
    const auto d2a = h.move_matrix_between_domains(0, Domain::DigitalToAnalog, {10, 0});
    CHECK(d2a.reprogrammed_arrays == 4);
    CostTable t;
    CHECK(d2a.energy(t).total() > a2d.energy(t).total());
    CHECK(d2a.latency() > a2d.latency());
    std::vector<std::int64_t> x(64);
    for (auto& v : x) v = static_cast<std::int64_t>(rng() % 256);
    CHECK(run_mvm(h, 0, x, {true, 8}).y == host_mvm(a, x));
}
