#include <cmath>
#include <random>

#include "darth/dce_kernels.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::dce;

namespace {

std::vector<std::int64_t> uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    std::vector<std::int64_t> v(64);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("multiply matches host products") {
    std::mt19937_64 rng(3);
    Dce dce;
    auto& p = dce.pipeline(0);
    for (int trial = 0; trial < 20; ++trial) {
        const bool b_signed = trial % 2 == 0;
        const int b_bits = 2 + trial % 7;
        const int width = 24;
        auto a = uniform(rng, -2000, 2000);
        auto b = b_signed ? uniform(rng, -(1 << (b_bits - 1)), (1 << (b_bits - 1)) - 1) : uniform(rng, 0, (1 << b_bits) - 1);
        p.write_planes(1, a, width);
        p.write_planes(2, b, width);
        kernels::multiply(p, 3, 1, 2, b_bits, b_signed, width, 10, 11);
        const auto got = p.peek(3, width);
        for (int e = 0; e < 64; ++e) REQUIRE(got[e] == a[e] * b[e]);
    }
}

TEST_CASE("max, min, relu") {
    std::mt19937_64 rng(4);
    Dce dce;
    auto& p = dce.pipeline(0);
    auto a = uniform(rng, -500, 500);
    auto b = uniform(rng, -500, 500);
    p.write_planes(1, a, 16);
    p.write_planes(2, b, 16);
    kernels::max(p, 3, 1, 2, 16, 9);
    kernels::min(p, 4, 1, 2, 16, 9);
    kernels::relu(p, 5, 1, 16, 9);
    const auto mx = p.peek(3, 16), mn = p.peek(4, 16), rl = p.peek(5, 16);
    for (int e = 0; e < 64; ++e) {
        CHECK(mx[e] == std::max(a[e], b[e]));
        CHECK(mn[e] == std::min(a[e], b[e]));
        CHECK(rl[e] == std::max<std::int64_t>(a[e], 0));
    }
}

TEST_CASE("variable right shift") {
    std::mt19937_64 rng(5);
    Dce dce;
    auto& p = dce.pipeline(0);
    auto a = uniform(rng, 0, 1 << 20);
    auto k = uniform(rng, 0, 31);
    p.write_planes(1, a, 24);
    p.write_planes(2, k, 24);
    kernels::shift_right_variable(p, 3, 1, 2, 5, 24, 8, 9);
    const auto got = p.peek(3, 24);
    for (int e = 0; e < 64; ++e) CHECK(got[e] == (k[e] >= 24 ? 0 : a[e] >> k[e]));
}

TEST_CASE("restoring division") {
    std::mt19937_64 rng(6);
    Dce dce;
    auto& p = dce.pipeline(0);
    auto den = uniform(rng, 1, 4000);
    std::vector<std::int64_t> num(64);
    for (int e = 0; e < 64; ++e) num[e] = std::uniform_int_distribution<std::int64_t>(0, den[e] * 65536 - 1)(rng);
    p.write_planes(1, num, 40);
    p.write_planes(2, den, 40);
    kernels::divide(p, 3, 1, 2, 16, 40, 10, 11, 12, 13);
    const auto got = p.peek(3, 40);
    for (int e = 0; e < 64; ++e) CHECK(got[e] == num[e] / den[e]);
}

TEST_CASE("integer square root") {
    std::mt19937_64 rng(7);
    Dce dce;
    auto& p = dce.pipeline(0);
    auto v = uniform(rng, 0, (1 << 20) - 1);
    v[0] = 0;
    v[1] = 1;
    v[2] = (1 << 20) - 1;
    v[3] = 1 << 18;
    p.write_planes(1, v, 24);
    kernels::isqrt(p, 3, 1, 10, 24, 10, 11, 12, 13, 14);
    const auto got = p.peek(3, 24);
    for (int e = 0; e < 64; ++e) {
        const auto want = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v[e])));
        CHECK(got[e] == want);
    }
}

TEST_CASE("broadcast one element to every row") {
    Dce dce;
    auto& src = dce.pipeline(1);
    std::vector<std::int64_t> vals(64);
    for (int e = 0; e < 64; ++e) vals[e] = e * 1000 - 7;
    src.write_planes(4, vals, 20);
    auto& p = dce.pipeline(0);
    kernels::broadcast_element(p, 2, src, 4, 37, 20, 9);
    for (auto v : p.peek(2, 20)) CHECK(v == 37 * 1000 - 7);
}
