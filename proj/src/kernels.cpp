#include "darth/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstddef>

namespace darth::kernels {

namespace {

constexpr int kWidth = 64;

inline void accumulate_one(const double* net, const double* plus, std::uint64_t mask, double* out, double* out_plus) {
    std::fill(out, out + kWidth, 0.0);
    std::fill(out_plus, out_plus + kWidth, 0.0);
    while (mask) {
        const int r = std::countr_zero(mask);
        mask &= mask - 1;
        const double* nr = net + static_cast<std::ptrdiff_t>(r) * kWidth;
        const double* pr = plus + static_cast<std::ptrdiff_t>(r) * kWidth;
        for (int c = 0; c < kWidth; ++c) {
            out[c] += nr[c];
            out_plus[c] += pr[c];
        }
    }
}

}  // namespace

void bitline_sums_serial(std::span<const double> net, std::span<const double> plus,
                         std::span<const std::uint64_t> masks, std::span<double> out, std::span<double> out_plus) {
    for (std::size_t i = 0; i < masks.size(); ++i) {
        accumulate_one(net.data(), plus.data(), masks[i], out.data() + i * kWidth, out_plus.data() + i * kWidth);
    }
}

void bitline_sums_parallel(std::span<const double> net, std::span<const double> plus,
                           std::span<const std::uint64_t> masks, std::span<double> out, std::span<double> out_plus) {
    const auto n = static_cast<std::ptrdiff_t>(masks.size());
#pragma omp parallel for schedule(static) if (n >= 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        accumulate_one(net.data(), plus.data(), masks[static_cast<std::size_t>(i)], out.data() + i * kWidth,
                       out_plus.data() + i * kWidth);
    }
}

}  // namespace darth::kernels
