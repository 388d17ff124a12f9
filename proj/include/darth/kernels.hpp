#pragma once

#include <cstdint>
#include <span>

namespace darth::kernels {

// Bitline accumulation: for each input mask m and bitline c,
//   out[m][c]       = sum over rows r set in m of net[r][c]
//   out_plus[m][c]  = sum over rows r set in m of plus[r][c]
// `net` and `plus` are 64x64 row-major; outputs are masks.size() x 64.
void bitline_sums_serial(std::span<const double> net, std::span<const double> plus,
                         std::span<const std::uint64_t> masks, std::span<double> out, std::span<double> out_plus);

// Same contract, parallel over input masks with OpenMP when available.
void bitline_sums_parallel(std::span<const double> net, std::span<const double> plus,
                           std::span<const std::uint64_t> masks, std::span<double> out, std::span<double> out_plus);

}  // namespace darth::kernels
