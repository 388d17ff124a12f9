#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "darth/core.hpp"
#include "darth/cost.hpp"

namespace darth::ace {

inline constexpr int kRows = 64;
inline constexpr int kCols = 64;

/// Dense row-major integer grid.
struct IntMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> data;

    IntMatrix() = default;
    IntMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0) {}

    std::int64_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    [[nodiscard]] std::int64_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    [[nodiscard]] IntMatrix transposed() const;

    friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
};

enum class Remap { Raw, Symmetric };

struct NoiseConfig {
    double programming_sigma = 0.0;  // conductance-level units
    double read_sigma = 0.0;
    double ir_drop_alpha = 0.0;  // droop per unit of positive-rail current
    std::uint64_t rng_seed = 1;

    [[nodiscard]] bool is_off() const {
        return programming_sigma == 0.0 && read_sigma == 0.0 && ir_drop_alpha == 0.0;
    }
    static NoiseConfig off() { return {}; }
    /// Calibrated profile: RAW 0/1 mappings droop past half a level once three
    /// rows conduct, SYMMETRIC halves the positive-rail current.
    static NoiseConfig defaults() { return {0.004, 0.01, 0.2, 1}; }
    /// Reads `noise.*` keys on top of `base`.
    static NoiseConfig from_config(const Config& config, NoiseConfig base);
};

enum class AdcKind { Sar, Ramp };

struct AdcModel {
    AdcKind kind = AdcKind::Sar;
    int resolution_bits = 8;
    int units = 2;
    Cycle conversion_cycles = 1;  // SAR: per conversion; ramp: full sweep
    std::optional<Cycle> early_termination_levels;
    int truncate_bits = 0;  // 0 = full code; otherwise the code wraps modulo 2^bits

    static AdcModel sar(const CostTable& t = {});
    static AdcModel ramp(const CostTable& t = {});

    /// Cycles to digitize `active_bitlines` bitlines of one array.
    [[nodiscard]] Cycle latency(int active_bitlines) const;
};

/// One 64x64 crossbar of differential cell pairs. Row r is driven by input r;
/// bitline c accumulates output c.
class ConductanceArray {
public:
    ConductanceArray() = default;

    [[nodiscard]] int bits_per_cell() const { return bits_per_cell_; }
    [[nodiscard]] Remap remap() const { return remap_; }
    [[nodiscard]] bool programmed() const { return programmed_; }
    [[nodiscard]] int used_cols() const { return used_cols_; }
    [[nodiscard]] int used_rows() const { return used_rows_; }

    /// Ideal rail levels of one pair (no perturbation).
    [[nodiscard]] double ideal_plus(int r, int c) const { return ideal_plus_[at(r, c)]; }
    [[nodiscard]] double ideal_minus(int r, int c) const { return ideal_minus_[at(r, c)]; }
    /// Ideal stored value g_plus - g_minus.
    [[nodiscard]] double stored(int r, int c) const { return ideal_plus_[at(r, c)] - ideal_minus_[at(r, c)]; }
    /// Programmed (perturbed) net value and positive-rail conductance.
    [[nodiscard]] const std::vector<double>& net() const { return net_; }
    [[nodiscard]] const std::vector<double>& plus() const { return plus_; }

    /// Largest |sum| a bitline can reach: every row on, every cell at its maximum.
    [[nodiscard]] double full_scale() const;

    void program(int r, int c, double plus, double minus, double noise_plus, double noise_minus);
    void reset(int bits_per_cell, Remap remap, int used_rows, int used_cols);

private:
    [[nodiscard]] static std::size_t at(int r, int c) { return static_cast<std::size_t>(r) * kCols + c; }

    int bits_per_cell_ = 1;
    Remap remap_ = Remap::Raw;
    bool programmed_ = false;
    int used_rows_ = 0;
    int used_cols_ = 0;
    std::vector<double> ideal_plus_ = std::vector<double>(kRows * kCols, 0.0);
    std::vector<double> ideal_minus_ = std::vector<double>(kRows * kCols, 0.0);
    std::vector<double> net_ = std::vector<double>(kRows * kCols, 0.0);
    std::vector<double> plus_ = std::vector<double>(kRows * kCols, 0.0);
};

/// Programs slice i of every element into arrays[i]. Signed elements store
/// their magnitude on the rail selected by the sign. SYMMETRIC requires a 1-bit
/// non-negative matrix and stores each bit b as b - 1/2.
void program_matrix(std::span<ConductanceArray* const> arrays, const IntMatrix& matrix, const SlicePlan& plan,
                    Remap remap, const NoiseConfig& noise, std::mt19937_64& rng);

/// Per-bitline analog sums for one applied input-bit vector.
struct BitlineSums {
    std::vector<double> sums;
    std::vector<double> positive_current;  // pre-IR-drop positive-rail current
};

/// Drives the rows selected by `input_bits` and returns the bitline sums after
/// read noise and the IR-drop proxy.
BitlineSums apply_input_bit(const ConductanceArray& array, std::uint64_t input_bits, const NoiseConfig& noise,
                            std::mt19937_64& rng);

/// Quantizes sums to the nearest level. Costs cover one array's conversion.
/// Throws RangeError when a sum exceeds `full_scale`.
std::vector<std::int64_t> digitize(std::span<const double> sums, const AdcModel& adc, int active_bitlines,
                                   double full_scale, CostReport& cost);

/// corrected = raw + k/2 for SYMMETRIC 1-bit mappings.
std::vector<std::int64_t> compensate(std::span<const std::int64_t> outputs, int ones_in_input);

/// One analog compute element: a bank of crossbars sharing ADCs and an RNG.
class Ace {
public:
    explicit Ace(int arrays = 64, NoiseConfig noise = {}, std::uint64_t seed = 1);

    [[nodiscard]] int array_count() const { return static_cast<int>(arrays_.size()); }
    ConductanceArray& array(int i);
    [[nodiscard]] const NoiseConfig& noise() const { return noise_; }
    void set_noise(const NoiseConfig& n) { noise_ = n; }
    std::mt19937_64& rng() { return rng_; }

    /// Programs `matrix` (rows = inputs) into consecutive arrays from `first`.
    /// Returns the number of arrays written.
    int program(int first, const IntMatrix& matrix, const SlicePlan& plan, Remap remap);

    BitlineSums apply(int array, std::uint64_t input_bits);

private:
    std::vector<std::unique_ptr<ConductanceArray>> arrays_;
    NoiseConfig noise_;
    std::mt19937_64 rng_;
};

}  // namespace darth::ace
