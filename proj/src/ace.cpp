#include "darth/ace.hpp"

#include <algorithm>
#include <cmath>

#include "darth/errors.hpp"
#include "darth/kernels.hpp"

namespace darth::ace {

IntMatrix IntMatrix::transposed() const {
    IntMatrix t(cols, rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) t.at(c, r) = at(r, c);
    }
    return t;
}

NoiseConfig NoiseConfig::from_config(const Config& config, NoiseConfig base) {
    base.programming_sigma = config.get_double("noise.programming_sigma", base.programming_sigma);
    base.read_sigma = config.get_double("noise.read_sigma", base.read_sigma);
    base.ir_drop_alpha = config.get_double("noise.ir_drop_alpha", base.ir_drop_alpha);
    base.rng_seed = static_cast<std::uint64_t>(config.get_int("noise.seed", static_cast<std::int64_t>(base.rng_seed)));
    if (base.programming_sigma < 0 || base.read_sigma < 0 || base.ir_drop_alpha < 0) {
        throw ConfigError("noise parameters must be non-negative");
    }
    return base;
}

AdcModel AdcModel::sar(const CostTable& t) {
    AdcModel m;
    m.kind = AdcKind::Sar;
    m.units = 2;
    m.conversion_cycles = t.sar_conversion_cycles;
    return m;
}

AdcModel AdcModel::ramp(const CostTable& t) {
    AdcModel m;
    m.kind = AdcKind::Ramp;
    m.units = 1;
    m.conversion_cycles = t.ramp_conversion_cycles;
    return m;
}

Cycle AdcModel::latency(int active_bitlines) const {
    if (active_bitlines <= 0) return 0;
    if (kind == AdcKind::Sar) {
        const auto per_unit = static_cast<Cycle>((active_bitlines + units - 1) / units);
        return per_unit * conversion_cycles;
    }
    return early_termination_levels ? *early_termination_levels : conversion_cycles;
}

void ConductanceArray::reset(int bits_per_cell, Remap remap, int used_rows, int used_cols) {
    bits_per_cell_ = bits_per_cell;
    remap_ = remap;
    used_rows_ = used_rows;
    used_cols_ = used_cols;
    programmed_ = true;
    std::fill(ideal_plus_.begin(), ideal_plus_.end(), 0.0);
    std::fill(ideal_minus_.begin(), ideal_minus_.end(), 0.0);
    std::fill(net_.begin(), net_.end(), 0.0);
    std::fill(plus_.begin(), plus_.end(), 0.0);
}

void ConductanceArray::program(int r, int c, double plus, double minus, double noise_plus, double noise_minus) {
    const auto i = at(r, c);
    ideal_plus_[i] = plus;
    ideal_minus_[i] = minus;
    plus_[i] = plus + noise_plus;
    net_[i] = plus + noise_plus - (minus + noise_minus);
}

double ConductanceArray::full_scale() const {
    const double cell_max = remap_ == Remap::Symmetric ? 0.5 : static_cast<double>(low_mask(bits_per_cell_));
    return kRows * cell_max;
}

namespace {

// Programming perturbation, clipped at three sigma so a cell never strays
// further than the configured spread.
double perturbation(double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> d(0.0, sigma);
    return std::clamp(d(rng), -3.0 * sigma, 3.0 * sigma);
}

}  // namespace

void program_matrix(std::span<ConductanceArray* const> arrays, const IntMatrix& matrix, const SlicePlan& plan,
                    Remap remap, const NoiseConfig& noise, std::mt19937_64& rng) {
    if (matrix.rows > kRows || matrix.cols > kCols || matrix.rows < 1 || matrix.cols < 1) {
        throw CapacityError("matrix " + std::to_string(matrix.rows) + "x" + std::to_string(matrix.cols) +
                            " exceeds one 64x64 array");
    }
    const int slices = plan.slice_count();
    if (static_cast<int>(arrays.size()) < slices) throw CapacityError("not enough arrays for the slice plan");
    if (remap == Remap::Symmetric && plan.element_bits != 1) {
        throw PlanMismatchError("symmetric remap applies to 1-bit matrices only");
    }
    const std::int64_t limit = std::int64_t{1} << plan.element_bits;
    for (auto v : matrix.data) {
        if (v <= -limit || v >= limit) throw PlanMismatchError("element magnitude exceeds the slice plan");
        if (remap == Remap::Symmetric && (v < 0 || v > 1)) throw PlanMismatchError("symmetric remap needs 0/1 entries");
    }
    for (int s = 0; s < slices; ++s) {
        ConductanceArray& arr = *arrays[static_cast<std::size_t>(s)];
        arr.reset(plan.bits_per_cell, remap, matrix.rows, matrix.cols);
        for (int r = 0; r < matrix.rows; ++r) {
            for (int c = 0; c < matrix.cols; ++c) {
                const std::int64_t v = matrix.at(r, c);
                double plus = 0.0, minus = 0.0;
                if (remap == Remap::Symmetric) {
                    (v ? plus : minus) = 0.5;
                } else {
                    const auto mag = static_cast<std::uint64_t>(v < 0 ? -v : v);
                    const auto level = static_cast<double>((mag >> (s * plan.bits_per_cell)) & plan.slice_mask());
                    (v < 0 ? minus : plus) = level;
                }
                const double np = plus != 0.0 ? perturbation(noise.programming_sigma, rng) : 0.0;
                const double nm = minus != 0.0 ? perturbation(noise.programming_sigma, rng) : 0.0;
                arr.program(r, c, plus, minus, np, nm);
            }
        }
    }
}

BitlineSums apply_input_bit(const ConductanceArray& array, std::uint64_t input_bits, const NoiseConfig& noise,
                            std::mt19937_64& rng) {
    BitlineSums out{std::vector<double>(kCols), std::vector<double>(kCols)};
    const std::uint64_t mask = input_bits;
    kernels::bitline_sums_serial(array.net(), array.plus(), std::span(&mask, 1), out.sums, out.positive_current);
    if (noise.read_sigma > 0.0) {
        std::normal_distribution<double> d(0.0, noise.read_sigma);
        for (auto& s : out.sums) s += d(rng);
    }
    if (noise.ir_drop_alpha > 0.0) {
        for (int c = 0; c < kCols; ++c) out.sums[c] -= noise.ir_drop_alpha * out.positive_current[c];
    }
    return out;
}

std::vector<std::int64_t> digitize(std::span<const double> sums, const AdcModel& adc, int active_bitlines,
                                   double full_scale, CostReport& cost) {
    if (active_bitlines < 0 || active_bitlines > static_cast<int>(sums.size())) {
        throw RangeError("active bitline count out of range");
    }
    std::vector<std::int64_t> out(static_cast<std::size_t>(active_bitlines));
    for (int c = 0; c < active_bitlines; ++c) {
        const double s = sums[static_cast<std::size_t>(c)];
        if (std::abs(s) > full_scale + 0.5) {
            throw RangeError("bitline sum " + std::to_string(s) + " beyond ADC full scale " + std::to_string(full_scale));
        }
        std::int64_t code = std::llround(s);
        if (adc.truncate_bits > 0) code = static_cast<std::int64_t>(static_cast<std::uint64_t>(code) & low_mask(adc.truncate_bits));
        out[static_cast<std::size_t>(c)] = code;
    }
    const Cycle busy = adc.latency(active_bitlines);
    const auto unit_cycles = busy * static_cast<Cycle>(adc.units);
    if (adc.kind == AdcKind::Sar) {
        cost.sar_unit_cycles += unit_cycles;
    } else {
        cost.ramp_unit_cycles += unit_cycles;
    }
    cost.conversions += static_cast<std::uint64_t>(active_bitlines);
    return out;
}

std::vector<std::int64_t> compensate(std::span<const std::int64_t> outputs, int ones_in_input) {
    if (ones_in_input % 2 != 0) {
        throw ParityError("compensation k/2 is not integral for k = " + std::to_string(ones_in_input));
    }
    std::vector<std::int64_t> out(outputs.begin(), outputs.end());
    for (auto& v : out) v += ones_in_input / 2;
    return out;
}

Ace::Ace(int arrays, NoiseConfig noise, std::uint64_t seed) : arrays_(static_cast<std::size_t>(arrays)), noise_(noise), rng_(seed) {}

ConductanceArray& Ace::array(int i) {
    if (i < 0 || i >= array_count()) throw IndexError("analog array " + std::to_string(i) + " out of range");
    auto& slot = arrays_[static_cast<std::size_t>(i)];
    if (!slot) slot = std::make_unique<ConductanceArray>();
    return *slot;
}

int Ace::program(int first, const IntMatrix& matrix, const SlicePlan& plan, Remap remap) {
    const int slices = plan.slice_count();
    if (first < 0 || first + slices > array_count()) throw CapacityError("not enough free analog arrays");
    std::vector<ConductanceArray*> targets;
    for (int s = 0; s < slices; ++s) targets.push_back(&array(first + s));
    program_matrix(targets, matrix, plan, remap, noise_, rng_);
    return slices;
}

BitlineSums Ace::apply(int array_index, std::uint64_t input_bits) {
    return apply_input_bit(array(array_index), input_bits, noise_, rng_);
}

}  // namespace darth::ace
