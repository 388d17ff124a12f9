#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace darth {

using Cycle = std::uint64_t;

/// Two's-complement (or unsigned) fixed-point format of an operand.
struct FixedPointSpec {
    int total_bits = 8;
    bool is_signed = true;
    int frac_bits = 0;

    FixedPointSpec() = default;
    FixedPointSpec(int total, bool sign, int frac);

    [[nodiscard]] std::int64_t min_raw() const;
    [[nodiscard]] std::int64_t max_raw() const;
};

/// A raw bit pattern together with its width. Bits above `width` are zero.
struct BitPattern {
    std::uint64_t bits = 0;
    int width = 0;

    friend bool operator==(const BitPattern&, const BitPattern&) = default;
};

/// Encodes `value` in `spec`, rounding to the nearest representable step.
/// Throws OverflowError when the rounded value falls outside the format.
BitPattern encode_fixed(double value, const FixedPointSpec& spec);
double decode_fixed(BitPattern pattern, const FixedPointSpec& spec);

/// Integer helpers for raw (frac_bits = 0 view) codes.
BitPattern encode_raw(std::int64_t raw, const FixedPointSpec& spec);
std::int64_t decode_raw(BitPattern pattern, const FixedPointSpec& spec);

/// Sign-extends the low `width` bits of `bits`.
std::int64_t sign_extend(std::uint64_t bits, int width);
std::uint64_t low_mask(int width);

enum class SliceOrder { LsbFirst };

/// How an N-bit element is split into M-bit device slices.
struct SlicePlan {
    int element_bits = 8;
    int bits_per_cell = 1;
    SliceOrder ordering = SliceOrder::LsbFirst;

    SlicePlan() = default;
    SlicePlan(int n, int m);

    [[nodiscard]] int slice_count() const { return (element_bits + bits_per_cell - 1) / bits_per_cell; }
    [[nodiscard]] std::uint64_t slice_mask() const { return low_mask(bits_per_cell); }
};

std::vector<std::uint64_t> slice_value(BitPattern pattern, const SlicePlan& plan);
std::int64_t recombine_slices(std::span<const std::int64_t> partials, const SlicePlan& plan);

/// Location of one bit of one element of a bit-striped vector register.
struct StripedLocation {
    int array = 0;
    int row = 0;
    int column = 0;

    friend bool operator==(const StripedLocation&, const StripedLocation&) = default;
};

struct StripedLayout {
    int width_elements = 64;
    int depth_bits = 64;
    int register_index = 0;

    [[nodiscard]] StripedLocation locate(int element, int bit) const;
};

/// Per-component energy (pJ per active cycle at 1 GHz) and latency constants.
struct CostTable {
    double digital_array_boolean_pj = 8.0;
    double pipeline_ctrl_pj = 1.6;
    double sar_adc_pj = 1.5;
    double ramp_adc_pj = 1.2;
    double row_periphery_pj = 0.7;
    double sample_hold_pj = 2.1e-5;
    double frontend_pj = 63.0;
    int frontend_fanout = 8;
    Cycle sar_conversion_cycles = 1;
    Cycle ramp_conversion_cycles = 256;
    int transfer_bytes_per_cycle = 8;
    Cycle element_load_cycles_per_element = 3;
    Cycle reprogram_cycles = 10000;
    double reprogram_pj_per_array = 655360.0;  // 4096 pairs x 2 devices x 8 write-verify pulses x 10 pJ

    /// Applies a `cost.<field>` override. Throws ConfigError on unknown keys
    /// or non-positive values.
    void set(const std::string& key, double value);
    void validate() const;

    static const std::vector<std::string>& keys();
};

/// Flat `key = value` configuration text with `#` comments.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;

    /// Keys with the given prefix (e.g. "cost.").
    [[nodiscard]] std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

private:
    std::map<std::string, std::string> values_;
};

void apply_cost_overrides(const Config& config, CostTable& table);

}  // namespace darth
