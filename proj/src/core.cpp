#include "darth/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "darth/errors.hpp"

namespace darth {

std::uint64_t low_mask(int width) {
    if (width <= 0) return 0;
    if (width >= 64) return ~std::uint64_t{0};
    return (std::uint64_t{1} << width) - 1;
}

std::int64_t sign_extend(std::uint64_t bits, int width) {
    if (width <= 0) return 0;
    if (width >= 64) return static_cast<std::int64_t>(bits);
    bits &= low_mask(width);
    const std::uint64_t sign = std::uint64_t{1} << (width - 1);
    return static_cast<std::int64_t>((bits ^ sign) - sign);
}

FixedPointSpec::FixedPointSpec(int total, bool sign, int frac) : total_bits(total), is_signed(sign), frac_bits(frac) {
    if (total < 1 || total > 64) throw PlanMismatchError("total_bits must be in 1..64");
    if (frac < 0 || frac > total) throw PlanMismatchError("frac_bits must be in 0..total_bits");
}

std::int64_t FixedPointSpec::min_raw() const {
    if (!is_signed) return 0;
    if (total_bits == 64) return INT64_MIN;
    return -(std::int64_t{1} << (total_bits - 1));
}

std::int64_t FixedPointSpec::max_raw() const {
    if (is_signed) {
        if (total_bits == 64) return INT64_MAX;
        return (std::int64_t{1} << (total_bits - 1)) - 1;
    }
    if (total_bits >= 63) return INT64_MAX;
    return (std::int64_t{1} << total_bits) - 1;
}

BitPattern encode_raw(std::int64_t raw, const FixedPointSpec& spec) {
    if (raw < spec.min_raw() || raw > spec.max_raw()) {
        throw OverflowError("value " + std::to_string(raw) + " does not fit in " + std::to_string(spec.total_bits) +
                            " bits");
    }
    return {static_cast<std::uint64_t>(raw) & low_mask(spec.total_bits), spec.total_bits};
}

std::int64_t decode_raw(BitPattern pattern, const FixedPointSpec& spec) {
    if (spec.is_signed) return sign_extend(pattern.bits, spec.total_bits);
    return static_cast<std::int64_t>(pattern.bits & low_mask(spec.total_bits));
}

BitPattern encode_fixed(double value, const FixedPointSpec& spec) {
    const double scaled = std::ldexp(value, spec.frac_bits);
    const double rounded = std::round(scaled);
    if (!std::isfinite(rounded) || rounded < static_cast<double>(spec.min_raw()) ||
        rounded > static_cast<double>(spec.max_raw())) {
        throw OverflowError("value out of range for fixed-point format");
    }
    return encode_raw(static_cast<std::int64_t>(rounded), spec);
}

double decode_fixed(BitPattern pattern, const FixedPointSpec& spec) {
    return std::ldexp(static_cast<double>(decode_raw(pattern, spec)), -spec.frac_bits);
}

SlicePlan::SlicePlan(int n, int m) : element_bits(n), bits_per_cell(m) {
    if (n < 1 || n > 64) throw PlanMismatchError("element_bits must be in 1..64");
    if (m < 1 || m > 8) throw PlanMismatchError("bits_per_cell must be in 1..8");
}

std::vector<std::uint64_t> slice_value(BitPattern pattern, const SlicePlan& plan) {
    if (pattern.width != plan.element_bits) {
        throw PlanMismatchError("pattern width " + std::to_string(pattern.width) + " != plan element_bits " +
                                std::to_string(plan.element_bits));
    }
    std::vector<std::uint64_t> slices(plan.slice_count());
    for (int i = 0; i < plan.slice_count(); ++i) {
        slices[i] = (pattern.bits >> (i * plan.bits_per_cell)) & plan.slice_mask();
    }
    return slices;
}

std::int64_t recombine_slices(std::span<const std::int64_t> partials, const SlicePlan& plan) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < partials.size(); ++i) {
        sum += partials[i] * (std::int64_t{1} << (static_cast<int>(i) * plan.bits_per_cell));
    }
    return sum;
}

StripedLocation StripedLayout::locate(int element, int bit) const {
    if (element < 0 || element >= width_elements || bit < 0 || bit >= depth_bits) {
        throw AddressRangeError("striped location out of range");
    }
    return {bit, element, register_index};
}

namespace {

struct CostField {
    const char* key;
    double CostTable::*real = nullptr;
    Cycle CostTable::*cycles = nullptr;
    int CostTable::*integer = nullptr;
};

const std::vector<CostField>& cost_fields() {
    static const std::vector<CostField> fields = {
        {"cost.digital_array_boolean_pj", &CostTable::digital_array_boolean_pj},
        {"cost.pipeline_ctrl_pj", &CostTable::pipeline_ctrl_pj},
        {"cost.sar_adc_pj", &CostTable::sar_adc_pj},
        {"cost.ramp_adc_pj", &CostTable::ramp_adc_pj},
        {"cost.row_periphery_pj", &CostTable::row_periphery_pj},
        {"cost.sample_hold_pj", &CostTable::sample_hold_pj},
        {"cost.frontend_pj", &CostTable::frontend_pj},
        {"cost.frontend_fanout", nullptr, nullptr, &CostTable::frontend_fanout},
        {"cost.sar_conversion_cycles", nullptr, &CostTable::sar_conversion_cycles},
        {"cost.ramp_conversion_cycles", nullptr, &CostTable::ramp_conversion_cycles},
        {"cost.transfer_bytes_per_cycle", nullptr, nullptr, &CostTable::transfer_bytes_per_cycle},
        {"cost.element_load_cycles_per_element", nullptr, &CostTable::element_load_cycles_per_element},
        {"cost.reprogram_cycles", nullptr, &CostTable::reprogram_cycles},
        {"cost.reprogram_pj_per_array", &CostTable::reprogram_pj_per_array},
    };
    return fields;
}

}  // namespace

const std::vector<std::string>& CostTable::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& f : cost_fields()) out.emplace_back(f.key);
        return out;
    }();
    return names;
}

void CostTable::set(const std::string& key, double value) {
    if (!(value > 0.0)) throw ConfigError("cost entry " + key + " must be strictly positive");
    for (const auto& f : cost_fields()) {
        if (key != f.key) continue;
        if (f.real) this->*f.real = value;
        if (f.cycles) this->*f.cycles = static_cast<Cycle>(std::llround(value));
        if (f.integer) this->*f.integer = static_cast<int>(std::lround(value));
        return;
    }
    throw ConfigError("unknown cost key: " + key);
}

void CostTable::validate() const {
    for (const auto& f : cost_fields()) {
        const double v = f.real ? this->*f.real : f.cycles ? static_cast<double>(this->*f.cycles)
                                                           : static_cast<double>(this->*f.integer);
        if (!(v > 0.0)) throw ConfigError(std::string("cost entry ") + f.key + " must be strictly positive");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": expected a number, got '" + it->second + "'");
    }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used, 0);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": expected an integer, got '" + it->second + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("key " + key + ": expected a boolean, got '" + v + "'");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
}

void apply_cost_overrides(const Config& config, CostTable& table) {
    for (const auto& key : config.keys_with_prefix("cost.")) table.set(key, config.get_double(key, 0.0));
    table.validate();
}

}  // namespace darth
