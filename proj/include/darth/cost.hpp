#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "darth/core.hpp"

namespace darth {

enum class Component : int {
    DigitalArray = 0,
    PipelineCtrl,
    Adc,
    RowPeriphery,
    SampleHold,
    Frontend,
    AnalogProgramming,
};

inline constexpr int kComponentCount = 7;

std::string_view component_name(Component c);

struct EnergyBreakdown {
    std::array<double, kComponentCount> pj{};

    [[nodiscard]] double operator[](Component c) const { return pj[static_cast<int>(c)]; }
    /// Sum of the entries; the reported total is defined as this sum.
    [[nodiscard]] double total() const;
};

/// Activity counters and the time window of an operation. Energy is derived
/// from the integer counters and a CostTable, so the breakdown is exact.
struct CostReport {
    Cycle start = 0;
    Cycle end = 0;

    std::uint64_t array_ops = 0;             // digital array active cycles (one microop in one array)
    std::uint64_t pipeline_busy_cycles = 0;  // cycles a pipeline's control was busy
    std::uint64_t sar_unit_cycles = 0;       // busy cycles x SAR units
    std::uint64_t ramp_unit_cycles = 0;      // busy cycles x ramp units
    std::uint64_t row_active_cycles = 0;     // analog array x wordline-active cycles
    std::uint64_t conversions = 0;           // sample-and-hold events
    std::uint64_t frontend_cycles = 0;       // front-end issue cycles
    std::uint64_t reprogrammed_arrays = 0;

    std::uint64_t microops = 0;
    std::uint64_t transfer_bytes = 0;
    std::uint64_t transfer_cycles = 0;
    std::uint64_t frontend_issues = 0;
    std::uint64_t frontend_stall_cycles = 0;

    [[nodiscard]] Cycle latency() const { return end > start ? end - start : 0; }
    [[nodiscard]] EnergyBreakdown energy(const CostTable& table) const;

    /// Merges counters and widens the time window.
    CostReport& operator+=(const CostReport& other);
    /// Merges counters only; keeps this report's time window.
    void add_activity(const CostReport& other);
    /// Counters accumulated since `earlier` (a snapshot of the same running total).
    [[nodiscard]] CostReport since(const CostReport& earlier) const;
    void cover(Cycle s, Cycle e);

private:
    bool has_window_ = false;
};

}  // namespace darth
