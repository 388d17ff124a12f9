#include "darth/cost.hpp"

#include <algorithm>

namespace darth {

std::string_view component_name(Component c) {
    switch (c) {
        case Component::DigitalArray: return "digital_array";
        case Component::PipelineCtrl: return "pipeline_ctrl";
        case Component::Adc: return "adc";
        case Component::RowPeriphery: return "row_periphery";
        case Component::SampleHold: return "sample_hold";
        case Component::Frontend: return "frontend";
        case Component::AnalogProgramming: return "analog_programming";
    }
    return "unknown";
}

double EnergyBreakdown::total() const {
    double sum = 0.0;
    for (double v : pj) sum += v;
    return sum;
}

EnergyBreakdown CostReport::energy(const CostTable& t) const {
    EnergyBreakdown e;
    auto set = [&](Component c, double v) { e.pj[static_cast<int>(c)] = v; };
    set(Component::DigitalArray, static_cast<double>(array_ops) * t.digital_array_boolean_pj);
    set(Component::PipelineCtrl, static_cast<double>(pipeline_busy_cycles) * t.pipeline_ctrl_pj);
    set(Component::Adc, static_cast<double>(sar_unit_cycles) * t.sar_adc_pj +
                            static_cast<double>(ramp_unit_cycles) * t.ramp_adc_pj);
    set(Component::RowPeriphery, static_cast<double>(row_active_cycles) * t.row_periphery_pj);
    set(Component::SampleHold, static_cast<double>(conversions) * t.sample_hold_pj);
    set(Component::Frontend, static_cast<double>(frontend_cycles) * t.frontend_pj);
    set(Component::AnalogProgramming, static_cast<double>(reprogrammed_arrays) * t.reprogram_pj_per_array);
    return e;
}

void CostReport::add_activity(const CostReport& o) {
    array_ops += o.array_ops;
    pipeline_busy_cycles += o.pipeline_busy_cycles;
    sar_unit_cycles += o.sar_unit_cycles;
    ramp_unit_cycles += o.ramp_unit_cycles;
    row_active_cycles += o.row_active_cycles;
    conversions += o.conversions;
    frontend_cycles += o.frontend_cycles;
    reprogrammed_arrays += o.reprogrammed_arrays;
    microops += o.microops;
    transfer_bytes += o.transfer_bytes;
    transfer_cycles += o.transfer_cycles;
    frontend_issues += o.frontend_issues;
    frontend_stall_cycles += o.frontend_stall_cycles;
}

CostReport CostReport::since(const CostReport& e) const {
    CostReport d;
    d.array_ops = array_ops - e.array_ops;
    d.pipeline_busy_cycles = pipeline_busy_cycles - e.pipeline_busy_cycles;
    d.sar_unit_cycles = sar_unit_cycles - e.sar_unit_cycles;
    d.ramp_unit_cycles = ramp_unit_cycles - e.ramp_unit_cycles;
    d.row_active_cycles = row_active_cycles - e.row_active_cycles;
    d.conversions = conversions - e.conversions;
    d.frontend_cycles = frontend_cycles - e.frontend_cycles;
    d.reprogrammed_arrays = reprogrammed_arrays - e.reprogrammed_arrays;
    d.microops = microops - e.microops;
    d.transfer_bytes = transfer_bytes - e.transfer_bytes;
    d.transfer_cycles = transfer_cycles - e.transfer_cycles;
    d.frontend_issues = frontend_issues - e.frontend_issues;
    d.frontend_stall_cycles = frontend_stall_cycles - e.frontend_stall_cycles;
    return d;
}

void CostReport::cover(Cycle s, Cycle e) {
    if (!has_window_) {
        start = s;
        end = e;
        has_window_ = true;
        return;
    }
    start = std::min(start, s);
    end = std::max(end, e);
}

CostReport& CostReport::operator+=(const CostReport& o) {
    add_activity(o);
    if (o.has_window_) cover(o.start, o.end);
    return *this;
}

}  // namespace darth
