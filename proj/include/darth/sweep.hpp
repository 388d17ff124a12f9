#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "darth/dce.hpp"
#include "darth/runtime.hpp"

namespace darth::report {

/// Iso-resource AES study over digital (D), analog (A) and naive hybrid
/// (H-1..H-steps) chips. H-k gives k * budget / (steps + 1) arrays to analog.
struct SweepSpec {
    int budget = 640;
    int steps = 9;
    std::vector<dce::LogicFamily> families{dce::LogicFamily::Oscar, dce::LogicFamily::Ideal};
    // A: non-MVM steps run on a host core at this many cycles per step per block.
    double aux_cycles_per_step = 64;
    std::uint64_t seed = 1;
};

struct SweepRow {
    std::string config;  // D, A, H-1.., D-xor
    dce::LogicFamily family = dce::LogicFamily::Oscar;
    int analog_arrays = 0;
    int digital_arrays = 0;
    double lanes = 0;
    double cycles_per_block = 0;
    double blocks_per_s = 0;
    double normalized = 0;  // to D with OSCAR
};

/// Throws BudgetError when the budget does not split into steps + 1 equal
/// shares or a share is smaller than one ACE.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader =
    "config,family,analog_arrays,digital_arrays,lanes,cycles_per_block,blocks_per_s,normalized";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// H rows of one family, in order.
std::vector<SweepRow> hybrid_curve(const std::vector<SweepRow>& rows, dce::LogicFamily family);
const SweepRow& find_row(const std::vector<SweepRow>& rows, const std::string& config, dce::LogicFamily family);
/// Rises (weakly) to a single peak, then falls (weakly); at least one strict step each side
/// unless the peak sits at an end.
bool is_unimodal(const std::vector<double>& values);

struct AdcStudyRow {
    std::string app;
    ace::AdcKind adc = ace::AdcKind::Sar;
    int items = 0;
    Cycle cycles = 0;
    double throughput = 0;  // items per second at 1 GHz
    double energy_pj = 0;
    Cycle mix_conversion_cycles = 0;  // AES only: one truncated MixColumns conversion
};

/// Runs each app (aes, cnn, llm) on an iso-area SAR chip and a ramp chip.
std::vector<AdcStudyRow> run_adc_study(const std::vector<std::string>& apps, std::uint64_t seed,
                                       const ace::NoiseConfig& noise);

inline constexpr const char* kAdcCsvHeader = "app,adc,items,cycles,throughput_per_s,energy_pj,mix_conversion_cycles";
void write_adc_csv(std::ostream& out, const std::vector<AdcStudyRow>& rows);

std::string family_name(dce::LogicFamily f);

}  // namespace darth::report
