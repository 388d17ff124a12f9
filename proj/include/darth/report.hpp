#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "darth/apps/aes.hpp"
#include "darth/apps/cnn.hpp"
#include "darth/apps/encoder.hpp"
#include "darth/cost.hpp"
#include "darth/runtime.hpp"
#include "json.hpp"

namespace darth::report {

struct AppOptions {
    runtime::ChipConfig chip = runtime::ChipConfig::defaults();
    std::string noise_profile = "off";  // label only; chip.noise holds the values
    std::uint64_t seed = 1;
    int items = 0;  // blocks / images / sequences; 0 picks the app default
    int batch = 0;  // AES lanes, CNN replicas; 0 picks the app default
    bool check_oracle = true;
    std::ostream* trace = nullptr;
};

struct RunReport {
    std::string app;
    runtime::ChipConfig chip;
    std::string noise_profile;
    std::uint64_t seed = 0;
    int items = 0;
    int batch = 0;
    Cycle cycles = 0;
    double throughput = 0.0;  // items per second at 1 GHz
    EnergyBreakdown energy;
    EnergyBreakdown setup_energy;
    Cycle setup_cycles = 0;
    std::vector<std::pair<std::string, Cycle>> kernels;
    bool oracle_checked = false;
    std::string oracle_mode;  // exact, argmax (noisy CNN), max_abs (encoder)
    int oracle_mismatches = 0;

    [[nodiscard]] double energy_total() const { return energy.total(); }
    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

// Seeded inputs for the app runs. AES block 0 is the FIPS-197 known answer.
struct AesWorkload {
    std::vector<apps::Block> plaintext;
    std::vector<apps::Key> keys;
};
AesWorkload aes_workload(std::uint64_t seed, int blocks);
std::vector<apps::Image> cnn_workload(std::uint64_t seed, int images);
std::vector<apps::Sequence> encoder_workload(std::uint64_t seed, int sequences);

/// Max-abs error tolerated between the chip encoder and the float oracle.
inline constexpr double kEncoderTolerance = 1.0 / 16;

RunReport run_aes(const AppOptions& options);
RunReport run_cnn(const AppOptions& options);
RunReport run_llm(const AppOptions& options);

/// Stable component keys, in breakdown order.
std::string component_key(Component c);

/// CSV: component,energy_pj,share (one row per component, then a total row).
void write_energy_csv(std::ostream& out, const RunReport& r);
inline constexpr const char* kEnergyCsvHeader = "component,energy_pj,share";

nlohmann::ordered_json chip_summary(const runtime::ChipConfig& c);

}  // namespace darth::report
