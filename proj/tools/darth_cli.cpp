// darth: runs the apps, the iso-resource sweep and the ADC study, and prints
// JSON reports. Exit codes: 2 config error, 3 oracle mismatch, 4 capacity error.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "darth/errors.hpp"
#include "darth/report.hpp"
#include "darth/sweep.hpp"
#include "json.hpp"

using namespace darth;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;
constexpr int kExitCapacity = 4;

struct Globals {
    std::string config;
    std::uint64_t seed = 1;
    std::string adc;
    std::string noise = "default";
    std::string trace;
    std::string json;
    std::string csv;
};

runtime::ChipConfig chip_config(const Globals& g) {
    Config cfg = g.config.empty() ? Config{} : Config::load(g.config);
    if (!g.adc.empty()) cfg.set("chip.adc", g.adc);
    auto chip = runtime::ChipConfig::from_config(cfg);
    if (g.noise == "off") {
        chip.noise = ace::NoiseConfig::off();
    } else if (g.noise == "default") {
        chip.noise = ace::NoiseConfig::defaults();
    } else {
        chip.noise = ace::NoiseConfig::from_config(Config::load(g.noise), ace::NoiseConfig::defaults());
    }
    chip.seed = g.seed;
    chip.noise.rng_seed = g.seed;
    chip.validate();
    return chip;
}

ace::NoiseConfig noise_config(const Globals& g) { return chip_config(g).noise; }

void emit_json(const Globals& g, const nlohmann::ordered_json& j) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!g.json.empty()) {
        std::ofstream out(g.json);
        if (!out) throw ConfigError("cannot write " + g.json);
        out << text;
    }
}

template <typename Writer>
void emit_csv(const Globals& g, Writer&& write) {
    if (g.csv.empty()) return;
    std::ofstream out(g.csv);
    if (!out) throw ConfigError("cannot write " + g.csv);
    write(out);
}

int run_app(const Globals& g, const std::string& app, int items, int batch, bool check) {
    report::AppOptions o;
    o.chip = chip_config(g);
    o.noise_profile = g.noise;
    o.seed = g.seed;
    o.items = items;
    o.batch = batch;
    o.check_oracle = check;
    std::unique_ptr<std::ofstream> trace;
    if (!g.trace.empty()) {
        trace = std::make_unique<std::ofstream>(g.trace);
        if (!*trace) throw ConfigError("cannot write " + g.trace);
        *trace << "cycle,pipeline,kind,src1,src2,dst\n";
        o.trace = trace.get();
    }
    const auto r = app == "aes" ? report::run_aes(o) : app == "cnn" ? report::run_cnn(o) : report::run_llm(o);
    emit_json(g, r.to_json());
    emit_csv(g, [&](std::ostream& out) { report::write_energy_csv(out, r); });
    return r.oracle_mismatches > 0 ? kExitOracle : 0;
}

int summarize(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.contains("energy_pj") || !j.contains("cycles")) throw ConfigError(path + " is not an app report");
    std::cout << j.value("app", "?") << ": " << j["cycles"].get<std::uint64_t>() << " cycles, "
              << j.value("throughput_per_s", 0.0) << " items/s\n";
    const double total = j.value("energy_total_pj", 0.0);
    for (const auto& [k, v] : j["energy_pj"].items()) {
        const double e = v.get<double>();
        std::cout << "  " << k << ": " << e << " pJ (" << (total > 0 ? 100 * e / total : 0.0) << "%)\n";
    }
    if (j.contains("kernel_cycles")) {
        for (const auto& [k, v] : j["kernel_cycles"].items()) std::cout << "  " << k << ": " << v.get<std::uint64_t>() << " cycles\n";
    }
    if (j.contains("oracle") && !j["oracle"].value("pass", true)) return kExitOracle;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Hybrid analog/digital processing-in-memory simulator"};
    cli.require_subcommand(1);
    cli.fallthrough();  // global flags may follow the subcommand
    Globals g;
    cli.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
    cli.add_option("--seed", g.seed, "workload and noise seed");
    cli.add_option("--adc", g.adc, "ADC kind")->check(CLI::IsMember({"sar", "ramp"}));
    cli.add_option("--noise", g.noise, "off, default, or a file of noise.* keys");
    cli.add_option("--trace", g.trace, "microop trace output (CSV)");
    cli.add_option("--json", g.json, "also write the JSON report here");
    cli.add_option("--csv", g.csv, "CSV output");

    int items = 0, batch = 0;
    bool check = false;
    auto* aes = cli.add_subcommand("aes", "AES-128 encryption");
    aes->add_option("--blocks", items, "blocks to encrypt (block 0 is the FIPS-197 vector)")->check(CLI::PositiveNumber);
    aes->add_option("--lanes", batch, "HCT lanes, 16 blocks each")->check(CLI::PositiveNumber);
    aes->add_flag("--check-oracle", check, "compare against the host AES");
    auto* cnn = cli.add_subcommand("cnn", "tiny CNN inference");
    cnn->add_option("--images", items, "images")->check(CLI::PositiveNumber);
    cnn->add_option("--batch", batch, "model replicas")->check(CLI::PositiveNumber);
    cnn->add_flag("--check-oracle", check, "compare against the fixed-point reference");
    auto* llm = cli.add_subcommand("llm", "tiny encoder layer");
    llm->add_option("--sequences", items, "input sequences")->check(CLI::PositiveNumber);
    llm->add_flag("--check-oracle", check, "compare against the float encoder");

    report::SweepSpec spec;
    std::string family = "both";
    auto* sweep = cli.add_subcommand("sweep", "iso-resource D/A/H AES throughput");
    sweep->add_option("--budget", spec.budget, "total arrays");
    sweep->add_option("--steps", spec.steps, "hybrid configurations");
    sweep->add_option("--aux-cycles", spec.aux_cycles_per_step, "host cycles per AES step per block for A");
    sweep->add_option("--family", family, "logic family")->check(CLI::IsMember({"oscar", "ideal", "both"}));

    std::vector<std::string> study_apps{"aes", "cnn", "llm"};
    auto* adc_study = cli.add_subcommand("adc-study", "SAR vs ramp chips");
    adc_study->add_option("--apps", study_apps, "apps to run")->delimiter(',');

    std::string report_path;
    auto* rep = cli.add_subcommand("report", "summarize a saved JSON report");
    rep->add_option("file", report_path, "report written with --json")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*aes) return run_app(g, "aes", items, batch, check);
        if (*cnn) return run_app(g, "cnn", items, batch, check);
        if (*llm) return run_app(g, "llm", items, 0, check);
        if (*sweep) {
            spec.seed = g.seed;
            if (family == "oscar") spec.families = {dce::LogicFamily::Oscar};
            if (family == "ideal") spec.families = {dce::LogicFamily::Ideal};
            const auto rows = report::run_sweep(spec);
            std::ostringstream csv;
            report::write_sweep_csv(csv, rows);
            std::cout << csv.str();
            emit_csv(g, [&](std::ostream& out) { out << csv.str(); });
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& r : rows) {
                j.push_back({{"config", r.config}, {"family", report::family_name(r.family)},
                             {"analog_arrays", r.analog_arrays}, {"digital_arrays", r.digital_arrays},
                             {"blocks_per_s", r.blocks_per_s}, {"normalized", r.normalized}});
            }
            if (!g.json.empty()) {
                std::ofstream(g.json) << j.dump(2) << '\n';
            }
            return 0;
        }
        if (*adc_study) {
            const auto rows = report::run_adc_study(study_apps, g.seed, noise_config(g));
            std::ostringstream csv;
            report::write_adc_csv(csv, rows);
            std::cout << csv.str();
            emit_csv(g, [&](std::ostream& out) { out << csv.str(); });
            return 0;
        }
        if (*rep) return summarize(report_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BudgetError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const SimError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
