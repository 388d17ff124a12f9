#include "darth/report.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "darth/apps/aes_reference.hpp"
#include "darth/errors.hpp"

namespace darth::report {

namespace {

double per_second(int items, Cycle cycles) {
    return cycles == 0 ? 0.0 : static_cast<double>(items) * 1e9 / static_cast<double>(cycles);
}

RunReport base_report(const std::string& app, const AppOptions& o, int items, int batch) {
    RunReport r;
    r.app = app;
    r.chip = o.chip;
    r.noise_profile = o.noise_profile;
    r.seed = o.seed;
    r.items = items;
    r.batch = batch;
    return r;
}

void fill_costs(RunReport& r, const runtime::ChipConfig& chip, const CostReport& run, const CostReport& setup) {
    r.cycles = run.latency();
    r.throughput = per_second(r.items, r.cycles);
    r.energy = run.energy(chip.costs);
    r.setup_energy = setup.energy(chip.costs);
    r.setup_cycles = setup.latency();
}

std::size_t argmax(const std::vector<std::int64_t>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

nlohmann::ordered_json breakdown_json(const EnergyBreakdown& e) {
    nlohmann::ordered_json j;
    for (int c = 0; c < kComponentCount; ++c) j[component_key(static_cast<Component>(c))] = e.pj[static_cast<std::size_t>(c)];
    return j;
}

}  // namespace

std::string component_key(Component c) {
    switch (c) {
        case Component::DigitalArray: return "digital_arrays";
        case Component::PipelineCtrl: return "pipeline_control";
        case Component::Adc: return "adc";
        case Component::RowPeriphery: return "row_periphery";
        case Component::SampleHold: return "sample_hold";
        case Component::Frontend: return "front_end";
        case Component::AnalogProgramming: return "analog_programming";
    }
    return "unknown";
}

nlohmann::ordered_json chip_summary(const runtime::ChipConfig& c) {
    nlohmann::ordered_json j;
    j["hct_count"] = c.hct_count;
    j["adc"] = c.adc == ace::AdcKind::Sar ? "sar" : "ramp";
    j["logic_family"] = c.family == dce::LogicFamily::Oscar ? "oscar" : "ideal";
    j["ace_arrays"] = c.ace_arrays;
    j["dce_pipelines"] = c.dce_pipelines;
    j["dce_depth"] = c.dce_depth;
    j["analog_enabled"] = c.analog_enabled;
    j["digital_enabled"] = c.digital_enabled;
    j["iiu_enabled"] = c.iiu_enabled;
    j["optimized_mvm"] = c.optimized_mvm;
    j["noise"] = {{"programming_sigma", c.noise.programming_sigma},
                  {"read_sigma", c.noise.read_sigma},
                  {"ir_drop_alpha", c.noise.ir_drop_alpha}};
    return j;
}

nlohmann::ordered_json RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["app"] = app;
    j["seed"] = seed;
    j["noise_profile"] = noise_profile;
    j["chip"] = chip_summary(chip);
    j["items"] = items;
    j["batch"] = batch;
    j["cycles"] = cycles;
    j["throughput_per_s"] = throughput;
    j["energy_pj"] = breakdown_json(energy);
    j["energy_total_pj"] = energy.total();
    if (!kernels.empty()) {
        nlohmann::ordered_json k;
        for (const auto& [name, c] : kernels) k[name] = c;
        j["kernel_cycles"] = k;
    }
    j["setup"] = {{"cycles", setup_cycles}, {"energy_pj", breakdown_json(setup_energy)},
                  {"energy_total_pj", setup_energy.total()}};
    if (oracle_checked) {
        j["oracle"] = {{"mode", oracle_mode}, {"mismatches", oracle_mismatches}, {"pass", oracle_mismatches == 0}};
    }
    return j;
}

void write_energy_csv(std::ostream& out, const RunReport& r) {
    const double total = r.energy.total();
    out << kEnergyCsvHeader << '\n';
    for (int c = 0; c < kComponentCount; ++c) {
        const double e = r.energy.pj[static_cast<std::size_t>(c)];
        out << component_key(static_cast<Component>(c)) << ',' << e << ',' << (total > 0 ? e / total : 0.0) << '\n';
    }
    out << "total," << total << ",1\n";
}

AesWorkload aes_workload(std::uint64_t seed, int blocks) {
    AesWorkload w;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < blocks; ++i) {
        if (i == 0) {
            w.plaintext.push_back(apps::parse_block("00112233445566778899aabbccddeeff"));
            w.keys.push_back(apps::parse_block("000102030405060708090a0b0c0d0e0f"));
            continue;
        }
        apps::Block p{}, k{};
        for (auto& b : p) b = static_cast<std::uint8_t>(rng());
        for (auto& b : k) b = static_cast<std::uint8_t>(rng());
        w.plaintext.push_back(p);
        w.keys.push_back(k);
    }
    return w;
}

std::vector<apps::Image> cnn_workload(std::uint64_t seed, int images) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> d(0, 255);
    std::vector<apps::Image> out(static_cast<std::size_t>(images), apps::Image(64));
    for (auto& img : out) {
        for (auto& v : img) v = d(rng);
    }
    return out;
}

std::vector<apps::Sequence> encoder_workload(std::uint64_t seed, int sequences) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> d(-256, 256);
    using E = apps::TinyEncoder;
    std::vector<apps::Sequence> out(static_cast<std::size_t>(sequences), apps::Sequence(E::kTokens * E::kDim));
    for (auto& s : out) {
        for (auto& v : s) v = d(rng);
    }
    return out;
}

RunReport run_aes(const AppOptions& o) {
    const int blocks = o.items > 0 ? o.items : apps::AesContext::kBlocksPerLane;
    const int lanes = o.batch > 0 ? o.batch : 1;
    RunReport r = base_report("aes", o, blocks, lanes);
    runtime::Chip chip(o.chip);
    if (o.trace) chip.set_trace(o.trace);
    const auto w = aes_workload(o.seed, blocks);
    auto ctx = apps::aes_init_arrays(chip, w.keys[0], {lanes, 2});
    const auto out = apps::aes_encrypt(ctx, w.plaintext, w.keys);
    fill_costs(r, o.chip, out.cost, ctx.setup);
    r.kernels = {{"sub_bytes", out.kernels.sub_bytes},
                 {"shift_rows", out.kernels.shift_rows},
                 {"mix_columns", out.kernels.mix_columns},
                 {"add_round_key", out.kernels.add_round_key}};
    if (o.check_oracle) {
        r.oracle_checked = true;
        r.oracle_mode = "exact";
        for (int i = 0; i < blocks; ++i) {
            const auto want = apps::aes_ref::encrypt(w.plaintext[static_cast<std::size_t>(i)], w.keys[static_cast<std::size_t>(i)]);
            r.oracle_mismatches += out.ciphertext[static_cast<std::size_t>(i)] != want;
        }
    }
    return r;
}

RunReport run_cnn(const AppOptions& o) {
    const int images = o.items > 0 ? o.items : 8;
    const int batch = o.batch > 0 ? o.batch : 4;
    RunReport r = base_report("cnn", o, images, batch);
    runtime::Chip chip(o.chip);
    if (o.trace) chip.set_trace(o.trace);
    const auto model = apps::TinyCnn::random(o.seed);
    auto dep = apps::cnn_deploy(chip, model, batch);
    const auto imgs = cnn_workload(o.seed + 1, images);
    const auto out = apps::cnn_run_inference(dep, imgs);
    fill_costs(r, o.chip, out.cost, dep.setup);
    if (o.check_oracle) {
        // Noisy crossbars may move a logit by a level; the prediction must hold.
        r.oracle_checked = true;
        const bool exact = o.chip.noise.is_off();
        r.oracle_mode = exact ? "exact" : "argmax";
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            const auto want = apps::cnn_reference(model, imgs[i]);
            r.oracle_mismatches += exact ? out.logits[i] != want : argmax(out.logits[i]) != argmax(want);
        }
    }
    return r;
}

RunReport run_llm(const AppOptions& o) {
    const int sequences = o.items > 0 ? o.items : 2;
    RunReport r = base_report("llm", o, sequences, 1);
    runtime::Chip chip(o.chip);
    if (o.trace) chip.set_trace(o.trace);
    const auto model = apps::TinyEncoder::random(o.seed);
    auto dep = apps::llm_build_encoder(chip, model);
    const auto seqs = encoder_workload(o.seed + 1, sequences);
    const auto out = apps::llm_run_inference(dep, seqs);
    fill_costs(r, o.chip, out.cost, dep.setup);
    if (o.check_oracle) {
        r.oracle_checked = true;
        r.oracle_mode = "max_abs";
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            const auto want = apps::encoder_float(model, seqs[i]);
            double err = 0;
            for (std::size_t k = 0; k < want.size(); ++k) {
                err = std::max(err, std::abs(static_cast<double>(out.outputs[i][k]) / 256.0 - want[k]));
            }
            r.oracle_mismatches += err > kEncoderTolerance;
        }
    }
    return r;
}

}  // namespace darth::report
