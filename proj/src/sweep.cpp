#include "darth/sweep.hpp"

#include <algorithm>
#include <array>

#include "darth/apps/aes.hpp"
#include "darth/errors.hpp"
#include "darth/report.hpp"

namespace darth::report {

namespace {

constexpr int kBlocks = apps::AesContext::kBlocksPerLane;
constexpr int kMixRounds = 9;
constexpr int kAppliesPerBlockRound = 4 * 8;  // columns x bit planes
constexpr int kMixOutputs = 32;
constexpr int kArraysPerLink = 64;

struct LaneProfile {
    Cycle total = 0;  // one lane, kBlocks blocks
    Cycle conversion = 0;  // one truncated MixColumns conversion
    double bytes_per_apply = 0;
};

LaneProfile measure(dce::LogicFamily family, apps::MixMode mix, std::uint64_t seed) {
    auto cfg = runtime::ChipConfig::defaults();
    cfg.hct_count = 2;
    cfg.family = family;
    cfg.noise = ace::NoiseConfig::off();
    runtime::Chip chip(cfg);
    const auto w = aes_workload(seed, kBlocks);
    apps::AesOptions opts;
    opts.mix = mix;
    auto ctx = apps::aes_init_arrays(chip, w.keys[0], opts);
    const auto out = apps::aes_encrypt(ctx, w.plaintext, w.keys);
    for (int i = 0; i < kBlocks; ++i) {
        if (out.ciphertext[static_cast<std::size_t>(i)] != apps::aes_ref::encrypt(w.plaintext[static_cast<std::size_t>(i)], w.keys[static_cast<std::size_t>(i)])) {
            throw SimError("sweep lane produced a wrong ciphertext");
        }
    }
    LaneProfile p;
    p.total = out.cost.latency();
    p.conversion = ctx.mix_adc.latency(kMixOutputs);
    p.bytes_per_apply = kMixOutputs * opts.adc_truncate_bits / 8.0;
    return p;
}

SweepRow row(std::string name, dce::LogicFamily f, int analog, int digital, double lanes, double cycles_per_block) {
    SweepRow r;
    r.config = std::move(name);
    r.family = f;
    r.analog_arrays = analog;
    r.digital_arrays = digital;
    r.lanes = lanes;
    r.cycles_per_block = cycles_per_block;
    r.blocks_per_s = 1e9 / cycles_per_block;
    return r;
}

}  // namespace

std::string family_name(dce::LogicFamily f) { return f == dce::LogicFamily::Oscar ? "oscar" : "ideal"; }

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (spec.steps < 1) throw BudgetError("sweep needs at least one hybrid step");
    if (spec.budget % (spec.steps + 1) != 0) throw BudgetError("budget does not split into equal analog shares");
    const int share = spec.budget / (spec.steps + 1);
    if (share < kArraysPerLink) throw BudgetError("analog share smaller than one ACE");
    if (spec.families.empty()) throw BudgetError("no logic family requested");

    const int lane_arrays = 2 * runtime::ChipConfig::defaults().dce_depth;  // state + S-box pipelines
    const std::array<apps::MixMode, 3> modes{apps::MixMode::Digital, apps::MixMode::DigitalXor, apps::MixMode::Analog};
    const auto nf = spec.families.size();
    std::vector<LaneProfile> prof(nf * modes.size());
    // Independent simulations, one per (family, mode).
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(prof.size()); ++i) {
        const auto fi = static_cast<std::size_t>(i) / modes.size();
        prof[static_cast<std::size_t>(i)] = measure(spec.families[fi], modes[static_cast<std::size_t>(i) % modes.size()], spec.seed);
    }

    std::vector<SweepRow> rows;
    for (std::size_t fi = 0; fi < nf; ++fi) {
        const auto f = spec.families[fi];
        const LaneProfile& d = prof[fi * 3 + 0];
        const LaneProfile& dx = prof[fi * 3 + 1];
        const LaneProfile& h = prof[fi * 3 + 2];
        const double full_lanes = static_cast<double>(spec.budget) / lane_arrays;
        rows.push_back(row("D", f, 0, spec.budget, full_lanes, static_cast<double>(d.total) / (kBlocks * full_lanes)));
        for (int k = 1; k <= spec.steps; ++k) {
            const int analog = k * share;
            const int digital = spec.budget - analog;
            const double lanes = static_cast<double>(digital) / lane_arrays;
            // Naive hybrid: the lanes hand every MixColumns conversion to the
            // shared analog pool and wait for the codes to come back over one
            // link per ACE; nothing overlaps with the digital steps.
            const double applies = kMixRounds * kAppliesPerBlockRound * kBlocks * lanes;
            const double convert = applies * static_cast<double>(h.conversion) / analog;
            const double move = applies * h.bytes_per_apply / 8.0 / (static_cast<double>(analog) / kArraysPerLink);
            const double lane_cycles = static_cast<double>(h.total) + convert + move;
            rows.push_back(row("H-" + std::to_string(k), f, analog, digital, lanes, lane_cycles / (kBlocks * lanes)));
        }
        // A: the host runs 10 SubBytes, 10 ShiftRows and 11 AddRoundKey per block.
        const double host = 31 * spec.aux_cycles_per_step;
        const double a_convert = kMixRounds * kAppliesPerBlockRound * static_cast<double>(h.conversion) / spec.budget;
        const double a_move = kMixRounds * kAppliesPerBlockRound * h.bytes_per_apply / 8.0 / (static_cast<double>(spec.budget) / kArraysPerLink);
        rows.push_back(row("A", f, spec.budget, 0, 0, host + a_convert + a_move));
        rows.push_back(row("D-xor", f, 0, spec.budget, full_lanes, static_cast<double>(dx.total) / (kBlocks * full_lanes)));
    }
    double base = 0;
    for (const auto& r : rows) {
        if (r.config == "D" && r.family == dce::LogicFamily::Oscar) base = r.blocks_per_s;
    }
    if (base == 0) base = rows.front().blocks_per_s;
    for (auto& r : rows) r.normalized = r.blocks_per_s / base;
    for (auto& r : rows) {
        if (r.config == "D" && r.family == dce::LogicFamily::Oscar) r.normalized = 1.0;
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.config << ',' << family_name(r.family) << ',' << r.analog_arrays << ',' << r.digital_arrays << ','
            << r.lanes << ',' << r.cycles_per_block << ',' << r.blocks_per_s << ',' << r.normalized << '\n';
    }
}

std::vector<SweepRow> hybrid_curve(const std::vector<SweepRow>& rows, dce::LogicFamily family) {
    std::vector<SweepRow> out;
    for (const auto& r : rows) {
        if (r.family == family && r.config.starts_with("H-")) out.push_back(r);
    }
    return out;
}

const SweepRow& find_row(const std::vector<SweepRow>& rows, const std::string& config, dce::LogicFamily family) {
    for (const auto& r : rows) {
        if (r.config == config && r.family == family) return r;
    }
    throw IndexError("no sweep row " + config + "/" + family_name(family));
}

bool is_unimodal(const std::vector<double>& v) {
    if (v.empty()) return false;
    std::size_t i = 0;
    while (i + 1 < v.size() && v[i + 1] >= v[i]) ++i;
    while (i + 1 < v.size() && v[i + 1] <= v[i]) ++i;
    return i + 1 == v.size();
}

std::vector<AdcStudyRow> run_adc_study(const std::vector<std::string>& apps, std::uint64_t seed,
                                       const ace::NoiseConfig& noise) {
    std::vector<std::pair<std::string, ace::AdcKind>> jobs;
    for (const auto& a : apps) {
        if (a != "aes" && a != "cnn" && a != "llm") throw ConfigError("unknown app '" + a + "'");
        jobs.emplace_back(a, ace::AdcKind::Sar);
        jobs.emplace_back(a, ace::AdcKind::Ramp);
    }
    std::vector<AdcStudyRow> rows(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(jobs.size()); ++i) {
        const auto& [app, kind] = jobs[static_cast<std::size_t>(i)];
        AppOptions o;
        o.chip = runtime::ChipConfig::defaults(kind);
        o.chip.noise = noise;
        o.seed = seed;
        o.check_oracle = false;
        const RunReport r = app == "aes" ? run_aes(o) : app == "cnn" ? run_cnn(o) : run_llm(o);
        AdcStudyRow& row = rows[static_cast<std::size_t>(i)];
        row.app = app;
        row.adc = kind;
        row.items = r.items;
        row.cycles = r.cycles;
        row.throughput = r.throughput;
        row.energy_pj = r.energy.total();
        if (app == "aes") row.mix_conversion_cycles = apps::aes_mix_adc(o.chip, 2).latency(kMixOutputs);
    }
    return rows;
}

void write_adc_csv(std::ostream& out, const std::vector<AdcStudyRow>& rows) {
    out << kAdcCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.app << ',' << (r.adc == ace::AdcKind::Sar ? "sar" : "ramp") << ',' << r.items << ',' << r.cycles << ','
            << r.throughput << ',' << r.energy_pj << ',' << r.mix_conversion_cycles << '\n';
    }
}

}  // namespace darth::report
