#include "darth/runtime.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "darth/dce_kernels.hpp"
#include "darth/errors.hpp"

namespace darth::runtime {

int bits_per_cell(Precision p, int device_bits) {
    switch (p) {
        case Precision::Low: return 1;
        case Precision::Med: return std::max(1, device_bits / 2);
        case Precision::High: return device_bits;
    }
    return 1;
}

ChipConfig ChipConfig::defaults(ace::AdcKind adc) {
    ChipConfig c;
    c.adc = adc;
    c.hct_count = adc == ace::AdcKind::Sar ? 1860 : 1660;
    return c;
}

ChipConfig ChipConfig::from_config(const Config& config) {
    const std::string adc_name = config.get_string("chip.adc", "sar");
    if (adc_name != "sar" && adc_name != "ramp") throw ConfigError("chip.adc must be sar or ramp");
    ChipConfig c = defaults(adc_name == "sar" ? ace::AdcKind::Sar : ace::AdcKind::Ramp);
    c.hct_count = static_cast<int>(config.get_int("chip.hct_count", c.hct_count));
    c.frontend_fanout = static_cast<int>(config.get_int("chip.frontend_fanout", c.frontend_fanout));
    c.ace_arrays = static_cast<int>(config.get_int("chip.ace_arrays", c.ace_arrays));
    c.device_bits = static_cast<int>(config.get_int("chip.device_bits", c.device_bits));
    c.analog_enabled = config.get_bool("chip.analog", c.analog_enabled);
    c.digital_enabled = config.get_bool("chip.digital", c.digital_enabled);
    c.iiu_enabled = config.get_bool("chip.iiu", c.iiu_enabled);
    c.optimized_mvm = config.get_bool("chip.optimized_mvm", c.optimized_mvm);
    c.seed = static_cast<std::uint64_t>(config.get_int("chip.seed", static_cast<std::int64_t>(c.seed)));
    c.dce_pipelines = static_cast<int>(config.get_int("dce.pipelines", c.dce_pipelines));
    c.dce_depth = static_cast<int>(config.get_int("dce.depth", c.dce_depth));
    c.dce_rows = static_cast<int>(config.get_int("dce.rows", c.dce_rows));
    const std::string family = config.get_string("dce.family", "oscar");
    if (family != "oscar" && family != "ideal") throw ConfigError("dce.family must be oscar or ideal");
    c.family = family == "oscar" ? dce::LogicFamily::Oscar : dce::LogicFamily::Ideal;
    c.latency_multiplier = static_cast<int>(config.get_int("dce.latency_multiplier", c.latency_multiplier));
    c.max_active_pipelines = static_cast<int>(config.get_int("dce.max_active_pipelines", c.max_active_pipelines));
    apply_cost_overrides(config, c.costs);
    c.noise = ace::NoiseConfig::from_config(config, c.noise);
    c.validate();
    return c;
}

void ChipConfig::validate() const {
    if (hct_count < 1) throw ConfigError("chip.hct_count must be positive");
    if (frontend_fanout < 1) throw ConfigError("chip.frontend_fanout must be positive");
    if (ace_arrays < 1 || ace_arrays > 4096) throw ConfigError("chip.ace_arrays out of range");
    if (dce_pipelines != 64) throw ConfigError("dce.pipelines must be 64 (runtime pipeline conventions)");
    if (dce_depth < 8 || dce_depth > 64 || dce_rows < 1 || dce_rows > 64) throw ConfigError("DCE geometry out of range");
    if (device_bits < 1 || device_bits > 8) throw ConfigError("chip.device_bits must be in 1..8");
    if (latency_multiplier < 1) throw ConfigError("dce.latency_multiplier must be >= 1");
    if (!analog_enabled && !digital_enabled) throw ModeError("analog and digital modes cannot both be disabled");
    costs.validate();
}

ace::AdcModel ChipConfig::adc_model() const {
    return adc == ace::AdcKind::Sar ? ace::AdcModel::sar(costs) : ace::AdcModel::ramp(costs);
}

hct::HctParams ChipConfig::hct_params() const {
    hct::HctParams p;
    p.ace_arrays = ace_arrays;
    p.dce.pipelines = dce_pipelines;
    p.dce.depth = dce_depth;
    p.dce.rows = dce_rows;
    p.dce.family = family;
    p.dce.latency_multiplier = latency_multiplier;
    p.dce.max_active_pipelines = max_active_pipelines;
    p.dce.element_load_cycles_per_element = costs.element_load_cycles_per_element;
    p.adc = adc_model();
    p.noise = noise;
    p.costs = costs;
    p.iiu_enabled = iiu_enabled;
    p.record_events = record_events;
    p.seed = seed ^ noise.rng_seed;
    return p;
}

Chip::Chip(ChipConfig config)
    : config_(std::move(config)),
      hcts_(static_cast<std::size_t>(config_.hct_count)),
      frontends_(static_cast<std::size_t>(config_.frontend_count())),
      queues_(static_cast<std::size_t>(config_.frontend_count())) {
    config_.validate();
}

hct::Hct& Chip::hct(int i) {
    if (i < 0 || i >= config_.hct_count) throw IndexError("HCT " + std::to_string(i) + " out of range");
    auto& slot = hcts_[static_cast<std::size_t>(i)];
    if (!slot) {
        slot = std::make_unique<hct::Hct>(i, config_.hct_params(), &frontend_for(i));
        if (trace_) slot->set_trace(trace_);
    }
    return *slot;
}

bool Chip::materialized(int i) const {
    return i >= 0 && i < config_.hct_count && hcts_[static_cast<std::size_t>(i)] != nullptr;
}

int Chip::materialized_hcts() const {
    return static_cast<int>(std::count_if(hcts_.begin(), hcts_.end(), [](const auto& h) { return h != nullptr; }));
}

hct::Frontend& Chip::frontend_for(int h) { return frontends_[static_cast<std::size_t>(h / config_.frontend_fanout)]; }

void Chip::account(const CostReport& r) {
    total_ += r;
    now_ = std::max(now_, r.end);
}

void Chip::set_trace(std::ostream* trace) {
    trace_ = trace;
    for (auto& h : hcts_) {
        if (h) h->set_trace(trace);
    }
}

void Chip::check_modes() const {
    if (!config_.analog_enabled && !config_.digital_enabled) throw ModeError("both compute domains are disabled");
}

int Chip::claim_hct_for(int element_bits, int slices) {
    for (; next_hct_ < config_.hct_count; ++next_hct_) {
        hct::Hct& h = hct(next_hct_);
        const bool width_ok = h.vacore_count() == 0 || h.vacore(0).element_bits == element_bits;
        if (width_ok && h.free_arrays() >= slices) return next_hct_;
    }
    throw CapacityError("chip has no HCT left for another tile");
}

std::vector<int> Chip::reserve_hcts(int count) {
    std::vector<int> out;
    for (int i = config_.hct_count - 1; i >= 0 && static_cast<int>(out.size()) < count; --i) {
        if (i < next_hct_ || (materialized(i) && hct(i).vacore_count() > 0)) break;
        out.push_back(i);
    }
    if (static_cast<int>(out.size()) < count) throw CapacityError("not enough free HCTs");
    return out;
}

int Chip::set_matrix(const ace::IntMatrix& m, int element_bits, Precision precision, bool fresh_hct) {
    if (m.rows < 1 || m.cols < 1) throw ShapeError("empty matrix");
    if (fresh_hct && next_hct_ < config_.hct_count && materialized(next_hct_) && hct(next_hct_).vacore_count() > 0) ++next_hct_;
    MatrixHandle h;
    h.id = static_cast<int>(handles_.size());
    h.rows = m.rows;
    h.cols = m.cols;
    h.element_bits = element_bits;
    h.precision = precision;
    h.bits_per_cell = std::min(bits_per_cell(precision, config_.device_bits), element_bits);
    h.matrix = m;
    const int slices = (element_bits + h.bits_per_cell - 1) / h.bits_per_cell;
    CostReport cost;
    const Cycle start = now_;
    for (int rb = 0; rb < h.row_tiles(); ++rb) {
        for (int cb = 0; cb < h.col_tiles(); ++cb) {
            Tile t;
            t.row0 = rb * 64;
            t.col0 = cb * 64;
            t.rows = std::min(64, m.rows - t.row0);
            t.cols = std::min(64, m.cols - t.col0);
            t.hct = claim_hct_for(element_bits, slices);
            hct::Hct& hc = hct(t.hct);
            t.vacore = hc.alloc_vacore(element_bits, h.bits_per_cell).id;
            h.tiles.push_back(t);
            cost += refresh_tile(h, t);
        }
    }
    cost.cover(start, start);
    account(cost);
    handles_.push_back(std::move(h));
    return handles_.back().id;
}

MatrixHandle& Chip::handle(int id) {
    if (id < 0 || id >= static_cast<int>(handles_.size())) throw IndexError("matrix handle out of range");
    return handles_[static_cast<std::size_t>(id)];
}

CostReport Chip::refresh_tile(MatrixHandle& h, const Tile& t) {
    ace::IntMatrix sub(t.rows, t.cols);
    for (int r = 0; r < t.rows; ++r) {
        for (int c = 0; c < t.cols; ++c) sub.at(r, c) = h.matrix.at(t.row0 + r, t.col0 + c);
    }
    hct::Hct& hc = hct(t.hct);
    CostReport r = hc.program_vacore(t.vacore, sub, ace::Remap::Raw, now_);
    if (!config_.analog_enabled) {
        r += hc.move_matrix_between_domains(t.vacore, hct::Domain::AnalogToDigital, {0, t.vacore * 64}, r.end);
    }
    return r;
}

namespace {

int ceil_log2(int n) { return n <= 1 ? 0 : std::bit_width(static_cast<unsigned>(n - 1)); }

void check_input(std::span<const std::int64_t> x, int cols, MvmInput in) {
    if (static_cast<int>(x.size()) != cols) {
        throw ShapeError("input length " + std::to_string(x.size()) + " != matrix columns " + std::to_string(cols));
    }
    if (in.bits < 1 || in.bits > 32) throw ShapeError("input bit width out of range");
    const std::int64_t lo = in.is_signed ? -(std::int64_t{1} << (in.bits - 1)) : 0;
    const std::int64_t hi = in.is_signed ? (std::int64_t{1} << (in.bits - 1)) - 1 : (std::int64_t{1} << in.bits) - 1;
    for (auto v : x) {
        if (v < lo || v > hi) throw OverflowError("input element " + std::to_string(v) + " does not fit the input width");
    }
}

}  // namespace

MvmResult Chip::exec_mvm(int handle_id, std::span<const std::int64_t> x, MvmInput input) {
    check_modes();
    MatrixHandle& h = handle(handle_id);
    check_input(x, h.cols, input);
    if (!config_.analog_enabled) return mvm_digital_only(h, x, input);

    MvmResult out;
    const Cycle start = input.start.value_or(now_);
    out.cost.cover(start, start);
    const int width = hct::mvm_acc_width(h.element_bits, input.bits, 64) + ceil_log2(h.col_tiles());
    if (width > config_.dce_depth) throw CapacityError("MVM accumulator exceeds the pipeline depth");
    std::vector<std::int64_t> y(static_cast<std::size_t>(h.rows), 0);

    for (std::size_t ti = 0; ti < h.tiles.size(); ++ti) {
        const Tile& t = h.tiles[ti];
        hct::Hct& hc = hct(t.hct);
        const int in_reg = (t.col0 / 64) % dce::kUserRegisters;
        std::vector<std::int64_t> xs(x.begin() + t.col0, x.begin() + t.col0 + t.cols);
        CostReport tile_cost = hc.pipeline(kInputPipeline).write_planes(in_reg, xs, input.bits, start);

        if (!config_.digital_enabled) {
            // Raw digitized partials straight off the ADCs, no DCE reduction.
            hct::VACore& v = hc.vacore(t.vacore);
            for (int i = 0; i < input.bits; ++i) {
                std::uint64_t mask = 0;
                for (int c = 0; c < t.cols; ++c) mask |= ((static_cast<std::uint64_t>(xs[c]) >> i) & 1u) << c;
                for (int j = 0; j < v.slices; ++j) {
                    auto ar = hc.analog_apply(v.first_array + j, mask, t.rows, hc.params().adc, tile_cost.end);
                    tile_cost += ar.cost;
                    const auto bytes = static_cast<std::uint64_t>(hct::partial_bytes(v)) * static_cast<std::uint64_t>(t.rows);
                    tile_cost += hc.transfer({bytes, v.first_array + j, kInputPipeline, 0, false}, ar.cost.end);
                    out.partials.push_back(RawPartial{static_cast<int>(ti), i, j, v.shift(i, j),
                                                      input.is_signed && i == input.bits - 1, std::move(ar.codes)});
                }
            }
            out.cost += tile_cost;
            continue;
        }

        tile_cost += hc.reserve_pipeline(kResultPipeline, tile_cost.end);
        hct::MvmOptions opts;
        opts.optimized = config_.optimized_mvm;
        opts.input_bits = input.bits;
        opts.input_signed = input.is_signed;
        opts.acc_width = width;
        tile_cost += hc.exec_mvm(t.vacore, {kInputPipeline, in_reg}, {kResultPipeline, 0}, opts, tile_cost.end);

        // Cross-tile recombination: the first tile of a row block gathers.
        const Tile& head = h.tiles[ti - static_cast<std::size_t>(t.col0 / 64)];
        hct::Hct& agg = hct(head.hct);
        const int gather_reg = (t.row0 / 64) % (dce::kUserRegisters - 1);
        constexpr int kStage = dce::kUserRegisters - 1;
        if (t.col0 == 0) {
            tile_cost += hc.dce().copy_register(kResultPipeline, 0, kGatherPipeline, gather_reg, width, tile_cost.end);
        } else {
            std::vector<std::int64_t> part;
            tile_cost += hc.pipeline(kResultPipeline).read_planes(0, width, part, true, tile_cost.end);
            part.resize(static_cast<std::size_t>(t.rows));
            if (&agg != &hc) {
                const auto bytes = static_cast<std::uint64_t>(t.rows) * static_cast<std::uint64_t>((width + 7) / 8);
                tile_cost += hc.transfer({bytes, kResultPipeline, kGatherPipeline, 0, true}, tile_cost.end);
            }
            tile_cost += agg.pipeline(kGatherPipeline).write_planes(kStage, part, width, tile_cost.end);
            tile_cost += agg.pipeline(kGatherPipeline)
                             .run_macro({dce::MacroKind::Add, gather_reg, gather_reg, kStage, 0, width}, tile_cost.end);
        }
        if (t.col0 / 64 == h.col_tiles() - 1) {
            std::vector<std::int64_t> vals;
            tile_cost += agg.pipeline(kGatherPipeline).read_planes(gather_reg, width, vals, true, tile_cost.end);
            for (int r = 0; r < t.rows; ++r) y[static_cast<std::size_t>(t.row0 + r)] = vals[static_cast<std::size_t>(r)];
        }
        out.cost += tile_cost;
    }
    if (config_.digital_enabled) out.values = std::move(y);
    account(out.cost);
    return out;
}

MvmResult Chip::mvm_digital_only(MatrixHandle& h, std::span<const std::int64_t> x, MvmInput input) {
    MvmResult out;
    const Cycle start = input.start.value_or(now_);
    out.cost.cover(start, start);
    const int width = hct::mvm_acc_width(h.element_bits, input.bits, 64) + ceil_log2(h.col_tiles());
    if (width > config_.dce_depth) throw CapacityError("MVM accumulator exceeds the pipeline depth");
    std::vector<std::int64_t> y(static_cast<std::size_t>(h.rows), 0);
    // Scratch registers above the 48 matrix registers of each pipeline.
    constexpr int kBcast = 48, kProd = 49, kAcc = 50, kS0 = 51, kS1 = 52, kAddr = 53, kStage = 54;
    const int per_pipe = hct::Hct::kMatrixRegsPerPipeline;

    for (std::size_t ti = 0; ti < h.tiles.size(); ++ti) {
        const Tile& t = h.tiles[ti];
        hct::Hct& hc = hct(t.hct);
        const int in_reg = (t.col0 / 64) % dce::kUserRegisters;
        std::vector<std::int64_t> xs(x.begin() + t.col0, x.begin() + t.col0 + t.cols);
        auto& inp = hc.pipeline(kInputPipeline);
        CostReport tile_cost = inp.write_planes(in_reg, xs, width, start);
        const Cycle t0 = tile_cost.end;

        const int base = t.vacore * 64;
        const int first_pipe = base / per_pipe;
        const int last_pipe = (base + t.cols - 1) / per_pipe;
        for (int p = first_pipe; p <= last_pipe; ++p) {
            auto& pipe = hc.pipeline(p);
            tile_cost += pipe.run_macro({dce::MacroKind::Copy, kAcc, dce::kZeroColumn, dce::kZeroColumn, 0, width}, t0);
            for (int c = 0; c < t.cols; ++c) {
                const int g = base + c;
                if (g / per_pipe != p) continue;
                tile_cost += dce::kernels::broadcast_element(pipe, kBcast, inp, in_reg, c, width, kAddr, t0);
                tile_cost += dce::kernels::multiply(pipe, kProd, kBcast, g % per_pipe, h.element_bits + 1, true, width,
                                                    kS0, kS1, t0);
                tile_cost += pipe.run_macro({dce::MacroKind::Add, kAcc, kAcc, kProd, 0, width}, t0);
            }
            if (p != first_pipe) {
                tile_cost += hc.dce().copy_register(p, kAcc, first_pipe, kStage, width, t0);
                tile_cost += hc.pipeline(first_pipe).run_macro({dce::MacroKind::Add, kAcc, kAcc, kStage, 0, width}, t0);
            }
        }

        const Tile& head = h.tiles[ti - static_cast<std::size_t>(t.col0 / 64)];
        hct::Hct& agg = hct(head.hct);
        const int gather_reg = (t.row0 / 64) % (dce::kUserRegisters - 1);
        if (t.col0 == 0) {
            tile_cost += hc.dce().copy_register(first_pipe, kAcc, kGatherPipeline, gather_reg, width, t0);
        } else {
            std::vector<std::int64_t> part;
            tile_cost += hc.pipeline(first_pipe).read_planes(kAcc, width, part, true, t0);
            part.resize(static_cast<std::size_t>(t.rows));
            if (&agg != &hc) {
                const auto bytes = static_cast<std::uint64_t>(t.rows) * static_cast<std::uint64_t>((width + 7) / 8);
                tile_cost += hc.transfer({bytes, first_pipe, kGatherPipeline, 0, true}, tile_cost.end);
            }
            tile_cost += agg.pipeline(kGatherPipeline).write_planes(kStage, part, width, tile_cost.end);
            tile_cost += agg.pipeline(kGatherPipeline)
                             .run_macro({dce::MacroKind::Add, gather_reg, gather_reg, kStage, 0, width}, t0);
        }
        if (t.col0 / 64 == h.col_tiles() - 1) {
            std::vector<std::int64_t> vals;
            tile_cost += agg.pipeline(kGatherPipeline).read_planes(gather_reg, width, vals, true, t0);
            for (int r = 0; r < t.rows; ++r) y[static_cast<std::size_t>(t.row0 + r)] = vals[static_cast<std::size_t>(r)];
        }
        out.cost += tile_cost;
    }
    out.values = std::move(y);
    account(out.cost);
    return out;
}

CostReport Chip::update_row(int handle_id, int row, std::span<const std::int64_t> values) {
    MatrixHandle& h = handle(handle_id);
    if (values.empty()) return {};
    if (row < 0 || row >= h.rows) throw IndexError("row " + std::to_string(row) + " out of range");
    if (static_cast<int>(values.size()) != h.cols) throw ShapeError("row update length mismatch");
    for (int c = 0; c < h.cols; ++c) h.matrix.at(row, c) = values[static_cast<std::size_t>(c)];
    CostReport cost;
    cost.cover(now_, now_);
    for (const Tile& t : h.tiles) {
        if (row >= t.row0 && row < t.row0 + t.rows) cost += refresh_tile(h, t);
    }
    account(cost);
    return cost;
}

CostReport Chip::update_col(int handle_id, int col, std::span<const std::int64_t> values) {
    MatrixHandle& h = handle(handle_id);
    if (values.empty()) return {};
    if (col < 0 || col >= h.cols) throw IndexError("column " + std::to_string(col) + " out of range");
    if (static_cast<int>(values.size()) != h.rows) throw ShapeError("column update length mismatch");
    for (int r = 0; r < h.rows; ++r) h.matrix.at(r, col) = values[static_cast<std::size_t>(r)];
    CostReport cost;
    cost.cover(now_, now_);
    for (const Tile& t : h.tiles) {
        if (col >= t.col0 && col < t.col0 + t.cols) cost += refresh_tile(h, t);
    }
    account(cost);
    return cost;
}

CostReport Chip::disable_analog_mode() {
    if (!config_.analog_enabled) throw ModeError("analog mode is already disabled");
    if (!config_.digital_enabled) throw ModeError("cannot disable analog mode while digital mode is disabled");
    CostReport cost;
    cost.cover(now_, now_);
    for (auto& h : handles_) {
        for (const Tile& t : h.tiles) {
            if (t.vacore * 64 + t.cols > kDigitalMatrixPipelines * hct::Hct::kMatrixRegsPerPipeline) {
                throw CapacityError("too many tiles on one HCT for a digital copy");
            }
            cost += hct(t.hct).move_matrix_between_domains(t.vacore, hct::Domain::AnalogToDigital, {0, t.vacore * 64}, now_);
        }
    }
    config_.analog_enabled = false;
    account(cost);
    return cost;
}

CostReport Chip::enable_analog_mode() {
    if (config_.analog_enabled) return {};
    CostReport cost;
    cost.cover(now_, now_);
    for (auto& h : handles_) {
        for (const Tile& t : h.tiles) {
            cost += hct(t.hct).move_matrix_between_domains(t.vacore, hct::Domain::DigitalToAnalog, {0, t.vacore * 64}, now_);
        }
    }
    config_.analog_enabled = true;
    account(cost);
    return cost;
}

CostReport Chip::disable_digital_mode() {
    if (!config_.digital_enabled) throw ModeError("digital mode is already disabled");
    if (!config_.analog_enabled) throw ModeError("cannot disable digital mode while analog mode is disabled");
    config_.digital_enabled = false;
    return {};
}

void Chip::enable_digital_mode() { config_.digital_enabled = true; }

int Chip::register_matrix(const ace::IntMatrix& m) {
    registered_.push_back(m);
    return static_cast<int>(registered_.size()) - 1;
}

void Chip::load_program(std::vector<Instruction> program) {
    for (auto& q : queues_) q.clear();
    for (auto& ins : program) {
        if (ins.hct < 0 || ins.hct >= config_.hct_count) throw IndexError("instruction targets a missing HCT");
        queues_[static_cast<std::size_t>(ins.hct / config_.frontend_fanout)].push_back(ins);
    }
}

StepResult Chip::frontend_step() {
    StepResult step;
    bool any = false;
    for (std::size_t f = 0; f < queues_.size(); ++f) {
        auto& q = queues_[f];
        if (q.empty()) continue;
        any = true;
        if (frontends_[f].next_free() > now_) {
            ++step.stalls;
            continue;
        }
        const Instruction ins = q.front();
        q.pop_front();
        total_ += execute(ins, now_);
        ++step.issued;
    }
    if (any) {
        ++stats_.cycles;
        ++now_;
    }
    stats_.issued += static_cast<std::uint64_t>(step.issued);
    stats_.stalls += static_cast<std::uint64_t>(step.stalls);
    return step;
}

FrontendStats Chip::run_program() {
    const FrontendStats before = stats_;
    auto pending = [&] { return std::any_of(queues_.begin(), queues_.end(), [](const auto& q) { return !q.empty(); }); };
    while (pending()) frontend_step();
    for (std::size_t i = 0; i < hcts_.size(); ++i) {
        if (hcts_[i]) now_ = std::max(now_, hcts_[i]->horizon());
    }
    return FrontendStats{stats_.cycles - before.cycles, stats_.issued - before.issued, stats_.stalls - before.stalls};
}

namespace {

std::optional<dce::MacroKind> macro_of(Opcode op) {
    using dce::MacroKind;
    switch (op) {
        case Opcode::Add: return MacroKind::Add;
        case Opcode::Sub: return MacroKind::Sub;
        case Opcode::Xor: return MacroKind::Xor;
        case Opcode::And: return MacroKind::And;
        case Opcode::Or: return MacroKind::Or;
        case Opcode::Not: return MacroKind::Not;
        case Opcode::Copy: return MacroKind::Copy;
        case Opcode::Shl: return MacroKind::Shl;
        case Opcode::Shr: return MacroKind::Shr;
        case Opcode::Cmp: return MacroKind::CmpGe;
        case Opcode::Mux: return MacroKind::Mux;
        default: return std::nullopt;
    }
}

}  // namespace

CostReport Chip::execute(const Instruction& ins, Cycle at) {
    hct::Hct& hc = hct(ins.hct);
    CostReport r;
    if (auto kind = macro_of(ins.op)) {
        if (!config_.digital_enabled) throw ModeError("digital instructions need the digital domain");
        r += hc.digital(ins.pipe, dce::MacroArgs{*kind, ins.dst, ins.a, ins.b, ins.c, ins.width, ins.shift, ins.arithmetic}, at);
        return r;
    }
    auto issue = [&] { return frontend_for(ins.hct).issue(at, r); };
    switch (ins.op) {
        case Opcode::Reverse: {
            const Cycle t = issue();
            r += hc.pipeline(ins.pipe).reverse(t);
            break;
        }
        case Opcode::ElemLoad: {
            const Cycle t = issue();
            dce::DigitalPipeline::ElementLoad load{ins.dst, ins.a, ins.addr_shift, ins.addr_bits, ins.base, ins.value_bits,
                                                   ins.value_shift};
            r += hc.pipeline(ins.pipe).element_load(load, hc.pipeline(ins.src_pipe), t);
            break;
        }
        case Opcode::ElemStore: {
            const Cycle t = issue();
            dce::DigitalPipeline::ElementStore store{ins.a, ins.b, ins.addr_shift, ins.addr_bits, ins.base, ins.value_bits,
                                                     ins.value_shift};
            r += hc.pipeline(ins.pipe).element_store(store, hc.pipeline(ins.src_pipe), t);
            break;
        }
        case Opcode::Mvm: {
            hct::MvmOptions o;
            o.optimized = config_.optimized_mvm;
            o.input_bits = ins.bits;
            o.input_signed = ins.is_signed;
            o.acc_width = ins.width == 64 ? 0 : ins.width;
            r += hc.exec_mvm(ins.vacore, {ins.src_pipe, ins.base}, {ins.pipe, ins.dst}, o, at);
            break;
        }
        case Opcode::Program: {
            const Cycle t = issue();
            if (ins.matrix < 0 || ins.matrix >= static_cast<int>(registered_.size())) throw IndexError("unknown matrix id");
            r += hc.program_vacore(ins.vacore, registered_[static_cast<std::size_t>(ins.matrix)], ace::Remap::Raw, t);
            break;
        }
        case Opcode::VacoreAlloc: issue(); hc.alloc_vacore(ins.bits, ins.cell_bits); break;
        case Opcode::PipelineReserve: r += hc.reserve_pipeline(ins.pipe, at); break;
        case Opcode::PipelineRelease: r += hc.release_pipeline(ins.pipe, at); break;
        case Opcode::Barrier: {
            Cycle horizon = at;
            for (const auto& h : hcts_) {
                if (h) horizon = std::max(horizon, h->horizon());
            }
            frontend_for(ins.hct).issue(horizon, r);
            break;
        }
        default: break;
    }
    return r;
}

// ---- assembly text ----

namespace {

struct OpName {
    Opcode op;
    const char* name;
};

constexpr OpName kOpNames[] = {
    {Opcode::Add, "ADD"}, {Opcode::Sub, "SUB"}, {Opcode::Xor, "XOR"}, {Opcode::And, "AND"}, {Opcode::Or, "OR"},
    {Opcode::Not, "NOT"}, {Opcode::Copy, "COPY"}, {Opcode::Shl, "SHL"}, {Opcode::Shr, "SHR"}, {Opcode::Cmp, "CMP"},
    {Opcode::Mux, "MUX"}, {Opcode::ElemLoad, "ELEM_LOAD"}, {Opcode::ElemStore, "ELEM_STORE"},
    {Opcode::Reverse, "REVERSE"}, {Opcode::Mvm, "MVM"}, {Opcode::Program, "PROGRAM"},
    {Opcode::VacoreAlloc, "VACORE_ALLOC"}, {Opcode::PipelineReserve, "PIPELINE_RESERVE"},
    {Opcode::PipelineRelease, "PIPELINE_RELEASE"}, {Opcode::Barrier, "BARRIER"},
};

struct Field {
    const char* key;
    int Instruction::*i = nullptr;
    bool Instruction::*b = nullptr;
};

constexpr Field kFields[] = {
    {"hct", &Instruction::hct},
    {"pipe", &Instruction::pipe},
    {"dst", &Instruction::dst},
    {"a", &Instruction::a},
    {"b", &Instruction::b},
    {"c", &Instruction::c},
    {"width", &Instruction::width},
    {"shift", &Instruction::shift},
    {"arith", nullptr, &Instruction::arithmetic},
    {"src_pipe", &Instruction::src_pipe},
    {"base", &Instruction::base},
    {"addr_shift", &Instruction::addr_shift},
    {"addr_bits", &Instruction::addr_bits},
    {"value_bits", &Instruction::value_bits},
    {"value_shift", &Instruction::value_shift},
    {"vacore", &Instruction::vacore},
    {"bits", &Instruction::bits},
    {"cell_bits", &Instruction::cell_bits},
    {"signed", nullptr, &Instruction::is_signed},
    {"matrix", &Instruction::matrix},
};

}  // namespace

std::string_view opcode_name(Opcode op) {
    for (const auto& n : kOpNames) {
        if (n.op == op) return n.name;
    }
    return "?";
}

std::optional<Opcode> parse_opcode(std::string_view text) {
    for (const auto& n : kOpNames) {
        if (text == n.name) return n.op;
    }
    return std::nullopt;
}

std::string format_instruction(const Instruction& ins) {
    const Instruction defaults{};
    std::ostringstream out;
    out << opcode_name(ins.op);
    for (const auto& f : kFields) {
        if (f.i && (ins.*f.i != defaults.*f.i || std::string_view(f.key) == "hct")) out << ' ' << f.key << '=' << ins.*f.i;
        if (f.b && ins.*f.b != defaults.*f.b) out << ' ' << f.key << '=' << (ins.*f.b ? 1 : 0);
    }
    return out.str();
}

Instruction parse_instruction(const std::string& line) {
    std::istringstream in(line);
    std::string word;
    if (!(in >> word)) throw ConfigError("empty instruction");
    const auto op = parse_opcode(word);
    if (!op) throw ConfigError("unknown opcode " + word);
    Instruction ins;
    ins.op = *op;
    while (in >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos) throw ConfigError("operand '" + word + "' is not key=value");
        const std::string key = word.substr(0, eq);
        const std::string value = word.substr(eq + 1);
        const Field* field = nullptr;
        for (const auto& f : kFields) {
            if (key == f.key) field = &f;
        }
        if (!field) throw ConfigError("unknown operand " + key);
        int v = 0;
        try {
            std::size_t used = 0;
            v = std::stoi(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ConfigError("operand " + key + " needs an integer, got '" + value + "'");
        }
        if (field->i) ins.*field->i = v;
        if (field->b) ins.*field->b = v != 0;
    }
    return ins;
}

std::vector<Instruction> assemble(const std::string& text) {
    std::vector<Instruction> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_instruction(line));
    }
    return out;
}

std::string disassemble(std::span<const Instruction> program) {
    std::string out;
    for (const auto& ins : program) out += format_instruction(ins) + '\n';
    return out;
}

}  // namespace darth::runtime
