#include "darth/hct.hpp"

#include <algorithm>
#include <bit>

#include "darth/errors.hpp"

namespace darth::hct {

Cycle Frontend::issue(Cycle at, CostReport& cost) {
    const Cycle t = std::max(at, next_free_);
    cost.frontend_stall_cycles += t - at;
    next_free_ = t + 1;
    ++issued_;
    cost.frontend_issues += 1;
    cost.frontend_cycles += 1;
    cost.cover(t, t + 1);
    return t;
}

int mvm_acc_width(int element_bits, int input_bits, int inputs) {
    const int row_bits = inputs > 1 ? std::bit_width(static_cast<unsigned>(inputs - 1)) : 0;
    return element_bits + input_bits + row_bits + 1;
}

int partial_bytes(const VACore& vc) {
    const auto full_scale = static_cast<std::uint64_t>(ace::kRows) *
                            (vc.remap == ace::Remap::Symmetric ? 1u : low_mask(vc.bits_per_cell));
    const int code_bits = std::bit_width(full_scale) + 1;
    return (code_bits + 7) / 8;
}

Hct::Hct(int id, const HctParams& params, Frontend* frontend)
    : id_(id),
      params_(params),
      frontend_(frontend),
      ace_(params.ace_arrays, params.noise, params.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(id + 1))),
      dce_(params.dce),
      modes_(static_cast<std::size_t>(params.ace_arrays), ArrayMode::Idle),
      array_ready_(static_cast<std::size_t>(params.ace_arrays), 0),
      adc_free_(static_cast<std::size_t>(params.ace_arrays), 0) {}

void Hct::record(Cycle cycle, const char* kind, std::int64_t a, std::int64_t b, std::int64_t c) {
    if (params_.record_events) events_.push_back(Event{cycle, kind, a, b, c});
    if (trace_) *trace_ << cycle << ',' << id_ << ',' << kind << ',' << a << ',' << b << ',' << c << '\n';
}

void Hct::set_trace(std::ostream* trace) { trace_ = trace; }

Cycle Hct::issue(Cycle at, CostReport& cost) {
    if (!frontend_) {
        cost.frontend_issues += 1;
        cost.frontend_cycles += 1;
        return at;
    }
    return frontend_->issue(at, cost);
}

VACore& Hct::alloc_vacore(int element_bits, int bits_per_cell) {
    if (element_bits < 1 || element_bits > 16 || bits_per_cell < 1 || bits_per_cell > 8) {
        throw ConfigError("unsupported vACore widths");
    }
    for (const auto& v : vacores_) {
        if (v.element_bits != element_bits) {
            throw WidthConflictError("HCT " + std::to_string(id_) + " already holds " + std::to_string(v.element_bits) +
                                     "-bit vACores");
        }
    }
    VACore v;
    v.id = static_cast<int>(vacores_.size());
    v.element_bits = element_bits;
    v.bits_per_cell = bits_per_cell;
    v.slices = (element_bits + bits_per_cell - 1) / bits_per_cell;
    if (next_array_ + v.slices > params_.ace_arrays) throw CapacityError("no free analog arrays for the vACore");
    v.first_array = next_array_;
    next_array_ += v.slices;
    v.shift_schedule.assign(static_cast<std::size_t>(v.slices), std::vector<int>(static_cast<std::size_t>(element_bits)));
    for (int j = 0; j < v.slices; ++j) {
        for (int i = 0; i < element_bits; ++i) v.shift_schedule[j][i] = v.shift(i, j);
    }
    v.iiu = IiuProgram{dce::MacroKind::Add, 1, v.slices * element_bits - 1};
    vacores_.push_back(v);
    stored_.emplace_back();
    return vacores_.back();
}

VACore& Hct::vacore(int id) {
    if (id < 0 || id >= vacore_count()) throw IndexError("vACore " + std::to_string(id) + " does not exist");
    return vacores_[static_cast<std::size_t>(id)];
}

void Hct::clear_vacores() {
    vacores_.clear();
    stored_.clear();
    next_array_ = 0;
    std::fill(modes_.begin(), modes_.end(), ArrayMode::Idle);
}

CostReport Hct::program_vacore(int vc, const ace::IntMatrix& a, ace::Remap remap, Cycle not_before) {
    VACore& v = vacore(vc);
    if (a.rows > ace::kCols || a.cols > ace::kRows) throw CapacityError("matrix exceeds one 64x64 tile");
    ace_.program(v.first_array, a.transposed(), v.plan(), remap);
    v.remap = remap;
    v.programmed = true;
    v.outputs = a.rows;
    v.inputs = a.cols;
    stored_[static_cast<std::size_t>(vc)] = a;
    CostReport r;
    Cycle start = not_before;
    for (int s = 0; s < v.slices; ++s) start = std::max(start, array_ready_[static_cast<std::size_t>(v.first_array + s)]);
    const Cycle end = start + params_.costs.reprogram_cycles;
    for (int s = 0; s < v.slices; ++s) {
        array_ready_[static_cast<std::size_t>(v.first_array + s)] = end;
        modes_[static_cast<std::size_t>(v.first_array + s)] = ArrayMode::Idle;
    }
    r.reprogrammed_arrays = static_cast<std::uint64_t>(v.slices);
    r.cover(start, end);
    record(start, "PROGRAM", vc, v.first_array, v.slices);
    touch(r);
    return r;
}

CostReport Hct::reserve_pipeline(int p, Cycle not_before) {
    auto& pipe = pipeline(p);
    if (pipe.reserved()) throw AlreadyReservedError("pipeline " + std::to_string(p) + " is already reserved");
    CostReport r;
    const Cycle t = issue(not_before, r);
    pipe.set_reserved(true);
    record(t, "RESERVE", p);
    return r;
}

CostReport Hct::release_pipeline(int p, Cycle not_before) {
    auto& pipe = pipeline(p);
    CostReport r;
    const Cycle t = issue(not_before, r);
    pipe.set_reserved(false);
    pipe.set_mvm_writer(false);
    record(t, "RELEASE", p);
    return r;
}

Hct::AnalogResult Hct::analog_apply(int array, std::uint64_t input_mask, int active, const ace::AdcModel& adc,
                                    Cycle not_before) {
    AnalogResult out;
    auto& arr = ace_.array(array);
    const Cycle settle_start = std::max(not_before, array_ready_[static_cast<std::size_t>(array)]);
    const Cycle settle_end = settle_start + 1;
    // Each array owns its converters (SAR pair or one ramp).
    Cycle& adc_free = adc_free_[static_cast<std::size_t>(array)];
    const Cycle conv_start = std::max(settle_end, adc_free);
    const Cycle conv_end = conv_start + adc.latency(active);
    adc_free = conv_end;
    array_ready_[static_cast<std::size_t>(array)] = conv_start;  // sampled; the array may take the next input
    const auto sums = ace_.apply(array, input_mask);
    out.codes = ace::digitize(sums.sums, adc, active, arr.full_scale(), out.cost);
    out.cost.row_active_cycles += 1;
    out.cost.cover(settle_start, conv_end);
    record(settle_start, "APPLY", array, static_cast<std::int64_t>(std::popcount(input_mask)), active);
    record(conv_end, "ADC_DONE", array, static_cast<std::int64_t>(conv_start), active);
    touch(out.cost);
    return out;
}

CostReport Hct::transfer(const TransferEvent& event, Cycle not_before) {
    CostReport r;
    const auto per_cycle = static_cast<std::uint64_t>(params_.costs.transfer_bytes_per_cycle);
    const Cycle cycles = (event.bytes + per_cycle - 1) / per_cycle;
    if (cycles == 0) {
        r.cover(not_before, not_before);
        return r;
    }
    const Cycle start = std::max(not_before, net_free_);
    net_free_ = start + cycles;
    r.transfer_bytes = event.bytes;
    r.transfer_cycles = cycles;
    r.cover(start, start + cycles);
    record(start, "XFER", static_cast<std::int64_t>(event.bytes), event.shift, event.transpose ? 1 : 0);
    touch(r);
    return r;
}

CostReport Hct::land(std::span<const std::int64_t> codes, RegRef dest, int width, int shift, bool transposed,
                     Cycle not_before, bool keep_low) {
    auto& pipe = pipeline(dest.pipeline);
    CostReport r;
    if (transposed) {
        std::vector<std::int64_t> shifted(codes.size());
        for (std::size_t e = 0; e < codes.size(); ++e) {
            shifted[e] = sign_extend(static_cast<std::uint64_t>(codes[e]) << shift & low_mask(width), width);
        }
        r += pipe.write_planes(dest.reg, shifted, width, not_before, keep_low ? shift : 0);
    } else {
        r += pipe.write_rows(dest.reg, codes, width, not_before);
        if (shift > 0) r += pipe.run_macro({dce::MacroKind::Shl, dest.reg, dest.reg, dest.reg, 0, width, shift}, not_before);
    }
    record(r.start, "LAND", dest.pipeline, dest.reg, shift);
    touch(r);
    return r;
}

CostReport Hct::digital(int p, const dce::MacroArgs& args, Cycle not_before) {
    CostReport r;
    const Cycle t = issue(not_before, r);
    r += pipeline(p).run_macro(args, t);
    touch(r);
    return r;
}

CostReport Hct::exec_mvm(int vc, RegRef input, RegRef dest, const MvmOptions& options, Cycle not_before) {
    VACore& v = vacore(vc);
    if (!v.programmed) throw SimError("vACore " + std::to_string(vc) + " has no matrix");
    for (int s = 0; s < v.slices; ++s) {
        if (modes_[static_cast<std::size_t>(v.first_array + s)] == ArrayMode::Digital) {
            throw ArbiterConflictError("vACore arrays currently hold digital-domain data");
        }
    }
    auto& dp = pipeline(dest.pipeline);
    if (!dp.reserved()) throw ReservedRegisterError("exec_mvm destination pipeline is not reserved");
    const int in_bits = options.input_bits;
    const int width = options.acc_width > 0 ? options.acc_width : mvm_acc_width(v.element_bits, in_bits, v.inputs);
    if (width > params_.dce.depth || in_bits < 1 || in_bits > params_.dce.depth) {
        throw CapacityError("MVM operands do not fit the pipeline depth");
    }

    CostReport total;
    const Cycle t0 = issue(not_before, total);
    record(t0, "MVM_BEGIN", vc, dest.pipeline, dest.reg);

    auto& ip = pipeline(input.pipeline);
    std::vector<std::int64_t> scratch;
    const CostReport in_read = ip.read_planes(input.reg, in_bits, scratch, false, t0);
    total += in_read;
    std::vector<std::uint64_t> masks(static_cast<std::size_t>(in_bits));
    for (int i = 0; i < in_bits; ++i) masks[i] = ip.column(i, input.reg) & low_mask(v.inputs);

    for (int s = 0; s < v.slices; ++s) modes_[static_cast<std::size_t>(v.first_array + s)] = ArrayMode::Analog;
    dp.set_mvm_writer(true);

    struct Partial {
        std::vector<std::int64_t> codes;
        Cycle ready = 0;
        int shift = 0;
        bool negative = false;
    };
    const int n = v.slices * in_bits;
    const auto bytes = static_cast<std::uint64_t>(partial_bytes(v)) * static_cast<std::uint64_t>(v.outputs);
    std::vector<Partial> partials;
    partials.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < in_bits; ++i) {
        for (int j = 0; j < v.slices; ++j) {
            auto ar = analog_apply(v.first_array + j, masks[i], v.outputs, params_.adc, in_read.end);
            total += ar.cost;
            const CostReport x =
                transfer(TransferEvent{bytes, v.first_array + j, dest.pipeline, v.shift(i, j), options.optimized},
                         ar.cost.end);
            total += x;
            partials.push_back(Partial{std::move(ar.codes), x.end, v.shift(i, j), options.input_signed && i == in_bits - 1});
        }
    }

    std::vector<int> pool;
    for (int r = 0; r < dce::kUserRegisters && static_cast<int>(pool.size()) < n; ++r) {
        if (r != dest.reg) pool.push_back(r);
    }
    const int pool_size = static_cast<int>(pool.size());
    auto reg_of = [&](int k) { return pool[static_cast<std::size_t>(k % pool_size)]; };

    using dce::MacroKind;
    auto reduce = [&](int k, Cycle at) {
        const Partial& p = partials[static_cast<std::size_t>(k)];
        dce::MacroArgs args{p.negative ? MacroKind::Sub : MacroKind::Add, dest.reg, dest.reg, reg_of(k), 0, width};
        if (k == 0) {
            args = p.negative ? dce::MacroArgs{MacroKind::Sub, dest.reg, dce::kZeroColumn, reg_of(0), 0, width}
                              : dce::MacroArgs{MacroKind::Copy, dest.reg, reg_of(0), reg_of(0), 0, width};
        } else if (k == 1 && !partials[0].negative) {
            args.a = reg_of(0);
        }
        const CostReport r = dp.run_macro(args, at);
        record(r.start, dce::macro_name(args.kind).data(), dest.pipeline, k, static_cast<std::int64_t>(r.end));
        return r;
    };

    if (options.optimized) {
        int landed = 0;
        Cycle floor = 0;
        bool streaming = false;
        auto land_upto = [&](int limit) {
            for (; landed < std::min(limit, n); ++landed) {
                const Partial& p = partials[static_cast<std::size_t>(landed)];
                const CostReport r = land(p.codes, {dest.pipeline, reg_of(landed)}, width, p.shift, true, p.ready);
                total += r;
                if (!streaming) floor = std::max(floor, r.end);
            }
        };
        land_upto(pool_size);
        // Later partials wait only through the pipeline's register readiness.
        streaming = true;
        // Every ADD waits for the first wave of partials; the injector then
        // replays the reduction without front-end slots.
        const bool fold_first = n >= 2 && !partials[0].negative;
        for (int k = fold_first ? 1 : 0; k < n; ++k) {
            Cycle at = floor;
            if (params_.iiu_enabled) {
                at = std::max(at, iiu_free_);
                iiu_free_ = at + 1;
                if (k == (fold_first ? 1 : 0)) record(at, "IIU_EXPAND", vc, n, 0);
            } else {
                at = issue(at, total);
            }
            total += reduce(k, at);
            // Refill the freed registers in one batch once the pool has been
            // consumed, so the stream stalls once rather than per partial.
            if ((k + 1) % pool_size == 0) land_upto(k + 1 + pool_size);
        }
    } else {
        for (int k = 0; k < n; ++k) {
            const Partial& p = partials[static_cast<std::size_t>(k)];
            CostReport wr;
            const Cycle t_write = issue(p.ready, wr);
            wr += land(p.codes, {dest.pipeline, pool[0]}, width, p.shift, false, t_write);
            if (p.shift > 0) issue(wr.end, wr);
            total += wr;
            const Cycle t_add = issue(wr.end, total);
            // Staging register is reused: every partial lands in pool[0].
            const Partial& cur = partials[static_cast<std::size_t>(k)];
            dce::MacroArgs args{cur.negative ? MacroKind::Sub : MacroKind::Add, dest.reg, dest.reg, pool[0], 0, width};
            if (k == 0) {
                args = cur.negative ? dce::MacroArgs{MacroKind::Sub, dest.reg, dce::kZeroColumn, pool[0], 0, width}
                                    : dce::MacroArgs{MacroKind::Copy, dest.reg, pool[0], pool[0], 0, width};
            }
            const CostReport r = dp.run_macro(args, t_add);
            record(r.start, dce::macro_name(args.kind).data(), dest.pipeline, k, static_cast<std::int64_t>(r.end));
            total += r;
        }
    }

    dp.set_mvm_writer(false);
    dp.set_reserved(false);
    for (int s = 0; s < v.slices; ++s) modes_[static_cast<std::size_t>(v.first_array + s)] = ArrayMode::Idle;
    record(total.end, "MVM_RETIRE", vc, dest.pipeline, dest.reg);
    touch(total);
    return total;
}

CostReport Hct::move_matrix_between_domains(int vc, Domain direction, RegRef base, Cycle not_before) {
    VACore& v = vacore(vc);
    if (!v.programmed) throw SimError("vACore " + std::to_string(vc) + " has no matrix");
    const int width = v.element_bits + 1;
    const int per_pipe = kMatrixRegsPerPipeline;
    // Column c goes to global register index base.reg + c, 48 per pipeline.
    auto target = [&](int c) {
        const int g = base.reg + c;
        return RegRef{base.pipeline + g / per_pipe, g % per_pipe};
    };
    if (base.reg < 0 || base.pipeline < 0 || target(v.inputs - 1).pipeline >= params_.dce.pipelines) {
        throw CapacityError("not enough pipelines for the matrix");
    }
    CostReport total;
    total.cover(not_before, not_before);

    if (direction == Domain::AnalogToDigital) {
        // Read each crossbar row with a one-hot input; the row lands as one
        // vector register (a column of the logical matrix).
        constexpr int kStaging = dce::kUserRegisters - 1;
        const auto bytes = static_cast<std::uint64_t>(partial_bytes(v)) * static_cast<std::uint64_t>(v.outputs);
        for (int c = 0; c < v.inputs; ++c) {
            const RegRef dst = target(c);
            for (int j = 0; j < v.slices; ++j) {
                auto ar = analog_apply(v.first_array + j, std::uint64_t{1} << c, v.outputs, params_.adc, not_before);
                total += ar.cost;
                const CostReport x = transfer(TransferEvent{bytes, v.first_array + j, dst.pipeline, v.bits_per_cell * j, true},
                                              ar.cost.end);
                total += x;
                const RegRef stage = j == 0 ? dst : RegRef{dst.pipeline, kStaging};
                total += land(ar.codes, stage, width, v.bits_per_cell * j, true, x.end);
                if (j > 0) {
                    total += pipeline(dst.pipeline).run_macro({dce::MacroKind::Add, dst.reg, dst.reg, kStaging, 0, width},
                                                              not_before);
                }
            }
        }
        for (int s = 0; s < v.slices; ++s) modes_[static_cast<std::size_t>(v.first_array + s)] = ArrayMode::Digital;
        record(total.start, "MOVE_A2D", vc, base.pipeline, base.reg);
    } else {
        ace::IntMatrix a(v.outputs, v.inputs);
        for (int c = 0; c < v.inputs; ++c) {
            const RegRef src = target(c);
            std::vector<std::int64_t> vals;
            total += pipeline(src.pipeline).read_planes(src.reg, width, vals, true, not_before);
            for (int r = 0; r < v.outputs; ++r) a.at(r, c) = vals[static_cast<std::size_t>(r)];
        }
        total += program_vacore(vc, a, v.remap, total.end);
        record(total.start, "MOVE_D2A", vc, base.pipeline, base.reg);
    }
    touch(total);
    return total;
}

}  // namespace darth::hct
