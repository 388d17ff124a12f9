#include "darth/dce.hpp"

#include <algorithm>
#include <array>
#include <bit>

#include "darth/errors.hpp"

namespace darth::dce {

std::string_view microop_name(MicroopKind k) {
    switch (k) {
        case MicroopKind::Nor: return "NOR";
        case MicroopKind::CopyRow: return "COPY_ROW";
        case MicroopKind::WriteRow: return "WRITE_ROW";
        case MicroopKind::ReadRow: return "READ_ROW";
        case MicroopKind::ShiftStep: return "SHIFT_STEP";
        case MicroopKind::Nop: return "NOP";
        case MicroopKind::Gate: return "GATE";
    }
    return "?";
}

std::string_view macro_name(MacroKind k) {
    switch (k) {
        case MacroKind::Not: return "NOT";
        case MacroKind::And: return "AND";
        case MacroKind::Or: return "OR";
        case MacroKind::Xor: return "XOR";
        case MacroKind::Add: return "ADD";
        case MacroKind::Sub: return "SUB";
        case MacroKind::Shl: return "SHL";
        case MacroKind::Shr: return "SHR";
        case MacroKind::Copy: return "COPY";
        case MacroKind::CmpGe: return "CMP_GE";
        case MacroKind::Mux: return "MUX";
    }
    return "?";
}

MacroCosts MacroCosts::for_family(LogicFamily f) {
    MacroCosts c;
    if (f == LogicFamily::Ideal) {
        c.not_ = 1;
        c.and_ = 1;
        c.or_ = 1;
        c.xor_ = 1;
        c.add = 5;
        c.sub = 5;
        c.copy = 1;
        c.mux = 3;
    }
    return c;
}

int MacroCosts::per_bit(MacroKind k) const {
    switch (k) {
        case MacroKind::Not: return not_;
        case MacroKind::And: return and_;
        case MacroKind::Or: return or_;
        case MacroKind::Xor: return xor_;
        case MacroKind::Add: return add;
        case MacroKind::Sub: return sub;
        case MacroKind::Copy: return copy;
        case MacroKind::Mux: return mux;
        case MacroKind::Shl:
        case MacroKind::Shr: return 1;
        case MacroKind::CmpGe: return sub + not_;
    }
    return 1;
}

Cycle ThermalGovernor::earliest(Cycle at) const {
    if (slots_.empty()) return at;
    return std::max(at, *std::min_element(slots_.begin(), slots_.end()));
}

void ThermalGovernor::commit(Cycle start, Cycle end) {
    if (slots_.empty()) return;
    // Use the slot that frees up latest but still before `start`.
    auto best = slots_.end();
    for (auto it = slots_.begin(); it != slots_.end(); ++it) {
        if (*it <= start && (best == slots_.end() || *it > *best)) best = it;
    }
    if (best == slots_.end()) best = std::min_element(slots_.begin(), slots_.end());
    *best = std::max(*best, end);
}

namespace {

constexpr int T0 = kScratch0, T1 = kScratch0 + 1, T2 = kScratch0 + 2, T3 = kScratch0 + 3, T4 = kScratch0 + 4;

// Two-input truth tables, bit (2a + b).
constexpr std::uint8_t kNor = 0b0001, kAnd = 0b1000, kOr = 0b1110, kXor = 0b0110, kXnor = 0b1001, kAndNot = 0b0100;

struct BitStream {
    std::array<NorMicroop, 12> ops{};
    int n = 0;

    void nor(int array, int dst, int s1, int s2, int dst_array = -1) {
        ops[n++] = NorMicroop{MicroopKind::Nor, array, dst_array < 0 ? array : dst_array, s1, s2, dst};
    }
    void gate(int array, std::uint8_t truth, int dst, int s1, int s2, int dst_array = -1) {
        NorMicroop op{MicroopKind::Gate, array, dst_array < 0 ? array : dst_array, s1, s2, dst};
        op.truth = truth;
        ops[n++] = op;
    }
};

void oscar_program(const MacroArgs& m, int bit, int width, BitStream& s) {
    const int carry_dst = bit + 1 < width ? bit + 1 : bit;
    switch (m.kind) {
        case MacroKind::Not:
            if (m.dst != m.a) {
                s.nor(bit, m.dst, m.a, m.a);
            } else {
                s.nor(bit, T0, m.a, m.a);
                s.nor(bit, T1, T0, T0);
                s.nor(bit, m.dst, T1, T1);
            }
            break;
        case MacroKind::Copy:
            s.nor(bit, T0, m.a, m.a);
            s.nor(bit, m.dst, T0, T0);
            break;
        case MacroKind::And:
            s.nor(bit, T0, m.a, m.a);
            s.nor(bit, T1, m.b, m.b);
            s.nor(bit, m.dst, T0, T1);
            break;
        case MacroKind::Or:
            s.nor(bit, T0, m.a, m.b);
            s.nor(bit, m.dst, T0, T0);
            break;
        case MacroKind::Xor:
            s.nor(bit, T0, m.a, m.b);
            s.nor(bit, T1, m.a, T0);
            s.nor(bit, T2, m.b, T0);
            s.nor(bit, T3, T1, T2);
            s.nor(bit, m.dst, T3, T3);
            break;
        case MacroKind::Add:
        case MacroKind::Sub: {
            int b = m.b;
            int c = bit == 0 ? kZeroColumn : kCarryColumn;
            if (m.kind == MacroKind::Sub) {
                s.nor(bit, kNotColumn, m.b, m.b);
                b = kNotColumn;
                if (bit == 0) c = kOnesColumn;
            }
            s.nor(bit, T0, m.a, b);
            s.nor(bit, T1, m.a, T0);
            s.nor(bit, T2, b, T0);
            s.nor(bit, T3, T1, T2);  // xnor(a, b)
            s.nor(bit, T1, T3, c);
            s.nor(bit, T2, T3, T1);
            s.nor(bit, T4, c, T1);
            s.nor(bit, m.dst, T2, T4);                 // a ^ b ^ c
            s.nor(bit, kCarryColumn, T0, T1, carry_dst);  // majority(a, b, c)
            break;
        }
        case MacroKind::Mux:
            s.nor(bit, T0, m.b, m.b);
            s.nor(bit, T1, m.a, m.a);
            s.nor(bit, T2, T0, T1);  // x & m
            s.nor(bit, T3, m.c, m.c);
            s.nor(bit, T4, T3, m.a);  // y & ~m
            s.nor(bit, T0, T2, T4);
            s.nor(bit, m.dst, T0, T0);
            break;
        default:
            throw SimError("macro has no per-bit program");
    }
}

void ideal_program(const MacroArgs& m, int bit, int width, BitStream& s) {
    const int carry_dst = bit + 1 < width ? bit + 1 : bit;
    switch (m.kind) {
        case MacroKind::Not:
            if (m.dst != m.a) {
                s.gate(bit, kNor, m.dst, m.a, m.a);
            } else {
                s.gate(bit, kNor, T0, m.a, m.a);
                s.gate(bit, kAnd, m.dst, T0, T0);
            }
            break;
        case MacroKind::Copy: s.gate(bit, kAnd, m.dst, m.a, m.a); break;
        case MacroKind::And: s.gate(bit, kAnd, m.dst, m.a, m.b); break;
        case MacroKind::Or: s.gate(bit, kOr, m.dst, m.a, m.b); break;
        case MacroKind::Xor: s.gate(bit, kXor, m.dst, m.a, m.b); break;
        case MacroKind::Add:
        case MacroKind::Sub: {
            const bool sub = m.kind == MacroKind::Sub;
            const int c = bit == 0 ? (sub ? kOnesColumn : kZeroColumn) : kCarryColumn;
            s.gate(bit, sub ? kXnor : kXor, T0, m.a, m.b);   // a ^ b'
            s.gate(bit, sub ? kAndNot : kAnd, T1, m.a, m.b);  // a & b'
            s.gate(bit, kAnd, T2, T0, c);
            s.gate(bit, kXor, m.dst, T0, c);
            s.gate(bit, kOr, kCarryColumn, T1, T2, carry_dst);
            break;
        }
        case MacroKind::Mux:
            s.gate(bit, kAnd, T0, m.b, m.a);
            s.gate(bit, kAndNot, T1, m.c, m.a);
            s.gate(bit, kOr, m.dst, T0, T1);
            break;
        default:
            throw SimError("macro has no per-bit program");
    }
}

}  // namespace

DigitalPipeline::DigitalPipeline(int id, const DceParams& params, const MacroCosts& costs, ThermalGovernor* governor)
    : id_(id),
      depth_(params.depth),
      rows_(params.rows),
      row_bits_(low_mask(params.rows)),
      latency_multiplier_(std::max(1, params.latency_multiplier)),
      element_load_cycles_(params.element_load_cycles_per_element),
      family_(params.family),
      costs_(costs),
      governor_(governor),
      cells_(static_cast<std::size_t>(params.depth) * 64, 0),
      array_free_(static_cast<std::size_t>(params.depth), 0),
      reg_ready_(static_cast<std::size_t>(64) * 64, 0) {
    if (depth_ < 1 || depth_ > 64 || rows_ < 1 || rows_ > 64) throw ConfigError("pipeline geometry out of range");
    for (int a = 0; a < depth_; ++a) set_column(a, kOnesColumn, row_bits_);
}

std::int64_t DigitalPipeline::peek_element(int reg, int row, int width, bool is_signed) const {
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= ((column(b, reg) >> row) & 1u) << b;
    return is_signed ? sign_extend(v, width) : static_cast<std::int64_t>(v);
}

std::vector<std::int64_t> DigitalPipeline::peek(int reg, int width, bool is_signed) const {
    std::vector<std::int64_t> out(static_cast<std::size_t>(rows_));
    for (int e = 0; e < rows_; ++e) out[e] = peek_element(reg, e, width, is_signed);
    return out;
}

void DigitalPipeline::check_write(int reg) const {
    if (reg < 0 || reg >= kOnesColumn) throw AddressRangeError("register " + std::to_string(reg) + " not writable");
    if (reserved_ && !mvm_writer_) {
        throw ReservedRegisterError("pipeline " + std::to_string(id_) + " is reserved for an MVM");
    }
}

void DigitalPipeline::check_args(const MacroArgs& m) const {
    if (m.width < 1 || m.width > depth_) throw AddressRangeError("macro width out of range");
    for (int r : {m.a, m.b, m.c}) {
        if (r < 0 || r >= 64) throw AddressRangeError("macro source register out of range");
    }
    check_write(m.dst);
}

void DigitalPipeline::apply(const NorMicroop& op) {
    const std::uint64_t s1 = column(op.array, op.src1);
    const std::uint64_t s2 = column(op.array, op.src2);
    std::uint64_t result = 0;
    switch (op.kind) {
        case MicroopKind::Nor: result = ~(s1 | s2); break;
        case MicroopKind::Gate: {
            if (op.truth & 1) result |= ~s1 & ~s2;
            if (op.truth & 2) result |= ~s1 & s2;
            if (op.truth & 4) result |= s1 & ~s2;
            if (op.truth & 8) result |= s1 & s2;
            break;
        }
        case MicroopKind::ShiftStep:
        case MicroopKind::CopyRow: result = s1; break;
        default: return;
    }
    const std::uint64_t mask = op.row_mask & row_bits_;
    std::uint64_t& d = cells_[idx(op.dst_array, op.dst)];
    d = (result & mask) | (d & ~mask);
}

void DigitalPipeline::trace_op(Cycle cycle, const NorMicroop& op) {
    if (!trace_) return;
    *trace_ << cycle << ',' << id_ << ',' << microop_name(op.kind) << ',' << op.src1 << ',' << op.src2 << ','
            << op.dst << '\n';
}

void DigitalPipeline::account_busy(Cycle start, Cycle end, CostReport& report) {
    if (end > last_busy_end_) {
        report.pipeline_busy_cycles += end - std::max(start, last_busy_end_);
        last_busy_end_ = end;
    }
    report.cover(start, end);
}

Cycle DigitalPipeline::drained_at() const { return *std::max_element(array_free_.begin(), array_free_.end()); }

Cycle DigitalPipeline::register_ready(int reg, int width) const {
    Cycle t = 0;
    for (int b = 0; b < width; ++b) t = std::max(t, ready(reg, b));
    return t;
}

CostReport DigitalPipeline::exec_nor(const NorMicroop& op, Cycle not_before) {
    if (op.array < 0 || op.array >= depth_ || op.dst_array < 0 || op.dst_array >= depth_) {
        throw AddressRangeError("microop array out of range");
    }
    if (op.dst_array == op.array && (op.dst == op.src1 || op.dst == op.src2)) {
        throw ColumnConflictError("NOR destination column aliases a source column");
    }
    check_write(op.dst);
    Cycle start = std::max({not_before, array_free_[op.array], ready(op.src1, op.array), ready(op.src2, op.array)});
    start = governor_ ? governor_->earliest(start) : start;
    const Cycle end = start + static_cast<Cycle>(latency_multiplier_);
    apply(op);
    trace_op(start, op);
    array_free_[op.array] = end;
    ready(op.dst, op.dst_array) = end;
    if (governor_) governor_->commit(start, end);
    CostReport r;
    r.array_ops = 1;
    r.microops = 1;
    account_busy(start, end, r);
    return r;
}

std::vector<NorMicroop> DigitalPipeline::bit_program(const MacroArgs& args, int bit) const {
    BitStream s;
    if (family_ == LogicFamily::Oscar) {
        oscar_program(args, bit, args.width, s);
    } else {
        ideal_program(args, bit, args.width, s);
    }
    return {s.ops.begin(), s.ops.begin() + s.n};
}

CostReport DigitalPipeline::run_macro(const MacroArgs& args, Cycle not_before) {
    check_args(args);
    CostReport total;
    const bool needs_forward = args.kind == MacroKind::Add || args.kind == MacroKind::Sub || args.kind == MacroKind::Shl;
    const bool needs_reverse = args.kind == MacroKind::Shr;
    if ((needs_forward && direction_ != Direction::Forward) || (needs_reverse && direction_ != Direction::Reversed)) {
        total += reverse(not_before);
    }
    switch (args.kind) {
        case MacroKind::Shl:
        case MacroKind::Shr: total += run_shift(args, not_before); break;
        case MacroKind::CmpGe: total += run_cmp_ge(args, not_before); break;
        case MacroKind::Add:
        case MacroKind::Sub: total += run_bitwise(args, not_before, true); break;
        default: total += run_bitwise(args, not_before, false); break;
    }
    return total;
}

CostReport DigitalPipeline::run_bitwise(const MacroArgs& args, Cycle not_before, bool carry_chain) {
    const int width = args.width;
    const Cycle per_bit = static_cast<Cycle>(costs_.per_bit(args.kind)) * static_cast<Cycle>(latency_multiplier_);
    Cycle floor = governor_ ? governor_->earliest(not_before) : not_before;
    CostReport r;
    Cycle first = ~Cycle{0}, last = 0, prev_start = 0, prev_end = 0;
    const bool reversed_flow = direction_ == Direction::Reversed;
    for (int i = 0; i < width; ++i) {
        const int bit = reversed_flow && !carry_chain ? width - 1 - i : i;
        Cycle start = std::max({floor, array_free_[bit], ready(args.a, bit), ready(args.b, bit), ready(args.dst, bit)});
        if (args.kind == MacroKind::Mux) start = std::max(start, ready(args.c, bit));
        if (i > 0) start = std::max(start, carry_chain ? prev_end + 1 : prev_start + 1);
        const Cycle end = start + per_bit;

        BitStream s;
        if (family_ == LogicFamily::Oscar) {
            oscar_program(args, bit, width, s);
        } else {
            ideal_program(args, bit, width, s);
        }
        for (int k = 0; k < s.n; ++k) {
            apply(s.ops[k]);
            trace_op(start + static_cast<Cycle>(std::min<std::int64_t>(k, static_cast<std::int64_t>(per_bit) - 1)),
                     s.ops[k]);
        }
        array_free_[bit] = end;
        ready(args.dst, bit) = end;
        if (carry_chain && bit + 1 < width) ready(kCarryColumn, bit + 1) = end;
        prev_start = start;
        prev_end = end;
        first = std::min(first, start);
        last = std::max(last, end);
    }
    r.array_ops = static_cast<std::uint64_t>(costs_.per_bit(args.kind)) * static_cast<std::uint64_t>(width);
    r.microops = r.array_ops;
    if (governor_) governor_->commit(first, last);
    account_busy(first, last, r);
    return r;
}

CostReport DigitalPipeline::occupy_all(Cycle not_before, Cycle duration, std::initializer_list<int> reads,
                                       int write_reg, int width) {
    Cycle start = governor_ ? governor_->earliest(not_before) : not_before;
    for (int b = 0; b < width; ++b) {
        start = std::max(start, array_free_[b]);
        for (int r : reads) start = std::max(start, ready(r, b));
        if (write_reg >= 0) start = std::max(start, ready(write_reg, b));
    }
    const Cycle end = start + duration;
    for (int b = 0; b < width; ++b) {
        array_free_[b] = end;
        if (write_reg >= 0) ready(write_reg, b) = end;
    }
    if (governor_) governor_->commit(start, end);
    CostReport r;
    account_busy(start, end, r);
    return r;
}

CostReport DigitalPipeline::run_shift(const MacroArgs& args, Cycle not_before) {
    const int width = args.width;
    const int k = args.shift;
    if (k < 0) throw AddressRangeError("negative shift");
    if (k == 0) {
        MacroArgs copy = args;
        copy.kind = MacroKind::Copy;
        return run_bitwise(copy, not_before, false);
    }
    const bool left = args.kind == MacroKind::Shl;
    CostReport r = occupy_all(not_before, static_cast<Cycle>(k * latency_multiplier_), {args.a}, args.dst, width);
    Cycle cycle = r.start;
    for (int step = 0; step < k; ++step, cycle += static_cast<Cycle>(latency_multiplier_)) {
        const int from = step == 0 ? args.a : args.dst;
        if (left) {
            for (int bit = width - 1; bit >= 1; --bit) {
                NorMicroop op{MicroopKind::ShiftStep, bit - 1, bit, from, from, args.dst};
                apply(op);
                trace_op(cycle, op);
            }
            NorMicroop zero{MicroopKind::Nor, 0, 0, kOnesColumn, kOnesColumn, args.dst};
            apply(zero);
            trace_op(cycle, zero);
        } else {
            const std::uint64_t top = column(width - 1, from);
            for (int bit = 0; bit + 1 < width; ++bit) {
                NorMicroop op{MicroopKind::ShiftStep, bit + 1, bit, from, from, args.dst};
                apply(op);
                trace_op(cycle, op);
            }
            NorMicroop fill{MicroopKind::Nor, width - 1, width - 1, kOnesColumn, kOnesColumn, args.dst};
            if (args.arithmetic) {
                set_column(width - 1, args.dst, top);
                fill = NorMicroop{MicroopKind::CopyRow, width - 1, width - 1, from, from, args.dst};
            } else {
                apply(fill);
            }
            trace_op(cycle, fill);
        }
    }
    r.array_ops = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(width);
    r.microops = r.array_ops;
    return r;
}

CostReport DigitalPipeline::run_cmp_ge(const MacroArgs& args, Cycle not_before) {
    // mask = (a - b >= 0) ? all ones : 0, by sign broadcast of the difference.
    CostReport r;
    MacroArgs sub = args;
    sub.kind = MacroKind::Sub;
    r += run_macro(sub, not_before);
    MacroArgs sar{MacroKind::Shr, args.dst, args.dst, args.dst, 0, args.width, args.width - 1, true};
    if (args.width > 1) r += run_macro(sar, not_before);
    MacroArgs inv{MacroKind::Not, args.dst, args.dst, args.dst, 0, args.width};
    r += run_macro(inv, not_before);
    return r;
}

CostReport DigitalPipeline::reverse(Cycle not_before) {
    const Cycle start = std::max(not_before, drained_at());
    const Cycle end = start + static_cast<Cycle>(depth_);
    std::fill(array_free_.begin(), array_free_.end(), end);
    direction_ = direction_ == Direction::Forward ? Direction::Reversed : Direction::Forward;
    if (trace_) *trace_ << start << ',' << id_ << ",REVERSE,0,0,0\n";
    CostReport r;
    account_busy(start, end, r);
    return r;
}

CostReport DigitalPipeline::write_rows(int reg, std::span<const std::int64_t> values, int width, Cycle not_before) {
    check_write(reg);
    if (values.size() > static_cast<std::size_t>(rows_)) throw AddressRangeError("too many elements for register");
    if (width < 1 || width > depth_) throw AddressRangeError("width out of range");
    const auto n = static_cast<Cycle>(values.size());
    CostReport r = occupy_all(not_before, n * static_cast<Cycle>(latency_multiplier_), {}, reg, width);
    for (std::size_t e = 0; e < values.size(); ++e) {
        const auto v = static_cast<std::uint64_t>(values[e]);
        const std::uint64_t bit = std::uint64_t{1} << e;
        for (int b = 0; b < width; ++b) {
            std::uint64_t& col = cells_[idx(b, reg)];
            col = ((v >> b) & 1u) ? (col | bit) : (col & ~bit);
        }
        if (trace_) *trace_ << r.start + e << ',' << id_ << ",WRITE_ROW," << e << ',' << e << ',' << reg << '\n';
    }
    r.array_ops = n * static_cast<std::uint64_t>(width);
    r.microops = r.array_ops;
    return r;
}

CostReport DigitalPipeline::write_planes(int reg, std::span<const std::int64_t> values, int width, Cycle not_before,
                                         int first_plane) {
    check_write(reg);
    if (values.size() > static_cast<std::size_t>(rows_)) throw AddressRangeError("too many elements for register");
    if (width < 1 || width > depth_) throw AddressRangeError("width out of range");
    if (first_plane < 0 || first_plane >= width) throw AddressRangeError("first plane out of range");
    CostReport r = occupy_all(not_before, static_cast<Cycle>(latency_multiplier_), {}, reg, width);
    const std::uint64_t used = low_mask(static_cast<int>(values.size()));
    for (int b = first_plane; b < width; ++b) {
        std::uint64_t plane = 0;
        for (std::size_t e = 0; e < values.size(); ++e) plane |= ((static_cast<std::uint64_t>(values[e]) >> b) & 1u) << e;
        std::uint64_t& col = cells_[idx(b, reg)];
        col = (col & ~used) | plane;
    }
    if (trace_) *trace_ << r.start << ',' << id_ << ",WRITE_ROW,plane,plane," << reg << '\n';
    r.array_ops = static_cast<std::uint64_t>(width - first_plane);
    r.microops = r.array_ops;
    return r;
}

CostReport DigitalPipeline::read_rows(int reg, int width, std::vector<std::int64_t>& out, bool is_signed,
                                      Cycle not_before) {
    CostReport r = occupy_all(not_before, static_cast<Cycle>(rows_ * latency_multiplier_), {reg}, -1, width);
    out = peek(reg, width, is_signed);
    r.array_ops = static_cast<std::uint64_t>(rows_) * static_cast<std::uint64_t>(width);
    r.microops = r.array_ops;
    return r;
}

CostReport DigitalPipeline::read_planes(int reg, int width, std::vector<std::int64_t>& out, bool is_signed,
                                        Cycle not_before) {
    CostReport r = occupy_all(not_before, static_cast<Cycle>(latency_multiplier_), {reg}, -1, width);
    out = peek(reg, width, is_signed);
    r.array_ops = static_cast<std::uint64_t>(width);
    r.microops = r.array_ops;
    return r;
}

CostReport DigitalPipeline::element_load(const ElementLoad& load, const DigitalPipeline& source, Cycle not_before) {
    check_write(load.dst);
    if (load.addr_bits < 1 || load.addr_bits > 32 || load.value_bits < 1 ||
        load.dst_shift + load.value_bits > depth_ || load.addr_shift + load.addr_bits > depth_) {
        throw AddressRangeError("element load field out of range");
    }
    const std::uint64_t mask = load.row_mask & row_bits_;
    const int elements = std::popcount(mask);
    const int span = std::max(load.addr_shift + load.addr_bits, load.dst_shift + load.value_bits);
    CostReport r = occupy_all(not_before,
                              static_cast<Cycle>(elements) * element_load_cycles_ * static_cast<Cycle>(latency_multiplier_),
                              {load.addr_reg}, load.dst, span);
    // Resolve every address before writing so dst may alias addr_reg.
    std::vector<std::pair<int, std::uint64_t>> fetched;
    fetched.reserve(static_cast<std::size_t>(elements));
    for (int e = 0; e < rows_; ++e) {
        if (!((mask >> e) & 1u)) continue;
        const auto addr = static_cast<std::uint64_t>(peek_element(load.addr_reg, e, load.addr_shift + load.addr_bits, false)) >>
                          load.addr_shift;
        const std::uint64_t src_reg = static_cast<std::uint64_t>(load.source_base_reg) + addr / static_cast<std::uint64_t>(source.rows());
        const int src_row = static_cast<int>(addr % static_cast<std::uint64_t>(source.rows()));
        if (src_reg >= static_cast<std::uint64_t>(kUserRegisters)) {
            throw AddressRangeError("element load address " + std::to_string(addr) + " outside source pipeline");
        }
        const auto value = static_cast<std::uint64_t>(
            source.peek_element(static_cast<int>(src_reg), src_row, load.value_bits, false));
        fetched.emplace_back(e, value);
    }
    for (const auto& [e, value] : fetched) {
        const std::uint64_t bit = std::uint64_t{1} << e;
        for (int b = 0; b < load.value_bits; ++b) {
            std::uint64_t& col = cells_[idx(load.dst_shift + b, load.dst)];
            col = ((value >> b) & 1u) ? (col | bit) : (col & ~bit);
        }
        if (trace_) *trace_ << r.start << ',' << id_ << ",READ_ROW," << load.addr_reg << ',' << e << ',' << load.dst << '\n';
    }
    r.array_ops = static_cast<std::uint64_t>(elements) *
                  static_cast<std::uint64_t>(load.addr_bits + 2 * load.value_bits);
    r.microops = static_cast<std::uint64_t>(elements) * 3;
    return r;
}

CostReport DigitalPipeline::element_store(const ElementStore& store, DigitalPipeline& target, Cycle not_before) {
    if (store.addr_bits < 1 || store.addr_bits > 32 || store.value_bits < 1 ||
        store.src_shift + store.value_bits > depth_ || store.addr_shift + store.addr_bits > depth_ ||
        store.value_bits > target.depth()) {
        throw AddressRangeError("element store field out of range");
    }
    const std::uint64_t mask = store.row_mask & row_bits_;
    const int elements = std::popcount(mask);
    const int span = std::max(store.addr_shift + store.addr_bits, store.src_shift + store.value_bits);
    CostReport r = occupy_all(not_before,
                              static_cast<Cycle>(elements) * element_load_cycles_ * static_cast<Cycle>(latency_multiplier_),
                              {store.addr_reg, store.src}, -1, span);
    for (int e = 0; e < rows_; ++e) {
        if (!((mask >> e) & 1u)) continue;
        const auto addr = static_cast<std::uint64_t>(peek_element(store.addr_reg, e, store.addr_shift + store.addr_bits, false)) >>
                          store.addr_shift;
        const std::uint64_t reg = static_cast<std::uint64_t>(store.target_base_reg) + addr / static_cast<std::uint64_t>(target.rows());
        if (reg >= static_cast<std::uint64_t>(kUserRegisters)) {
            throw AddressRangeError("element store address " + std::to_string(addr) + " outside target pipeline");
        }
        target.check_write(static_cast<int>(reg));
        const int row = static_cast<int>(addr % static_cast<std::uint64_t>(target.rows()));
        const auto value = static_cast<std::uint64_t>(peek_element(store.src, e, store.src_shift + store.value_bits, false)) >>
                           store.src_shift;
        const std::uint64_t bit = std::uint64_t{1} << row;
        for (int b = 0; b < store.value_bits; ++b) {
            std::uint64_t& col = target.cells_[target.idx(b, static_cast<int>(reg))];
            col = ((value >> b) & 1u) ? (col | bit) : (col & ~bit);
        }
        if (trace_) *trace_ << r.start << ',' << id_ << ",WRITE_ROW," << store.src << ',' << e << ',' << reg << '\n';
    }
    for (int b = 0; b < store.value_bits; ++b) {
        target.array_free_[static_cast<std::size_t>(b)] = std::max(target.array_free_[static_cast<std::size_t>(b)], r.end);
    }
    r.array_ops = static_cast<std::uint64_t>(elements) *
                  static_cast<std::uint64_t>(store.addr_bits + 2 * store.value_bits);
    r.microops = static_cast<std::uint64_t>(elements) * 3;
    return r;
}

Dce::Dce(DceParams params)
    : params_(params), costs_(MacroCosts::for_family(params.family)), governor_(params.max_active_pipelines) {
    pipes_.resize(static_cast<std::size_t>(params_.pipelines));
}

DigitalPipeline& Dce::pipeline(int id) {
    if (id < 0 || id >= params_.pipelines) throw AddressRangeError("pipeline " + std::to_string(id) + " out of range");
    auto& slot = pipes_[static_cast<std::size_t>(id)];
    if (!slot) {
        slot = std::make_unique<DigitalPipeline>(id, params_, costs_, governor_.enabled() ? &governor_ : nullptr);
        slot->set_trace(trace_);
    }
    return *slot;
}

bool Dce::materialized(int id) const {
    return id >= 0 && id < params_.pipelines && pipes_[static_cast<std::size_t>(id)] != nullptr;
}

CostReport Dce::copy_register(int src_pipe, int src_reg, int dst_pipe, int dst_reg, int width, Cycle not_before) {
    std::vector<std::int64_t> values;
    CostReport r = pipeline(src_pipe).read_planes(src_reg, width, values, false, not_before);
    r += pipeline(dst_pipe).write_planes(dst_reg, values, width, r.end);
    return r;
}

void Dce::set_trace(std::ostream* trace) {
    trace_ = trace;
    for (auto& p : pipes_) {
        if (p) p->set_trace(trace);
    }
}

}  // namespace darth::dce
