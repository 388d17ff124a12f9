#include "darth/dce_kernels.hpp"

#include <vector>

#include "darth/errors.hpp"

namespace darth::dce::kernels {

namespace {

CostReport macro(DigitalPipeline& p, MacroKind k, int dst, int a, int b, int width, Cycle nb, int c = 0, int shift = 0,
                 bool arith = false) {
    return p.run_macro(MacroArgs{k, dst, a, b, c, width, shift, arith}, nb);
}

}  // namespace

CostReport load_constant(DigitalPipeline& p, int reg, std::int64_t value, int width, Cycle not_before) {
    const std::vector<std::int64_t> values(static_cast<std::size_t>(p.rows()), value);
    return p.write_planes(reg, values, width, not_before);
}

CostReport extract_bit(DigitalPipeline& p, int dst, int src, int t, int width, Cycle not_before) {
    if (t < 0 || t >= width) throw AddressRangeError("bit index out of range");
    CostReport r = macro(p, MacroKind::Copy, dst, kZeroColumn, kZeroColumn, width, not_before);
    r += p.exec_nor(NorMicroop{MicroopKind::Nor, t, t, src, src, kScratch0}, not_before);
    r += p.exec_nor(NorMicroop{MicroopKind::Nor, t, t, kScratch0, kScratch0, dst}, not_before);
    return r;
}

CostReport bit_mask(DigitalPipeline& p, int dst, int src, int t, int width, int scratch, Cycle not_before) {
    CostReport r = extract_bit(p, scratch, src, t, width, not_before);
    if (t > 0) r += macro(p, MacroKind::Shr, scratch, scratch, scratch, width, not_before, 0, t);
    r += macro(p, MacroKind::Sub, dst, kZeroColumn, scratch, width, not_before);
    return r;
}

CostReport multiply(DigitalPipeline& p, int dst, int a, int b, int b_bits, bool b_signed, int width, int s0, int s1,
                    Cycle not_before) {
    if (b_bits < 1 || b_bits > width) throw AddressRangeError("multiplier width out of range");
    // s0: a << t, s1: bit t of b, then the mask of bits >= t, then the partial product.
    CostReport r = macro(p, MacroKind::Copy, dst, kZeroColumn, kZeroColumn, width, not_before);
    r += macro(p, MacroKind::Copy, s0, a, a, width, not_before);
    for (int t = 0; t < b_bits; ++t) {
        if (t > 0) r += macro(p, MacroKind::Shl, s0, s0, s0, width, not_before, 0, 1);
        r += extract_bit(p, s1, b, t, width, not_before);
        r += macro(p, MacroKind::Sub, s1, kZeroColumn, s1, width, not_before);
        r += macro(p, MacroKind::And, s1, s0, s1, width, not_before);
        const bool negative = b_signed && t == b_bits - 1;
        r += macro(p, negative ? MacroKind::Sub : MacroKind::Add, dst, dst, s1, width, not_before);
    }
    return r;
}

CostReport max(DigitalPipeline& p, int dst, int a, int b, int width, int scratch, Cycle not_before) {
    CostReport r = macro(p, MacroKind::CmpGe, scratch, a, b, width, not_before);
    r += macro(p, MacroKind::Mux, dst, scratch, a, width, not_before, b);
    return r;
}

CostReport min(DigitalPipeline& p, int dst, int a, int b, int width, int scratch, Cycle not_before) {
    CostReport r = macro(p, MacroKind::CmpGe, scratch, a, b, width, not_before);
    r += macro(p, MacroKind::Mux, dst, scratch, b, width, not_before, a);
    return r;
}

CostReport relu(DigitalPipeline& p, int dst, int a, int width, int scratch, Cycle not_before) {
    return max(p, dst, a, kZeroColumn, width, scratch, not_before);
}

CostReport shift_right_variable(DigitalPipeline& p, int dst, int a, int amount_reg, int amount_bits, int width, int s0,
                                int s1, Cycle not_before) {
    CostReport r;
    if (dst != a) r += macro(p, MacroKind::Copy, dst, a, a, width, not_before);
    for (int j = 0; j < amount_bits; ++j) {
        const int step = 1 << j;
        r += bit_mask(p, s0, amount_reg, j, width, s1, not_before);
        if (step >= width) {
            r += macro(p, MacroKind::Mux, dst, s0, kZeroColumn, width, not_before, dst);
        } else {
            r += macro(p, MacroKind::Shr, s1, dst, dst, width, not_before, 0, step);
            r += macro(p, MacroKind::Mux, dst, s0, s1, width, not_before, dst);
        }
    }
    return r;
}

CostReport divide(DigitalPipeline& p, int q, int num, int den, int q_bits, int width, int s0, int s1, int s2, int s3,
                  Cycle not_before) {
    if (q_bits < 1 || q_bits >= width) throw AddressRangeError("quotient width out of range");
    // Restoring division against a fixed, pre-shifted divisor; the remainder
    // moves left instead of the divisor moving right.
    CostReport r = macro(p, MacroKind::Shl, s0, den, den, width, not_before, 0, q_bits - 1);
    r += macro(p, MacroKind::Copy, s1, num, num, width, not_before);
    r += macro(p, MacroKind::Copy, q, kZeroColumn, kZeroColumn, width, not_before);
    for (int j = 0; j < q_bits; ++j) {
        r += macro(p, MacroKind::CmpGe, s2, s1, s0, width, not_before);
        r += macro(p, MacroKind::Sub, s3, s1, s0, width, not_before);
        r += macro(p, MacroKind::Mux, s1, s2, s3, width, not_before, s1);
        r += macro(p, MacroKind::Shl, q, q, q, width, not_before, 0, 1);
        r += macro(p, MacroKind::Sub, q, q, s2, width, not_before);  // mask is -1 when the bit is set
        if (j + 1 < q_bits) r += macro(p, MacroKind::Shl, s1, s1, s1, width, not_before, 0, 1);
    }
    return r;
}

CostReport isqrt(DigitalPipeline& p, int dst, int v, int half_bits, int width, int s0, int s1, int s2, int s3, int s4,
                 Cycle not_before) {
    if (half_bits < 1 || 2 * half_bits + 2 > width) throw AddressRangeError("isqrt width out of range");
    // Digit-by-digit square root. s0: remainder, s1: trial, s2: mask, s3: temp, s4: current bit.
    CostReport r = macro(p, MacroKind::Copy, s0, v, v, width, not_before);
    r += macro(p, MacroKind::Copy, dst, kZeroColumn, kZeroColumn, width, not_before);
    for (int i = half_bits - 1; i >= 0; --i) {
        r += load_constant(p, s4, std::int64_t{1} << (2 * i), width, not_before);
        r += macro(p, MacroKind::Add, s1, dst, s4, width, not_before);
        r += macro(p, MacroKind::CmpGe, s2, s0, s1, width, not_before);
        r += macro(p, MacroKind::Sub, s3, s0, s1, width, not_before);
        r += macro(p, MacroKind::Mux, s0, s2, s3, width, not_before, s0);
        r += macro(p, MacroKind::Shr, dst, dst, dst, width, not_before, 0, 1);
        r += macro(p, MacroKind::Add, s3, dst, s4, width, not_before);
        r += macro(p, MacroKind::Mux, dst, s2, s3, width, not_before, dst);
    }
    return r;
}

CostReport broadcast_element(DigitalPipeline& p, int dst, const DigitalPipeline& source, int src_reg, int row,
                             int width, int addr_scratch, Cycle not_before) {
    CostReport r = load_constant(p, addr_scratch, row, 6, not_before);
    DigitalPipeline::ElementLoad load;
    load.dst = dst;
    load.addr_reg = addr_scratch;
    load.addr_shift = 0;
    load.addr_bits = 6;
    load.source_base_reg = src_reg;
    load.value_bits = width;
    load.dst_shift = 0;
    r += p.element_load(load, source, not_before);
    return r;
}

}  // namespace darth::dce::kernels
