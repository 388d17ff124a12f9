#pragma once

#include <cstdint>

#include "darth/dce.hpp"

// Composite routines built from DCE macros. Registers passed as scratch are
// clobbered; unless noted, dst, sources and scratch must be distinct.
namespace darth::dce::kernels {

/// Writes `value` into every element of `reg` (one bit-plane write).
CostReport load_constant(DigitalPipeline& p, int reg, std::int64_t value, int width, Cycle not_before = 0);

/// dst = bit `t` of src, left in place: array t holds the bit, all other arrays zero.
CostReport extract_bit(DigitalPipeline& p, int dst, int src, int t, int width, Cycle not_before = 0);

/// dst = all ones where bit `t` of src is set, zero elsewhere. Uses `scratch`.
CostReport bit_mask(DigitalPipeline& p, int dst, int src, int t, int width, int scratch, Cycle not_before = 0);

/// dst = a * b (mod 2^width). `a` must be sign- or zero-extended to `width`;
/// only the low `b_bits` of b are used, as two's complement when b_signed.
CostReport multiply(DigitalPipeline& p, int dst, int a, int b, int b_bits, bool b_signed, int width, int s0, int s1,
                    Cycle not_before = 0);

/// dst = max(a, b) / min(a, b). Needs one bit of headroom for a - b.
CostReport max(DigitalPipeline& p, int dst, int a, int b, int width, int scratch, Cycle not_before = 0);
CostReport min(DigitalPipeline& p, int dst, int a, int b, int width, int scratch, Cycle not_before = 0);

/// dst = max(a, 0).
CostReport relu(DigitalPipeline& p, int dst, int a, int width, int scratch, Cycle not_before = 0);

/// dst = a >> amount (logical) where amount is the low `amount_bits` of
/// `amount_reg`, per element. dst may alias a.
CostReport shift_right_variable(DigitalPipeline& p, int dst, int a, int amount_reg, int amount_bits, int width, int s0,
                                int s1, Cycle not_before = 0);

/// q = floor(num / den) for non-negative num and positive den with
/// num < den * 2^q_bits and den * 2^q_bits < 2^(width-1).
CostReport divide(DigitalPipeline& p, int q, int num, int den, int q_bits, int width, int s0, int s1, int s2, int s3,
                  Cycle not_before = 0);

/// dst = floor(sqrt(v)) for 0 <= v < 4^half_bits, width >= 2 * half_bits + 2.
CostReport isqrt(DigitalPipeline& p, int dst, int v, int half_bits, int width, int s0, int s1, int s2, int s3, int s4,
                 Cycle not_before = 0);

/// Fills every element of dst with element `row` of `src_reg` in `source`.
/// Uses `addr_scratch` to hold the constant address.
CostReport broadcast_element(DigitalPipeline& p, int dst, const DigitalPipeline& source, int src_reg, int row,
                             int width, int addr_scratch, Cycle not_before = 0);

}  // namespace darth::dce::kernels
