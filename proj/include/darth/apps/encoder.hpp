#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darth/runtime.hpp"

namespace darth::apps {

/// One post-LN transformer encoder layer: d = 16, two heads of 8, 8 tokens,
/// FFN hidden size 32. Weights are signed 8-bit with 6 fraction bits;
/// activations carry 8 fraction bits. wq is pre-scaled by 1/sqrt(head_dim).
struct TinyEncoder {
    static constexpr int kTokens = 8;
    static constexpr int kDim = 16;
    static constexpr int kHeads = 2;
    static constexpr int kHeadDim = 8;
    static constexpr int kHidden = 32;
    static constexpr int kWeightFrac = 6;
    static constexpr int kActFrac = 8;
    static constexpr int kAccFrac = kWeightFrac + kActFrac;  // FFN biases use this scale

    // [in][out] for the attention projections.
    std::vector<std::int64_t> wq, wk, wv, wo;
    // [out][in] for the FFN, as programmed into the crossbars.
    std::vector<std::int64_t> w1, w2;
    std::vector<std::int64_t> b1, b2;  // kAccFrac
    std::vector<std::int64_t> gamma1, gamma2;  // kWeightFrac
    std::vector<std::int64_t> beta1, beta2;    // kActFrac

    static TinyEncoder random(std::uint64_t seed);
    void validate() const;
};

/// Tokens x kDim, row-major, kActFrac fraction bits.
using Sequence = std::vector<std::int64_t>;

/// GELU approximation shared by the chip and the float oracle:
/// x/2 * (1 + L(x/sqrt 2)), L(u) = sgn(u) * (a * (min(|u|, -b) + b)^2 + 1).
double poly_gelu(double x);

/// Float forward pass over the dequantized weights: exact softmax and
/// layernorm, poly_gelu in the FFN.
std::vector<double> encoder_float(const TinyEncoder& model, const Sequence& x);

struct EncoderDeployment {
    runtime::Chip* chip = nullptr;
    TinyEncoder model;
    int dce_hct = 0;  // attention, softmax, layernorm and GELU run here
    int ffn1 = 0, ffn2 = 0;  // matrix handles
    CostReport setup;
};

struct EncoderResult {
    std::vector<Sequence> outputs;  // kActFrac
    CostReport cost;
};

/// FFN weights go to the crossbars; attention weights stay in DCE registers.
EncoderDeployment llm_build_encoder(runtime::Chip& chip, const TinyEncoder& model);
EncoderResult llm_run_inference(EncoderDeployment& dep, std::span<const Sequence> inputs);

/// Integer softmax over the 8 rows of 8 in `scores` (kActFrac). Returns
/// probabilities with 12 fraction bits.
std::vector<std::int64_t> dce_softmax(runtime::Chip& chip, int hct, std::span<const std::int64_t> scores,
                                      CostReport* cost = nullptr);

}  // namespace darth::apps
