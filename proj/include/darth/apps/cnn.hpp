#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darth/runtime.hpp"

namespace darth::apps {

/// 3x3 same-padded convolution, stride 1.
struct ConvLayer {
    int in_ch = 1;
    int out_ch = 4;
    std::vector<std::int64_t> weights;  // [out][in][3][3]
    std::vector<std::int64_t> bias;     // [out], in accumulator units
    int shift = 6;                      // requantization: clamp(relu(acc + bias) >> shift, 0, 255)

    [[nodiscard]] std::int64_t w(int o, int i, int dy, int dx) const {
        return weights[static_cast<std::size_t>(((o * in_ch + i) * 3 + dy) * 3 + dx)];
    }
};

struct FcLayer {
    int in = 32;
    int out = 10;
    std::vector<std::int64_t> weights;  // [out][in]
    std::vector<std::int64_t> bias;
};

/// conv(1->c1) + ReLU + 2x2 max pool, conv(c1->c2) + ReLU + pool, FC -> logits.
/// Activations are unsigned 8-bit, weights signed 8-bit.
struct TinyCnn {
    int height = 8;
    int width = 8;
    ConvLayer conv1;
    ConvLayer conv2;
    FcLayer fc;

    static constexpr int kActivationBits = 8;
    static constexpr int kWeightBits = 8;

    static TinyCnn random(std::uint64_t seed, int c1 = 4, int c2 = 8, int classes = 10);
    void validate() const;
};

using Image = std::vector<std::int64_t>;  // height * width, values 0..255

/// Toeplitz form of a conv layer. Inputs are ordered (ch, y, x). Output rows
/// are ordered so that the four members of a 2x2 pooling window are adjacent:
/// row = 4 * ((ch * h/2 + py) * w/2 + px) + (dy * 2 + dx).
ace::IntMatrix toeplitz(const ConvLayer& layer, int height, int width);

/// Fixed-point host inference, same arithmetic as the chip.
std::vector<std::int64_t> cnn_reference(const TinyCnn& model, const Image& image);

struct CnnDeployment {
    runtime::Chip* chip = nullptr;
    TinyCnn model;
    struct Replica {
        int conv1 = 0, conv2 = 0, fc = 0;  // matrix handles
    };
    std::vector<Replica> replicas;
    CostReport setup;
};

struct CnnResult {
    std::vector<std::vector<std::int64_t>> logits;
    CostReport cost;
};

/// Programs `batch` replicas of the model, each on its own HCTs.
CnnDeployment cnn_deploy(runtime::Chip& chip, const TinyCnn& model, int batch = 1);
/// Images of one batch wave run concurrently, one per replica.
CnnResult cnn_run_inference(CnnDeployment& dep, std::span<const Image> images);

}  // namespace darth::apps
