#include "darth/apps/cnn.hpp"

#include <algorithm>
#include <random>

#include "darth/dce_kernels.hpp"
#include "darth/errors.hpp"

namespace darth::apps {

namespace {

using dce::MacroArgs;
using dce::MacroKind;
namespace kernels = dce::kernels;

constexpr int kPostWidth = 32;

void fill(std::vector<std::int64_t>& v, std::size_t n, std::int64_t lo, std::int64_t hi, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    v.resize(n);
    for (auto& x : v) x = d(rng);
}

std::int64_t requant(std::int64_t acc, int shift) { return std::min<std::int64_t>(std::max<std::int64_t>(acc, 0) >> shift, 255); }

// Conv + ReLU + requantize + pool on the host, outputs ordered (ch, py, px).
std::vector<std::int64_t> conv_pool_ref(const ConvLayer& l, const std::vector<std::int64_t>& in, int h, int w) {
    std::vector<std::int64_t> out(static_cast<std::size_t>(l.out_ch * (h / 2) * (w / 2)));
    for (int o = 0; o < l.out_ch; ++o) {
        for (int py = 0; py < h / 2; ++py) {
            for (int px = 0; px < w / 2; ++px) {
                std::int64_t best = 0;
                for (int d = 0; d < 4; ++d) {
                    const int y = 2 * py + d / 2, x = 2 * px + d % 2;
                    std::int64_t acc = l.bias[static_cast<std::size_t>(o)];
                    for (int i = 0; i < l.in_ch; ++i) {
                        for (int dy = 0; dy < 3; ++dy) {
                            for (int dx = 0; dx < 3; ++dx) {
                                const int yy = y + dy - 1, xx = x + dx - 1;
                                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                                acc += l.w(o, i, dy, dx) * in[static_cast<std::size_t>((i * h + yy) * w + xx)];
                            }
                        }
                    }
                    best = std::max(best, requant(acc, l.shift));
                }
                out[static_cast<std::size_t>((o * (h / 2) + py) * (w / 2) + px)] = best;
            }
        }
    }
    return out;
}

// Pipelines for post-processing, outside the ranges the runtime uses.
struct LayerPipes {
    int acc;
    int pool;
};
constexpr LayerPipes kConv1Pipes{56, 57};
constexpr LayerPipes kConv2Pipes{58, 59};
constexpr int kFcPipe = 60;

// acc pipeline: rows in regs 0..3, bias in 4..7, 255 in 8, scratch 9.
// pool pipeline: addresses 0..3, gathered windows 4..7, scratch 8.
constexpr int kBiasReg = 4, kMaxReg = 8, kScratch = 9;

CostReport stage_conv_constants(runtime::Chip& chip, int handle, const ConvLayer& l, int h, int w, LayerPipes pipes,
                                Cycle at) {
    const auto& mh = chip.handle(handle);
    hct::Hct& hc = chip.hct(mh.tiles.front().hct);
    auto& acc = hc.pipeline(pipes.acc);
    auto& pool = hc.pipeline(pipes.pool);
    CostReport r;
    const int rows = l.out_ch * h * w;
    const int per_ch = (h / 2) * (w / 2) * 4;
    for (int chunk = 0; chunk * 64 < rows; ++chunk) {
        std::vector<std::int64_t> b(64, 0);
        for (int e = 0; e < 64 && chunk * 64 + e < rows; ++e) b[static_cast<std::size_t>(e)] = l.bias[static_cast<std::size_t>((chunk * 64 + e) / per_ch)];
        r += acc.write_planes(kBiasReg + chunk, b, kPostWidth, at);
    }
    r += kernels::load_constant(acc, kMaxReg, 255, kPostWidth, at);
    for (int d = 0; d < 4; ++d) {
        std::vector<std::int64_t> addr(64, 0);
        for (int j = 0; j < 64 && 4 * j + d < rows; ++j) addr[static_cast<std::size_t>(j)] = 4 * j + d;
        r += pool.write_planes(d, addr, 16, at);
    }
    return r;
}

// Bias, ReLU, requantize and 2x2 max pool as DCE macros on the layer's first HCT.
std::vector<std::int64_t> post_conv(runtime::Chip& chip, int handle, const ConvLayer& l, std::span<const std::int64_t> y,
                                    LayerPipes pipes, Cycle at, CostReport& cost) {
    const auto& mh = chip.handle(handle);
    hct::Hct& hc = chip.hct(mh.tiles.front().hct);
    auto& acc = hc.pipeline(pipes.acc);
    auto& pool = hc.pipeline(pipes.pool);
    const int rows = static_cast<int>(y.size());
    const int chunks = (rows + 63) / 64;
    for (int c = 0; c < chunks; ++c) {
        std::vector<std::int64_t> part(64, 0);
        for (int e = 0; e < 64 && c * 64 + e < rows; ++e) part[static_cast<std::size_t>(e)] = y[static_cast<std::size_t>(c * 64 + e)];
        cost += acc.write_planes(c, part, kPostWidth, at);
        cost += hc.digital(pipes.acc, {MacroKind::Add, c, c, kBiasReg + c, 0, kPostWidth}, at);
        cost += kernels::relu(acc, c, c, kPostWidth, kScratch, at);
        cost += hc.digital(pipes.acc, {MacroKind::Shr, c, c, 0, 0, kPostWidth, l.shift}, at);
        cost += kernels::min(acc, c, c, kMaxReg, kPostWidth, kScratch, at);
    }
    for (int d = 0; d < 4; ++d) {
        dce::DigitalPipeline::ElementLoad load{4 + d, d, 0, 8, 0, 8, 0};
        cost += hc.digital(pipes.pool, {MacroKind::Copy, 4 + d, dce::kZeroColumn, 0, 0, 16}, at);
        cost += pool.element_load(load, acc, at);
    }
    cost += kernels::max(pool, 4, 4, 5, 16, 8, at);
    cost += kernels::max(pool, 6, 6, 7, 16, 8, at);
    cost += kernels::max(pool, 4, 4, 6, 16, 8, at);
    std::vector<std::int64_t> pooled;
    cost += pool.read_planes(4, 16, pooled, false, at);
    pooled.resize(static_cast<std::size_t>(rows / 4));
    return pooled;
}

}  // namespace

TinyCnn TinyCnn::random(std::uint64_t seed, int c1, int c2, int classes) {
    std::mt19937_64 rng(seed);
    TinyCnn m;
    m.conv1.in_ch = 1;
    m.conv1.out_ch = c1;
    fill(m.conv1.weights, static_cast<std::size_t>(c1 * 9), -64, 63, rng);
    fill(m.conv1.bias, static_cast<std::size_t>(c1), -512, 512, rng);
    m.conv1.shift = 6;
    m.conv2.in_ch = c1;
    m.conv2.out_ch = c2;
    fill(m.conv2.weights, static_cast<std::size_t>(c2 * c1 * 9), -32, 31, rng);
    fill(m.conv2.bias, static_cast<std::size_t>(c2), -512, 512, rng);
    m.conv2.shift = 7;
    m.fc.in = c2 * (m.height / 4) * (m.width / 4);
    m.fc.out = classes;
    fill(m.fc.weights, static_cast<std::size_t>(m.fc.in * classes), -128, 127, rng);
    fill(m.fc.bias, static_cast<std::size_t>(classes), -1024, 1024, rng);
    m.validate();
    return m;
}

void TinyCnn::validate() const {
    if (height != 8 || width != 8) throw ShapeError("TinyCnn expects 8x8 inputs");
    if (conv1.in_ch != 1 || conv2.in_ch != conv1.out_ch) throw ShapeError("channel counts do not chain");
    if (conv1.out_ch < 1 || conv1.out_ch > 4 || conv2.out_ch < 1 || conv2.out_ch > 16) {
        throw ShapeError("channel counts out of range (conv1 <= 4, conv2 <= 16)");
    }
    for (const ConvLayer* l : {&conv1, &conv2}) {
        if (l->weights.size() != static_cast<std::size_t>(l->out_ch * l->in_ch * 9) ||
            l->bias.size() != static_cast<std::size_t>(l->out_ch)) {
            throw ShapeError("conv parameter sizes do not match the channel counts");
        }
        if (l->shift < 0 || l->shift > 24) throw ShapeError("requantization shift out of range");
        for (auto v : l->weights) {
            if (v < -128 || v > 127) throw OverflowError("conv weight outside signed 8-bit range");
        }
    }
    if (fc.in != conv2.out_ch * (height / 4) * (width / 4) || fc.out < 1 || fc.out > 64 ||
        fc.weights.size() != static_cast<std::size_t>(fc.in * fc.out) || fc.bias.size() != static_cast<std::size_t>(fc.out)) {
        throw ShapeError("FC layer does not match the pooled feature size");
    }
    for (auto v : fc.weights) {
        if (v < -128 || v > 127) throw OverflowError("FC weight outside signed 8-bit range");
    }
}

ace::IntMatrix toeplitz(const ConvLayer& l, int h, int w) {
    ace::IntMatrix t(l.out_ch * h * w, l.in_ch * h * w);
    for (int o = 0; o < l.out_ch; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int row = 4 * ((o * (h / 2) + y / 2) * (w / 2) + x / 2) + (y % 2) * 2 + x % 2;
                for (int i = 0; i < l.in_ch; ++i) {
                    for (int dy = 0; dy < 3; ++dy) {
                        for (int dx = 0; dx < 3; ++dx) {
                            const int yy = y + dy - 1, xx = x + dx - 1;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            t.at(row, (i * h + yy) * w + xx) = l.w(o, i, dy, dx);
                        }
                    }
                }
            }
        }
    }
    return t;
}

std::vector<std::int64_t> cnn_reference(const TinyCnn& m, const Image& image) {
    if (image.size() != static_cast<std::size_t>(m.height * m.width)) throw ShapeError("image size mismatch");
    const auto a1 = conv_pool_ref(m.conv1, image, m.height, m.width);
    const auto a2 = conv_pool_ref(m.conv2, a1, m.height / 2, m.width / 2);
    std::vector<std::int64_t> logits(static_cast<std::size_t>(m.fc.out));
    for (int o = 0; o < m.fc.out; ++o) {
        std::int64_t acc = m.fc.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < m.fc.in; ++i) acc += m.fc.weights[static_cast<std::size_t>(o * m.fc.in + i)] * a2[static_cast<std::size_t>(i)];
        logits[static_cast<std::size_t>(o)] = acc;
    }
    return logits;
}

CnnDeployment cnn_deploy(runtime::Chip& chip, const TinyCnn& model, int batch) {
    model.validate();
    if (batch < 1) throw ConfigError("batch must be positive");
    CnnDeployment dep;
    dep.chip = &chip;
    dep.model = model;
    const auto t1 = toeplitz(model.conv1, model.height, model.width);
    const auto t2 = toeplitz(model.conv2, model.height / 2, model.width / 2);
    ace::IntMatrix fc(model.fc.out, model.fc.in);
    fc.data = model.fc.weights;
    const Cycle start = chip.now();
    dep.setup.cover(start, start);
    const CostReport before = chip.total_cost();
    for (int b = 0; b < batch; ++b) {
        CnnDeployment::Replica r;
        r.conv1 = chip.set_matrix(t1, TinyCnn::kWeightBits, runtime::Precision::High, true);
        r.conv2 = chip.set_matrix(t2, TinyCnn::kWeightBits, runtime::Precision::High);
        r.fc = chip.set_matrix(fc, TinyCnn::kWeightBits, runtime::Precision::High);
        CostReport consts;
        consts += stage_conv_constants(chip, r.conv1, model.conv1, model.height, model.width, kConv1Pipes, start);
        consts += stage_conv_constants(chip, r.conv2, model.conv2, model.height / 2, model.width / 2, kConv2Pipes, start);
        std::vector<std::int64_t> bias(64, 0);
        std::copy(model.fc.bias.begin(), model.fc.bias.end(), bias.begin());
        consts += chip.hct(chip.handle(r.fc).tiles.front().hct).pipeline(kFcPipe).write_planes(0, bias, kPostWidth, start);
        chip.account(consts);
        dep.replicas.push_back(r);
    }
    dep.setup += chip.total_cost().since(before);
    dep.setup.cover(start, chip.now());
    return dep;
}

CnnResult cnn_run_inference(CnnDeployment& dep, std::span<const Image> images) {
    if (!dep.chip) throw SimError("CNN is not deployed");
    runtime::Chip& chip = *dep.chip;
    const TinyCnn& m = dep.model;
    CnnResult out;
    out.logits.resize(images.size());
    for (const auto& img : images) {
        if (img.size() != static_cast<std::size_t>(m.height * m.width)) throw ShapeError("image size mismatch");
        for (auto v : img) {
            if (v < 0 || v > 255) throw OverflowError("pixel outside 0..255");
        }
    }
    const std::size_t batch = dep.replicas.size();
    for (std::size_t wave = 0; wave < images.size(); wave += batch) {
        const Cycle start = chip.now();
        CostReport wave_cost;
        wave_cost.cover(start, start);
        Cycle wave_end = start;
        for (std::size_t b = 0; b < batch && wave + b < images.size(); ++b) {
            const auto& rep = dep.replicas[b];
            const Image& img = images[wave + b];
            CostReport c;
            c.cover(start, start);
            // exec_mvm accounts its own cost on the chip; post-processing is accounted below.
            auto r1 = chip.exec_mvm(rep.conv1, img, {8, false, start});
            CostReport post;
            const auto a1 = post_conv(chip, rep.conv1, m.conv1, r1.values, kConv1Pipes, r1.cost.end, post);
            auto r2 = chip.exec_mvm(rep.conv2, a1, {8, false, post.end});
            const auto a2 = post_conv(chip, rep.conv2, m.conv2, r2.values, kConv2Pipes, r2.cost.end, post);
            auto r3 = chip.exec_mvm(rep.fc, a2, {8, false, post.end});
            hct::Hct& fh = chip.hct(chip.handle(rep.fc).tiles.front().hct);
            std::vector<std::int64_t> y(64, 0);
            std::copy(r3.values.begin(), r3.values.end(), y.begin());
            auto& fp = fh.pipeline(kFcPipe);
            post += fp.write_planes(1, y, kPostWidth, r3.cost.end);
            post += fh.digital(kFcPipe, {MacroKind::Add, 1, 1, 0, 0, kPostWidth}, r3.cost.end);
            std::vector<std::int64_t> logits;
            post += fp.read_planes(1, kPostWidth, logits, true, r3.cost.end);
            logits.resize(static_cast<std::size_t>(m.fc.out));
            out.logits[wave + b] = std::move(logits);
            chip.account(post);
            c += r1.cost;
            c += r2.cost;
            c += r3.cost;
            c += post;
            wave_end = std::max(wave_end, c.end);
            wave_cost += c;
        }
        chip.advance_to(wave_end);
        out.cost += wave_cost;
    }
    return out;
}

}  // namespace darth::apps
