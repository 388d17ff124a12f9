#include "darth/apps/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "darth/dce_kernels.hpp"
#include "darth/errors.hpp"

namespace darth::apps {

namespace {

using dce::MacroKind;
namespace kernels = dce::kernels;
using E = TinyEncoder;

constexpr int W = 48;  // working width of every DCE value
constexpr int kLnFrac = 14;  // residual stream entering a layernorm
constexpr int kHiFrac = 12;  // layernorm outputs and the FFN activations
constexpr int kMvmInputBits = 20;

// Pipelines of the encoder HCT.
constexpr int kAct = 0;
constexpr int kWq = 1, kWk = 2, kWv = 3, kWo = 4;
constexpr int kParams = 5;
constexpr int kCalc = 6;

// Activation registers; pairs are (head or feature chunk 0, 1), element t * 8 + j.
constexpr int kX = 0, kQ = 2, kK = 4, kV = 6, kP = 8, kO = 10, kR = 12, kH = 14, kF = 16, kG = 20, kY2 = 24,
              kR2 = 26, kOut = 28;

// Parameter registers.
constexpr int kGamma1 = 0, kBeta1 = 2, kGamma2 = 4, kBeta2 = 6, kB1 = 8, kB2 = 12;

// Calc pipeline: address tables, constants, scratch.
constexpr int kRowSel = 0;   // (e / 8) * 8 + j
constexpr int kColSel = 8;   // (e % 8) * 8 + j
constexpr int kVSel = 16;    // u * 8 + e % 8
constexpr int kRot = 24;     // rotate by 1, 2, 4 inside each group of 8
constexpr int kLog2e = 27, kExpC1 = 28, kExpC2 = 29, kOne16 = 30, kMaxShift = 31, kInvSqrt2 = 32, kGeluB = 33,
              kGeluA = 34, kOne12 = 35, kEps = 36;
constexpr int kGA = 37, kGB = 38, kPR = 39, kAcc = 40, kS0 = 41, kS1 = 42, kS2 = 43, kS3 = 44, kS4 = 45;
constexpr int kW0 = 46, kW1 = 47, kW2 = 48, kW3 = 49, kW4 = 50, kW5 = 51, kW6 = 52, kW7 = 53, kTmp = 54;

// Fixed-point constants.
constexpr std::int64_t kLog2eQ8 = 369;      // log2(e)
constexpr std::int64_t kExpC1Q16 = 43269;   // 2^f ~ 1 + f (c1 + c2 f)
constexpr std::int64_t kExpC2Q16 = 22267;
constexpr std::int64_t kInvSqrt2Q12 = 2896;
constexpr double kGeluCoefA = -0.2888, kGeluCoefB = -1.769;
constexpr std::int64_t kGeluBQ12 = 7246;   // -b
constexpr std::int64_t kGeluAQ12 = 1183;   // -a
constexpr std::int64_t kEpsQ24 = 256;

std::size_t at(int r, int c, int cols) { return static_cast<std::size_t>(r * cols + c); }

// Sequencer over one HCT's DCE. Every step waits for the previous one.
struct Machine {
    hct::Hct& h;
    Cycle t;
    CostReport cost;

    dce::DigitalPipeline& calc() { return h.pipeline(kCalc); }
    void done(const CostReport& r) {
        cost += r;
        t = std::max(t, r.end);
    }
    void op(MacroKind k, int dst, int a, int b = 0, int shift = 0, bool arith = false, int c = 0) {
        done(h.digital(kCalc, {k, dst, a, b, c, W, shift, arith}, t));
    }
    void zero(int reg) { op(MacroKind::Copy, reg, dce::kZeroColumn); }
    void write(int pipe, int reg, std::span<const std::int64_t> v, int width = W) {
        done(h.pipeline(pipe).write_planes(reg, v, width, t));
    }
    std::vector<std::int64_t> read(int pipe, int reg) {
        std::vector<std::int64_t> out;
        done(h.pipeline(pipe).read_planes(reg, W, out, true, t));
        return out;
    }
    void gather(int dst, int src_pipe, int src_base, int addr_reg) {
        dce::DigitalPipeline::ElementLoad load{dst, addr_reg, 0, 8, src_base, W, 0};
        done(calc().element_load(load, h.pipeline(src_pipe), t));
    }
    void copy_in(int pipe, int reg, int dst) { done(h.dce().copy_register(pipe, reg, kCalc, dst, W, t)); }
    void copy_out(int reg, int pipe, int dst) { done(h.dce().copy_register(kCalc, reg, pipe, dst, W, t)); }
    void mul(int dst, int a, int b, int b_bits, bool b_signed) {
        done(kernels::multiply(calc(), dst, a, b, b_bits, b_signed, W, kS0, kS1, t));
    }
    void max(int dst, int a, int b) { done(kernels::max(calc(), dst, a, b, W, kS0, t)); }
    void min(int dst, int a, int b) { done(kernels::min(calc(), dst, a, b, W, kS0, t)); }
    // Reduces each group of 8 elements; every member ends up holding the result.
    void group(int reg, bool add) {
        for (int k = 0; k < 3; ++k) {
            gather(kTmp, kCalc, reg, kRot + k);
            if (add) {
                op(MacroKind::Add, reg, reg, kTmp);
            } else {
                max(reg, reg, kTmp);
            }
        }
    }
};

void stage_calc_tables(Machine& m) {
    std::vector<std::int64_t> v(64);
    for (int j = 0; j < 8; ++j) {
        for (int e = 0; e < 64; ++e) v[static_cast<std::size_t>(e)] = (e / 8) * 8 + j;
        m.write(kCalc, kRowSel + j, v, 8);
        for (int e = 0; e < 64; ++e) v[static_cast<std::size_t>(e)] = (e % 8) * 8 + j;
        m.write(kCalc, kColSel + j, v, 8);
        for (int e = 0; e < 64; ++e) v[static_cast<std::size_t>(e)] = j * 8 + e % 8;
        m.write(kCalc, kVSel + j, v, 8);
    }
    for (int k = 0; k < 3; ++k) {
        for (int e = 0; e < 64; ++e) v[static_cast<std::size_t>(e)] = (e / 8) * 8 + (e % 8 + (1 << k)) % 8;
        m.write(kCalc, kRot + k, v, 8);
    }
    const std::pair<int, std::int64_t> consts[] = {
        {kLog2e, kLog2eQ8}, {kExpC1, kExpC1Q16}, {kExpC2, kExpC2Q16}, {kOne16, 65536}, {kMaxShift, 31},
        {kInvSqrt2, kInvSqrt2Q12}, {kGeluB, kGeluBQ12}, {kGeluA, kGeluAQ12}, {kOne12, 4096}, {kEps, kEpsQ24},
    };
    for (const auto& [reg, value] : consts) m.done(kernels::load_constant(m.calc(), reg, value, W, m.t));
}

// Softmax of each group of 8 in `s` (8 fraction bits); probabilities with 12
// fraction bits land in kW2. exp is base 2: the integer part of the exponent
// becomes a right shift, the fraction goes through a quadratic.
void softmax(Machine& m, int s) {
    m.op(MacroKind::Copy, kW0, s);
    m.group(kW0, false);
    m.op(MacroKind::Sub, kW1, s, kW0);                  // z <= 0
    m.mul(kW2, kW1, kLog2e, 9, false);                  // y = z log2 e, 16 fraction bits
    m.op(MacroKind::Shr, kW3, kW2, 0, 16, true);        // n = floor(y)
    m.op(MacroKind::Shl, kW4, kW3, 0, 16);
    m.op(MacroKind::Sub, kW4, kW2, kW4);                // f = y - n
    m.mul(kW5, kExpC2, kW4, 16, false);
    m.op(MacroKind::Shr, kW5, kW5, 0, 16);
    m.op(MacroKind::Add, kW5, kW5, kExpC1);
    m.mul(kW6, kW5, kW4, 16, false);
    m.op(MacroKind::Shr, kW6, kW6, 0, 16);
    m.op(MacroKind::Add, kW6, kW6, kOne16);             // 2^f in [1, 2)
    m.op(MacroKind::Sub, kW7, dce::kZeroColumn, kW3);
    m.min(kW7, kW7, kMaxShift);
    m.done(kernels::shift_right_variable(m.calc(), kW6, kW6, kW7, 5, W, kS0, kS1, m.t));
    m.op(MacroKind::Copy, kW0, kW6);
    m.group(kW0, true);
    m.op(MacroKind::Shl, kW1, kW6, 0, 12);
    m.done(kernels::divide(m.calc(), kW2, kW1, kW0, 13, W, kS0, kS1, kS2, kS3, m.t));
}

// dst = x @ w for one 8-wide output chunk; x is the register pair at
// (src_pipe, src), w the broadcast rows at (wpipe, wbase + i).
void project(Machine& m, int src_pipe, int src, int wpipe, int wbase, int dst, int shift) {
    m.zero(kAcc);
    for (int i = 0; i < E::kDim; ++i) {
        m.gather(kGA, src_pipe, src + i / 8, kRowSel + i % 8);
        m.copy_in(wpipe, wbase + i, kGB);
        m.mul(kPR, kGA, kGB, 8, true);
        m.op(MacroKind::Add, kAcc, kAcc, kPR);
    }
    if (shift > 0) m.op(MacroKind::Shr, kAcc, kAcc, 0, shift, true);
    m.copy_out(kAcc, kAct, dst);
}

// Input pair at kLnFrac fraction bits; output at kHiFrac.
void layernorm(Machine& m, int src, int gamma, int beta, int dst) {
    m.copy_in(kAct, src, kW0);
    m.copy_in(kAct, src + 1, kW1);
    m.op(MacroKind::Copy, kW2, kW0);
    m.group(kW2, true);
    m.op(MacroKind::Copy, kW3, kW1);
    m.group(kW3, true);
    m.op(MacroKind::Add, kW2, kW2, kW3);
    m.op(MacroKind::Shr, kW2, kW2, 0, 4, true);  // mean over 16 features
    m.op(MacroKind::Sub, kW0, kW0, kW2);
    m.op(MacroKind::Sub, kW1, kW1, kW2);
    m.mul(kW3, kW0, kW0, 20, true);
    m.mul(kW4, kW1, kW1, 20, true);
    m.group(kW3, true);
    m.group(kW4, true);
    m.op(MacroKind::Add, kW3, kW3, kW4);
    m.op(MacroKind::Shr, kW3, kW3, 0, 4 + 2 * kLnFrac - 24);
    m.op(MacroKind::Add, kW3, kW3, kEps);                // variance, 24 fraction bits
    m.done(kernels::isqrt(m.calc(), kW4, kW3, 20, W, kS0, kS1, kS2, kS3, kS4, m.t));  // std, 12 fraction bits
    for (int c = 0; c < 2; ++c) {
        const int d = c == 0 ? kW0 : kW1;
        m.op(MacroKind::Sub, kW5, dce::kZeroColumn, d);
        m.max(kW6, d, kW5);
        m.op(MacroKind::Shl, kW6, kW6, 0, 12 + kHiFrac - kLnFrac);
        m.done(kernels::divide(m.calc(), kW7, kW6, kW4, 17, W, kS0, kS1, kS2, kS3, m.t));
        m.op(MacroKind::Sub, kW5, dce::kZeroColumn, kW7);
        m.op(MacroKind::Shr, kTmp, d, 0, W - 1, true);
        m.op(MacroKind::Mux, kW6, kTmp, kW5, 0, false, kW7);
        m.copy_in(kParams, gamma + c, kGB);
        m.mul(kPR, kW6, kGB, 8, true);
        m.op(MacroKind::Shr, kPR, kPR, 0, E::kWeightFrac, true);
        m.copy_in(kParams, beta + c, kGB);
        m.op(MacroKind::Add, kPR, kPR, kGB);
        m.copy_out(kPR, kAct, dst + c);
    }
}

// GELU of kW0 into kW6, both at kHiFrac fraction bits.
void gelu(Machine& m) {
    m.mul(kW1, kW0, kInvSqrt2, 12, false);
    m.op(MacroKind::Shr, kW1, kW1, 0, kHiFrac, true);  // u = x / sqrt 2
    m.op(MacroKind::Sub, kW2, dce::kZeroColumn, kW1);
    m.max(kW3, kW1, kW2);
    m.min(kW3, kW3, kGeluB);
    m.op(MacroKind::Sub, kW3, kW3, kGeluB);      // min(|u|, -b) + b
    m.mul(kW4, kW3, kW3, 16, true);
    m.mul(kW5, kW4, kGeluA, 11, false);
    m.op(MacroKind::Shr, kW5, kW5, 0, 2 * kHiFrac);
    m.op(MacroKind::Sub, kW5, kOne12, kW5);      // |L(u)|
    m.op(MacroKind::Sub, kW6, dce::kZeroColumn, kW5);
    m.op(MacroKind::Shr, kW2, kW1, 0, W - 1, true);
    m.op(MacroKind::Mux, kW5, kW2, kW6, 0, false, kW5);
    m.op(MacroKind::Add, kW5, kW5, kOne12);
    m.mul(kW6, kW0, kW5, 14, false);
    m.op(MacroKind::Shr, kW6, kW6, 0, kHiFrac + 1, true);
}

std::vector<std::int64_t> chunk_pair_to_rows(const std::vector<std::int64_t>& c0, const std::vector<std::int64_t>& c1) {
    std::vector<std::int64_t> rows(static_cast<std::size_t>(E::kTokens * E::kDim));
    for (int t = 0; t < E::kTokens; ++t) {
        for (int i = 0; i < E::kDim; ++i) rows[at(t, i, E::kDim)] = (i < 8 ? c0 : c1)[static_cast<std::size_t>(t * 8 + i % 8)];
    }
    return rows;
}

// Broadcast registers: element t * 8 + j holds f(j).
template <typename F>
std::vector<std::int64_t> per_feature(F f) {
    std::vector<std::int64_t> v(64);
    for (int e = 0; e < 64; ++e) v[static_cast<std::size_t>(e)] = f(e % 8);
    return v;
}

std::vector<std::int64_t> shifted(const std::vector<std::int64_t>& v, int left) {
    std::vector<std::int64_t> out(v);
    for (auto& x : out) x *= std::int64_t{1} << left;
    return out;
}

void fill_normal(std::vector<std::int64_t>& v, std::size_t n, double stddev, double scale, std::int64_t lo, std::int64_t hi,
                 std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, stddev);
    v.resize(n);
    for (auto& x : v) x = std::clamp<std::int64_t>(std::llround(d(rng) * scale), lo, hi);
}

}  // namespace

double poly_gelu(double x) {
    const double u = x / std::sqrt(2.0);
    const double c = std::min(std::abs(u), -kGeluCoefB) + kGeluCoefB;
    const double l = (u < 0 ? -1.0 : 1.0) * (kGeluCoefA * c * c + 1.0);
    return 0.5 * x * (1.0 + l);
}

TinyEncoder TinyEncoder::random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TinyEncoder m;
    const double wscale = 1 << kWeightFrac;
    const auto d = static_cast<std::size_t>(kDim);
    fill_normal(m.wq, d * d, 0.25 / std::sqrt(static_cast<double>(kHeadDim)), wscale, -127, 127, rng);
    fill_normal(m.wk, d * d, 0.25, wscale, -127, 127, rng);
    fill_normal(m.wv, d * d, 0.25, wscale, -127, 127, rng);
    fill_normal(m.wo, d * d, 0.25, wscale, -127, 127, rng);
    fill_normal(m.w1, d * kHidden, 0.25, wscale, -127, 127, rng);
    fill_normal(m.w2, d * kHidden, 1.0 / std::sqrt(static_cast<double>(kHidden)), wscale, -127, 127, rng);
    const double accscale = 1 << kAccFrac;
    fill_normal(m.b1, kHidden, 0.1, accscale, -(1 << 20), 1 << 20, rng);
    fill_normal(m.b2, d, 0.1, accscale, -(1 << 20), 1 << 20, rng);
    for (auto* g : {&m.gamma1, &m.gamma2}) {
        fill_normal(*g, d, 0.1, wscale, -63, 63, rng);
        for (auto& v : *g) v += 64;
    }
    fill_normal(m.beta1, d, 0.1, 1 << kActFrac, -255, 255, rng);
    fill_normal(m.beta2, d, 0.1, 1 << kActFrac, -255, 255, rng);
    m.validate();
    return m;
}

void TinyEncoder::validate() const {
    const auto d = static_cast<std::size_t>(kDim);
    for (const auto* w : {&wq, &wk, &wv, &wo}) {
        if (w->size() != d * d) throw ShapeError("attention weights must be 16x16");
    }
    if (w1.size() != d * kHidden || w2.size() != d * kHidden) throw ShapeError("FFN weights must be 32x16 and 16x32");
    if (b1.size() != static_cast<std::size_t>(kHidden) || b2.size() != d) throw ShapeError("FFN bias size mismatch");
    for (const auto* v : {&gamma1, &gamma2, &beta1, &beta2}) {
        if (v->size() != d) throw ShapeError("layernorm parameter size mismatch");
    }
    for (const auto* w : {&wq, &wk, &wv, &wo, &w1, &w2, &gamma1, &gamma2}) {
        for (auto v : *w) {
            if (v < -128 || v > 127) throw OverflowError("weight outside signed 8-bit range");
        }
    }
}

std::vector<double> encoder_float(const TinyEncoder& m, const Sequence& xq) {
    constexpr int T = E::kTokens, D = E::kDim, HD = E::kHeadDim, FF = E::kHidden;
    if (xq.size() != static_cast<std::size_t>(T * D)) throw ShapeError("sequence must be 8 x 16");
    const double wf = 1.0 / (1 << E::kWeightFrac), af = 1.0 / (1 << E::kActFrac), bf = 1.0 / (1 << E::kAccFrac);
    std::vector<double> x(xq.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(xq[i]) * af;
    auto matmul = [&](const std::vector<double>& a, const std::vector<std::int64_t>& w, int in, int out) {
        std::vector<double> y(static_cast<std::size_t>(T * out), 0.0);
        for (int t = 0; t < T; ++t) {
            for (int o = 0; o < out; ++o) {
                for (int i = 0; i < in; ++i) y[at(t, o, out)] += a[at(t, i, in)] * static_cast<double>(w[at(i, o, out)]) * wf;
            }
        }
        return y;
    };
    auto layernorm_f = [&](const std::vector<double>& a, const std::vector<std::int64_t>& g, const std::vector<std::int64_t>& b) {
        std::vector<double> y(a.size());
        for (int t = 0; t < T; ++t) {
            double mean = 0, var = 0;
            for (int i = 0; i < D; ++i) mean += a[at(t, i, D)];
            mean /= D;
            for (int i = 0; i < D; ++i) var += (a[at(t, i, D)] - mean) * (a[at(t, i, D)] - mean);
            var /= D;
            for (int i = 0; i < D; ++i) {
                y[at(t, i, D)] = (a[at(t, i, D)] - mean) / std::sqrt(var + 1e-5) * static_cast<double>(g[static_cast<std::size_t>(i)]) * wf +
                                 static_cast<double>(b[static_cast<std::size_t>(i)]) * af;
            }
        }
        return y;
    };
    const auto q = matmul(x, m.wq, D, D), k = matmul(x, m.wk, D, D), v = matmul(x, m.wv, D, D);
    std::vector<double> o(static_cast<std::size_t>(T * D), 0.0);
    for (int h = 0; h < E::kHeads; ++h) {
        for (int t = 0; t < T; ++t) {
            std::vector<double> s(T);
            for (int u = 0; u < T; ++u) {
                for (int j = 0; j < HD; ++j) s[u] += q[at(t, h * HD + j, D)] * k[at(u, h * HD + j, D)];
            }
            const double mx = *std::max_element(s.begin(), s.end());
            double sum = 0;
            for (auto& e : s) sum += (e = std::exp(e - mx));
            for (int u = 0; u < T; ++u) {
                for (int j = 0; j < HD; ++j) o[at(t, h * HD + j, D)] += s[u] / sum * v[at(u, h * HD + j, D)];
            }
        }
    }
    auto r = matmul(o, m.wo, D, D);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += x[i];
    const auto h1 = layernorm_f(r, m.gamma1, m.beta1);
    std::vector<double> y2(static_cast<std::size_t>(T * D));
    for (int t = 0; t < T; ++t) {
        std::vector<double> g(FF);
        for (int f = 0; f < FF; ++f) {
            double acc = static_cast<double>(m.b1[static_cast<std::size_t>(f)]) * bf;
            for (int i = 0; i < D; ++i) acc += static_cast<double>(m.w1[at(f, i, D)]) * wf * h1[at(t, i, D)];
            g[f] = poly_gelu(acc);
        }
        for (int o2 = 0; o2 < D; ++o2) {
            double acc = static_cast<double>(m.b2[static_cast<std::size_t>(o2)]) * bf;
            for (int f = 0; f < FF; ++f) acc += static_cast<double>(m.w2[at(o2, f, FF)]) * wf * g[f];
            y2[at(t, o2, D)] = acc + h1[at(t, o2, D)];
        }
    }
    return layernorm_f(y2, m.gamma2, m.beta2);
}

EncoderDeployment llm_build_encoder(runtime::Chip& chip, const TinyEncoder& model) {
    model.validate();
    if (!chip.analog_enabled() || !chip.digital_enabled()) throw ModeError("the encoder needs both compute domains");
    EncoderDeployment dep;
    dep.chip = &chip;
    dep.model = model;
    const CostReport before = chip.total_cost();
    const Cycle start = chip.now();

    ace::IntMatrix w1(E::kHidden, E::kDim), w2(E::kDim, E::kHidden);
    w1.data = model.w1;
    w2.data = model.w2;
    dep.ffn1 = chip.set_matrix(w1, 8, runtime::Precision::High);
    dep.ffn2 = chip.set_matrix(w2, 8, runtime::Precision::High);
    dep.dce_hct = chip.reserve_hcts(1).front();

    Machine m{chip.hct(dep.dce_hct), start, {}};
    m.cost.cover(start, start);
    stage_calc_tables(m);
    const std::pair<int, const std::vector<std::int64_t>*> proj[] = {{kWq, &model.wq}, {kWk, &model.wk}, {kWv, &model.wv}, {kWo, &model.wo}};
    for (const auto& [pipe, w] : proj) {
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < E::kDim; ++i) {
                m.write(pipe, c * 16 + i, per_feature([&](int j) { return (*w)[at(i, c * 8 + j, E::kDim)]; }));
            }
        }
    }
    for (int c = 0; c < 2; ++c) {
        auto feat = [&](const std::vector<std::int64_t>& v) { return per_feature([&](int j) { return v[static_cast<std::size_t>(c * 8 + j)]; }); };
        m.write(kParams, kGamma1 + c, feat(model.gamma1));
        m.write(kParams, kBeta1 + c, feat(shifted(model.beta1, kHiFrac - E::kActFrac)));
        m.write(kParams, kGamma2 + c, feat(model.gamma2));
        m.write(kParams, kBeta2 + c, feat(shifted(model.beta2, kHiFrac - E::kActFrac)));
        m.write(kParams, kB2 + c, feat(shifted(model.b2, kHiFrac - E::kActFrac)));
    }
    for (int r = 0; r < 4; ++r) {
        const auto b1 = shifted(model.b1, kHiFrac - E::kActFrac);
        m.write(kParams, kB1 + r, per_feature([&](int j) { return b1[static_cast<std::size_t>(r * 8 + j)]; }));
    }
    chip.account(m.cost);
    dep.setup = chip.total_cost().since(before);
    dep.setup.cover(start, chip.now());
    return dep;
}

EncoderResult llm_run_inference(EncoderDeployment& dep, std::span<const Sequence> inputs) {
    if (!dep.chip) throw SimError("encoder is not built");
    runtime::Chip& chip = *dep.chip;
    const auto span_limit = std::int64_t{1} << 15;
    for (const auto& x : inputs) {
        if (x.size() != static_cast<std::size_t>(E::kTokens * E::kDim)) throw ShapeError("sequence must be 8 x 16");
        for (auto v : x) {
            if (v < -span_limit || v >= span_limit) throw OverflowError("activation outside 16-bit range");
        }
    }
    EncoderResult out;
    for (const auto& x : inputs) {
        const Cycle start = chip.now();
        Machine m{chip.hct(dep.dce_hct), start, {}};
        m.cost.cover(start, start);
        CostReport analog;

        for (int c = 0; c < 2; ++c) {
            std::vector<std::int64_t> chunk(64);
            for (int t = 0; t < E::kTokens; ++t) {
                for (int j = 0; j < 8; ++j) chunk[static_cast<std::size_t>(t * 8 + j)] = x[at(t, c * 8 + j, E::kDim)];
            }
            m.write(kAct, kX + c, chunk);
        }
        // Attention, entirely in the DCE.
        for (int h = 0; h < E::kHeads; ++h) {
            project(m, kAct, kX, kWq, h * 16, kQ + h, E::kWeightFrac);
            project(m, kAct, kX, kWk, h * 16, kK + h, E::kWeightFrac);
            project(m, kAct, kX, kWv, h * 16, kV + h, E::kWeightFrac);
            m.zero(kAcc);
            for (int j = 0; j < E::kHeadDim; ++j) {
                m.gather(kGA, kAct, kQ + h, kRowSel + j);
                m.gather(kGB, kAct, kK + h, kColSel + j);
                m.mul(kPR, kGA, kGB, 16, true);
                m.op(MacroKind::Add, kAcc, kAcc, kPR);
            }
            m.op(MacroKind::Shr, kAcc, kAcc, 0, E::kActFrac, true);
            softmax(m, kAcc);
            m.copy_out(kW2, kAct, kP + h);
            m.zero(kAcc);
            for (int u = 0; u < E::kTokens; ++u) {
                m.gather(kGA, kAct, kP + h, kRowSel + u);
                m.gather(kGB, kAct, kV + h, kVSel + u);
                m.mul(kPR, kGA, kGB, 16, true);
                m.op(MacroKind::Add, kAcc, kAcc, kPR);
            }
            m.op(MacroKind::Shr, kAcc, kAcc, 0, 12 + E::kActFrac - kHiFrac, true);
            m.copy_out(kAcc, kAct, kO + h);
        }
        for (int c = 0; c < 2; ++c) {
            project(m, kAct, kO, kWo, c * 16, kR + c, kHiFrac + E::kWeightFrac - kLnFrac);
            m.copy_in(kAct, kR + c, kW0);
            m.copy_in(kAct, kX + c, kW1);
            m.op(MacroKind::Shl, kW1, kW1, 0, kLnFrac - E::kActFrac);
            m.op(MacroKind::Add, kW0, kW0, kW1);
            m.copy_out(kW0, kAct, kR + c);
        }
        layernorm(m, kR, kGamma1, kBeta1, kH);

        // FFN: both matrices live in the crossbars.
        const auto h1 = chunk_pair_to_rows(m.read(kAct, kH), m.read(kAct, kH + 1));
        std::vector<std::vector<std::int64_t>> hidden(4, std::vector<std::int64_t>(64, 0));
        Cycle mvm_end = m.t;
        for (int t = 0; t < E::kTokens; ++t) {
            std::vector<std::int64_t> row(h1.begin() + t * E::kDim, h1.begin() + (t + 1) * E::kDim);
            auto r = chip.exec_mvm(dep.ffn1, row, {kMvmInputBits, true, m.t});
            for (int f = 0; f < E::kHidden; ++f) hidden[static_cast<std::size_t>(f / 8)][static_cast<std::size_t>(t * 8 + f % 8)] = r.values[static_cast<std::size_t>(f)];
            mvm_end = std::max(mvm_end, r.cost.end);
            analog += r.cost;
        }
        m.t = mvm_end;
        std::vector<std::vector<std::int64_t>> g(4);
        for (int r = 0; r < 4; ++r) {
            m.write(kAct, kF + r, hidden[static_cast<std::size_t>(r)]);
            m.copy_in(kAct, kF + r, kW0);
            m.copy_in(kParams, kB1 + r, kGB);
            m.op(MacroKind::Add, kW0, kW0, kGB);
            m.op(MacroKind::Shr, kW0, kW0, 0, E::kWeightFrac, true);
            gelu(m);
            m.copy_out(kW6, kAct, kG + r);
            g[static_cast<std::size_t>(r)] = m.read(kAct, kG + r);
        }
        std::vector<std::vector<std::int64_t>> y2(2, std::vector<std::int64_t>(64, 0));
        mvm_end = m.t;
        for (int t = 0; t < E::kTokens; ++t) {
            std::vector<std::int64_t> row(E::kHidden);
            for (int f = 0; f < E::kHidden; ++f) row[static_cast<std::size_t>(f)] = g[static_cast<std::size_t>(f / 8)][static_cast<std::size_t>(t * 8 + f % 8)];
            auto r = chip.exec_mvm(dep.ffn2, row, {kMvmInputBits, true, m.t});
            for (int o = 0; o < E::kDim; ++o) y2[static_cast<std::size_t>(o / 8)][static_cast<std::size_t>(t * 8 + o % 8)] = r.values[static_cast<std::size_t>(o)];
            mvm_end = std::max(mvm_end, r.cost.end);
            analog += r.cost;
        }
        m.t = mvm_end;
        for (int c = 0; c < 2; ++c) {
            m.write(kAct, kY2 + c, y2[static_cast<std::size_t>(c)]);
            m.copy_in(kAct, kY2 + c, kW0);
            m.copy_in(kParams, kB2 + c, kGB);
            m.op(MacroKind::Add, kW0, kW0, kGB);
            m.op(MacroKind::Shr, kW0, kW0, 0, kHiFrac + E::kWeightFrac - kLnFrac, true);
            m.copy_in(kAct, kH + c, kW1);
            m.op(MacroKind::Shl, kW1, kW1, 0, kLnFrac - kHiFrac);
            m.op(MacroKind::Add, kW0, kW0, kW1);
            m.copy_out(kW0, kAct, kR2 + c);
        }
        layernorm(m, kR2, kGamma2, kBeta2, kOut);
        for (int c = 0; c < 2; ++c) {
            // Round to the output scale.
            m.copy_in(kAct, kOut + c, kW0);
            m.done(kernels::load_constant(m.calc(), kW1, std::int64_t{1} << (kHiFrac - E::kActFrac - 1), W, m.t));
            m.op(MacroKind::Add, kW0, kW0, kW1);
            m.op(MacroKind::Shr, kW0, kW0, 0, kHiFrac - E::kActFrac, true);
            m.copy_out(kW0, kAct, kOut + c);
        }
        out.outputs.push_back(chunk_pair_to_rows(m.read(kAct, kOut), m.read(kAct, kOut + 1)));

        chip.account(m.cost);
        CostReport seq = m.cost;
        seq.add_activity(analog);
        out.cost += seq;
    }
    return out;
}

std::vector<std::int64_t> dce_softmax(runtime::Chip& chip, int hct, std::span<const std::int64_t> scores, CostReport* cost) {
    if (scores.size() != 64) throw ShapeError("softmax input must be 8 rows of 8");
    Machine m{chip.hct(hct), chip.now(), {}};
    m.cost.cover(m.t, m.t);
    stage_calc_tables(m);
    m.write(kCalc, kAcc, scores);
    softmax(m, kAcc);
    auto p = m.read(kCalc, kW2);
    chip.account(m.cost);
    if (cost) *cost = m.cost;
    return p;
}

}  // namespace darth::apps
