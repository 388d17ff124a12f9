#include "darth/apps/aes.hpp"

#include <algorithm>
#include <random>

#include "darth/dce_kernels.hpp"
#include "darth/errors.hpp"

namespace darth::apps {

namespace {

using dce::MacroArgs;
using dce::MacroKind;

// State pipeline registers.
constexpr int kState = 0;
constexpr int kNext = 1;
constexpr int kRotL = 2;
constexpr int kRotR = 3;
constexpr int kRowMask = 5;   // rows 1..3 at 5..7
constexpr int kRoundKey = 8;  // K0..K10 at 8..18
constexpr int kStage = 19;
// Digital MixColumns.
constexpr int kGather = 20;   // rows rotated by 1..3 at 20..22
constexpr int kRotAddr = 23;  // element address tables at 23..25
constexpr int kTerm = 26;
constexpr int kTmp = 27;
constexpr int kMask = 28;
constexpr int kWord = 32;

std::int64_t row_word(const Block& b, int r) {
    return (std::int64_t{b[r]} << 24) | (std::int64_t{b[4 + r]} << 16) | (std::int64_t{b[8 + r]} << 8) | b[12 + r];
}

void set_row_word(Block& b, int r, std::uint64_t w) {
    for (int c = 0; c < 4; ++c) b[4 * c + r] = static_cast<std::uint8_t>(w >> (24 - 8 * c));
}

struct Lane {
    hct::Hct& h;
    dce::DigitalPipeline& state;
    Cycle t;
    CostReport cost;

    void macro(MacroArgs a) { cost += h.digital(AesContext::kStatePipe, a, t); }
    void sync() { t = std::max(t, cost.end); }
};

void sub_bytes(Lane& lane) {
    auto& sbox = lane.h.pipeline(AesContext::kSboxPipe);
    for (int l = 0; l < 4; ++l) {
        dce::DigitalPipeline::ElementLoad load{kState, kState, 8 * l, 8, 0, 8, 8 * l};
        lane.cost += lane.state.element_load(load, sbox, lane.t);
    }
}

// Row r rotates left by r bytes: the top bytes come back in at the bottom.
void shift_rows(Lane& lane) {
    for (int r = 1; r < 4; ++r) {
        lane.macro({MacroKind::Shl, kRotL, kState, 0, 0, kWord, 8 * r});
        lane.macro({MacroKind::Shr, kRotR, kState, 0, 0, kWord, kWord - 8 * r});
        lane.macro({MacroKind::Or, kRotL, kRotL, kRotR, 0, kWord});
        lane.macro({MacroKind::Mux, kNext, kRowMask + r - 1, kRotL, kState, kWord});
        lane.macro({MacroKind::Copy, kState, kNext, 0, 0, kWord});
    }
}

// One analog step per (block, column, bit plane): each of the four bytes
// drives its data row when the plane bit is 1 and its complement row
// otherwise, so exactly four rows conduct and compensation adds 2. The parity
// of each bitline is one output bit: its code lands as the single plane at
// the bit's position, and the planes are combined with XOR.
void mix_columns(AesContext& ctx, Lane& lane, int blocks) {
    std::vector<std::int64_t> words;
    lane.cost += lane.state.read_planes(kState, kWord, words, false, lane.t);
    lane.sync();
    lane.macro({MacroKind::Copy, kNext, dce::kZeroColumn, 0, 0, kWord});
    lane.macro({MacroKind::Copy, kStage, dce::kZeroColumn, 0, 0, kWord});
    for (int c = 0; c < 4; ++c) {
        const int low = 24 - 8 * c;
        for (int p = 0; p < 8; ++p) {
            std::vector<std::vector<std::int64_t>> codes(static_cast<std::size_t>(blocks));
            Cycle landed = lane.t;
            for (int k = 0; k < blocks; ++k) {
                std::uint64_t mask = 0;
                for (int r = 0; r < 4; ++r) {
                    const auto bit = (static_cast<std::uint64_t>(words[static_cast<std::size_t>(4 * k + r)]) >> (low + p)) & 1u;
                    mask |= std::uint64_t{1} << (bit ? r * 8 + p : 32 + r * 8 + p);
                }
                const auto& vc = lane.h.vacore(k);
                auto ar = lane.h.analog_apply(vc.first_array, mask, 32, ctx.mix_adc, lane.t);
                codes[static_cast<std::size_t>(k)] = ace::compensate(ar.codes, 4);
                landed = std::max(landed, ar.cost.end);
                lane.cost += ar.cost;
            }
            for (int b = 0; b < 8; ++b) {
                std::vector<std::int64_t> plane(64, 0);
                for (int k = 0; k < blocks; ++k) {
                    for (int r = 0; r < 4; ++r) plane[static_cast<std::size_t>(4 * k + r)] = codes[static_cast<std::size_t>(k)][static_cast<std::size_t>(r * 8 + b)];
                }
                lane.cost += lane.h.land(plane, {AesContext::kStatePipe, kStage}, low + b + 1, low + b, true, landed, true);
            }
            lane.macro({MacroKind::Xor, kNext, kNext, kStage, 0, low + 8});
        }
        if (c < 3) lane.macro({MacroKind::Copy, kStage, dce::kZeroColumn, 0, 0, low});
    }
    lane.macro({MacroKind::Copy, kState, kNext, 0, 0, kWord});
}

std::int64_t replicate_bytes(unsigned byte) {
    return static_cast<std::int64_t>(byte) * 0x01010101;
}

// Output row r is sum over d of M_d applied bytewise to row r + d, where M_d
// is the 8x8 GF(2) block of the column matrix. Bit b of each output byte is
// the parity of (rows AND row-mask), folded within the byte by shifts.
void gather_rows(Lane& lane) {
    for (int d = 1; d < 4; ++d) {
        dce::DigitalPipeline::ElementLoad load{kGather + d - 1, kRotAddr + d - 1, 0, 6, kState, kWord, 0};
        lane.cost += lane.state.element_load(load, lane.state, lane.t);
    }
}

void mix_columns_xor(Lane& lane) {
    const auto m = aes_ref::mix_columns_bit_matrix();
    gather_rows(lane);
    lane.macro({MacroKind::Copy, kNext, dce::kZeroColumn, 0, 0, kWord});
    for (int b = 0; b < 8; ++b) {
        lane.macro({MacroKind::Copy, kTerm, dce::kZeroColumn, 0, 0, kWord});
        for (int d = 0; d < 4; ++d) {
            unsigned row = 0;
            for (int p = 0; p < 8; ++p) row |= static_cast<unsigned>(m[static_cast<std::size_t>(b)][static_cast<std::size_t>(d * 8 + p)]) << p;
            if (row == 0) continue;
            lane.cost += dce::kernels::load_constant(lane.state, kMask, replicate_bytes(row), kWord, lane.t);
            lane.macro({MacroKind::And, kTmp, d == 0 ? kState : kGather + d - 1, kMask, 0, kWord});
            lane.macro({MacroKind::Xor, kTerm, kTerm, kTmp, 0, kWord});
        }
        for (int sh = 4; sh >= 1; sh /= 2) {
            lane.macro({MacroKind::Shr, kTmp, kTerm, 0, 0, kWord, sh});
            lane.macro({MacroKind::Xor, kTerm, kTerm, kTmp, 0, kWord});
        }
        lane.cost += dce::kernels::load_constant(lane.state, kMask, replicate_bytes(1), kWord, lane.t);
        lane.macro({MacroKind::And, kTerm, kTerm, kMask, 0, kWord});
        if (b > 0) lane.macro({MacroKind::Shl, kTerm, kTerm, 0, 0, kWord, b});
        lane.macro({MacroKind::Xor, kNext, kNext, kTerm, 0, kWord});
    }
    lane.macro({MacroKind::Copy, kState, kNext, 0, 0, kWord});
}

// The analog computation done digitally: each output bit is the parity of an
// integer sum of input bits. Byte lanes count independently (sums stay below
// 256), one ADD per matrix entry.
void mix_columns_mvm(Lane& lane) {
    const auto m = aes_ref::mix_columns_bit_matrix();
    gather_rows(lane);
    lane.cost += dce::kernels::load_constant(lane.state, kMask, replicate_bytes(1), kWord, lane.t);
    lane.macro({MacroKind::Copy, kNext, dce::kZeroColumn, 0, 0, kWord});
    for (int b = 0; b < 8; ++b) {
        lane.macro({MacroKind::Copy, kTerm, dce::kZeroColumn, 0, 0, kWord});
        for (int d = 0; d < 4; ++d) {
            for (int p = 0; p < 8; ++p) {
                if (m[static_cast<std::size_t>(b)][static_cast<std::size_t>(d * 8 + p)] == 0) continue;
                const int src = d == 0 ? kState : kGather + d - 1;
                if (p > 0) {
                    lane.macro({MacroKind::Shr, kTmp, src, 0, 0, kWord, p});
                    lane.macro({MacroKind::And, kTmp, kTmp, kMask, 0, kWord});
                } else {
                    lane.macro({MacroKind::And, kTmp, src, kMask, 0, kWord});
                }
                lane.macro({MacroKind::Add, kTerm, kTerm, kTmp, 0, kWord});
            }
        }
        lane.macro({MacroKind::And, kTerm, kTerm, kMask, 0, kWord});
        if (b > 0) lane.macro({MacroKind::Shl, kTerm, kTerm, 0, 0, kWord, b});
        lane.macro({MacroKind::Or, kNext, kNext, kTerm, 0, kWord});
    }
    lane.macro({MacroKind::Copy, kState, kNext, 0, 0, kWord});
}

void add_round_key(Lane& lane, int round) { lane.macro({MacroKind::Xor, kState, kState, kRoundKey + round, 0, kWord}); }

enum class Steps { Full, MixOnly };

AesResult run(AesContext& ctx, std::span<const Block> input, std::span<const Key> keys, Steps steps) {
    if (!ctx.chip) throw SimError("AES context is not initialized");
    if (!keys.empty() && keys.size() != input.size()) throw ShapeError("one key per block required");
    runtime::Chip& chip = *ctx.chip;
    AesResult out;
    out.ciphertext.resize(input.size());
    const std::size_t per_wave = static_cast<std::size_t>(AesContext::kBlocksPerLane) * ctx.lanes.size();
    for (std::size_t wave = 0; wave < input.size(); wave += per_wave) {
        const Cycle start = chip.now();
        CostReport wave_cost;
        wave_cost.cover(start, start);
        for (std::size_t li = 0; li < ctx.lanes.size(); ++li) {
            const std::size_t first = wave + li * AesContext::kBlocksPerLane;
            if (first >= input.size()) break;
            const int blocks = static_cast<int>(std::min<std::size_t>(AesContext::kBlocksPerLane, input.size() - first));
            hct::Hct& h = chip.hct(ctx.lanes[li]);
            Lane lane{h, h.pipeline(AesContext::kStatePipe), start, {}};
            lane.cost.cover(start, start);

            std::vector<std::int64_t> words(64, 0);
            for (int k = 0; k < blocks; ++k) {
                for (int r = 0; r < 4; ++r) words[static_cast<std::size_t>(4 * k + r)] = row_word(input[first + k], r);
            }
            lane.cost += lane.state.write_planes(kState, words, kWord, lane.t);

            auto mix = [&] {
                switch (ctx.mix) {
                    case MixMode::Analog: mix_columns(ctx, lane, blocks); break;
                    case MixMode::Digital: mix_columns_mvm(lane); break;
                    case MixMode::DigitalXor: mix_columns_xor(lane); break;
                }
            };
            auto timed = [&](Cycle& slot, auto&& step) {
                const Cycle before = lane.cost.end;
                step();
                slot += lane.cost.end - before;
            };
            auto& kc = out.kernels;
            if (steps == Steps::MixOnly) {
                timed(kc.mix_columns, mix);
            } else {
                std::vector<RoundKeys> rks;
                for (int k = 0; k < blocks; ++k) {
                    rks.push_back(keys.empty() ? ctx.round_keys : aes_ref::expand_key(keys[first + k]));
                }
                for (int round = 0; round <= 10; ++round) {
                    std::vector<std::int64_t> kw(64, 0);
                    for (int k = 0; k < blocks; ++k) {
                        for (int r = 0; r < 4; ++r) kw[static_cast<std::size_t>(4 * k + r)] = row_word(rks[static_cast<std::size_t>(k)][round], r);
                    }
                    lane.cost += lane.state.write_planes(kRoundKey + round, kw, kWord, lane.t);
                }
                timed(kc.add_round_key, [&] { add_round_key(lane, 0); });
                for (int round = 1; round <= 10; ++round) {
                    timed(kc.sub_bytes, [&] { sub_bytes(lane); });
                    timed(kc.shift_rows, [&] { shift_rows(lane); });
                    if (round != 10) timed(kc.mix_columns, mix);
                    timed(kc.add_round_key, [&] { add_round_key(lane, round); });
                }
            }
            std::vector<std::int64_t> result;
            lane.cost += lane.state.read_planes(kState, kWord, result, false, lane.t);
            for (int k = 0; k < blocks; ++k) {
                for (int r = 0; r < 4; ++r) {
                    set_row_word(out.ciphertext[first + k], r, static_cast<std::uint64_t>(result[static_cast<std::size_t>(4 * k + r)]));
                }
            }
            wave_cost += lane.cost;
        }
        chip.account(wave_cost);
        out.cost += wave_cost;
    }
    return out;
}

}  // namespace

ace::AdcModel aes_mix_adc(const runtime::ChipConfig& chip, int truncate_bits) {
    ace::AdcModel adc = chip.adc_model();
    if (truncate_bits > 0) {
        adc.resolution_bits = truncate_bits;
        adc.truncate_bits = truncate_bits;
        adc.early_termination_levels = Cycle{1} << truncate_bits;
    }
    return adc;
}

AesContext aes_init_arrays(runtime::Chip& chip, const Key& key, AesOptions options) {
    if (options.lanes < 1) throw ConfigError("AES needs at least one lane");
    if (!chip.digital_enabled()) throw ModeError("AES needs the digital domain");
    if (options.mix == MixMode::Analog && !chip.analog_enabled()) throw ModeError("analog MixColumns needs the analog domain");
    AesContext ctx;
    ctx.chip = &chip;
    ctx.mix = options.mix;
    ctx.key = key;
    ctx.round_keys = aes_ref::expand_key(key);
    ctx.lanes = chip.reserve_hcts(options.lanes);

    const auto bits = aes_ref::mix_columns_bit_matrix();
    ctx.mix_matrix = ace::IntMatrix(32, 64);
    for (int o = 0; o < 32; ++o) {
        for (int i = 0; i < 32; ++i) ctx.mix_matrix.at(o, i) = bits[static_cast<std::size_t>(o)][static_cast<std::size_t>(i)];
    }
    ctx.mix_adc = aes_mix_adc(chip.config(), options.adc_truncate_bits);

    const Cycle start = chip.now();
    ctx.setup.cover(start, start);
    std::vector<std::int64_t> sbox(aes_ref::sbox().begin(), aes_ref::sbox().end());
    for (int lane : ctx.lanes) {
        hct::Hct& h = chip.hct(lane);
        auto& sp = h.pipeline(AesContext::kSboxPipe);
        for (int reg = 0; reg < 4; ++reg) {
            ctx.setup += sp.write_planes(reg, std::span(sbox).subspan(static_cast<std::size_t>(reg) * 64, 64), 8, start);
        }
        auto& st = h.pipeline(AesContext::kStatePipe);
        for (int r = 1; r < 4; ++r) {
            std::vector<std::int64_t> m(64, 0);
            for (int e = r; e < 64; e += 4) m[static_cast<std::size_t>(e)] = 0xffffffff;
            ctx.setup += st.write_planes(kRowMask + r - 1, m, kWord, start);
        }
        if (options.mix != MixMode::Analog) {
            for (int d = 1; d < 4; ++d) {
                std::vector<std::int64_t> addr(64);
                for (int e = 0; e < 64; ++e) addr[static_cast<std::size_t>(e)] = 4 * (e / 4) + (e % 4 + d) % 4;
                ctx.setup += st.write_planes(kRotAddr + d - 1, addr, 6, start);
            }
            continue;
        }
        h.clear_vacores();
        for (int k = 0; k < AesContext::kBlocksPerLane; ++k) {
            auto& vc = h.alloc_vacore(1, 1);
            ctx.setup += h.program_vacore(vc.id, ctx.mix_matrix, ace::Remap::Symmetric, start);
        }
    }
    chip.account(ctx.setup);
    return ctx;
}

AesResult aes_encrypt(AesContext& ctx, std::span<const Block> plaintext) { return run(ctx, plaintext, {}, Steps::Full); }

AesResult aes_encrypt(AesContext& ctx, std::span<const Block> plaintext, std::span<const Key> keys) {
    return run(ctx, plaintext, keys, Steps::Full);
}

AesResult aes_mix_columns(AesContext& ctx, std::span<const Block> state) { return run(ctx, state, {}, Steps::MixOnly); }

MixParasiticStats aes_mix_parasitic_study(ace::Remap remap, long column_ops, const ace::NoiseConfig& noise,
                                          std::uint64_t seed) {
    const auto bits = aes_ref::mix_columns_bit_matrix();
    ace::IntMatrix m(64, 32);  // rows: 32 data inputs, then 32 complement inputs
    for (int o = 0; o < 32; ++o) {
        for (int i = 0; i < 32; ++i) m.at(i, o) = bits[static_cast<std::size_t>(o)][static_cast<std::size_t>(i)];
    }
    constexpr long kOpsPerProgramming = 1024;
    ace::Ace ace(1, noise, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    const auto adc = ace::AdcModel::sar();
    MixParasiticStats st;
    for (long op = 0; op < column_ops; ++op) {
        if (op % kOpsPerProgramming == 0) ace.program(0, m, SlicePlan(1, 1), remap);
        const auto column = static_cast<std::uint32_t>(rng());
        const int p = static_cast<int>(rng() % 8);
        std::uint64_t mask = 0;
        for (int r = 0; r < 4; ++r) {
            const bool bit = (column >> (8 * r + p)) & 1u;
            if (bit) {
                mask |= std::uint64_t{1} << (8 * r + p);
            } else if (remap == ace::Remap::Symmetric) {
                mask |= std::uint64_t{1} << (32 + 8 * r + p);
            }
        }
        CostReport cost;
        const auto& arr = ace.array(0);
        auto codes = ace::digitize(ace.apply(0, mask).sums, adc, 32, arr.full_scale(), cost);
        if (remap == ace::Remap::Symmetric) codes = ace::compensate(codes, 4);
        long wrong = 0;
        for (int o = 0; o < 32; ++o) {
            std::int64_t want = 0;
            for (int i = 0; i < 32; ++i) want += static_cast<std::int64_t>((mask >> i) & 1u) * m.at(i, o);
            wrong += codes[static_cast<std::size_t>(o)] != want;
        }
        ++st.column_ops;
        st.erroneous_ops += wrong > 0;
        st.bitline_errors += wrong;
    }
    return st;
}

}  // namespace darth::apps
