#pragma once

#include <span>
#include <vector>

#include "darth/apps/aes_reference.hpp"
#include "darth/runtime.hpp"

namespace darth::apps {

enum class MixMode {
    Analog,      // bit matrix on the ACE, parity landed in the DCE
    Digital,     // the same integer matrix-vector product in the DCE, then parity
    DigitalXor,  // hand-folded GF(2) product: AND masks and XOR parity folds
};

/// Chip-side AES-128 state. Each lane is one reserved HCT that holds up to 16
/// blocks: block k, state row r lives in element 4k + r of a 32-bit register
/// with s[r][0] in the top byte.
struct AesContext {
    runtime::Chip* chip = nullptr;
    Key key{};
    RoundKeys round_keys{};
    std::vector<int> lanes;          // HCT ids
    ace::IntMatrix mix_matrix;       // 32 outputs x 64 rows (data rows, then complement rows)
    ace::AdcModel mix_adc;           // 2-bit truncated conversions
    MixMode mix = MixMode::Analog;
    CostReport setup;

    static constexpr int kBlocksPerLane = 16;
    static constexpr int kStatePipe = 0;
    static constexpr int kSboxPipe = 1;
};

/// Cycles spent in each step, summed over lanes and rounds.
struct AesKernelCycles {
    Cycle sub_bytes = 0;
    Cycle shift_rows = 0;
    Cycle mix_columns = 0;
    Cycle add_round_key = 0;
};

struct AesResult {
    std::vector<Block> ciphertext;
    CostReport cost;
    AesKernelCycles kernels;
};

struct AesOptions {
    int lanes = 1;
    int adc_truncate_bits = 2;  // 0 = full-resolution conversions
    MixMode mix = MixMode::Analog;
};

/// The converter model used for MixColumns: `truncate_bits` of resolution
/// with early termination after 2^truncate_bits ramp steps (0 = chip ADC).
ace::AdcModel aes_mix_adc(const runtime::ChipConfig& chip, int truncate_bits);

/// Reserves the lanes, loads the S-box into a spare pipeline, programs the
/// MixColumns bit matrix (SYMMETRIC) and expands the key host-side.
AesContext aes_init_arrays(runtime::Chip& chip, const Key& key, AesOptions options = {});

AesResult aes_encrypt(AesContext& ctx, std::span<const Block> plaintext);
/// Per-block keys; the round keys are staged element-wise.
AesResult aes_encrypt(AesContext& ctx, std::span<const Block> plaintext, std::span<const Key> keys);

/// Only the MixColumns step, on the chip. Used to check the analog mapping.
AesResult aes_mix_columns(AesContext& ctx, std::span<const Block> state);

struct MixParasiticStats {
    long column_ops = 0;      // one (column, bit plane) crossbar apply
    long erroneous_ops = 0;   // ops with at least one wrong output code
    long bitline_errors = 0;  // wrong codes, after compensation where it applies
};

/// Drives random state columns through the MixColumns bit matrix on one
/// crossbar. RAW stores 0/1 and drives only the data rows whose bit is set;
/// SYMMETRIC stores b - 1/2, drives a data or complement row per bit and
/// compensates. Codes are full resolution and compared with the exact count.
MixParasiticStats aes_mix_parasitic_study(ace::Remap remap, long column_ops, const ace::NoiseConfig& noise,
                                          std::uint64_t seed);

}  // namespace darth::apps
