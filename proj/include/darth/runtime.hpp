#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "darth/ace.hpp"
#include "darth/core.hpp"
#include "darth/cost.hpp"
#include "darth/dce.hpp"
#include "darth/hct.hpp"

namespace darth::runtime {

enum class Precision { Low = 0, Med = 1, High = 2 };

/// Bits per cell for a precision level on devices holding `device_bits`:
/// 1, device_bits / 2, device_bits (1/4/8 on 8-bit devices).
int bits_per_cell(Precision p, int device_bits = 8);

struct ChipConfig {
    int hct_count = 1860;
    ace::AdcKind adc = ace::AdcKind::Sar;
    int frontend_fanout = 8;
    int ace_arrays = 64;
    int dce_pipelines = 64;
    int dce_depth = 64;
    int dce_rows = 64;
    int device_bits = 8;
    dce::LogicFamily family = dce::LogicFamily::Oscar;
    int latency_multiplier = 1;
    int max_active_pipelines = 0;
    bool analog_enabled = true;
    bool digital_enabled = true;
    bool iiu_enabled = true;
    bool optimized_mvm = true;
    bool record_events = false;
    CostTable costs;
    ace::NoiseConfig noise;
    std::uint64_t seed = 1;

    /// Iso-area chip: 1860 HCTs with SAR ADCs, 1660 with ramp ADCs.
    static ChipConfig defaults(ace::AdcKind adc = ace::AdcKind::Sar);
    /// Applies `chip.*`, `dce.*`, `cost.*` and `noise.*` keys on top of the defaults.
    static ChipConfig from_config(const Config& config);

    [[nodiscard]] int frontend_count() const { return (hct_count + frontend_fanout - 1) / frontend_fanout; }
    [[nodiscard]] ace::AdcModel adc_model() const;
    [[nodiscard]] hct::HctParams hct_params() const;
    void validate() const;
};

/// HCT pipeline conventions used by the runtime.
inline constexpr int kInputPipeline = 62;
inline constexpr int kResultPipeline = 63;
inline constexpr int kGatherPipeline = 61;
inline constexpr int kDigitalMatrixPipelines = 56;  // A->D copies pack into pipelines 0..55

struct Tile {
    int hct = 0;
    int vacore = 0;
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;
};

struct MatrixHandle {
    int id = 0;
    int rows = 0;
    int cols = 0;
    int element_bits = 8;
    Precision precision = Precision::High;
    int bits_per_cell = 8;
    std::vector<Tile> tiles;
    ace::IntMatrix matrix;  // host copy, kept in sync with updates

    [[nodiscard]] int row_tiles() const { return (rows + 63) / 64; }
    [[nodiscard]] int col_tiles() const { return (cols + 63) / 64; }
};

struct MvmInput {
    int bits = 8;
    bool is_signed = false;
    std::optional<Cycle> start;  // defaults to the chip clock; set to overlap independent MVMs
};

struct RawPartial {
    int tile = 0;
    int input_bit = 0;
    int slice = 0;
    int shift = 0;
    bool negative = false;
    std::vector<std::int64_t> codes;
};

struct MvmResult {
    std::vector<std::int64_t> values;
    std::vector<RawPartial> partials;  // filled instead of values when digital post-processing is off
    CostReport cost;
};

enum class Opcode {
    Add, Sub, Xor, And, Or, Not, Copy, Shl, Shr, Cmp, Mux,
    ElemLoad, ElemStore, Reverse,
    Mvm, Program, VacoreAlloc,
    PipelineReserve, PipelineRelease, Barrier,
};

std::string_view opcode_name(Opcode op);
std::optional<Opcode> parse_opcode(std::string_view text);

/// One ISA instruction. Unused operands stay at their defaults.
struct Instruction {
    Opcode op = Opcode::Add;
    int hct = 0;
    int pipe = 0;
    int dst = 0;
    int a = 0;
    int b = 0;
    int c = 0;
    int width = 64;
    int shift = 0;
    bool arithmetic = false;
    int src_pipe = 0;  // ELEM_LOAD source / ELEM_STORE target / MVM input pipeline
    int base = 0;      // ELEM_* base register, MVM input register
    int addr_shift = 0;
    int addr_bits = 8;
    int value_bits = 8;
    int value_shift = 0;
    int vacore = 0;
    int bits = 8;        // MVM input bits / VACORE_ALLOC element bits
    int cell_bits = 1;   // VACORE_ALLOC
    bool is_signed = false;
    int matrix = 0;      // PROGRAM: registered matrix id

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// Text form: `OPCODE key=value ...`, one instruction per line, `#` comments.
std::string format_instruction(const Instruction& ins);
Instruction parse_instruction(const std::string& line);
std::vector<Instruction> assemble(const std::string& text);
std::string disassemble(std::span<const Instruction> program);

struct StepResult {
    int issued = 0;
    int stalls = 0;
};

struct FrontendStats {
    std::uint64_t cycles = 0;
    std::uint64_t issued = 0;
    std::uint64_t stalls = 0;
};

class Chip {
public:
    explicit Chip(ChipConfig config = ChipConfig::defaults());

    [[nodiscard]] const ChipConfig& config() const { return config_; }
    hct::Hct& hct(int i);
    [[nodiscard]] bool materialized(int i) const;
    [[nodiscard]] int materialized_hcts() const;
    hct::Frontend& frontend_for(int hct);

    /// Current chip time: every issued operation has completed by this cycle.
    [[nodiscard]] Cycle now() const { return now_; }
    void advance_to(Cycle t) { now_ = std::max(now_, t); }
    /// Costs of everything run through this chip so far.
    [[nodiscard]] const CostReport& total_cost() const { return total_; }
    void account(const CostReport& r);

    // Table 1 application-agnostic API.
    /// `fresh_hct` starts the placement on an unused HCT (replicas that must run in parallel).
    int set_matrix(const ace::IntMatrix& m, int element_bits, Precision precision, bool fresh_hct = false);
    MatrixHandle& handle(int id);
    MvmResult exec_mvm(int handle_id, std::span<const std::int64_t> x, MvmInput input = {});
    CostReport update_row(int handle_id, int row, std::span<const std::int64_t> values);
    CostReport update_col(int handle_id, int col, std::span<const std::int64_t> values);
    CostReport disable_analog_mode();
    CostReport disable_digital_mode();
    CostReport enable_analog_mode();
    void enable_digital_mode();
    [[nodiscard]] bool analog_enabled() const { return config_.analog_enabled; }
    [[nodiscard]] bool digital_enabled() const { return config_.digital_enabled; }

    /// Reserves `count` HCTs that no matrix uses (for application data).
    std::vector<int> reserve_hcts(int count);

    // ISA path.
    int register_matrix(const ace::IntMatrix& m);
    void load_program(std::vector<Instruction> program);
    StepResult frontend_step();
    FrontendStats run_program();
    CostReport execute(const Instruction& ins, Cycle at);

    void set_trace(std::ostream* trace);

private:
    int claim_hct_for(int element_bits, int slices);
    MvmResult mvm_digital_only(MatrixHandle& h, std::span<const std::int64_t> x, MvmInput input);
    CostReport refresh_tile(MatrixHandle& h, const Tile& t);
    void check_modes() const;

    ChipConfig config_;
    std::vector<std::unique_ptr<hct::Hct>> hcts_;
    std::vector<hct::Frontend> frontends_;
    std::vector<MatrixHandle> handles_;
    std::vector<ace::IntMatrix> registered_;
    int next_hct_ = 0;
    std::vector<std::deque<Instruction>> queues_;
    FrontendStats stats_;
    Cycle now_ = 0;
    CostReport total_;
    std::ostream* trace_ = nullptr;
};

}  // namespace darth::runtime
