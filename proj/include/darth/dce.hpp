#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "darth/core.hpp"
#include "darth/cost.hpp"

namespace darth::dce {

// Column map of every digital array: user registers, macro scratch, constants.
inline constexpr int kUserRegisters = 55;
inline constexpr int kScratch0 = 55;  // T0..T4 = 55..59
inline constexpr int kCarryColumn = 60;
inline constexpr int kNotColumn = 61;
inline constexpr int kOnesColumn = 62;
inline constexpr int kZeroColumn = 63;

enum class Direction { Forward, Reversed };
enum class LogicFamily { Oscar, Ideal };

enum class MicroopKind { Nor, CopyRow, WriteRow, ReadRow, ShiftStep, Nop, Gate };

std::string_view microop_name(MicroopKind k);

/// One hardware step in one array. NOR applies to every row selected by
/// `row_mask` in parallel. When `dst_array` differs from `array` the result is
/// written into the adjacent array (carry hand-off and shift steps).
struct NorMicroop {
    MicroopKind kind = MicroopKind::Nor;
    int array = 0;
    int dst_array = 0;
    int src1 = 0;
    int src2 = 0;
    int dst = 0;
    std::uint64_t row_mask = ~std::uint64_t{0};
    std::uint8_t truth = 0;  // Gate only: bit (2*a + b) is the output for inputs a, b
};

enum class MacroKind { Not, And, Or, Xor, Add, Sub, Shl, Shr, Copy, CmpGe, Mux };

std::string_view macro_name(MacroKind k);

/// Microop counts per bit for each macro. Defaults are the canonical minimal
/// NOR networks (or single-gate networks for the ideal family).
struct MacroCosts {
    int not_ = 1, and_ = 3, or_ = 2, xor_ = 5, add = 9, sub = 10, copy = 2, mux = 7;

    static MacroCosts for_family(LogicFamily f);
    [[nodiscard]] int per_bit(MacroKind k) const;
};

struct DceParams {
    int pipelines = 64;
    int depth = 64;
    int rows = 64;
    LogicFamily family = LogicFamily::Oscar;
    int latency_multiplier = 1;  // cycles per microop
    int max_active_pipelines = 0;  // 0 = unlimited
    Cycle element_load_cycles_per_element = 3;
};

struct MacroArgs {
    MacroKind kind = MacroKind::Add;
    int dst = 0;
    int a = 0;
    int b = 0;
    int c = 0;       // Mux: (dst = mask ? b : c), mask in `a`
    int width = 64;  // arrays in use
    int shift = 0;   // Shl/Shr amount
    bool arithmetic = false;  // Shr: sign fill
};

class ThermalGovernor;

/// One bit-pipelined digital pipeline: `depth` arrays of rows x 64 columns.
/// Element e of register r, bit b lives at (array b, row e, column r).
class DigitalPipeline {
public:
    DigitalPipeline(int id, const DceParams& params, const MacroCosts& costs, ThermalGovernor* governor);

    [[nodiscard]] int id() const { return id_; }
    [[nodiscard]] int depth() const { return depth_; }
    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] Direction direction() const { return direction_; }
    [[nodiscard]] const MacroCosts& costs() const { return costs_; }
    [[nodiscard]] LogicFamily family() const { return family_; }

    // Raw state access (no cost; used by tests and the transfer network model).
    [[nodiscard]] std::uint64_t column(int array, int col) const { return cells_[idx(array, col)]; }
    void set_column(int array, int col, std::uint64_t rows_bits) { cells_[idx(array, col)] = rows_bits; }
    [[nodiscard]] std::vector<std::int64_t> peek(int reg, int width, bool is_signed = true) const;
    [[nodiscard]] std::int64_t peek_element(int reg, int row, int width, bool is_signed = true) const;

    // Reservation (see hct arbiter). While reserved, only MVM writes pass.
    void set_reserved(bool r) { reserved_ = r; }
    [[nodiscard]] bool reserved() const { return reserved_; }
    void set_mvm_writer(bool active) { mvm_writer_ = active; }
    [[nodiscard]] bool mvm_writer() const { return mvm_writer_; }

    /// Executes one microop at the earliest cycle >= not_before.
    CostReport exec_nor(const NorMicroop& op, Cycle not_before = 0);

    /// Runs a macro over `args.width` arrays. Reverses the pipeline first when
    /// the macro needs the other flow direction.
    CostReport run_macro(const MacroArgs& args, Cycle not_before = 0);

    /// Drains in-flight work, then toggles the flow direction.
    CostReport reverse(Cycle not_before = 0);

    /// Row-wise writes/reads: one element per cycle across `width` arrays.
    CostReport write_rows(int reg, std::span<const std::int64_t> values, int width, Cycle not_before = 0);
    CostReport read_rows(int reg, int width, std::vector<std::int64_t>& out, bool is_signed, Cycle not_before = 0);
    /// Bit-plane (transposed) writes/reads: every array moves its column in one cycle.
    /// Writes touch planes [first_plane, width) only.
    CostReport write_planes(int reg, std::span<const std::int64_t> values, int width, Cycle not_before = 0,
                            int first_plane = 0);
    CostReport read_planes(int reg, int width, std::vector<std::int64_t>& out, bool is_signed, Cycle not_before = 0);

    /// Gather: dst[e] = source[address(e)], where the address is `addr_bits`
    /// bits of element e of `addr_reg` starting at bit `addr_shift`. The source
    /// address space is `source_base_reg * rows + address`. The loaded value is
    /// written into bits [dst_shift, dst_shift + value_bits) of dst.
    struct ElementLoad {
        int dst = 0;
        int addr_reg = 0;
        int addr_shift = 0;
        int addr_bits = 8;
        int source_base_reg = 0;
        int value_bits = 8;
        int dst_shift = 0;
        std::uint64_t row_mask = ~std::uint64_t{0};
    };
    CostReport element_load(const ElementLoad& load, const DigitalPipeline& source, Cycle not_before = 0);

    /// Scatter: target[address(e)] = bits [src_shift, src_shift + value_bits)
    /// of element e of `src`, for every element selected by row_mask.
    struct ElementStore {
        int src = 0;
        int addr_reg = 0;
        int addr_shift = 0;
        int addr_bits = 8;
        int target_base_reg = 0;
        int value_bits = 8;
        int src_shift = 0;
        std::uint64_t row_mask = ~std::uint64_t{0};
    };
    CostReport element_store(const ElementStore& store, DigitalPipeline& target, Cycle not_before = 0);

    /// Earliest cycle at which every array is idle.
    [[nodiscard]] Cycle drained_at() const;
    /// Completion time of the newest write to `reg`.
    [[nodiscard]] Cycle register_ready(int reg, int width) const;

    void set_trace(std::ostream* trace) { trace_ = trace; }

    /// The microop stream of one bit position of a bitwise/arithmetic macro
    /// (not Shl/Shr/CmpGe). Exposed for NOR-completeness checks.
    [[nodiscard]] std::vector<NorMicroop> bit_program(const MacroArgs& args, int bit) const;

private:
    [[nodiscard]] std::size_t idx(int array, int col) const {
        return static_cast<std::size_t>(array) * 64 + static_cast<std::size_t>(col);
    }
    void check_write(int reg) const;
    void check_args(const MacroArgs& args) const;
    void apply(const NorMicroop& op);
    void trace_op(Cycle cycle, const NorMicroop& op);
    void account_busy(Cycle start, Cycle end, CostReport& report);
    CostReport run_bitwise(const MacroArgs& args, Cycle not_before, bool carry_chain);
    CostReport run_shift(const MacroArgs& args, Cycle not_before);
    CostReport run_cmp_ge(const MacroArgs& args, Cycle not_before);
    CostReport occupy_all(Cycle not_before, Cycle duration, std::initializer_list<int> reads, int write_reg,
                          int width);
    [[nodiscard]] Cycle& ready(int reg, int bit) { return reg_ready_[static_cast<std::size_t>(reg) * 64 + bit]; }
    [[nodiscard]] Cycle ready(int reg, int bit) const { return reg_ready_[static_cast<std::size_t>(reg) * 64 + bit]; }

    int id_;
    int depth_;
    int rows_;
    std::uint64_t row_bits_;
    int latency_multiplier_;
    Cycle element_load_cycles_;
    LogicFamily family_;
    MacroCosts costs_;
    ThermalGovernor* governor_;
    Direction direction_ = Direction::Forward;
    bool reserved_ = false;
    bool mvm_writer_ = false;
    std::vector<std::uint64_t> cells_;
    std::vector<Cycle> array_free_;
    std::vector<Cycle> reg_ready_;
    Cycle last_busy_end_ = 0;
    std::ostream* trace_ = nullptr;
};

/// Limits how many pipelines of one DCE may be active at the same time.
class ThermalGovernor {
public:
    explicit ThermalGovernor(int max_active) : slots_(static_cast<std::size_t>(max_active > 0 ? max_active : 0), 0) {}

    [[nodiscard]] bool enabled() const { return !slots_.empty(); }
    /// Earliest start for an operation requested at `at`.
    [[nodiscard]] Cycle earliest(Cycle at) const;
    void commit(Cycle start, Cycle end);

private:
    std::vector<Cycle> slots_;
};

/// One digital compute element: a set of lazily materialized pipelines.
class Dce {
public:
    explicit Dce(DceParams params = {});

    [[nodiscard]] const DceParams& params() const { return params_; }
    [[nodiscard]] int pipeline_count() const { return params_.pipelines; }
    DigitalPipeline& pipeline(int id);
    [[nodiscard]] bool materialized(int id) const;

    /// Copies a register between two pipelines of this DCE, one bit plane per
    /// array in parallel (read cycle + write cycle).
    CostReport copy_register(int src_pipe, int src_reg, int dst_pipe, int dst_reg, int width, Cycle not_before = 0);

    void set_trace(std::ostream* trace);

private:
    DceParams params_;
    MacroCosts costs_;
    ThermalGovernor governor_;
    std::vector<std::unique_ptr<DigitalPipeline>> pipes_;
    std::ostream* trace_ = nullptr;
};

}  // namespace darth::dce
