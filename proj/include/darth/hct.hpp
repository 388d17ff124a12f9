#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "darth/ace.hpp"
#include "darth/core.hpp"
#include "darth/cost.hpp"
#include "darth/dce.hpp"

namespace darth::hct {

/// Instruction issue port shared by a group of HCTs: one instruction per cycle.
class Frontend {
public:
    /// Returns the cycle the instruction issues (>= at).
    Cycle issue(Cycle at, CostReport& cost);
    [[nodiscard]] std::uint64_t issued() const { return issued_; }
    [[nodiscard]] Cycle next_free() const { return next_free_; }

private:
    Cycle next_free_ = 0;
    std::uint64_t issued_ = 0;
};

struct HctParams {
    int ace_arrays = 64;
    dce::DceParams dce;
    ace::AdcModel adc = ace::AdcModel::sar();
    ace::NoiseConfig noise;
    CostTable costs;
    bool iiu_enabled = true;
    bool record_events = false;
    std::uint64_t seed = 1;
};

/// The reduction the instruction injector replays: one ADD per partial, the
/// partial register advancing by `stride` each repetition.
struct IiuProgram {
    dce::MacroKind op = dce::MacroKind::Add;
    int stride = 1;
    int repetitions = 0;
};

struct VACore {
    int id = 0;
    int first_array = 0;
    int slices = 0;
    int element_bits = 8;
    int bits_per_cell = 1;
    ace::Remap remap = ace::Remap::Raw;
    bool programmed = false;
    int inputs = 0;   // crossbar rows in use
    int outputs = 0;  // bitlines in use
    std::vector<std::vector<int>> shift_schedule;  // [slice][input bit] -> shift
    IiuProgram iiu;

    [[nodiscard]] int shift(int input_bit, int slice) const { return input_bit + bits_per_cell * slice; }
    [[nodiscard]] SlicePlan plan() const { return SlicePlan(element_bits, bits_per_cell); }
};

enum class ArrayMode { Idle, Analog, Digital };
enum class Domain { AnalogToDigital, DigitalToAnalog };

struct TransferEvent {
    std::uint64_t bytes = 0;
    int source = 0;  // ACE array or DCE pipeline index
    int dest = 0;
    int shift = 0;
    bool transpose = false;
};

/// One cycle-stamped trace record: `cycle,hct,kind,a,b,c`.
struct Event {
    Cycle cycle = 0;
    std::string kind;
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
};

struct RegRef {
    int pipeline = 0;
    int reg = 0;
};

struct MvmOptions {
    bool optimized = true;
    int input_bits = 8;
    bool input_signed = false;
    int acc_width = 0;  // 0 = derived from the operand widths
};

/// Register width that holds any MVM result of `inputs` rows.
int mvm_acc_width(int element_bits, int input_bits, int inputs = 64);

/// Bytes moved per output for one digitized partial product.
int partial_bytes(const VACore& vc);

class Hct {
public:
    Hct(int id, const HctParams& params, Frontend* frontend);

    [[nodiscard]] int id() const { return id_; }
    [[nodiscard]] const HctParams& params() const { return params_; }
    ace::Ace& ace() { return ace_; }
    dce::Dce& dce() { return dce_; }
    dce::DigitalPipeline& pipeline(int p) { return dce_.pipeline(p); }

    VACore& alloc_vacore(int element_bits, int bits_per_cell);
    VACore& vacore(int id);
    [[nodiscard]] int vacore_count() const { return static_cast<int>(vacores_.size()); }
    [[nodiscard]] int free_arrays() const { return params_.ace_arrays - next_array_; }
    /// Drops every vACore so the arrays can be reallocated.
    void clear_vacores();

    /// Programs the logical matrix `a` (outputs x inputs) into the vACore.
    CostReport program_vacore(int vc, const ace::IntMatrix& a, ace::Remap remap, Cycle not_before = 0);

    CostReport reserve_pipeline(int p, Cycle not_before = 0);
    CostReport release_pipeline(int p, Cycle not_before = 0);

    /// dest[r] = sum_c A[r][c] * input[c], bit-striped at width options.acc_width.
    CostReport exec_mvm(int vc, RegRef input, RegRef dest, const MvmOptions& options, Cycle not_before = 0);

    /// One analog step: drive `input_mask` on an array, digitize `active` bitlines.
    struct AnalogResult {
        std::vector<std::int64_t> codes;
        CostReport cost;
    };
    AnalogResult analog_apply(int array, std::uint64_t input_mask, int active, const ace::AdcModel& adc, Cycle not_before);

    CostReport transfer(const TransferEvent& event, Cycle not_before = 0);

    /// Moves digitized values into a DCE register. Transposed moves write one
    /// bit plane per array (shift applied by the shift units); row moves write
    /// one element per cycle. With keep_low, a transposed move leaves the
    /// planes below `shift` untouched.
    CostReport land(std::span<const std::int64_t> codes, RegRef dest, int width, int shift, bool transposed,
                    Cycle not_before, bool keep_low = false);

    /// A digital macro issued through the front end.
    CostReport digital(int p, const dce::MacroArgs& args, Cycle not_before = 0);

    /// A->D: the matrix lands in DCE registers, one register per matrix column
    /// (element r = A[r][c]). Column c uses global register index base.reg + c,
    /// packed 48 per pipeline from base.pipeline.
    /// D->A: reprograms the vACore from those registers.
    CostReport move_matrix_between_domains(int vc, Domain direction, RegRef base, Cycle not_before = 0);

    [[nodiscard]] ArrayMode array_mode(int array) const { return modes_[static_cast<std::size_t>(array)]; }
    [[nodiscard]] const std::vector<Event>& events() const { return events_; }
    void clear_events() { events_.clear(); }
    void set_trace(std::ostream* trace);

    /// Current HCT-local horizon: every resource idle after this cycle.
    [[nodiscard]] Cycle horizon() const { return horizon_; }

    static constexpr int kMatrixRegsPerPipeline = 48;

private:
    void record(Cycle cycle, const char* kind, std::int64_t a = 0, std::int64_t b = 0, std::int64_t c = 0);
    void touch(const CostReport& r) { horizon_ = std::max(horizon_, r.end); }
    Cycle issue(Cycle at, CostReport& cost);

    int id_;
    HctParams params_;
    Frontend* frontend_;
    ace::Ace ace_;
    dce::Dce dce_;
    std::vector<VACore> vacores_;
    std::vector<ace::IntMatrix> stored_;  // logical matrix per vACore (outputs x inputs)
    std::vector<ArrayMode> modes_;
    std::vector<Cycle> array_ready_;
    int next_array_ = 0;
    std::vector<Cycle> adc_free_;
    Cycle net_free_ = 0;
    Cycle iiu_free_ = 0;
    Cycle horizon_ = 0;
    std::vector<Event> events_;
    std::ostream* trace_ = nullptr;
};

}  // namespace darth::hct
