#include <random>

#include "darth/errors.hpp"
#include "darth/runtime.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::runtime;

namespace {

ace::IntMatrix random_matrix(int rows, int cols, int bits, std::mt19937_64& rng) {
    const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
    std::uniform_int_distribution<std::int64_t> d(-hi - 1, hi);
    ace::IntMatrix m(rows, cols);
    for (auto& v : m.data) v = d(rng);
    return m;
}

std::vector<std::int64_t> random_vector(int n, int bits, bool is_signed, std::mt19937_64& rng) {
    const std::int64_t lo = is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
    const std::int64_t hi = is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    std::vector<std::int64_t> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = d(rng);
    return x;
}

// Host oracle, written independently of the simulator.
std::vector<std::int64_t> oracle_mvm(const ace::IntMatrix& m, const std::vector<std::int64_t>& x) {
    std::vector<std::int64_t> y(static_cast<std::size_t>(m.rows), 0);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) y[r] += m.data[static_cast<std::size_t>(r) * m.cols + c] * x[c];
    }
    return y;
}

ChipConfig small_chip() {
    ChipConfig c = ChipConfig::defaults();
    c.hct_count = 16;
    return c;
}

}  // namespace

TEST_CASE("chip defaults") {
    CHECK(ChipConfig::defaults(ace::AdcKind::Sar).hct_count == 1860);
    CHECK(ChipConfig::defaults(ace::AdcKind::Ramp).hct_count == 1660);
    CHECK(ChipConfig::defaults().frontend_count() == 233);
    CHECK(bits_per_cell(Precision::Low) == 1);
    CHECK(bits_per_cell(Precision::Med) == 4);
    CHECK(bits_per_cell(Precision::High) == 8);
    auto bad = ChipConfig::defaults();
    bad.analog_enabled = bad.digital_enabled = false;
    CHECK_THROWS_AS(bad.validate(), ModeError);
    CHECK_THROWS_AS(ChipConfig::from_config(Config::parse("chip.adc = flash\n")), ConfigError);
    CHECK(ChipConfig::from_config(Config::parse("chip.adc = ramp\n")).hct_count == 1660);
}

TEST_CASE("set_matrix placement") {
    std::mt19937_64 rng(3);
    Chip chip(small_chip());
    const auto m64 = random_matrix(64, 64, 8, rng);

    const MatrixHandle& high = chip.handle(chip.set_matrix(m64, 8, Precision::High));
    REQUIRE(high.tiles.size() == 1);
    CHECK(chip.hct(high.tiles[0].hct).vacore(high.tiles[0].vacore).slices == 1);

    const MatrixHandle& low = chip.handle(chip.set_matrix(m64, 8, Precision::Low));
    REQUIRE(low.tiles.size() == 1);
    CHECK(chip.hct(low.tiles[0].hct).vacore(low.tiles[0].vacore).slices == 8);

    const auto m128 = random_matrix(128, 128, 8, rng);
    const MatrixHandle med = chip.handle(chip.set_matrix(m128, 8, Precision::Med));
    // Placement oracle: every element covered exactly once by a 64x64 tile of 2 slices.
    REQUIRE(med.tiles.size() == 4);
    std::vector<int> cover(128 * 128, 0);
    for (const auto& t : med.tiles) {
        CHECK(chip.hct(t.hct).vacore(t.vacore).slices == 2);
        CHECK(t.rows == 64);
        CHECK(t.cols == 64);
        for (int r = 0; r < t.rows; ++r) {
            for (int c = 0; c < t.cols; ++c) ++cover[(t.row0 + r) * 128 + t.col0 + c];
        }
    }
    CHECK(std::all_of(cover.begin(), cover.end(), [](int v) { return v == 1; }));
}

TEST_CASE("set_matrix runs out of capacity") {
    ChipConfig cfg = small_chip();
    cfg.hct_count = 1;
    Chip chip(cfg);
    ace::IntMatrix big(64 * 9, 64);
    CHECK_THROWS_AS(chip.set_matrix(big, 8, Precision::Low), CapacityError);
}

TEST_CASE("identity handle returns the input") {
    Chip chip(small_chip());
    ace::IntMatrix eye(64, 64);
    for (int i = 0; i < 64; ++i) eye.at(i, i) = 1;
    const int h = chip.set_matrix(eye, 8, Precision::High);
    std::mt19937_64 rng(5);
    const auto x = random_vector(64, 8, false, rng);
    const auto res = chip.exec_mvm(h, x);
    CHECK(res.values == x);
    CHECK(res.cost.end > res.cost.start);
}

TEST_CASE("random 128x128 MVM matches the integer oracle") {
    std::mt19937_64 rng(11);
    for (Precision p : {Precision::Low, Precision::Med, Precision::High}) {
        Chip chip(small_chip());
        const auto m = random_matrix(128, 128, 8, rng);
        const int h = chip.set_matrix(m, 8, p);
        for (bool is_signed : {false, true}) {
            const auto x = random_vector(128, 8, is_signed, rng);
            CHECK(chip.exec_mvm(h, x, {8, is_signed}).values == oracle_mvm(m, x));
        }
    }
}

TEST_CASE("ragged shapes tile and recombine") {
    std::mt19937_64 rng(13);
    Chip chip(small_chip());
    const auto m = random_matrix(70, 150, 6, rng);
    const int h = chip.set_matrix(m, 6, Precision::Med);
    CHECK(chip.handle(h).tiles.size() == 6);
    const auto x = random_vector(150, 4, true, rng);
    CHECK(chip.exec_mvm(h, x, {4, true}).values == oracle_mvm(m, x));
}

TEST_CASE("tiled result equals the single-tile run of the same math") {
    std::mt19937_64 rng(17);
    const auto m = random_matrix(64, 128, 8, rng);
    const auto x = random_vector(128, 8, false, rng);
    Chip chip(small_chip());
    const auto whole = chip.exec_mvm(chip.set_matrix(m, 8, Precision::High), x).values;

    ace::IntMatrix left(64, 64), right(64, 64);
    for (int r = 0; r < 64; ++r) {
        for (int c = 0; c < 64; ++c) {
            left.at(r, c) = m.at(r, c);
            right.at(r, c) = m.at(r, c + 64);
        }
    }
    const std::vector<std::int64_t> xl(x.begin(), x.begin() + 64), xr(x.begin() + 64, x.end());
    const auto a = chip.exec_mvm(chip.set_matrix(left, 8, Precision::High), xl).values;
    const auto b = chip.exec_mvm(chip.set_matrix(right, 8, Precision::High), xr).values;
    for (int r = 0; r < 64; ++r) CHECK(whole[r] == a[r] + b[r]);
}

TEST_CASE("exec_mvm rejects bad inputs") {
    Chip chip(small_chip());
    const int h = chip.set_matrix(ace::IntMatrix(64, 64), 8, Precision::High);
    std::vector<std::int64_t> shorter(63, 0);
    CHECK_THROWS_AS(chip.exec_mvm(h, shorter), ShapeError);
    std::vector<std::int64_t> wide(64, 300);
    CHECK_THROWS_AS(chip.exec_mvm(h, wide), OverflowError);
    CHECK_THROWS_AS(chip.handle(7), IndexError);
}

TEST_CASE("row and column updates") {
    std::mt19937_64 rng(19);
    Chip chip(small_chip());
    auto m = random_matrix(128, 96, 8, rng);
    const int h = chip.set_matrix(m, 8, Precision::Med);

    std::vector<std::int64_t> row(96);
    for (int c = 0; c < 96; ++c) row[c] = (c * 7) % 100 - 50;
    const auto ru = chip.update_row(h, 100, row);
    CHECK(ru.reprogrammed_arrays == 4);  // two column tiles x two slices
    for (int c = 0; c < 96; ++c) m.at(100, c) = row[c];

    std::vector<std::int64_t> col(128);
    for (int r = 0; r < 128; ++r) col[r] = 60 - r % 120;
    chip.update_col(h, 5, col);
    for (int r = 0; r < 128; ++r) m.at(r, 5) = col[r];

    // One-hot on column 5 selects the new column.
    std::vector<std::int64_t> onehot(96, 0);
    onehot[5] = 1;
    CHECK(chip.exec_mvm(h, onehot).values == col);

    const auto x = random_vector(96, 8, true, rng);
    CHECK(chip.exec_mvm(h, x, {8, true}).values == oracle_mvm(m, x));

    const auto empty = chip.update_row(h, 0, {});
    CHECK(empty.energy(chip.config().costs).total() == 0.0);
    CHECK(empty.reprogrammed_arrays == 0);
    CHECK_THROWS_AS(chip.update_row(h, 128, row), IndexError);
    CHECK_THROWS_AS(chip.update_col(h, -1, col), IndexError);
}

TEST_CASE("disable_analog keeps the numbers and costs more cycles") {
    std::mt19937_64 rng(23);
    Chip chip(small_chip());
    const auto m = random_matrix(64, 128, 8, rng);
    const int h = chip.set_matrix(m, 8, Precision::High);
    const auto x = random_vector(128, 8, true, rng);
    const auto analog = chip.exec_mvm(h, x, {8, true});

    const auto move = chip.disable_analog_mode();
    CHECK(move.array_ops > 0);
    CHECK_FALSE(chip.analog_enabled());
    const auto digital = chip.exec_mvm(h, x, {8, true});
    CHECK(digital.values == analog.values);
    CHECK(digital.values == oracle_mvm(m, x));
    CHECK(digital.cost.end - digital.cost.start > analog.cost.end - analog.cost.start);
    CHECK(digital.cost.conversions == 0);

    CHECK_THROWS_AS(chip.disable_digital_mode(), ModeError);
    chip.enable_analog_mode();
    CHECK(chip.exec_mvm(h, x, {8, true}).values == analog.values);
}

TEST_CASE("disable_digital returns raw slice partials") {
    std::mt19937_64 rng(29);
    Chip chip(small_chip());
    const auto m = random_matrix(64, 64, 8, rng);
    const int h = chip.set_matrix(m, 8, Precision::Med);
    chip.disable_digital_mode();
    const auto x = random_vector(64, 4, false, rng);
    const auto res = chip.exec_mvm(h, x, {4, false});
    CHECK(res.values.empty());
    CHECK(res.partials.size() == 4 * 2);
    // The partials are not recombined, but recombining them by hand gives the oracle.
    std::vector<std::int64_t> y(64, 0);
    for (const auto& p : res.partials) {
        REQUIRE(p.codes.size() == 64);
        for (int r = 0; r < 64; ++r) y[r] += (p.negative ? -1 : 1) * (p.codes[r] << p.shift);
    }
    CHECK(y == oracle_mvm(m, x));
    CHECK_THROWS_AS(chip.disable_analog_mode(), ModeError);
    CHECK_THROWS_AS(chip.disable_digital_mode(), ModeError);
}

TEST_CASE("assembly round trip") {
    const std::string text =
        "# add two registers\n"
        "ADD hct=3 pipe=1 dst=2 a=0 b=1 width=16\n"
        "SHR hct=0 pipe=4 dst=5 a=5 shift=3 arith=1\n"
        "MVM hct=2 pipe=63 src_pipe=62 vacore=1 bits=8 signed=1\n"
        "ELEM_LOAD hct=1 pipe=2 dst=3 a=4 src_pipe=9 base=0 addr_bits=8 value_bits=8\n"
        "\n"
        "BARRIER hct=0\n";
    const auto program = assemble(text);
    REQUIRE(program.size() == 5);
    CHECK(program[0].op == Opcode::Add);
    CHECK(program[0].width == 16);
    CHECK(program[1].arithmetic);
    CHECK(program[2].is_signed);
    CHECK(assemble(disassemble(program)) == program);
    CHECK_THROWS_AS(parse_instruction("FROB hct=1"), ConfigError);
    CHECK_THROWS_AS(parse_instruction("ADD hct=x"), ConfigError);
    CHECK_THROWS_AS(parse_instruction("ADD color=1"), ConfigError);
}

TEST_CASE("frontend stepping") {
    Chip chip(small_chip());
    chip.load_program({});
    const auto empty = chip.frontend_step();
    CHECK(empty.issued == 0);
    CHECK(empty.stalls == 0);
    CHECK(chip.run_program().issued == 0);

    // A small ISA program computes on the DCE.
    auto& p = chip.hct(0).pipeline(0);
    p.write_planes(0, std::vector<std::int64_t>{5, 7}, 16);
    p.write_planes(1, std::vector<std::int64_t>{10, -3}, 16);
    chip.load_program(assemble("ADD hct=0 pipe=0 dst=2 a=0 b=1 width=16\n"
                               "SHL hct=0 pipe=0 dst=3 a=2 shift=1 width=16\n"
                               "BARRIER hct=0\n"));
    const auto stats = chip.run_program();
    CHECK(stats.issued == 3);
    CHECK(p.peek(3, 16)[0] == 30);
    CHECK(p.peek(3, 16)[1] == 8);
}

TEST_CASE("MVM issue count scales with input width only when the IIU is off") {
    std::mt19937_64 rng(31);
    auto issues = [&](bool iiu, int bits) {
        ChipConfig cfg = small_chip();
        cfg.iiu_enabled = iiu;
        Chip chip(cfg);
        const int h = chip.set_matrix(random_matrix(64, 64, 8, rng), 8, Precision::High);
        const auto x = random_vector(64, bits, false, rng);
        return chip.exec_mvm(h, x, {bits, false}).cost.frontend_issues;
    };
    CHECK(issues(true, 4) == issues(true, 8));
    CHECK(issues(false, 8) > issues(false, 4));
    CHECK(issues(false, 8) > issues(true, 8));
}
