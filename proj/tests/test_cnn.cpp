#include <algorithm>
#include <random>

#include "cnn_oracle.hpp"
#include "darth/apps/cnn.hpp"
#include "darth/errors.hpp"
#include "doctest.h"

using namespace darth;
using namespace darth::apps;

namespace {

Image random_image(std::mt19937_64& rng) {
    Image img(64);
    for (auto& v : img) v = static_cast<std::int64_t>(rng() % 256);
    return img;
}

runtime::ChipConfig cnn_chip() {
    auto c = runtime::ChipConfig::defaults();
    c.hct_count = 32;
    return c;
}

}  // namespace

TEST_CASE("Toeplitz expansion places kernel taps") {
    TinyCnn m = TinyCnn::random(1);
    const auto t = toeplitz(m.conv1, 8, 8);
    CHECK(t.rows == 256);
    CHECK(t.cols == 64);
    // Impulse at (3, 4): the conv output map is the flipped kernel stamped around it.
    std::vector<std::int64_t> x(64, 0);
    x[3 * 8 + 4] = 1;
    for (int o = 0; o < m.conv1.out_ch; ++o) {
        for (int y = 0; y < 8; ++y) {
            for (int xx = 0; xx < 8; ++xx) {
                const int row = 4 * ((o * 4 + y / 2) * 4 + xx / 2) + (y % 2) * 2 + xx % 2;
                std::int64_t got = 0;
                for (int c = 0; c < 64; ++c) got += t.at(row, c) * x[c];
                const int dy = 3 - y + 1, dx = 4 - xx + 1;
                const std::int64_t want = (dy >= 0 && dy < 3 && dx >= 0 && dx < 3) ? m.conv1.w(o, 0, dy, dx) : 0;
                CHECK(got == want);
            }
        }
    }
}

TEST_CASE("host CNN reference matches the independent oracle") {
    std::mt19937_64 rng(3);
    const TinyCnn m = TinyCnn::random(5);
    for (int i = 0; i < 20; ++i) {
        const auto img = random_image(rng);
        CHECK(cnn_reference(m, img) == oracle::cnn(m, img));
    }
}

TEST_CASE("all-zero image with zero biases gives zero logits") {
    TinyCnn m = TinyCnn::random(7);
    std::fill(m.conv1.bias.begin(), m.conv1.bias.end(), 0);
    std::fill(m.conv2.bias.begin(), m.conv2.bias.end(), 0);
    std::fill(m.fc.bias.begin(), m.fc.bias.end(), 0);
    runtime::Chip chip(cnn_chip());
    auto dep = cnn_deploy(chip, m);
    const auto r = cnn_run_inference(dep, std::vector<Image>{Image(64, 0)});
    CHECK(r.logits[0] == std::vector<std::int64_t>(10, 0));
}

TEST_CASE("chip CNN logits are bit-exact against the oracle") {
    std::mt19937_64 rng(11);
    const TinyCnn m = TinyCnn::random(13);
    runtime::Chip chip(cnn_chip());
    auto dep = cnn_deploy(chip, m, 4);
    CHECK(dep.setup.reprogrammed_arrays == 4 * 7);
    std::vector<Image> imgs;
    for (int i = 0; i < 32; ++i) imgs.push_back(random_image(rng));
    const auto r = cnn_run_inference(dep, imgs);
    for (std::size_t i = 0; i < imgs.size(); ++i) CHECK(r.logits[i] == oracle::cnn(m, imgs[i]));
    CHECK(r.cost.conversions > 0);
}

TEST_CASE("batch replicas overlap in time") {
    std::mt19937_64 rng(17);
    const TinyCnn m = TinyCnn::random(19);
    std::vector<Image> imgs;
    for (int i = 0; i < 4; ++i) imgs.push_back(random_image(rng));
    runtime::Chip serial_chip(cnn_chip()), batch_chip(cnn_chip());
    auto serial = cnn_deploy(serial_chip, m, 1);
    auto batched = cnn_deploy(batch_chip, m, 4);
    const auto rs = cnn_run_inference(serial, imgs);
    const auto rb = cnn_run_inference(batched, imgs);
    CHECK(rs.logits == rb.logits);
    CHECK(rb.cost.end - rb.cost.start < rs.cost.end - rs.cost.start);
}

// Fraction of images whose prediction must survive programming noise.
constexpr double kArgmaxAgreement = 0.98;

TEST_CASE("argmax survives default programming noise") {
    const TinyCnn m = TinyCnn::random(29);
    auto cfg = cnn_chip();
    cfg.noise = ace::NoiseConfig::off();
    cfg.noise.programming_sigma = ace::NoiseConfig::defaults().programming_sigma;
    cfg.noise.read_sigma = ace::NoiseConfig::defaults().read_sigma;
    runtime::Chip chip(cfg);
    auto dep = cnn_deploy(chip, m, 8);
    std::mt19937_64 rng(31);
    std::vector<Image> imgs;
    for (int i = 0; i < 256; ++i) imgs.push_back(random_image(rng));
    const auto r = cnn_run_inference(dep, imgs);
    const auto top = [](const std::vector<std::int64_t>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
    int agree = 0;
    for (std::size_t i = 0; i < imgs.size(); ++i) agree += top(r.logits[i]) == top(oracle::cnn(m, imgs[i]));
    CHECK(agree >= kArgmaxAgreement * 256);
}

TEST_CASE("CNN shape errors") {
    const TinyCnn m = TinyCnn::random(23);
    runtime::Chip chip(cnn_chip());
    auto dep = cnn_deploy(chip, m);
    CHECK_THROWS_AS(cnn_run_inference(dep, std::vector<Image>{Image(63, 0)}), ShapeError);
    TinyCnn bad = m;
    bad.conv2.in_ch = 3;
    CHECK_THROWS_AS(bad.validate(), ShapeError);
}
