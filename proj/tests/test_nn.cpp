#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <cstring>

#include "dppfl/error.hpp"
#include "dppfl/nn.hpp"
#include "support/oracles.hpp"

using namespace dppfl;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(Architecture, DefaultDimensions) {
    nn::Architecture a;
    EXPECT_EQ(a.conv1_h(), 24u);
    EXPECT_EQ(a.pool1_h(), 12u);
    EXPECT_EQ(a.conv2_h(), 8u);
    EXPECT_EQ(a.pool2_h(), 4u);
    EXPECT_EQ(a.fc1_inputs(), 256u);
    // 8*25+8 + 16*8*25+16 + 64*256+64 + 10*64+10
    EXPECT_EQ(nn::zero_params(a).parameter_count(), 208u + 3216u + 16448u + 650u);
}

TEST(Architecture, CollapsedDimensionIsRejected) {
    nn::Architecture a;
    a.height = a.width = 8;
    EXPECT_THROW(a.validate(), ValueError);
}

TEST(Forward, MatchesOracleOnDefaultArchitecture) {
    nn::Architecture a;
    const auto p = oracle::random_params(a, 3);
    const auto x = oracle::random_batch(a, 5, 4);
    const auto out = nn::forward(p, x);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto t = oracle::forward(p, x.slice(i));
        for (std::size_t j = 0; j < a.classes; ++j) EXPECT_NEAR(out.logits.slice(i)[j], t.logits[j], 1e-12);
        for (std::size_t q = 0; q < a.fc1_units; ++q) EXPECT_NEAR(out.fc1_pre.slice(i)[q], t.fc1_pre[q], 1e-12);
        for (std::size_t v = 0; v < a.fc1_inputs(); ++v) EXPECT_NEAR(out.fc1_in.slice(i)[v], t.fc1_in[v], 1e-12);
    }
}

TEST(Forward, HandComputedSinglePixelNet) {
    // 1x1 kernels on a 4x4 image keep every stage checkable by hand.
    nn::Architecture a;
    a.height = a.width = 4;
    a.conv1_channels = a.conv2_channels = 1;
    a.conv1_kernel = a.conv2_kernel = 1;
    a.fc1_units = 1;
    a.classes = 2;
    auto p = nn::zero_params(a);
    p.layers[nn::kConv1].weight[0] = 2.0;
    p.layers[nn::kConv1].bias[0] = -1.0;
    p.layers[nn::kConv2].weight[0] = 1.0;
    p.layers[nn::kFc1].weight[0] = 3.0;
    p.layers[nn::kFc1].bias[0] = 0.5;
    p.layers[nn::kFc2].weight[0] = 1.0;
    p.layers[nn::kFc2].weight[1] = -1.0;
    Tensor x({1, 1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) x[i] = 0.05 * static_cast<double>(i);
    // conv1: 2x - 1, relu, 2x2 pool -> max of the 4x4 over each quadrant, then pool again.
    // Max pixel is 0.75 -> 0.5 after conv1; fc1 = 3 * 0.5 + 0.5 = 2.
    const auto out = nn::forward(p, x);
    EXPECT_DOUBLE_EQ(out.fc1_in[0], 0.5);
    EXPECT_DOUBLE_EQ(out.fc1_pre[0], 2.0);
    EXPECT_DOUBLE_EQ(out.logits[0], 2.0);
    EXPECT_DOUBLE_EQ(out.logits[1], -2.0);
}

TEST(LossAndGrad, ParallelMatchesSerialReference) {
    nn::Architecture a;
    const auto p = oracle::random_params(a, 11);
    const auto x = oracle::random_batch(a, 37, 12);
    const auto y = oracle::random_labels(37, a.classes, 13);
    const auto fast = nn::loss_and_grad(p, x, y);
    const auto ref = nn::reference::loss_and_grad(p, x, y);
    EXPECT_NEAR(fast.loss, ref.loss, 1e-12);
    for (std::size_t l = 0; l < nn::kLayerCount; ++l) {
        EXPECT_LE(max_abs_diff(fast.grads.layers[l].weight, ref.grads.layers[l].weight), 1e-12) << nn::layer_name(l);
        EXPECT_LE(max_abs_diff(fast.grads.layers[l].bias, ref.grads.layers[l].bias), 1e-12) << nn::layer_name(l);
    }
    const auto f1 = nn::forward(p, x), f2 = nn::reference::forward(p, x);
    EXPECT_LE(max_abs_diff(f1.logits, f2.logits), 1e-12);
    EXPECT_NEAR(fast.loss, oracle::mean_loss(p, x, y), 1e-12);
}

TEST(LossAndGrad, BitIdenticalAcrossThreadCounts) {
    nn::Architecture a;
    const auto p = oracle::random_params(a, 21);
    const auto x = oracle::random_batch(a, 50, 22);
    const auto y = oracle::random_labels(50, a.classes, 23);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = nn::loss_and_grad(p, x, y);
    omp_set_num_threads(4);
    const auto four = nn::loss_and_grad(p, x, y);
    omp_set_num_threads(saved);
    EXPECT_EQ(std::memcmp(&one.loss, &four.loss, sizeof(double)), 0);
    EXPECT_TRUE(one.grads == four.grads);
}

TEST(LossAndGrad, ReportsBadInputs) {
    nn::Architecture a;
    const auto p = nn::zero_params(a);
    Tensor wrong({2, 1, 27, 28});
    try {
        nn::loss_and_grad(p, wrong, std::vector<int>{0, 1});
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("27"), std::string::npos) << e.what();
    }
    Tensor x({2, 1, 28, 28});
    try {
        nn::loss_and_grad(p, x, std::vector<int>{0, 10});
        FAIL() << "expected ValueError";
    } catch (const ValueError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(nn::loss_and_grad(p, x, std::vector<int>{0}), ShapeError);
}

TEST(LossAndGrad, UniformLogitsGiveLogClasses) {
    nn::Architecture a;
    const auto p = nn::zero_params(a);
    const auto x = oracle::random_batch(a, 4, 1);
    EXPECT_NEAR(nn::loss_and_grad(p, x, std::vector<int>{0, 3, 5, 9}).loss, std::log(10.0), 1e-12);
}

TEST(Init, SchemeScalesAndDeterminism) {
    nn::Architecture a;
    for (auto scheme : nn::kAllInitSchemes) {
        const auto p = nn::init_params(a, scheme, 5);
        EXPECT_TRUE(p == nn::init_params(a, scheme, 5));
        EXPECT_FALSE(p == nn::init_params(a, scheme, 6));
        const auto& w = p.layers[nn::kFc1].weight;
        const double fi = 256.0, fo = 64.0;
        double expected = 0.0;
        switch (scheme) {
            case nn::InitScheme::xavier_normal:
            case nn::InitScheme::xavier_uniform: expected = std::sqrt(2.0 / (fi + fo)); break;
            case nn::InitScheme::kaiming_normal:
            case nn::InitScheme::kaiming_uniform: expected = std::sqrt(2.0 / fi); break;
        }
        double s2 = 0.0;
        for (double v : w.data()) s2 += v * v;
        EXPECT_NEAR(std::sqrt(s2 / static_cast<double>(w.size())), expected, 0.03 * expected) << nn::to_string(scheme);
        for (const auto& l : p.layers)
            for (double b : l.bias.data()) EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(nn::parse_init_scheme("kaiming_uniform"), nn::InitScheme::kaiming_uniform);
    EXPECT_THROW(nn::parse_init_scheme("orthogonal"), ValueError);
}

TEST(SgdStep, ZeroRateIsIdentityAndNegativeRejected) {
    nn::Architecture a;
    const auto p = oracle::random_params(a, 1);
    auto g = nn::zero_grads(p);
    for (auto& l : g.layers) std::fill(l.weight.data().begin(), l.weight.data().end(), 1.0);
    EXPECT_TRUE(nn::sgd_step(p, g, 0.0) == p);
    EXPECT_THROW(nn::sgd_step(p, g, -0.1), ValueError);
    const auto q = nn::sgd_step(p, g, 0.5);
    EXPECT_DOUBLE_EQ(q.layers[0].weight[0], p.layers[0].weight[0] - 0.5);
}

TEST(Serialize, Float32LittleEndian) {
    nn::Architecture a;
    auto p = nn::zero_params(a);
    p.layers[nn::kConv1].weight[0] = 1.0;
    const auto bytes = nn::serialize_params(p);
    EXPECT_EQ(bytes.size(), 4 * p.parameter_count());
    EXPECT_EQ(bytes.size(), nn::wire_bytes(p));
    // 1.0f = 0x3f800000
    EXPECT_EQ(bytes[0], 0x00);
    EXPECT_EQ(bytes[1], 0x00);
    EXPECT_EQ(bytes[2], 0x80);
    EXPECT_EQ(bytes[3], 0x3f);
}

TEST(Evaluate, AccuracyCountsArgmax) {
    auto a = oracle::toy_arch();
    const auto p = oracle::random_params(a, 9);
    const auto x = oracle::random_batch(a, 6, 10);
    std::vector<int> y(6);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        const auto t = oracle::forward(p, x.slice(i));
        const auto best = std::max_element(t.logits.begin(), t.logits.end()) - t.logits.begin();
        y[i] = i % 2 ? static_cast<int>(best) : static_cast<int>((best + 1) % 3);
        hit += i % 2;
    }
    EXPECT_DOUBLE_EQ(nn::evaluate(p, x, y).accuracy, static_cast<double>(hit) / 6.0);
}
