#include "dppfl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <omp.h>

#include "dppfl/error.hpp"
#include "dppfl/kernels.hpp"
#include "dppfl/rng.hpp"

namespace dppfl::nn {

namespace {

// Fixed reduction granularity for batch gradients; independent of thread count.
constexpr std::size_t kReduceChunks = 16;

kernels::ConvShape conv1_shape(const Architecture& a) {
    return {a.in_channels, a.height, a.width, a.conv1_channels, a.conv1_kernel};
}
kernels::PoolShape pool1_shape(const Architecture& a) {
    return {a.conv1_channels, a.conv1_h(), a.conv1_w(), a.pool};
}
kernels::ConvShape conv2_shape(const Architecture& a) {
    return {a.conv1_channels, a.pool1_h(), a.pool1_w(), a.conv2_channels, a.conv2_kernel};
}
kernels::PoolShape pool2_shape(const Architecture& a) {
    return {a.conv2_channels, a.conv2_h(), a.conv2_w(), a.pool};
}

struct ExpectedShapes {
    std::vector<std::size_t> weight;
    std::vector<std::size_t> bias;
};

ExpectedShapes expected_shapes(const Architecture& a, std::size_t layer) {
    switch (layer) {
        case kConv1:
            return {{a.conv1_channels, a.in_channels, a.conv1_kernel, a.conv1_kernel}, {a.conv1_channels}};
        case kConv2:
            return {{a.conv2_channels, a.conv1_channels, a.conv2_kernel, a.conv2_kernel}, {a.conv2_channels}};
        case kFc1:
            return {{a.fc1_units, a.fc1_inputs()}, {a.fc1_units}};
        default:
            return {{a.classes, a.fc1_units}, {a.classes}};
    }
}

LayerKind expected_kind(std::size_t layer) { return layer < kFc1 ? LayerKind::conv : LayerKind::fc; }

void check_batch(const Architecture& a, const Tensor& batch) {
    const auto& s = batch.shape();
    if (s.size() != 4 || s[0] == 0 || s[1] != a.in_channels || s[2] != a.height || s[3] != a.width) {
        throw ShapeError("input batch: expected [n x " + std::to_string(a.in_channels) + " x " +
                         std::to_string(a.height) + " x " + std::to_string(a.width) + "] with n >= 1, got " +
                         shape_string(s));
    }
}

void check_labels(const Architecture& a, std::size_t n, std::span<const int> labels) {
    if (labels.size() != n) {
        throw ShapeError("labels: expected " + std::to_string(n) + " entries, got " + std::to_string(labels.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= a.classes) {
            throw ValueError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                             " outside [0, " + std::to_string(a.classes) + ")");
        }
    }
}

// Intermediate buffers for one sample.
struct Workspace {
    explicit Workspace(const Architecture& a)
        : c1(conv1_shape(a)), p1(pool1_shape(a)), c2(conv2_shape(a)), p2(pool2_shape(a)),
          z1(c1.out_size()), a1(c1.out_size()), m1(p1.out_size()), arg1(p1.out_size()),
          z2(c2.out_size()), a2(c2.out_size()), m2(p2.out_size()), arg2(p2.out_size()),
          z3(a.fc1_units), a3(a.fc1_units), logits(a.classes),
          dlogits(a.classes), da3(a.fc1_units), dz3(a.fc1_units), dm2(p2.out_size()),
          da2(c2.out_size()), dz2(c2.out_size()), dm1(p1.out_size()), da1(c1.out_size()),
          dz1(c1.out_size()) {}

    kernels::ConvShape c1;
    kernels::PoolShape p1;
    kernels::ConvShape c2;
    kernels::PoolShape p2;
    std::vector<double> z1, a1, m1;
    std::vector<std::uint32_t> arg1;
    std::vector<double> z2, a2, m2;
    std::vector<std::uint32_t> arg2;
    std::vector<double> z3, a3, logits;
    std::vector<double> dlogits, da3, dz3, dm2, da2, dz2, dm1, da1, dz1;
};

void forward_sample(const ModelParams& p, std::span<const double> x, Workspace& w) {
    const Architecture& a = p.arch;
    const auto& L = p.layers;
    kernels::conv2d_forward(w.c1, x, L[kConv1].weight.data(), L[kConv1].bias.data(), w.z1);
    kernels::relu_forward(w.z1, w.a1);
    kernels::maxpool_forward(w.p1, w.a1, w.m1, w.arg1);
    kernels::conv2d_forward(w.c2, w.m1, L[kConv2].weight.data(), L[kConv2].bias.data(), w.z2);
    kernels::relu_forward(w.z2, w.a2);
    kernels::maxpool_forward(w.p2, w.a2, w.m2, w.arg2);
    kernels::fc_forward(a.fc1_units, a.fc1_inputs(), L[kFc1].weight.data(), L[kFc1].bias.data(), w.m2, w.z3);
    kernels::relu_forward(w.z3, w.a3);
    kernels::fc_forward(a.classes, a.fc1_units, L[kFc2].weight.data(), L[kFc2].bias.data(), w.a3, w.logits);
}

double backward_sample(const ModelParams& p, std::span<const double> x, int label, Workspace& w,
                       GradientSet& g) {
    const Architecture& a = p.arch;
    const auto& L = p.layers;
    auto& G = g.layers;
    const double loss = kernels::softmax_xent(w.logits, label, w.dlogits);
    kernels::fc_backward(a.classes, a.fc1_units, L[kFc2].weight.data(), w.a3, w.dlogits, G[kFc2].weight.data(),
                         G[kFc2].bias.data(), w.da3);
    kernels::relu_backward(w.z3, w.da3, w.dz3);
    kernels::fc_backward(a.fc1_units, a.fc1_inputs(), L[kFc1].weight.data(), w.m2, w.dz3, G[kFc1].weight.data(),
                         G[kFc1].bias.data(), w.dm2);
    kernels::maxpool_backward(w.p2, w.arg2, w.dm2, w.da2);
    kernels::relu_backward(w.z2, w.da2, w.dz2);
    kernels::conv2d_backward(w.c2, w.m1, L[kConv2].weight.data(), w.dz2, G[kConv2].weight.data(),
                             G[kConv2].bias.data(), w.dm1);
    kernels::maxpool_backward(w.p1, w.arg1, w.dm1, w.da1);
    kernels::relu_backward(w.z1, w.da1, w.dz1);
    kernels::conv2d_backward(w.c1, x, L[kConv1].weight.data(), w.dz1, G[kConv1].weight.data(),
                             G[kConv1].bias.data(), {});
    return loss;
}

void add_into(GradientSet& dst, const GradientSet& src) {
    for (std::size_t l = 0; l < dst.layers.size(); ++l) {
        auto dw = dst.layers[l].weight.data();
        auto sw = src.layers[l].weight.data();
        for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += sw[i];
        auto db = dst.layers[l].bias.data();
        auto sb = src.layers[l].bias.data();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += sb[i];
    }
}

void scale(GradientSet& g, double s) {
    for (auto& layer : g.layers) {
        for (double& v : layer.weight.data()) v *= s;
        for (double& v : layer.bias.data()) v *= s;
    }
}

void append_f32(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

}  // namespace

void Architecture::validate() const {
    auto fail = [](const std::string& what) { throw ValueError("architecture: " + what); };
    if (in_channels == 0 || conv1_channels == 0 || conv2_channels == 0 || fc1_units == 0) {
        fail("channel and unit counts must be positive");
    }
    if (classes < 2) fail("need at least 2 classes");
    if (pool == 0 || conv1_kernel == 0 || conv2_kernel == 0) fail("kernel and pool sizes must be positive");
    if (conv1_kernel > height || conv1_kernel > width) fail("conv1 kernel larger than input");
    if (pool1_h() == 0 || pool1_w() == 0) fail("first pooling collapses the feature map");
    if (conv2_kernel > pool1_h() || conv2_kernel > pool1_w()) fail("conv2 kernel larger than its input");
    if (pool2_h() == 0 || pool2_w() == 0) fail("second pooling collapses the feature map");
}

std::string_view layer_name(std::size_t index) {
    static constexpr std::string_view names[] = {"conv1", "conv2", "fc1", "fc2"};
    return index < kLayerCount ? names[index] : "unknown";
}

std::size_t ModelParams::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

std::string_view to_string(InitScheme scheme) {
    switch (scheme) {
        case InitScheme::xavier_normal: return "xavier-normal";
        case InitScheme::xavier_uniform: return "xavier-uniform";
        case InitScheme::kaiming_normal: return "kaiming-normal";
        case InitScheme::kaiming_uniform: return "kaiming-uniform";
    }
    return "unknown";
}

InitScheme parse_init_scheme(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '_', '-');
    for (InitScheme scheme : kAllInitSchemes) {
        if (s == to_string(scheme)) return scheme;
    }
    throw ValueError("unknown init scheme '" + std::string(name) + "'");
}

void check_params(const ModelParams& params) {
    params.arch.validate();
    if (params.layers.size() != kLayerCount) {
        throw ShapeError("model: expected " + std::to_string(kLayerCount) + " layers, got " +
                         std::to_string(params.layers.size()));
    }
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        const auto exp = expected_shapes(params.arch, l);
        const auto& layer = params.layers[l];
        const std::string name(layer_name(l));
        if (layer.kind != expected_kind(l)) throw ShapeError("layer " + name + ": wrong layer kind");
        if (layer.weight.shape() != exp.weight) {
            throw ShapeError("layer " + name + " weight: expected " + shape_string(exp.weight) + ", got " +
                             shape_string(layer.weight.shape()));
        }
        if (layer.bias.shape() != exp.bias) {
            throw ShapeError("layer " + name + " bias: expected " + shape_string(exp.bias) + ", got " +
                             shape_string(layer.bias.shape()));
        }
    }
}

ModelParams zero_params(const Architecture& arch) {
    arch.validate();
    ModelParams p{arch, {}};
    for (std::size_t l = 0; l < kLayerCount; ++l) {
        auto exp = expected_shapes(arch, l);
        p.layers.push_back({expected_kind(l), Tensor(exp.weight), Tensor(exp.bias)});
    }
    return p;
}

GradientSet zero_grads(const ModelParams& params) {
    GradientSet g;
    g.layers.reserve(params.layers.size());
    for (const auto& l : params.layers) {
        g.layers.push_back({l.kind, Tensor::zeros_like(l.weight), Tensor::zeros_like(l.bias)});
    }
    return g;
}

ModelParams init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed) {
    ModelParams p = zero_params(arch);
    Rng rng = make_rng(seed, Stream::init);
    for (auto& layer : p.layers) {
        const auto& s = layer.weight.shape();
        const double receptive = s.size() == 4 ? static_cast<double>(s[2] * s[3]) : 1.0;
        const double fan_in = static_cast<double>(s[1]) * receptive;
        const double fan_out = static_cast<double>(s[0]) * receptive;
        double scale = 0.0;
        bool normal = false;
        switch (scheme) {
            case InitScheme::xavier_normal:
                scale = std::sqrt(2.0 / (fan_in + fan_out));
                normal = true;
                break;
            case InitScheme::xavier_uniform:
                scale = std::sqrt(6.0 / (fan_in + fan_out));
                break;
            case InitScheme::kaiming_normal:
                scale = std::sqrt(2.0 / fan_in);
                normal = true;
                break;
            case InitScheme::kaiming_uniform:
                scale = std::sqrt(6.0 / fan_in);
                break;
        }
        for (double& w : layer.weight.data()) {
            w = normal ? scale * normal01(rng) : scale * (2.0 * uniform01(rng) - 1.0);
        }
    }
    return p;
}

ForwardOutput forward(const ModelParams& params, const Tensor& batch) {
    check_params(params);
    const Architecture& a = params.arch;
    check_batch(a, batch);
    const std::size_t n = batch.dim(0);
    const std::size_t V = a.fc1_inputs();
    ForwardOutput out{Tensor({n, a.classes}), Tensor({n, a.fc1_units}), Tensor({n, V})};

#pragma omp parallel
    {
        Workspace ws(a);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto s = static_cast<std::size_t>(i);
            forward_sample(params, batch.slice(s), ws);
            std::copy(ws.logits.begin(), ws.logits.end(), out.logits.slice(s).begin());
            std::copy(ws.z3.begin(), ws.z3.end(), out.fc1_pre.slice(s).begin());
            std::copy(ws.m2.begin(), ws.m2.end(), out.fc1_in.slice(s).begin());
        }
    }
    return out;
}

LossGrad loss_and_grad(const ModelParams& params, const Tensor& batch, std::span<const int> labels) {
    check_params(params);
    const Architecture& a = params.arch;
    check_batch(a, batch);
    const std::size_t n = batch.dim(0);
    check_labels(a, n, labels);

    const std::size_t chunks = std::min(n, kReduceChunks);
    std::vector<GradientSet> partial(chunks);
    std::vector<double> partial_loss(chunks, 0.0);

#pragma omp parallel
    {
        Workspace ws(a);
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
            const auto ci = static_cast<std::size_t>(c);
            const std::size_t begin = ci * n / chunks;
            const std::size_t end = (ci + 1) * n / chunks;
            GradientSet g = zero_grads(params);
            double loss = 0.0;
            for (std::size_t s = begin; s < end; ++s) {
                forward_sample(params, batch.slice(s), ws);
                loss += backward_sample(params, batch.slice(s), labels[s], ws, g);
            }
            partial[ci] = std::move(g);
            partial_loss[ci] = loss;
        }
    }

    LossGrad out{0.0, std::move(partial[0])};
    double loss = partial_loss[0];
    for (std::size_t c = 1; c < chunks; ++c) {
        add_into(out.grads, partial[c]);
        loss += partial_loss[c];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    scale(out.grads, inv_n);
    out.loss = loss * inv_n;
    return out;
}

Evaluation evaluate(const ModelParams& params, const Tensor& batch, std::span<const int> labels) {
    check_params(params);
    const Architecture& a = params.arch;
    check_batch(a, batch);
    const std::size_t n = batch.dim(0);
    check_labels(a, n, labels);

    std::vector<double> losses(n);
    std::vector<unsigned char> correct(n);
#pragma omp parallel
    {
        Workspace ws(a);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto s = static_cast<std::size_t>(i);
            forward_sample(params, batch.slice(s), ws);
            const auto best = std::max_element(ws.logits.begin(), ws.logits.end()) - ws.logits.begin();
            correct[s] = best == labels[s];
            losses[s] = kernels::softmax_xent(ws.logits, labels[s], ws.dlogits);
        }
    }
    double loss = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        loss += losses[i];
        hits += correct[i];
    }
    return {static_cast<double>(hits) / static_cast<double>(n), loss / static_cast<double>(n)};
}

ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, double eta) {
    if (!(eta >= 0.0)) throw ValueError("learning rate must be >= 0");
    if (grads.layers.size() != params.layers.size()) {
        throw ShapeError("gradient set has " + std::to_string(grads.layers.size()) + " layers, model has " +
                         std::to_string(params.layers.size()));
    }
    ModelParams out = params;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        auto& dst = out.layers[l];
        const auto& g = grads.layers[l];
        if (!dst.weight.same_shape(g.weight) || !dst.bias.same_shape(g.bias)) {
            throw ShapeError("layer " + std::string(layer_name(l)) + ": gradient shape " +
                             shape_string(g.weight.shape()) + " does not match parameter shape " +
                             shape_string(dst.weight.shape()));
        }
        auto w = dst.weight.data();
        auto gw = g.weight.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * gw[i];
        auto b = dst.bias.data();
        auto gb = g.bias.data();
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= eta * gb[i];
    }
    return out;
}

std::vector<std::uint8_t> serialize_params(const ModelParams& params) {
    std::vector<std::uint8_t> out;
    out.reserve(wire_bytes(params));
    for (const auto& l : params.layers) {
        for (double v : l.weight.data()) append_f32(out, v);
        for (double v : l.bias.data()) append_f32(out, v);
    }
    return out;
}

std::size_t wire_bytes(const ModelParams& params) noexcept { return 4 * params.parameter_count(); }

}  // namespace dppfl::nn
