// Naive whole-batch implementation used as the comparison baseline for the
// optimized kernels. Loop order follows the textbook definitions.

#include <algorithm>
#include <cmath>

#include "dppfl/error.hpp"
#include "dppfl/nn.hpp"

namespace dppfl::nn::reference {

namespace {

struct Dims {
    std::size_t c, h, w;
    std::size_t size() const { return c * h * w; }
};

std::vector<double> conv(const std::vector<double>& x, Dims in, const LayerParams& layer, Dims& out_dims) {
    const std::size_t oc_n = layer.weight.dim(0), k = layer.weight.dim(2);
    out_dims = {oc_n, in.h - k + 1, in.w - k + 1};
    std::vector<double> y(out_dims.size());
    for (std::size_t oc = 0; oc < oc_n; ++oc)
        for (std::size_t i = 0; i < out_dims.h; ++i)
            for (std::size_t j = 0; j < out_dims.w; ++j) {
                double s = layer.bias[oc];
                for (std::size_t ic = 0; ic < in.c; ++ic)
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v)
                            s += layer.weight[((oc * in.c + ic) * k + u) * k + v] *
                                 x[(ic * in.h + i + u) * in.w + j + v];
                y[(oc * out_dims.h + i) * out_dims.w + j] = s;
            }
    return y;
}

std::vector<double> relu(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(0.0, x[i]);
    return y;
}

std::vector<double> pool(const std::vector<double>& x, Dims in, std::size_t p, Dims& out_dims,
                         std::vector<std::size_t>& winner) {
    out_dims = {in.c, in.h / p, in.w / p};
    std::vector<double> y(out_dims.size());
    winner.assign(out_dims.size(), 0);
    for (std::size_t c = 0; c < in.c; ++c)
        for (std::size_t i = 0; i < out_dims.h; ++i)
            for (std::size_t j = 0; j < out_dims.w; ++j) {
                const std::size_t o = (c * out_dims.h + i) * out_dims.w + j;
                std::size_t best = (c * in.h + i * p) * in.w + j * p;
                for (std::size_t u = 0; u < p; ++u)
                    for (std::size_t v = 0; v < p; ++v) {
                        const std::size_t idx = (c * in.h + i * p + u) * in.w + j * p + v;
                        if (x[idx] > x[best]) best = idx;
                    }
                y[o] = x[best];
                winner[o] = best;
            }
    return y;
}

std::vector<double> dense(const std::vector<double>& x, const LayerParams& layer) {
    const std::size_t out = layer.weight.dim(0), in = layer.weight.dim(1);
    std::vector<double> y(out);
    for (std::size_t q = 0; q < out; ++q) {
        double s = layer.bias[q];
        for (std::size_t v = 0; v < in; ++v) s += layer.weight[q * in + v] * x[v];
        y[q] = s;
    }
    return y;
}

struct Trace {
    Dims d0, d1, d1p, d2, d2p;
    std::vector<double> x, z1, a1, m1, z2, a2, m2, z3, a3, logits;
    std::vector<std::size_t> w1, w2;
};

Trace run(const ModelParams& p, std::span<const double> sample) {
    const Architecture& a = p.arch;
    Trace t;
    t.d0 = {a.in_channels, a.height, a.width};
    t.x.assign(sample.begin(), sample.end());
    t.z1 = conv(t.x, t.d0, p.layers[kConv1], t.d1);
    t.a1 = relu(t.z1);
    t.m1 = pool(t.a1, t.d1, a.pool, t.d1p, t.w1);
    t.z2 = conv(t.m1, t.d1p, p.layers[kConv2], t.d2);
    t.a2 = relu(t.z2);
    t.m2 = pool(t.a2, t.d2, a.pool, t.d2p, t.w2);
    t.z3 = dense(t.m2, p.layers[kFc1]);
    t.a3 = relu(t.z3);
    t.logits = dense(t.a3, p.layers[kFc2]);
    return t;
}

// Gradients of a dense layer; returns dL/dx.
std::vector<double> dense_back(const std::vector<double>& x, const std::vector<double>& dy, const LayerParams& layer,
                               LayerParams& grad) {
    const std::size_t out = layer.weight.dim(0), in = layer.weight.dim(1);
    std::vector<double> dx(in, 0.0);
    for (std::size_t q = 0; q < out; ++q) {
        grad.bias[q] += dy[q];
        for (std::size_t v = 0; v < in; ++v) {
            grad.weight[q * in + v] += dy[q] * x[v];
            dx[v] += dy[q] * layer.weight[q * in + v];
        }
    }
    return dx;
}

std::vector<double> conv_back(const std::vector<double>& x, Dims in, const std::vector<double>& dy, Dims out,
                              const LayerParams& layer, LayerParams& grad) {
    const std::size_t k = layer.weight.dim(2);
    std::vector<double> dx(in.size(), 0.0);
    for (std::size_t oc = 0; oc < out.c; ++oc)
        for (std::size_t i = 0; i < out.h; ++i)
            for (std::size_t j = 0; j < out.w; ++j) {
                const double g = dy[(oc * out.h + i) * out.w + j];
                grad.bias[oc] += g;
                for (std::size_t ic = 0; ic < in.c; ++ic)
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v) {
                            const std::size_t wi = ((oc * in.c + ic) * k + u) * k + v;
                            const std::size_t xi = (ic * in.h + i + u) * in.w + j + v;
                            grad.weight[wi] += g * x[xi];
                            dx[xi] += g * layer.weight[wi];
                        }
            }
    return dx;
}

std::vector<double> relu_back(const std::vector<double>& z, std::vector<double> dy) {
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!(z[i] > 0.0)) dy[i] = 0.0;
    return dy;
}

std::vector<double> pool_back(const std::vector<double>& dy, const std::vector<std::size_t>& winner,
                              std::size_t in_size) {
    std::vector<double> dx(in_size, 0.0);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[winner[o]] += dy[o];
    return dx;
}

void validate(const ModelParams& params, const Tensor& batch) {
    check_params(params);
    const Architecture& a = params.arch;
    const auto& s = batch.shape();
    if (s.size() != 4 || s[0] == 0 || s[1] != a.in_channels || s[2] != a.height || s[3] != a.width) {
        throw ShapeError("input batch: unexpected shape " + shape_string(s));
    }
}

}  // namespace

ForwardOutput forward(const ModelParams& params, const Tensor& batch) {
    validate(params, batch);
    const Architecture& a = params.arch;
    const std::size_t n = batch.dim(0);
    ForwardOutput out{Tensor({n, a.classes}), Tensor({n, a.fc1_units}), Tensor({n, a.fc1_inputs()})};
    for (std::size_t i = 0; i < n; ++i) {
        Trace t = run(params, batch.slice(i));
        std::copy(t.logits.begin(), t.logits.end(), out.logits.slice(i).begin());
        std::copy(t.z3.begin(), t.z3.end(), out.fc1_pre.slice(i).begin());
        std::copy(t.m2.begin(), t.m2.end(), out.fc1_in.slice(i).begin());
    }
    return out;
}

LossGrad loss_and_grad(const ModelParams& params, const Tensor& batch, std::span<const int> labels) {
    validate(params, batch);
    const Architecture& a = params.arch;
    const std::size_t n = batch.dim(0);
    if (labels.size() != n) throw ShapeError("labels: count does not match batch");
    LossGrad out{0.0, zero_grads(params)};
    auto& G = out.grads.layers;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= a.classes) {
            throw ValueError("label of sample " + std::to_string(i) + " out of range");
        }
        Trace t = run(params, batch.slice(i));
        const double mx = *std::max_element(t.logits.begin(), t.logits.end());
        double z = 0.0;
        for (double l : t.logits) z += std::exp(l - mx);
        const auto y = static_cast<std::size_t>(labels[i]);
        out.loss += std::log(z) + mx - t.logits[y];

        std::vector<double> dlogits(a.classes);
        for (std::size_t j = 0; j < a.classes; ++j) dlogits[j] = std::exp(t.logits[j] - mx) / z - (j == y ? 1.0 : 0.0);

        auto da3 = dense_back(t.a3, dlogits, params.layers[kFc2], G[kFc2]);
        auto dm2 = dense_back(t.m2, relu_back(t.z3, da3), params.layers[kFc1], G[kFc1]);
        auto dz2 = relu_back(t.z2, pool_back(dm2, t.w2, t.d2.size()));
        auto dm1 = conv_back(t.m1, t.d1p, dz2, t.d2, params.layers[kConv2], G[kConv2]);
        auto dz1 = relu_back(t.z1, pool_back(dm1, t.w1, t.d1.size()));
        conv_back(t.x, t.d0, dz1, t.d1, params.layers[kConv1], G[kConv1]);
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss *= inv;
    for (auto& l : G) {
        for (double& v : l.weight.data()) v *= inv;
        for (double& v : l.bias.data()) v *= inv;
    }
    return out;
}

}  // namespace dppfl::nn::reference
