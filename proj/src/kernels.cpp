#include "dppfl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dppfl::kernels {

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
    const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.k;
    for (std::size_t oc = 0; oc < s.out_c; ++oc) {
        double* o = out.data() + oc * oh * ow;
        std::fill(o, o + oh * ow, bias[oc]);
        for (std::size_t ic = 0; ic < s.in_c; ++ic) {
            const double* x = in.data() + ic * s.in_h * s.in_w;
            const double* w = weight.data() + (oc * s.in_c + ic) * k * k;
            for (std::size_t kh = 0; kh < k; ++kh) {
                for (std::size_t kw = 0; kw < k; ++kw) {
                    const double wv = w[kh * k + kw];
                    for (std::size_t y = 0; y < oh; ++y) {
                        const double* xr = x + (y + kh) * s.in_w + kw;
                        double* orow = o + y * ow;
                        for (std::size_t xo = 0; xo < ow; ++xo) orow[xo] += wv * xr[xo];
                    }
                }
            }
        }
    }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                     std::span<const double> dout, std::span<double> dweight, std::span<double> dbias,
                     std::span<double> din) {
    const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.k;
    if (!din.empty()) std::fill(din.begin(), din.end(), 0.0);
    for (std::size_t oc = 0; oc < s.out_c; ++oc) {
        const double* g = dout.data() + oc * oh * ow;
        double bsum = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) bsum += g[i];
        dbias[oc] += bsum;
        for (std::size_t ic = 0; ic < s.in_c; ++ic) {
            const double* x = in.data() + ic * s.in_h * s.in_w;
            const double* w = weight.data() + (oc * s.in_c + ic) * k * k;
            double* dw = dweight.data() + (oc * s.in_c + ic) * k * k;
            double* dx = din.empty() ? nullptr : din.data() + ic * s.in_h * s.in_w;
            for (std::size_t kh = 0; kh < k; ++kh) {
                for (std::size_t kw = 0; kw < k; ++kw) {
                    const double wv = w[kh * k + kw];
                    double acc = 0.0;
                    for (std::size_t y = 0; y < oh; ++y) {
                        const double* xr = x + (y + kh) * s.in_w + kw;
                        const double* gr = g + y * ow;
                        for (std::size_t xo = 0; xo < ow; ++xo) acc += gr[xo] * xr[xo];
                        if (dx) {
                            double* dxr = dx + (y + kh) * s.in_w + kw;
                            for (std::size_t xo = 0; xo < ow; ++xo) dxr[xo] += wv * gr[xo];
                        }
                    }
                    dw[kh * k + kw] += acc;
                }
            }
        }
    }
}

void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax) {
    const std::size_t oh = s.out_h(), ow = s.out_w();
    for (std::size_t c = 0; c < s.c; ++c) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (std::size_t dy = 0; dy < s.p; ++dy) {
                    for (std::size_t dx = 0; dx < s.p; ++dx) {
                        const std::size_t idx = (c * s.h + y * s.p + dy) * s.w + x * s.p + dx;
                        if (in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = (c * oh + y) * ow + x;
                out[o] = best;
                argmax[o] = static_cast<std::uint32_t>(best_idx);
            }
        }
    }
}

void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din) {
    std::fill(din.begin(), din.begin() + static_cast<std::ptrdiff_t>(s.in_size()), 0.0);
    for (std::size_t o = 0; o < s.out_size(); ++o) din[argmax[o]] += dout[o];
}

void relu_forward(std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(std::span<const double> pre, std::span<const double> dout, std::span<double> din) {
    for (std::size_t i = 0; i < pre.size(); ++i) din[i] = pre[i] > 0.0 ? dout[i] : 0.0;
}

void fc_forward(std::size_t out, std::size_t in, std::span<const double> weight, std::span<const double> bias,
                std::span<const double> x, std::span<double> y) {
    for (std::size_t q = 0; q < out; ++q) {
        const double* w = weight.data() + q * in;
        double acc = 0.0;
        for (std::size_t v = 0; v < in; ++v) acc += w[v] * x[v];
        y[q] = acc + bias[q];
    }
}

void fc_backward(std::size_t out, std::size_t in, std::span<const double> weight, std::span<const double> x,
                 std::span<const double> dy, std::span<double> dweight, std::span<double> dbias,
                 std::span<double> dx) {
    if (!dx.empty()) std::fill(dx.begin(), dx.begin() + static_cast<std::ptrdiff_t>(in), 0.0);
    for (std::size_t q = 0; q < out; ++q) {
        const double g = dy[q];
        dbias[q] += g;
        double* dw = dweight.data() + q * in;
        for (std::size_t v = 0; v < in; ++v) dw[v] += g * x[v];
        if (!dx.empty()) {
            const double* w = weight.data() + q * in;
            for (std::size_t v = 0; v < in; ++v) dx[v] += g * w[v];
        }
    }
}

double softmax_xent(std::span<const double> logits, int label, std::span<double> dlogits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        dlogits[j] = std::exp(logits[j] - mx);
        z += dlogits[j];
    }
    for (std::size_t j = 0; j < logits.size(); ++j) dlogits[j] /= z;
    const auto y = static_cast<std::size_t>(label);
    dlogits[y] -= 1.0;
    return std::log(z) + mx - logits[y];
}

}  // namespace dppfl::kernels
