#pragma once

// Per-sample layer kernels. Backward kernels accumulate into parameter
// gradients (+=) and overwrite input gradients.

#include <cstddef>
#include <cstdint>
#include <span>

namespace dppfl::kernels {

struct ConvShape {
    std::size_t in_c = 1, in_h = 1, in_w = 1;
    std::size_t out_c = 1, k = 1;

    std::size_t out_h() const noexcept { return in_h - k + 1; }
    std::size_t out_w() const noexcept { return in_w - k + 1; }
    std::size_t in_size() const noexcept { return in_c * in_h * in_w; }
    std::size_t out_size() const noexcept { return out_c * out_h() * out_w(); }
    std::size_t weight_size() const noexcept { return out_c * in_c * k * k; }
};

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);

/// din may be empty when the input gradient is not needed.
void conv2d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                     std::span<const double> dout, std::span<double> dweight, std::span<double> dbias,
                     std::span<double> din);

struct PoolShape {
    std::size_t c = 1, h = 1, w = 1, p = 1;

    std::size_t out_h() const noexcept { return h / p; }
    std::size_t out_w() const noexcept { return w / p; }
    std::size_t in_size() const noexcept { return c * h * w; }
    std::size_t out_size() const noexcept { return c * out_h() * out_w(); }
};

/// argmax receives the flat input index of each window's maximum (first one on ties).
void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax);
void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din);

void relu_forward(std::span<const double> in, std::span<double> out);
void relu_backward(std::span<const double> pre, std::span<const double> dout, std::span<double> din);

/// y = W x + b with W row-major [out x in].
void fc_forward(std::size_t out, std::size_t in, std::span<const double> weight, std::span<const double> bias,
                std::span<const double> x, std::span<double> y);
void fc_backward(std::size_t out, std::size_t in, std::span<const double> weight, std::span<const double> x,
                 std::span<const double> dy, std::span<double> dweight, std::span<double> dbias,
                 std::span<double> dx);

/// Cross-entropy of softmax(logits) at label; dlogits = softmax - onehot.
double softmax_xent(std::span<const double> logits, int label, std::span<double> dlogits);

}  // namespace dppfl::kernels
