#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dppfl/tensor.hpp"

namespace dppfl::nn {

/// Topology of the two-conv / two-FC classifier:
///   conv1 -> ReLU -> maxpool -> conv2 -> ReLU -> maxpool -> flatten -> FC-1 -> ReLU -> FC-2.
/// Convolutions are "valid" with stride 1; pooling windows are non-overlapping and
/// trailing rows/columns that do not fill a window are dropped.
struct Architecture {
    std::size_t in_channels = 1;
    std::size_t height = 28;
    std::size_t width = 28;
    std::size_t conv1_channels = 8;
    std::size_t conv1_kernel = 5;
    std::size_t conv2_channels = 16;
    std::size_t conv2_kernel = 5;
    std::size_t pool = 2;
    std::size_t fc1_units = 64;  // Q
    std::size_t classes = 10;

    std::size_t conv1_h() const noexcept { return height - conv1_kernel + 1; }
    std::size_t conv1_w() const noexcept { return width - conv1_kernel + 1; }
    std::size_t pool1_h() const noexcept { return conv1_h() / pool; }
    std::size_t pool1_w() const noexcept { return conv1_w() / pool; }
    std::size_t conv2_h() const noexcept { return pool1_h() - conv2_kernel + 1; }
    std::size_t conv2_w() const noexcept { return pool1_w() - conv2_kernel + 1; }
    std::size_t pool2_h() const noexcept { return conv2_h() / pool; }
    std::size_t pool2_w() const noexcept { return conv2_w() / pool; }
    /// V: number of input features of FC-1.
    std::size_t fc1_inputs() const noexcept { return conv2_channels * pool2_h() * pool2_w(); }
    std::size_t sample_size() const noexcept { return in_channels * height * width; }

    /// Throws ValueError if any dimension collapses to zero.
    void validate() const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

enum class LayerKind { conv, fc };

struct LayerParams {
    LayerKind kind = LayerKind::fc;
    Tensor weight;  // conv: [out x in x k x k], fc: [out x in]
    Tensor bias;    // [out]

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

inline constexpr std::size_t kConv1 = 0;
inline constexpr std::size_t kConv2 = 1;
inline constexpr std::size_t kFc1 = 2;
inline constexpr std::size_t kFc2 = 3;
inline constexpr std::size_t kLayerCount = 4;

std::string_view layer_name(std::size_t index);

struct ModelParams {
    Architecture arch;
    std::vector<LayerParams> layers;

    /// FC-1: weight is W in R^{Q x V}, bias is b in R^Q.
    const LayerParams& fc1() const { return layers.at(kFc1); }
    std::size_t parameter_count() const noexcept;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// d(loss)/d(parameter), laid out exactly like ModelParams::layers.
struct GradientSet {
    std::vector<LayerParams> layers;

    friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

enum class InitScheme { xavier_normal, xavier_uniform, kaiming_normal, kaiming_uniform };

std::string_view to_string(InitScheme scheme);
/// Accepts "xavier-normal", "xavier_normal", ... Throws ValueError on unknown names.
InitScheme parse_init_scheme(std::string_view name);
inline constexpr InitScheme kAllInitSchemes[] = {InitScheme::xavier_normal, InitScheme::xavier_uniform,
                                                 InitScheme::kaiming_normal, InitScheme::kaiming_uniform};

/// Throws ShapeError naming the offending layer when params do not match params.arch.
void check_params(const ModelParams& params);

ModelParams zero_params(const Architecture& arch);
GradientSet zero_grads(const ModelParams& params);

/// Per-layer fan-in/fan-out rules of the named scheme; biases are zero.
ModelParams init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed);

struct ForwardOutput {
    Tensor logits;   // [n x classes]
    Tensor fc1_pre;  // [n x Q], FC-1 output before ReLU
    Tensor fc1_in;   // [n x V], flattened FC-1 input features
};

/// Batched forward pass; samples are evaluated in parallel (OpenMP).
/// batch: [n x in_channels x height x width], n >= 1.
ForwardOutput forward(const ModelParams& params, const Tensor& batch);

struct LossGrad {
    double loss = 0.0;  // mean softmax cross-entropy over the batch
    GradientSet grads;
};

/// Mean softmax cross-entropy and its exact gradient. Per-sample gradients are
/// reduced over a fixed chunking of the batch so the result does not depend on
/// the number of threads.
LossGrad loss_and_grad(const ModelParams& params, const Tensor& batch, std::span<const int> labels);

struct Evaluation {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

Evaluation evaluate(const ModelParams& params, const Tensor& batch, std::span<const int> labels);

/// p' = p - eta * g for every parameter. Input is not modified.
ModelParams sgd_step(const ModelParams& params, const GradientSet& grads, double eta);

/// Parameters as little-endian float32, layer by layer (weight then bias).
std::vector<std::uint8_t> serialize_params(const ModelParams& params);
/// Size of serialize_params(params) without materializing it.
std::size_t wire_bytes(const ModelParams& params) noexcept;

/// Single-threaded textbook implementation of forward/loss_and_grad, written
/// independently of the optimized kernels. Kept for testing and benchmarking.
namespace reference {
ForwardOutput forward(const ModelParams& params, const Tensor& batch);
LossGrad loss_and_grad(const ModelParams& params, const Tensor& batch, std::span<const int> labels);
}  // namespace reference

}  // namespace dppfl::nn
