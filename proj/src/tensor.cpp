#include "dppfl/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "dppfl/error.hpp"

namespace dppfl {

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
    }
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(shape_));
    }
    return shape_[axis];
}

std::span<double> Tensor::slice(std::size_t i) {
    if (shape_.empty() || i >= shape_[0]) {
        throw ShapeError("slice " + std::to_string(i) + " out of range for shape " + shape_string(shape_));
    }
    const std::size_t stride = shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<double>(data_).subspan(i * stride, stride);
}

std::span<const double> Tensor::slice(std::size_t i) const {
    if (shape_.empty() || i >= shape_[0]) {
        throw ShapeError("slice " + std::to_string(i) + " out of range for shape " + shape_string(shape_));
    }
    const std::size_t stride = shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<const double>(data_).subspan(i * stride, stride);
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace dppfl
