#include "tempofuse/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace tempofuse {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {
    if (shape_.empty() || shape_.size() > 3) {
        throw std::invalid_argument("tensor rank must be 1..3, got " + shape_to_string(shape_));
    }
    for (std::size_t e : shape_) {
        if (e == 0) throw std::invalid_argument("tensor extent must be positive " + shape_to_string(shape_));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 3) {
        throw std::invalid_argument("tensor rank must be 1..3, got " + shape_to_string(shape_));
    }
    if (shape_product(shape_) != data_.size()) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::row(const std::vector<double>& v) {
    return Tensor({1, v.size()}, std::vector<double>(v));
}

Tensor Tensor::vec(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

std::string Tensor::shape_str() const {
    return shape_to_string(shape_);
}

}  // namespace tempofuse
