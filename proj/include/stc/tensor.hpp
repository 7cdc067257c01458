#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace stc {

// Dense row-major tensor of doubles. Construction from data rejects
// NaN/Inf; documented ops re-validate their results so overflow surfaces
// as an error instead of a silent Inf.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator()(std::size_t i) { return data_[i]; }
    double operator()(std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * stride_[0] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * stride_[0] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[i * stride_[0] + j * stride_[1] + k];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[i * stride_[0] + j * stride_[1] + k * stride_[2] + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[i * stride_[0] + j * stride_[1] + k * stride_[2] + l];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    void fill(double v);

    // Throws Error("numeric") naming `what` if any entry is NaN/Inf.
    void check_finite(const char* what) const;

    std::string shape_string() const;

private:
    void init_strides();

    std::vector<std::size_t> shape_;
    std::vector<std::size_t> stride_;  // strides for dims 0..rank-2; last dim stride is 1
    std::vector<double> data_;
};

// Standard 2-D matrix product; inner dimensions must agree.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

}  // namespace stc
