#include "stc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "stc/error.hpp"

namespace stc {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) fail("shape", "tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    init_strides();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        fail("shape", "tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string());
    }
    init_strides();
    check_finite("tensor construction");
}

void Tensor::init_strides() {
    stride_.assign(shape_.size() > 1 ? shape_.size() - 1 : 0, 1);
    for (std::size_t i = stride_.size(); i-- > 0;) {
        stride_[i] = shape_[i + 1] * (i + 1 < stride_.size() ? stride_[i + 1] : 1);
    }
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

void Tensor::check_finite(const char* what) const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            fail("numeric", std::string(what) + ": non-finite value encountered");
        }
    }
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) fail("shape", "matmul requires 2-D tensors");
    if (a.dim(1) != b.dim(0)) {
        fail("shape", "matmul inner dimensions disagree: " + a.shape_string() + " x " +
                          b.shape_string());
    }
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    Tensor out({n, m});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            if (av == 0.0) continue;
            const double* pbr = pb + kk * m;
            double* por = po + i * m;
            for (std::size_t j = 0; j < m; ++j) por[j] += av * pbr[j];
        }
    }
    out.check_finite("matmul");
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) fail("shape", "transpose requires a 2-D tensor");
    Tensor out({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
    return out;
}

}  // namespace stc
