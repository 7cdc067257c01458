#pragma once

#include <functional>

#include "stc/tensor.hpp"

namespace stc {

// Central-difference gradient check. For each coordinate i of `point`,
// compares (f(x+h e_i) - f(x-h e_i)) / 2h against analytic_grad[i] and
// returns the worst relative error max|fd-g| / max(1, |fd|, |g|).
double finite_difference_check(const std::function<double(const Tensor&)>& f,
                               const Tensor& analytic_grad, const Tensor& point,
                               double step = 1e-5);

}  // namespace stc
