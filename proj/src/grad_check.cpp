#include "stc/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "stc/error.hpp"

namespace stc {

double finite_difference_check(const std::function<double(const Tensor&)>& f,
                               const Tensor& analytic_grad, const Tensor& point,
                               double step) {
    if (!analytic_grad.same_shape(point)) {
        fail("shape", "finite_difference_check: gradient shape does not match point");
    }
    if (!(step > 0.0)) fail("domain", "finite_difference_check: step must be positive");

    Tensor x = point;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x(i);
        x(i) = orig + step;
        const double fp = f(x);
        x(i) = orig - step;
        const double fm = f(x);
        x(i) = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            fail("numeric", "finite_difference_check: objective returned non-finite value");
        }
        const double fd = (fp - fm) / (2.0 * step);
        const double g = analytic_grad(i);
        const double err = std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace stc
