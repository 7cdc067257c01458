#include "stc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stc/error.hpp"

namespace stc {

std::vector<MetricSet> evaluate(const Tensor& preds, const Tensor& targets, double epsilon) {
    if (!preds.same_shape(targets)) {
        fail("shape", "metric inputs disagree: " + preds.shape_string() + " vs " +
                          targets.shape_string());
    }
    if (preds.rank() != 3) fail("shape", "metrics expect (windows, horizon, nodes) tensors");
    if (!(epsilon > 0.0)) fail("domain", "epsilon must be positive");

    const std::size_t W = preds.dim(0), S = preds.dim(1), V = preds.dim(2);
    std::vector<MetricSet> out;
    double tot_abs = 0.0, tot_sq = 0.0, tot_ape = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        double abs_sum = 0.0, sq_sum = 0.0, ape_sum = 0.0;
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t v = 0; v < V; ++v) {
                const double r = preds(w, s, v) - targets(w, s, v);
                abs_sum += std::abs(r);
                sq_sum += r * r;
                ape_sum += std::abs(r / (targets(w, s, v) + epsilon));
            }
        const double n = static_cast<double>(W * V);
        MetricSet m;
        m.horizon = std::to_string(s + 1);
        m.mae = abs_sum / n;
        m.rmse = std::sqrt(sq_sum / n);
        m.mape = 100.0 * ape_sum / n;
        m.count = static_cast<long>(W * V);
        out.push_back(m);
        tot_abs += abs_sum;
        tot_sq += sq_sum;
        tot_ape += ape_sum;
    }
    const double n_all = static_cast<double>(W * S * V);
    MetricSet all;
    all.horizon = "all";
    all.mae = tot_abs / n_all;
    all.rmse = std::sqrt(tot_sq / n_all);
    all.mape = 100.0 * tot_ape / n_all;
    all.count = static_cast<long>(W * S * V);
    out.push_back(all);
    return out;
}

void save_metrics_csv(const std::vector<MetricSet>& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write metrics: " + path);
    out << "horizon,mae,mape,rmse,count\n";
    char buf[160];
    for (const MetricSet& m : metrics) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%ld\n", m.horizon.c_str(), m.mae,
                      m.mape, m.rmse, m.count);
        out << buf;
    }
}

}  // namespace stc
