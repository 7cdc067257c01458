#pragma once

#include <string>
#include <vector>

#include "stc/tensor.hpp"

namespace stc {

struct MetricSet {
    std::string horizon;  // 1-based output step, or "all"
    double mae = 0.0;
    double mape = 0.0;  // percent
    double rmse = 0.0;
    long count = 0;
};

/// MAE / RMSE / MAPE over (window, step, node) terms of de-normalized
/// predictions vs targets, per horizon step plus the aggregate. MAPE guards
/// the denominator with epsilon.
std::vector<MetricSet> evaluate(const Tensor& preds, const Tensor& targets,
                                double epsilon = 1e-5);

void save_metrics_csv(const std::vector<MetricSet>& metrics, const std::string& path);

}  // namespace stc
