#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stc/curriculum.hpp"
#include "stc/data.hpp"
#include "stc/metrics.hpp"
#include "stc/model.hpp"

namespace stc {

struct TrainConfig {
    // [model]
    std::vector<int> channels = {12, 12};
    std::vector<int> kernels = {4, 0};  // 0 = auto on the last block
    int tap_block = 0;

    // [train]
    int window = 12;
    int horizon = 3;
    int batch_size = 64;
    double lr = 1e-3;
    int max_epochs = 200;
    int patience = 10;
    double min_delta = 1e-4;
    std::uint64_t seed = 1;

    // [curriculum]
    Strategy strategy = Strategy::Stc;
    double alpha_bar = 0.3;
    double rho = 0.3;
    int k = 2;
    double beta = 0.0;      // used when beta_auto is false
    bool beta_auto = true;  // beta = 1000 / (T * |V|)
    int refresh_every = 0;  // 0 = once per epoch
    int eval_batch_windows = 256;
    double dropout_p = 0.1;
    bool use_weighting = true;

    // [data]
    double train_ratio = 0.7;
    double val_ratio = 0.1;
    double noise_delta = 0.0;  // training-split disturbance magnitude

    void validate() const;
    std::string serialize() const;
    std::string hash() const;

    static TrainConfig parse(const std::string& text);
    static TrainConfig load(const std::string& path);

    ModelConfig model_config(int input_dim) const;
};

// Mean-of-squares objective over weighted residuals, normalized by the
// number of active (positively weighted) nodes so the magnitude stays
// comparable as the retained set grows. Returns the loss and its gradient
// with respect to the predictions.
std::pair<double, Tensor> weighted_loss(const Tensor& pred, const Tensor& target,
                                        const std::vector<double>& weights);

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    void step(const std::vector<Tensor*>& params, const Gradients& grads);
    long updates() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct StopDecision {
    bool stop = false;
    int best_epoch = 0;
};

/// Keras-style patience rule: stop once `patience` consecutive epochs fail
/// to improve the qualified best by a relative min_delta. best_epoch is the
/// argmin of the history (first occurrence).
StopDecision early_stopping_monitor(const std::vector<double>& history, int patience,
                                    double min_delta);

struct RunRecord {
    std::string config_hash;
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch
    int best_epoch = 0;
    double best_val = 0.0;
    std::vector<MetricSet> test_metrics;
    double wall_clock_seconds = 0.0;
    std::string trace_path;

    void save(const std::string& path) const;
    static RunRecord load(const std::string& path);
};

// Batched helpers shared by training, evaluation and difficulty scoring.
Tensor predict_windows(const STModel& model, const Graph& g, const Tensor& values_norm,
                       const std::vector<int>& offsets, int window, int horizon, int batch_size);
Tensor mean_tap_activations(const STModel& model, const Graph& g, const Tensor& values_norm,
                            const std::vector<int>& offsets, int window, int batch_size);
std::vector<int> difficulty_sample(int num_windows, int eval_batch_windows, std::uint64_t seed);

// Full optimization loop: curriculum refresh/step per gradient update,
// masked forward, weighted loss, Adam, per-epoch validation with early
// stopping, best-parameter restore, and final per-horizon test metrics.
RunRecord fit(STModel& model, const Splits& splits, const Graph& g, const TrainConfig& cfg,
              std::vector<CurriculumState::TraceRow>* trace = nullptr);

}  // namespace stc
