#include "stc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "stc/error.hpp"
#include "stc/rng.hpp"

namespace stc {

std::pair<double, Tensor> weighted_loss(const Tensor& pred, const Tensor& target,
                                        const std::vector<double>& weights) {
    if (!pred.same_shape(target)) {
        fail("shape", "loss inputs disagree: " + pred.shape_string() + " vs " +
                          target.shape_string());
    }
    if (pred.rank() != 3) fail("shape", "loss expects (batch, horizon, nodes) tensors");
    const std::size_t B = pred.dim(0), S = pred.dim(1), V = pred.dim(2);
    if (weights.size() != V) fail("shape", "weight vector length does not match node count");

    int active = 0;
    for (double w : weights) {
        if (w < 0.0) fail("domain", "node weights must be non-negative");
        if (w > 0.0) ++active;
    }
    if (active == 0) fail("domain", "empty curriculum: all node weights are zero");

    const double denom = static_cast<double>(B) * static_cast<double>(S) * active;
    double loss = 0.0;
    Tensor grad({B, S, V});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                const double w = weights[v];
                if (w == 0.0) continue;
                const double r = target(b, s, v) - pred(b, s, v);
                loss += w * w * r * r;
                grad(b, s, v) = -2.0 * w * w * r / denom;
            }
    return {loss / denom, std::move(grad)};
}

Adam::Adam(double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    if (!(lr > 0.0)) fail("config", "learning rate must be positive");
}

void Adam::step(const std::vector<Tensor*>& params, const Gradients& grads) {
    if (grads.tensors.size() != params.size()) {
        fail("shape", "Adam: gradient tensor count does not match parameters");
    }
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.push_back(Tensor(p->shape()));
            v_.push_back(Tensor(p->shape()));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads.tensors[i];
        if (!p.same_shape(g)) fail("shape", "Adam: gradient shape mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g(j);
            m_[i](j) = beta1_ * m_[i](j) + (1.0 - beta1_) * gj;
            v_[i](j) = beta2_ * v_[i](j) + (1.0 - beta2_) * gj * gj;
            const double m_hat = m_[i](j) / bc1;
            const double v_hat = v_[i](j) / bc2;
            p(j) -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

StopDecision early_stopping_monitor(const std::vector<double>& history, int patience,
                                    double min_delta) {
    if (history.empty()) fail("domain", "early stopping needs a non-empty history");
    StopDecision d;
    double best = history[0];
    double qualified_best = history[0];
    int wait = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i] < best) {
            best = history[i];
            d.best_epoch = static_cast<int>(i);
        }
        if (history[i] < qualified_best * (1.0 - min_delta)) {
            qualified_best = history[i];
            wait = 0;
        } else {
            ++wait;
        }
    }
    d.stop = wait >= patience;
    return d;
}

Tensor predict_windows(const STModel& model, const Graph& g, const Tensor& values_norm,
                       const std::vector<int>& offsets, int window, int horizon, int batch_size) {
    const std::size_t V = values_norm.dim(1);
    Tensor preds({offsets.size(), static_cast<std::size_t>(horizon), V});
    Tensor x, y;
    for (std::size_t start = 0; start < offsets.size(); start += batch_size) {
        const std::size_t end = std::min(offsets.size(), start + batch_size);
        std::vector<int> chunk(offsets.begin() + start, offsets.begin() + end);
        gather_batch(values_norm, chunk, window, horizon, x, y);
        ForwardPass fp = model.forward(x, g);
        for (std::size_t b = 0; b < chunk.size(); ++b)
            for (int s = 0; s < horizon; ++s)
                for (std::size_t v = 0; v < V; ++v)
                    preds(start + b, s, v) = fp.pred(b, s, v);
    }
    return preds;
}

Tensor mean_tap_activations(const STModel& model, const Graph& g, const Tensor& values_norm,
                            const std::vector<int>& offsets, int window, int batch_size) {
    if (offsets.empty()) fail("domain", "difficulty evaluation needs at least one window");
    const std::size_t V = values_norm.dim(1);
    const std::size_t D = static_cast<std::size_t>(model.tap_dim());
    Tensor sum({V, D});
    Tensor x, y;
    for (std::size_t start = 0; start < offsets.size(); start += batch_size) {
        const std::size_t end = std::min(offsets.size(), start + batch_size);
        std::vector<int> chunk(offsets.begin() + start, offsets.begin() + end);
        gather_batch(values_norm, chunk, window, /*horizon=*/1, x, y);
        ForwardPass fp = model.forward(x, g);
        for (std::size_t b = 0; b < chunk.size(); ++b)
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t d = 0; d < D; ++d) sum(v, d) += fp.tap(b, v, d);
    }
    const double inv = 1.0 / static_cast<double>(offsets.size());
    for (double& s : sum.values()) s *= inv;
    return sum;
}

std::vector<int> difficulty_sample(int num_windows, int eval_batch_windows, std::uint64_t seed) {
    std::vector<int> all(static_cast<std::size_t>(num_windows));
    for (int i = 0; i < num_windows; ++i) all[static_cast<std::size_t>(i)] = i;
    if (num_windows <= eval_batch_windows) return all;
    Rng rng(seed ^ 0xD1FFC10E5EEDULL);
    rng.shuffle(all);
    all.resize(static_cast<std::size_t>(eval_batch_windows));
    std::sort(all.begin(), all.end());
    return all;
}

namespace {

double plain_mse(const Tensor& preds, const Tensor& targets) {
    double sq = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double r = preds(i) - targets(i);
        sq += r * r;
    }
    return sq / static_cast<double>(preds.size());
}

}  // namespace

RunRecord fit(STModel& model, const Splits& splits, const Graph& g, const TrainConfig& cfg,
              std::vector<CurriculumState::TraceRow>* trace) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const int V = g.num_nodes;
    if (splits.train.num_nodes() != V) fail("shape", "dataset node count does not match graph");

    const Tensor train_norm = splits.norm.normalize(splits.train.values);
    const Tensor val_norm = splits.norm.normalize(splits.val.values);
    const Tensor test_norm = splits.norm.normalize(splits.test.values);

    const std::vector<int> train_offsets =
        make_windows(splits.train.num_steps(), cfg.window, cfg.horizon);
    const std::vector<int> val_offsets =
        make_windows(splits.val.num_steps(), cfg.window, cfg.horizon);
    const std::vector<int> test_offsets =
        make_windows(splits.test.num_steps(), cfg.window, cfg.horizon);

    const int updates_per_epoch = static_cast<int>(
        (train_offsets.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));
    const long total_updates = static_cast<long>(cfg.max_epochs) * updates_per_epoch;

    CurriculumConfig ccfg;
    ccfg.strategy = cfg.strategy;
    ccfg.alpha_bar = cfg.alpha_bar;
    ccfg.beta = cfg.beta_auto ? beta_heuristic(total_updates, V) : cfg.beta;
    ccfg.total_updates = total_updates;
    ccfg.refresh_every = cfg.refresh_every > 0 ? cfg.refresh_every : updates_per_epoch;
    ccfg.dropout_p = cfg.dropout_p;
    ccfg.use_weighting = cfg.use_weighting;
    ccfg.seed = cfg.seed;
    CurriculumState curriculum(ccfg, V);

    const NeighborIndex neighbors = k_order_neighbors(g, cfg.k);
    const std::vector<int> eval_sample =
        difficulty_sample(static_cast<int>(train_offsets.size()), cfg.eval_batch_windows,
                          cfg.seed);

    Adam adam(cfg.lr);
    Rng shuffle_rng(cfg.seed ^ 0x5A1AD5EEDULL);

    RunRecord rec;
    rec.config_hash = cfg.hash();
    std::vector<double> best_params = model.flatten_params();
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;

    std::vector<int> order = train_offsets;
    Tensor x, y;
    DifficultyReport report;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<int> chunk(order.begin() + start, order.begin() + end);

            if (curriculum.refresh_due()) {
                const Tensor h = mean_tap_activations(model, g, train_norm, eval_sample,
                                                      cfg.window, cfg.batch_size);
                report = difficulty_scores(h, neighbors, cfg.rho);
                curriculum.step(&report);
            } else {
                curriculum.step();
            }
            if (trace != nullptr) trace->push_back(curriculum.trace_row());

            MaskSpec mask;
            mask.keep = curriculum.mask();
            mask.mode = cfg.strategy == Strategy::MeanFill ? MaskMode::MeanFill : MaskMode::Zero;
            mask.neighbors = &neighbors;

            gather_batch(train_norm, chunk, cfg.window, cfg.horizon, x, y);
            ForwardPass fp = model.forward(x, g, &mask);
            auto [loss, grad] = weighted_loss(fp.pred, y, curriculum.weights());
            Gradients grads = model.backward(fp, grad);
            auto params = model.mutable_params();
            adam.step(params, grads);
            epoch_loss += loss;
        }
        rec.train_loss.push_back(epoch_loss / updates_per_epoch);

        const Tensor val_preds = predict_windows(model, g, val_norm, val_offsets, cfg.window,
                                                 cfg.horizon, cfg.batch_size);
        Tensor val_targets({val_offsets.size(), static_cast<std::size_t>(cfg.horizon),
                            static_cast<std::size_t>(V)});
        for (std::size_t i = 0; i < val_offsets.size(); ++i)
            for (int s = 0; s < cfg.horizon; ++s)
                for (int v = 0; v < V; ++v)
                    val_targets(i, s, v) = val_norm(val_offsets[i] + cfg.window + s, v, 0);
        const double val = plain_mse(val_preds, val_targets);
        rec.val_loss.push_back(val);

        if (val < best_val) {
            best_val = val;
            best_epoch = epoch;
            best_params = model.flatten_params();
        }
        const StopDecision sd = early_stopping_monitor(rec.val_loss, cfg.patience, cfg.min_delta);
        if (sd.stop) break;
    }

    model.set_params(best_params);
    rec.best_epoch = best_epoch;
    rec.best_val = best_val;

    // Test metrics on de-normalized predictions, per horizon.
    {
        const Tensor preds_norm = predict_windows(model, g, test_norm, test_offsets, cfg.window,
                                                  cfg.horizon, cfg.batch_size);
        Tensor preds = preds_norm;
        Tensor targets({test_offsets.size(), static_cast<std::size_t>(cfg.horizon),
                        static_cast<std::size_t>(V)});
        for (std::size_t i = 0; i < test_offsets.size(); ++i)
            for (int s = 0; s < cfg.horizon; ++s)
                for (int v = 0; v < V; ++v) {
                    preds(i, s, v) = splits.norm.denormalize_value(preds_norm(i, s, v), 0);
                    targets(i, s, v) = splits.test.values(test_offsets[i] + cfg.window + s, v, 0);
                }
        rec.test_metrics = evaluate(preds, targets);
    }

    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

void RunRecord::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write run record: " + path);
    char buf[160];
    out << "format = stc-run-record-1\n";
    out << "config_hash = " << config_hash << "\n";
    out << "epochs = " << train_loss.size() << "\n";
    out << "best_epoch = " << best_epoch << "\n";
    std::snprintf(buf, sizeof(buf), "best_val = %.17g\n", best_val);
    out << buf;
    std::snprintf(buf, sizeof(buf), "wall_clock_seconds = %.6f\n", wall_clock_seconds);
    out << buf;
    if (!trace_path.empty()) out << "trace_path = " << trace_path << "\n";
    for (std::size_t i = 0; i < train_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "train_loss.%zu = %.17g\n", i, train_loss[i]);
        out << buf;
    }
    for (std::size_t i = 0; i < val_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "val_loss.%zu = %.17g\n", i, val_loss[i]);
        out << buf;
    }
    for (const MetricSet& m : test_metrics) {
        std::snprintf(buf, sizeof(buf), "test.%s.mae = %.17g\n", m.horizon.c_str(), m.mae);
        out << buf;
        std::snprintf(buf, sizeof(buf), "test.%s.mape = %.17g\n", m.horizon.c_str(), m.mape);
        out << buf;
        std::snprintf(buf, sizeof(buf), "test.%s.rmse = %.17g\n", m.horizon.c_str(), m.rmse);
        out << buf;
        std::snprintf(buf, sizeof(buf), "test.%s.count = %ld\n", m.horizon.c_str(), m.count);
        out << buf;
    }
}

RunRecord RunRecord::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open run record: " + path);
    RunRecord rec;
    std::string line;
    std::map<std::string, MetricSet> metric_map;
    std::vector<std::string> metric_order;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "config_hash") {
            rec.config_hash = value;
        } else if (key == "best_epoch") {
            rec.best_epoch = std::stoi(value);
        } else if (key == "best_val") {
            rec.best_val = std::stod(value);
        } else if (key == "wall_clock_seconds") {
            rec.wall_clock_seconds = std::stod(value);
        } else if (key == "trace_path") {
            rec.trace_path = value;
        } else if (key.rfind("train_loss.", 0) == 0) {
            rec.train_loss.push_back(std::stod(value));
        } else if (key.rfind("val_loss.", 0) == 0) {
            rec.val_loss.push_back(std::stod(value));
        } else if (key.rfind("test.", 0) == 0) {
            const auto dot = key.rfind('.');
            const std::string horizon = key.substr(5, dot - 5);
            const std::string field = key.substr(dot + 1);
            if (metric_map.find(horizon) == metric_map.end()) {
                metric_map[horizon].horizon = horizon;
                metric_order.push_back(horizon);
            }
            MetricSet& m = metric_map[horizon];
            if (field == "mae") m.mae = std::stod(value);
            else if (field == "mape") m.mape = std::stod(value);
            else if (field == "rmse") m.rmse = std::stod(value);
            else if (field == "count") m.count = std::stol(value);
        }
    }
    for (const std::string& h : metric_order) rec.test_metrics.push_back(metric_map[h]);
    return rec;
}

}  // namespace stc
