#include "stc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stc/error.hpp"
#include "stc/rng.hpp"

namespace stc {

std::string node_label_to_string(NodeLabel l) {
    switch (l) {
        case NodeLabel::Easy: return "easy";
        case NodeLabel::HardTemporal: return "hard_temporal";
        case NodeLabel::HardSpatial: return "hard_spatial";
    }
    fail("domain", "unknown node label");
}

NodeLabel node_label_from_string(const std::string& s) {
    if (s == "easy") return NodeLabel::Easy;
    if (s == "hard_temporal") return NodeLabel::HardTemporal;
    if (s == "hard_spatial") return NodeLabel::HardSpatial;
    fail("io", "unknown node label '" + s + "'");
}

Tensor Normalization::normalize(const Tensor& values) const {
    const std::size_t D = values.dim(2);
    if (mean.size() != D) fail("shape", "normalization feature count mismatch");
    Tensor out = values;
    for (std::size_t t = 0; t < values.dim(0); ++t)
        for (std::size_t v = 0; v < values.dim(1); ++v)
            for (std::size_t f = 0; f < D; ++f)
                out(t, v, f) = (values(t, v, f) - mean[f]) / stddev[f];
    return out;
}

Tensor Normalization::denormalize(const Tensor& values) const {
    const std::size_t D = values.dim(2);
    if (mean.size() != D) fail("shape", "normalization feature count mismatch");
    Tensor out = values;
    for (std::size_t t = 0; t < values.dim(0); ++t)
        for (std::size_t v = 0; v < values.dim(1); ++v)
            for (std::size_t f = 0; f < D; ++f) out(t, v, f) = values(t, v, f) * stddev[f] + mean[f];
    return out;
}

double Normalization::denormalize_value(double x, std::size_t feature) const {
    return x * stddev[feature] + mean[feature];
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

SignalDataset load_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open signal file: " + path);
    std::string line;
    if (!std::getline(in, line)) fail("io", "empty signal file: " + path);
    const std::size_t num_nodes = split_line(line).size();
    if (num_nodes == 0) fail("io", "signal file has no columns: " + path);

    std::vector<double> data;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != num_nodes) {
            fail("io", "ragged row " + std::to_string(row) + " in " + path + ": expected " +
                           std::to_string(num_nodes) + " cells, got " +
                           std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            if (cell.empty()) {
                fail("io", "missing value at row " + std::to_string(row) + ", column " +
                               std::to_string(c + 1) + " of " + path);
            }
            try {
                std::size_t pos = 0;
                data.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                fail("io", "non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                               ", column " + std::to_string(c + 1) + " of " + path);
            }
        }
    }
    const std::size_t steps = data.size() / num_nodes;
    if (steps == 0) fail("io", "signal file has no data rows: " + path);

    SignalDataset ds;
    ds.values = Tensor({steps, num_nodes, 1}, std::move(data));
    return ds;
}

void save_signal_csv(const SignalDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write signal file: " + path);
    for (int v = 0; v < ds.num_nodes(); ++v) out << (v ? "," : "") << v;
    out << "\n";
    char buf[40];
    for (int t = 0; t < ds.num_steps(); ++t) {
        for (int v = 0; v < ds.num_nodes(); ++v) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.values(t, v, 0));
            out << (v ? "," : "") << buf;
        }
        out << "\n";
    }
}

Splits chronological_split(const SignalDataset& ds, double train_ratio, double val_ratio) {
    if (!(train_ratio > 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio < 1.0)) {
        fail("config", "split ratios must satisfy 0 < train, 0 <= val, train + val < 1");
    }
    const int T = ds.num_steps();
    const int n_train = static_cast<int>(std::floor(train_ratio * T));
    const int n_val = static_cast<int>(std::floor(val_ratio * T));
    const int n_test = T - n_train - n_val;
    if (n_train < 2 || n_val < 1 || n_test < 1) {
        fail("domain", "dataset too short to split: " + std::to_string(T) +
                           " steps (need at least " +
                           std::to_string(static_cast<int>(std::ceil(2.0 / train_ratio))) + ")");
    }

    auto slice = [&](int begin, int len) {
        SignalDataset part;
        const std::size_t V = ds.values.dim(1), D = ds.values.dim(2);
        part.values = Tensor({static_cast<std::size_t>(len), V, D});
        for (int t = 0; t < len; ++t)
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t f = 0; f < D; ++f)
                    part.values(t, v, f) = ds.values(begin + t, v, f);
        part.node_meta = ds.node_meta;
        if (!ds.clean.empty()) {
            part.clean = Tensor({static_cast<std::size_t>(len), V, D});
            for (int t = 0; t < len; ++t)
                for (std::size_t v = 0; v < V; ++v)
                    for (std::size_t f = 0; f < D; ++f)
                        part.clean(t, v, f) = ds.clean(begin + t, v, f);
        }
        return part;
    };

    Splits sp;
    sp.train = slice(0, n_train);
    sp.val = slice(n_train, n_val);
    sp.test = slice(n_train + n_val, n_test);

    const std::size_t D = ds.values.dim(2);
    sp.norm.mean.assign(D, 0.0);
    sp.norm.stddev.assign(D, 0.0);
    const double count = static_cast<double>(n_train) * ds.values.dim(1);
    for (std::size_t f = 0; f < D; ++f) {
        double sum = 0.0, sum_sq = 0.0;
        for (int t = 0; t < n_train; ++t)
            for (std::size_t v = 0; v < ds.values.dim(1); ++v) {
                const double x = sp.train.values(t, v, f);
                sum += x;
                sum_sq += x * x;
            }
        const double mean = sum / count;
        const double var = std::max(0.0, sum_sq / count - mean * mean);
        if (var <= 0.0) {
            fail("domain", "feature " + std::to_string(f) +
                               " is constant on the training split; z-score is undefined");
        }
        sp.norm.mean[f] = mean;
        sp.norm.stddev[f] = std::sqrt(var);
    }
    return sp;
}

std::vector<int> make_windows(int num_steps, int window, int horizon) {
    if (window < 1 || horizon < 1) fail("config", "window and horizon must be positive");
    const int count = num_steps - window - horizon + 1;
    if (count < 1) {
        fail("domain", "split too short for windowing: " + std::to_string(num_steps) +
                           " steps, need at least " + std::to_string(window + horizon));
    }
    std::vector<int> offsets(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) offsets[static_cast<std::size_t>(i)] = i;
    return offsets;
}

void window_at(const Tensor& values, int offset, int window, int horizon, Tensor& x, Tensor& y) {
    const std::size_t V = values.dim(1), D = values.dim(2);
    x = Tensor({static_cast<std::size_t>(window), V, D});
    y = Tensor({static_cast<std::size_t>(horizon), V});
    for (int t = 0; t < window; ++t)
        for (std::size_t v = 0; v < V; ++v)
            for (std::size_t f = 0; f < D; ++f) x(t, v, f) = values(offset + t, v, f);
    for (int s = 0; s < horizon; ++s)
        for (std::size_t v = 0; v < V; ++v) y(s, v) = values(offset + window + s, v, 0);
}

void gather_batch(const Tensor& values, const std::vector<int>& offsets, int window, int horizon,
                  Tensor& x, Tensor& y) {
    const std::size_t B = offsets.size();
    const std::size_t V = values.dim(1), D = values.dim(2);
    x = Tensor({B, static_cast<std::size_t>(window), V, D});
    y = Tensor({B, static_cast<std::size_t>(horizon), V});
    for (std::size_t b = 0; b < B; ++b) {
        const int o = offsets[b];
        for (int t = 0; t < window; ++t)
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t f = 0; f < D; ++f) x(b, t, v, f) = values(o + t, v, f);
        for (int s = 0; s < horizon; ++s)
            for (std::size_t v = 0; v < V; ++v) y(b, s, v) = values(o + window + s, v, 0);
    }
}

namespace {

double base_profile(double t, double period) {
    const double w = 2.0 * std::numbers::pi * t / period;
    return std::sin(w) + 0.6 * std::sin(2.0 * w + 0.9);
}

}  // namespace

SynthResult synth_generate(const SynthConfig& cfg) {
    if (cfg.num_nodes < 2) fail("config", "synthetic benchmark needs at least 2 nodes");
    if (cfg.num_easy + cfg.num_hard_temporal + cfg.num_hard_spatial != cfg.num_nodes) {
        fail("config", "node class counts must sum to num_nodes");
    }
    if (cfg.num_steps < 4) fail("config", "num_steps too small");

    Rng rng(cfg.seed);
    const int n = cfg.num_nodes;

    // Random geometric graph; radius targets the requested mean degree.
    std::vector<double> px(n), py(n);
    for (int i = 0; i < n; ++i) {
        px[i] = rng.uniform();
        py[i] = rng.uniform();
    }
    const double radius =
        std::sqrt(cfg.target_mean_degree / (static_cast<double>(n - 1) * std::numbers::pi));

    DistanceMatrix dist = DistanceMatrix::empty(n);
    auto euclid = [&](int i, int j) {
        const double dx = px[i] - px[j], dy = py[i] - py[j];
        return std::sqrt(dx * dx + dy * dy);
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = euclid(i, j);
            if (d <= radius) dist.set(i, j, d);
        }
    // Attach isolated nodes to their nearest neighbor so every node has at
    // least one k-order neighbor.
    for (int i = 0; i < n; ++i) {
        bool isolated = true;
        for (int j = 0; j < n && isolated; ++j) {
            if (i != j && !dist.missing(i, j)) isolated = false;
        }
        if (!isolated) continue;
        int best = -1;
        double best_d = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = euclid(i, j);
            if (best < 0 || d < best_d) {
                best = j;
                best_d = d;
            }
        }
        dist.set(i, best, best_d);
        dist.set(best, i, best_d);
    }

    Graph g = gaussian_kernel_adjacency(dist);

    // Plant labels. Hard-spatial nodes must have exclusively easy neighbors,
    // otherwise the anti-phase contrast is not well defined; pick them first,
    // pairwise non-adjacent with disjoint neighborhoods, then hard-temporal
    // nodes away from those neighborhoods.
    std::vector<NodeLabel> labels(n, NodeLabel::Easy);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::uint8_t> blocked(n, 0);  // hard_spatial node or adjacent to one
    int placed_hs = 0;
    for (int idx : order) {
        if (placed_hs == cfg.num_hard_spatial) break;
        if (blocked[idx]) continue;
        bool has_neighbor = false;
        for (int j = 0; j < n && !has_neighbor; ++j) {
            if (j != idx && g.has_edge(idx, j)) has_neighbor = true;
        }
        if (!has_neighbor) continue;
        labels[idx] = NodeLabel::HardSpatial;
        blocked[idx] = 1;
        for (int j = 0; j < n; ++j) {
            if (j != idx && g.has_edge(idx, j)) blocked[j] = 1;
        }
        ++placed_hs;
    }
    if (placed_hs < cfg.num_hard_spatial) {
        fail("domain", "could not place " + std::to_string(cfg.num_hard_spatial) +
                           " hard_spatial nodes with easy-only neighborhoods; lower the count");
    }
    int placed_ht = 0;
    for (int idx : order) {
        if (placed_ht == cfg.num_hard_temporal) break;
        if (blocked[idx] || labels[idx] != NodeLabel::Easy) continue;
        labels[idx] = NodeLabel::HardTemporal;
        ++placed_ht;
    }
    if (placed_ht < cfg.num_hard_temporal) {
        fail("domain", "could not place " + std::to_string(cfg.num_hard_temporal) +
                           " hard_temporal nodes; lower the count");
    }

    // Amplitude of the shared profile, for scaling noise and walks.
    double lo = 0.0, hi = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double v = base_profile(cfg.period * t / 1000.0, cfg.period);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double amplitude = 0.5 * (hi - lo);

    const std::size_t T = static_cast<std::size_t>(cfg.num_steps);
    Tensor clean({T, static_cast<std::size_t>(n), 1});
    Tensor noisy({T, static_cast<std::size_t>(n), 1});
    for (int v = 0; v < n; ++v) {
        if (labels[v] == NodeLabel::HardTemporal) {
            // Bounded random walk, reflected at +-amplitude.
            double x = rng.uniform(-0.5 * amplitude, 0.5 * amplitude);
            const double step = 0.25 * amplitude;
            for (std::size_t t = 0; t < T; ++t) {
                x += rng.normal(0.0, step);
                if (x > amplitude) x = 2.0 * amplitude - x;
                if (x < -amplitude) x = -2.0 * amplitude - x;
                clean(t, v, 0) = x;
                noisy(t, v, 0) = x;
            }
        } else {
            const double shift =
                labels[v] == NodeLabel::HardSpatial ? 0.5 * cfg.period : 0.0;
            const double jitter = rng.uniform(-0.02 * cfg.period, 0.02 * cfg.period);
            for (std::size_t t = 0; t < T; ++t) {
                const double s = base_profile(static_cast<double>(t) + shift + jitter, cfg.period);
                clean(t, v, 0) = s;
                noisy(t, v, 0) = s + rng.normal(0.0, cfg.noise_level * amplitude);
            }
        }
    }

    SynthResult out;
    out.dataset.values = std::move(noisy);
    out.dataset.clean = std::move(clean);
    out.dataset.node_meta = std::move(labels);
    out.graph = std::move(g);
    out.pos_x = std::move(px);
    out.pos_y = std::move(py);
    return out;
}

void save_node_meta_csv(const SynthResult& synth, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write node metadata: " + path);
    out << "node,label,x,y\n";
    char buf[96];
    for (int v = 0; v < synth.dataset.num_nodes(); ++v) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g\n", v,
                      node_label_to_string(synth.dataset.node_meta[v]).c_str(), synth.pos_x[v],
                      synth.pos_y[v]);
        out << buf;
    }
}

SignalDataset inject_noise(const SignalDataset& ds, double delta_max, std::uint64_t seed) {
    if (delta_max < 0.0) fail("domain", "noise magnitude must be non-negative");
    SignalDataset out = ds;
    if (delta_max == 0.0) return out;
    Rng rng(seed);
    for (double& x : out.values.values()) {
        x *= 1.0 + rng.uniform(-delta_max, delta_max);
    }
    return out;
}

}  // namespace stc
