#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stc/graph.hpp"
#include "stc/tensor.hpp"

namespace stc {

enum class NodeLabel { Easy, HardTemporal, HardSpatial };

std::string node_label_to_string(NodeLabel l);
NodeLabel node_label_from_string(const std::string& s);

// Per-feature z-score parameters, fit on the training split only.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    Tensor normalize(const Tensor& values) const;
    Tensor denormalize(const Tensor& values) const;
    double denormalize_value(double x, std::size_t feature) const;
};

struct SignalDataset {
    Tensor values;                     // (T_steps, V, D)
    std::vector<NodeLabel> node_meta;  // empty unless synthetic
    Tensor clean;                      // noise-free source signal; empty unless synthetic

    int num_steps() const { return static_cast<int>(values.dim(0)); }
    int num_nodes() const { return static_cast<int>(values.dim(1)); }
    int num_features() const { return static_cast<int>(values.dim(2)); }
};

struct Splits {
    SignalDataset train;
    SignalDataset val;
    SignalDataset test;
    Normalization norm;
};

// Signal CSV: header row of node ids, then T_steps rows of numeric cells.
SignalDataset load_signal_csv(const std::string& path);
void save_signal_csv(const SignalDataset& ds, const std::string& path);

/// Contiguous chronological spans; train and val sizes floor the ratios and
/// the remainder goes to test. Normalization statistics come from the train
/// span alone.
Splits chronological_split(const SignalDataset& ds, double train_ratio = 0.7,
                           double val_ratio = 0.1);

/// Offsets of all maximal stride-1 windows: len - window - horizon + 1 of them.
std::vector<int> make_windows(int num_steps, int window, int horizon);

// Materialize one window pair: input (window, V, D) and target (horizon, V)
// taken from feature 0.
void window_at(const Tensor& values, int offset, int window, int horizon, Tensor& x, Tensor& y);

// Gather a batch of windows into (B, window, V, D) and (B, horizon, V).
void gather_batch(const Tensor& values, const std::vector<int>& offsets, int window, int horizon,
                  Tensor& x, Tensor& y);

struct SynthConfig {
    int num_nodes = 40;
    int num_easy = 28;
    int num_hard_temporal = 6;
    int num_hard_spatial = 6;
    int num_steps = 2000;
    std::uint64_t seed = 1;
    double period = 200.0;       // steps per signal cycle
    double noise_level = 0.05;   // additive noise, fraction of amplitude
    double target_mean_degree = 4.0;
};

struct SynthResult {
    SignalDataset dataset;
    Graph graph;
    std::vector<double> pos_x, pos_y;  // node coordinates in the unit square
};

// Random geometric graph plus planted node classes: easy nodes share a
// double-peak daily profile with small phase jitter, hard-temporal nodes
// emit bounded random walks, hard-spatial nodes emit the shared profile
// half a period out of phase with all of their neighbors.
SynthResult synth_generate(const SynthConfig& cfg);

void save_node_meta_csv(const SynthResult& synth, const std::string& path);

/// Multiplicative disturbance x -> (1 + delta) x with delta ~ U(-delta_max,
/// +delta_max), drawn i.i.d. per entry. Intended for the training split.
SignalDataset inject_noise(const SignalDataset& ds, double delta_max, std::uint64_t seed);

}  // namespace stc
