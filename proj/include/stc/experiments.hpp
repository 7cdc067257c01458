#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stc/data.hpp"
#include "stc/training.hpp"

namespace stc {

// One CLI invocation, fully resolved: config file values and command-line
// overrides are already merged into `config`.
struct ExperimentSpec {
    std::string command;  // synth|train|eval|score-difficulty|compare|noise-sweep
    TrainConfig config;
    SynthConfig synth;

    std::string signals_path;
    std::string edges_path;
    std::string distances_path;
    std::string checkpoint_path;
    std::string out_dir;

    std::vector<std::uint64_t> seeds;  // compare / noise-sweep
    std::vector<double> deltas;        // noise-sweep
};

// Executes the experiment and writes its artifacts under spec.out_dir.
// Throws Error on any failure; a ".partial" marker file is present inside
// out_dir for the duration of a mutating command.
void run(const ExperimentSpec& spec);

// Shared helpers, also used by the acceptance suite.
Graph load_graph_for(const ExperimentSpec& spec, int expected_nodes);
std::vector<MetricSet> compute_test_metrics(const STModel& model, const Splits& splits,
                                            const Graph& g, const TrainConfig& cfg);
Splits prepare_splits(const SignalDataset& ds, const TrainConfig& cfg);

struct CellResult {
    std::string strategy;
    std::uint64_t seed = 0;
    double delta = 0.0;
    double mae = 0.0;
    double mape = 0.0;
    double rmse = 0.0;
};

// Train one (strategy, seed, delta) cell from scratch and report aggregate
// test metrics.
CellResult run_cell(const SignalDataset& ds, const Graph& g, TrainConfig cfg, Strategy strategy,
                    std::uint64_t seed, double noise_delta);

}  // namespace stc
