// stcd: curriculum-dropout training harness for spatial-temporal graph
// forecasting. Subcommands: synth, train, eval, score-difficulty, compare,
// noise-sweep.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stc/error.hpp"
#include "stc/experiments.hpp"

namespace fs = std::filesystem;

namespace {

// Relative output directories resolve against $STC_OUTPUT_ROOT when set.
std::string resolve_out_dir(const std::string& out) {
    const char* root = std::getenv("STC_OUTPUT_ROOT");
    if (root != nullptr && *root != '\0' && !out.empty() && !fs::path(out).is_absolute()) {
        return (fs::path(root) / out).string();
    }
    return out;
}

struct CommonArgs {
    std::string config_path;
    std::string signals, edges, distances, checkpoint, out;
    std::vector<std::uint64_t> seeds;
    std::vector<double> deltas;

    // command-line overrides of config keys
    std::string strategy;
    std::int64_t seed = -1;
    int max_epochs = -1;
    double noise_delta = -1.0;
    double alpha_bar = -1.0;
    double rho = -1.0;
    int k = -1;
};

void add_data_options(CLI::App* cmd, CommonArgs& a, bool need_graph) {
    cmd->add_option("--data", a.signals, "signal CSV (header of node ids, one row per step)")
        ->required();
    auto* edges = cmd->add_option("--edges", a.edges, "edge list CSV (src,dst,weight)");
    auto* dist = cmd->add_option("--distances", a.distances,
                                 "distance matrix CSV (blank cells = missing)");
    if (need_graph) {
        edges->excludes(dist);
    }
}

void add_config_options(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "flat key-value config file (sections per module)");
    cmd->add_option("--strategy", a.strategy,
                    "override curriculum.strategy "
                    "(stc|anti|sc_only|tc_only|mean_fill|plain_dropout|none; default stc)");
    cmd->add_option("--seed", a.seed, "override train.seed (default 1)");
    cmd->add_option("--max-epochs", a.max_epochs, "override train.max_epochs (default 200)");
    cmd->add_option("--noise-delta", a.noise_delta, "override data.noise_delta (default 0)");
    cmd->add_option("--alpha-bar", a.alpha_bar, "override curriculum.alpha_bar (default 0.3)");
    cmd->add_option("--rho", a.rho, "override curriculum.rho (default 0.3)");
    cmd->add_option("--k", a.k, "override curriculum.k (default 2)");
}

stc::TrainConfig resolve_config(const CommonArgs& a) {
    stc::TrainConfig cfg =
        a.config_path.empty() ? stc::TrainConfig{} : stc::TrainConfig::load(a.config_path);
    if (!a.strategy.empty()) cfg.strategy = stc::strategy_from_string(a.strategy);
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (a.max_epochs >= 0) cfg.max_epochs = a.max_epochs;
    if (a.noise_delta >= 0.0) cfg.noise_delta = a.noise_delta;
    if (a.alpha_bar >= 0.0) cfg.alpha_bar = a.alpha_bar;
    if (a.rho >= 0.0) cfg.rho = a.rho;
    if (a.k >= 0) cfg.k = a.k;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ST curriculum dropout trainer"};
    app.require_subcommand(1);

    CommonArgs a;
    stc::SynthConfig synth;

    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    cmd_synth->add_option("--nodes", synth.num_nodes, "total node count (default 40)");
    cmd_synth->add_option("--easy", synth.num_easy, "easy nodes (default 28)");
    cmd_synth->add_option("--hard-temporal", synth.num_hard_temporal,
                          "random-walk nodes (default 6)");
    cmd_synth->add_option("--hard-spatial", synth.num_hard_spatial,
                          "anti-phase nodes (default 6)");
    cmd_synth->add_option("--steps", synth.num_steps, "time steps (default 2000)");
    cmd_synth->add_option("--synth-seed", synth.seed, "generator seed (default 1)");
    cmd_synth->add_option("--out", a.out, "output directory")->required();

    auto* cmd_train = app.add_subcommand("train", "train a model and write checkpoint + record");
    add_data_options(cmd_train, a, true);
    add_config_options(cmd_train, a);
    cmd_train->add_option("--out", a.out, "output directory")->required();

    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_data_options(cmd_eval, a, true);
    add_config_options(cmd_eval, a);
    cmd_eval->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
    cmd_eval->add_option("--out", a.out, "output directory")->required();

    auto* cmd_score = app.add_subcommand("score-difficulty", "emit the per-node difficulty CSV");
    add_data_options(cmd_score, a, true);
    add_config_options(cmd_score, a);
    cmd_score->add_option("--checkpoint", a.checkpoint,
                          "checkpoint file (omit to score an untrained model)");
    cmd_score->add_option("--out", a.out, "output directory")->required();

    auto* cmd_compare =
        app.add_subcommand("compare", "train every strategy across a seed list");
    add_data_options(cmd_compare, a, true);
    add_config_options(cmd_compare, a);
    cmd_compare->add_option("--seeds", a.seeds, "seed list")->required()->delimiter(',');
    cmd_compare->add_option("--out", a.out, "output directory")->required();

    auto* cmd_sweep =
        app.add_subcommand("noise-sweep", "train {none,stc} over a noise-magnitude grid");
    add_data_options(cmd_sweep, a, true);
    add_config_options(cmd_sweep, a);
    cmd_sweep->add_option("--seeds", a.seeds, "seed list")->required()->delimiter(',');
    cmd_sweep->add_option("--deltas", a.deltas, "noise magnitudes")->required()->delimiter(',');
    cmd_sweep->add_option("--out", a.out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        stc::ExperimentSpec spec;
        spec.synth = synth;
        spec.signals_path = a.signals;
        spec.edges_path = a.edges;
        spec.distances_path = a.distances;
        spec.checkpoint_path = a.checkpoint;
        spec.out_dir = resolve_out_dir(a.out);
        spec.seeds = a.seeds;
        spec.deltas = a.deltas;
        spec.config = resolve_config(a);

        if (cmd_synth->parsed()) spec.command = "synth";
        else if (cmd_train->parsed()) spec.command = "train";
        else if (cmd_eval->parsed()) spec.command = "eval";
        else if (cmd_score->parsed()) spec.command = "score-difficulty";
        else if (cmd_compare->parsed()) spec.command = "compare";
        else spec.command = "noise-sweep";

        stc::run(spec);
    } catch (const stc::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
