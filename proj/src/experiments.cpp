#include "stc/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stc/checkpoint.hpp"
#include "stc/error.hpp"

namespace fs = std::filesystem;

namespace stc {

namespace {

void require_file(const std::string& path, const char* what) {
    if (path.empty()) fail("config", std::string(what) + " path is required for this command");
    if (!fs::exists(path)) fail("io", std::string(what) + " not found: " + path);
}

// RAII marker: present while a mutating command runs, removed on success, so
// an interrupted run is detectable and never mistaken for a complete one.
class PartialMarker {
public:
    explicit PartialMarker(const fs::path& dir) : path_(dir / ".partial") {
        std::ofstream out(path_);
        out << "in-progress\n";
    }

    // The marker stays behind unless the command reaches complete().
    void complete() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) fail("io", "cannot write " + path.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string format_cell_row(const CellResult& c, bool with_delta) {
    char buf[200];
    if (with_delta) {
        std::snprintf(buf, sizeof(buf), "%.10g,%s,%llu,%.10g\n", c.delta, c.strategy.c_str(),
                      static_cast<unsigned long long>(c.seed), c.rmse);
    } else {
        std::snprintf(buf, sizeof(buf), "%s,%llu,%.10g,%.10g,%.10g\n", c.strategy.c_str(),
                      static_cast<unsigned long long>(c.seed), c.mae, c.mape, c.rmse);
    }
    return buf;
}

const MetricSet& aggregate_metrics(const std::vector<MetricSet>& sets) {
    for (const MetricSet& m : sets) {
        if (m.horizon == "all") return m;
    }
    fail("state", "metric set has no aggregate row");
}

}  // namespace

Graph load_graph_for(const ExperimentSpec& spec, int expected_nodes) {
    Graph g;
    if (!spec.edges_path.empty()) {
        g = load_edge_list_csv(spec.edges_path, expected_nodes);
    } else if (!spec.distances_path.empty()) {
        g = gaussian_kernel_adjacency(load_distance_csv(spec.distances_path));
    } else {
        fail("config", "either an edge list or a distance matrix is required");
    }
    if (g.num_nodes != expected_nodes) {
        fail("domain", "graph has " + std::to_string(g.num_nodes) + " nodes but the dataset has " +
                           std::to_string(expected_nodes));
    }
    return g;
}

Splits prepare_splits(const SignalDataset& ds, const TrainConfig& cfg) {
    Splits splits = chronological_split(ds, cfg.train_ratio, cfg.val_ratio);
    if (cfg.noise_delta > 0.0) {
        splits.train = inject_noise(splits.train, cfg.noise_delta, cfg.seed ^ 0xA015EULL);
    }
    return splits;
}

std::vector<MetricSet> compute_test_metrics(const STModel& model, const Splits& splits,
                                            const Graph& g, const TrainConfig& cfg) {
    const Tensor test_norm = splits.norm.normalize(splits.test.values);
    const std::vector<int> offsets = make_windows(splits.test.num_steps(), cfg.window, cfg.horizon);
    const Tensor preds_norm =
        predict_windows(model, g, test_norm, offsets, cfg.window, cfg.horizon, cfg.batch_size);
    Tensor preds = preds_norm;
    Tensor targets({offsets.size(), static_cast<std::size_t>(cfg.horizon),
                    static_cast<std::size_t>(g.num_nodes)});
    for (std::size_t i = 0; i < offsets.size(); ++i)
        for (int s = 0; s < cfg.horizon; ++s)
            for (int v = 0; v < g.num_nodes; ++v) {
                preds(i, s, v) = splits.norm.denormalize_value(preds_norm(i, s, v), 0);
                targets(i, s, v) = splits.test.values(offsets[i] + cfg.window + s, v, 0);
            }
    return evaluate(preds, targets);
}

CellResult run_cell(const SignalDataset& ds, const Graph& g, TrainConfig cfg, Strategy strategy,
                    std::uint64_t seed, double noise_delta) {
    cfg.strategy = strategy;
    cfg.seed = seed;
    cfg.noise_delta = noise_delta;
    const Splits splits = prepare_splits(ds, cfg);
    STModel model = STModel::init(cfg.model_config(ds.num_features()));
    const RunRecord rec = fit(model, splits, g, cfg);
    const MetricSet& all = aggregate_metrics(rec.test_metrics);
    CellResult cell;
    cell.strategy = strategy_to_string(strategy);
    cell.seed = seed;
    cell.delta = noise_delta;
    cell.mae = all.mae;
    cell.mape = all.mape;
    cell.rmse = all.rmse;
    return cell;
}

namespace {

void run_synth(const ExperimentSpec& spec) {
    const SynthResult synth = synth_generate(spec.synth);
    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);
    save_signal_csv(synth.dataset, (fs::path(spec.out_dir) / "signals.csv").string());
    save_edge_list_csv(synth.graph, (fs::path(spec.out_dir) / "edges.csv").string());
    save_node_meta_csv(synth, (fs::path(spec.out_dir) / "nodes_meta.csv").string());
    marker.complete();
}

void run_train(const ExperimentSpec& spec) {
    require_file(spec.signals_path, "signal file");
    if (!spec.edges_path.empty()) require_file(spec.edges_path, "edge list");
    if (!spec.distances_path.empty()) require_file(spec.distances_path, "distance matrix");

    const SignalDataset ds = load_signal_csv(spec.signals_path);
    const Graph g = load_graph_for(spec, ds.num_nodes());
    const TrainConfig& cfg = spec.config;
    const Splits splits = prepare_splits(ds, cfg);

    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);

    STModel model = STModel::init(cfg.model_config(ds.num_features()));
    std::vector<CurriculumState::TraceRow> trace;
    RunRecord rec = fit(model, splits, g, cfg, &trace);

    const fs::path out(spec.out_dir);
    save_trace_csv(trace, (out / "trace.csv").string());
    rec.trace_path = "trace.csv";
    save_checkpoint(model, cfg.hash(), (out / "checkpoint.txt").string());
    rec.save((out / "run_record.txt").string());
    marker.complete();
}

void run_eval(const ExperimentSpec& spec) {
    require_file(spec.signals_path, "signal file");
    require_file(spec.checkpoint_path, "checkpoint");
    const SignalDataset ds = load_signal_csv(spec.signals_path);
    const Graph g = load_graph_for(spec, ds.num_nodes());
    const Checkpoint ck = load_checkpoint(spec.checkpoint_path);
    const Splits splits = chronological_split(ds, spec.config.train_ratio, spec.config.val_ratio);

    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);
    const auto metrics = compute_test_metrics(ck.model, splits, g, spec.config);
    save_metrics_csv(metrics, (fs::path(spec.out_dir) / "metrics.csv").string());
    marker.complete();
}

void run_score_difficulty(const ExperimentSpec& spec) {
    require_file(spec.signals_path, "signal file");
    const SignalDataset ds = load_signal_csv(spec.signals_path);
    const Graph g = load_graph_for(spec, ds.num_nodes());
    const TrainConfig& cfg = spec.config;

    STModel model = spec.checkpoint_path.empty()
                        ? STModel::init(cfg.model_config(ds.num_features()))
                        : load_checkpoint(spec.checkpoint_path).model;

    const Splits splits = chronological_split(ds, cfg.train_ratio, cfg.val_ratio);
    const Tensor train_norm = splits.norm.normalize(splits.train.values);
    const std::vector<int> offsets = make_windows(splits.train.num_steps(), cfg.window, cfg.horizon);
    const std::vector<int> sample =
        difficulty_sample(static_cast<int>(offsets.size()), cfg.eval_batch_windows, cfg.seed);
    const Tensor h = mean_tap_activations(model, g, train_norm, sample, cfg.window, cfg.batch_size);
    const DifficultyReport report = difficulty_scores(h, g, cfg.k, cfg.rho);

    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);
    save_difficulty_csv(report, (fs::path(spec.out_dir) / "difficulty.csv").string());
    marker.complete();
}

void run_compare(const ExperimentSpec& spec) {
    require_file(spec.signals_path, "signal file");
    if (spec.seeds.empty()) fail("config", "compare needs a non-empty seed list");
    const SignalDataset ds = load_signal_csv(spec.signals_path);
    const Graph g = load_graph_for(spec, ds.num_nodes());

    static const Strategy kOrder[] = {Strategy::None,     Strategy::Stc,      Strategy::Anti,
                                      Strategy::ScOnly,   Strategy::TcOnly,   Strategy::MeanFill,
                                      Strategy::PlainDropout};
    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);
    std::string summary = "strategy,seed,mae,mape,rmse\n";
    for (Strategy s : kOrder) {
        for (std::uint64_t seed : spec.seeds) {
            const CellResult cell =
                run_cell(ds, g, spec.config, s, seed, spec.config.noise_delta);
            summary += format_cell_row(cell, /*with_delta=*/false);
        }
    }
    write_atomically(fs::path(spec.out_dir) / "summary.csv", summary);
    marker.complete();
}

void run_noise_sweep(const ExperimentSpec& spec) {
    require_file(spec.signals_path, "signal file");
    if (spec.seeds.empty()) fail("config", "noise-sweep needs a non-empty seed list");
    if (spec.deltas.empty()) fail("config", "noise-sweep needs a non-empty delta list");
    const SignalDataset ds = load_signal_csv(spec.signals_path);
    const Graph g = load_graph_for(spec, ds.num_nodes());

    fs::create_directories(spec.out_dir);
    PartialMarker marker(spec.out_dir);
    std::string rows = "delta,strategy,seed,rmse\n";
    for (double delta : spec.deltas) {
        for (Strategy s : {Strategy::None, Strategy::Stc}) {
            for (std::uint64_t seed : spec.seeds) {
                const CellResult cell = run_cell(ds, g, spec.config, s, seed, delta);
                rows += format_cell_row(cell, /*with_delta=*/true);
            }
        }
    }
    write_atomically(fs::path(spec.out_dir) / "sweep.csv", rows);
    marker.complete();
}

}  // namespace

void run(const ExperimentSpec& spec) {
    spec.config.validate();
    if (spec.out_dir.empty()) fail("config", "an output directory is required");
    if (spec.command == "synth") run_synth(spec);
    else if (spec.command == "train") run_train(spec);
    else if (spec.command == "eval") run_eval(spec);
    else if (spec.command == "score-difficulty") run_score_difficulty(spec);
    else if (spec.command == "compare") run_compare(spec);
    else if (spec.command == "noise-sweep") run_noise_sweep(spec);
    else fail("config", "unknown command '" + spec.command + "'");
}

}  // namespace stc
