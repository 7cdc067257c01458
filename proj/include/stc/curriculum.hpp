#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stc/difficulty.hpp"
#include "stc/rng.hpp"

namespace stc {

enum class Strategy {
    Stc,           // scheduled easy-first dropout + piecewise weighting
    Anti,          // mirrored: hardest nodes first
    ScOnly,        // threshold on 1 - spatial term only
    TcOnly,        // threshold on 1 - temporal term only
    MeanFill,      // stc selection; dropped taps replaced by retained neighbor means
    PlainDropout,  // score-free iid node dropout
    None,          // disabled: all nodes, unit weights
};

Strategy strategy_from_string(const std::string& name);
std::string strategy_to_string(Strategy s);

/// Retain-rate schedule pi(t) = 1 - (1 - alpha_bar) exp(-beta t).
double scheduler(long t, double alpha_bar, double beta);

/// beta = 1000 / (T * |V|); guarantees near-total retention by update T.
double beta_heuristic(long total_updates, int num_nodes);

/// Nearest-rank retain-quantile of the score multiset: the ceil(retain*V)-th
/// smallest value.
double threshold(const std::vector<double>& scores, double retain);

/// mask_i = 1 iff scores_i <= s_t; ties at the threshold are retained.
std::vector<double> build_mask(const std::vector<double>& scores, double s_t);

// Piecewise weights: 1 for long-retained nodes (score <= s_prev), 1+retain
// for newly admitted ones (s_prev < score <= s_curr), 0 for dropped nodes.
// Pass -inf as s_prev at t = 0 so the whole initial set counts as new.
std::vector<double> node_weights(const std::vector<double>& scores, double s_prev, double s_curr,
                                 double retain);

struct CurriculumConfig {
    Strategy strategy = Strategy::Stc;
    double alpha_bar = 0.3;
    double beta = 1e-3;
    long total_updates = 0;   // informational; beta is resolved by the caller
    int refresh_every = 1;    // score recompute cadence, in gradient updates
    double dropout_p = 0.1;   // PlainDropout only
    bool use_weighting = true;
    std::uint64_t seed = 1;
};

// Single-writer state machine over Eqs. 8-12: step() consumes the current
// update counter t, produces mask/weights, and advances to t+1.
class CurriculumState {
public:
    CurriculumState(const CurriculumConfig& cfg, int num_nodes);

    bool needs_scores() const;
    bool refresh_due() const;  // true when step() must be given a fresh report

    void step(const DifficultyReport* fresh_scores = nullptr);

    long t() const { return t_; }
    double pi() const { return pi_; }
    double threshold_curr() const { return s_curr_; }
    double threshold_prev() const { return s_prev_; }
    const std::vector<double>& mask() const { return mask_; }
    const std::vector<double>& weights() const { return weights_; }
    const DifficultyReport& scores() const { return scores_; }
    int num_retained() const;

    struct TraceRow {
        long t;
        double pi;
        double s_t;
        int num_retained;
        double mean_weight;
    };
    TraceRow trace_row() const;

private:
    std::vector<double> effective_scores() const;

    CurriculumConfig cfg_;
    int num_nodes_;
    long t_ = 0;
    double pi_ = 0.0;
    double s_curr_ = 0.0;
    double s_prev_ = 0.0;
    bool have_prev_ = false;        // false until the first thresholded step
    bool saturated_ = false;        // a past step already retained every node by rank
    bool scores_valid_ = false;
    DifficultyReport scores_;
    std::vector<double> mask_;
    std::vector<double> weights_;
    Rng rng_;
};

void save_trace_csv(const std::vector<CurriculumState::TraceRow>& rows, const std::string& path);

}  // namespace stc
