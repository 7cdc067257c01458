#include "stc/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "stc/error.hpp"

namespace stc {

Strategy strategy_from_string(const std::string& name) {
    if (name == "stc") return Strategy::Stc;
    if (name == "anti") return Strategy::Anti;
    if (name == "sc_only") return Strategy::ScOnly;
    if (name == "tc_only") return Strategy::TcOnly;
    if (name == "mean_fill") return Strategy::MeanFill;
    if (name == "plain_dropout") return Strategy::PlainDropout;
    if (name == "none") return Strategy::None;
    fail("config", "unknown strategy '" + name +
                       "' (expected stc|anti|sc_only|tc_only|mean_fill|plain_dropout|none)");
}

std::string strategy_to_string(Strategy s) {
    switch (s) {
        case Strategy::Stc: return "stc";
        case Strategy::Anti: return "anti";
        case Strategy::ScOnly: return "sc_only";
        case Strategy::TcOnly: return "tc_only";
        case Strategy::MeanFill: return "mean_fill";
        case Strategy::PlainDropout: return "plain_dropout";
        case Strategy::None: return "none";
    }
    fail("config", "unknown strategy tag");
}

double scheduler(long t, double alpha_bar, double beta) {
    if (t < 0) fail("domain", "scheduler step must be non-negative");
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) fail("domain", "alpha_bar must lie in (0,1]");
    if (!(beta > 0.0)) fail("domain", "beta must be positive");
    return 1.0 - (1.0 - alpha_bar) * std::exp(-beta * static_cast<double>(t));
}

double beta_heuristic(long total_updates, int num_nodes) {
    if (total_updates < 1) fail("domain", "total update count must be positive");
    if (num_nodes < 1) fail("domain", "node count must be positive");
    return 1000.0 / (static_cast<double>(total_updates) * static_cast<double>(num_nodes));
}

double threshold(const std::vector<double>& scores, double retain) {
    if (scores.empty()) fail("domain", "threshold of an empty score set");
    if (!(retain > 0.0 && retain <= 1.0)) fail("domain", "retain rate must lie in (0,1]");
    const std::size_t n = scores.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(retain * static_cast<double>(n)));
    rank = std::min(std::max<std::size_t>(rank, 1), n);
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::vector<double> build_mask(const std::vector<double>& scores, double s_t) {
    std::vector<double> mask(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) mask[i] = scores[i] <= s_t ? 1.0 : 0.0;
    return mask;
}

std::vector<double> node_weights(const std::vector<double>& scores, double s_prev, double s_curr,
                                 double retain) {
    if (s_prev > s_curr) fail("state", "curriculum invariant breach: S_prev > S_curr");
    std::vector<double> w(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > s_curr) {
            w[i] = 0.0;
        } else if (scores[i] <= s_prev) {
            w[i] = 1.0;
        } else {
            w[i] = 1.0 + retain;
        }
    }
    return w;
}

CurriculumState::CurriculumState(const CurriculumConfig& cfg, int num_nodes)
    : cfg_(cfg), num_nodes_(num_nodes), rng_(cfg.seed) {
    if (num_nodes < 1) fail("domain", "curriculum needs at least one node");
    if (cfg_.refresh_every < 1) fail("config", "refresh_every must be positive");
    if (needs_scores()) {
        scheduler(0, cfg_.alpha_bar, cfg_.beta);  // validate parameters up front
    }
    if (cfg_.strategy == Strategy::PlainDropout &&
        !(cfg_.dropout_p >= 0.0 && cfg_.dropout_p < 1.0)) {
        fail("config", "dropout_p must lie in [0,1)");
    }
    mask_.assign(num_nodes_, 1.0);
    weights_.assign(num_nodes_, 1.0);
}

bool CurriculumState::needs_scores() const {
    switch (cfg_.strategy) {
        case Strategy::Stc:
        case Strategy::Anti:
        case Strategy::ScOnly:
        case Strategy::TcOnly:
        case Strategy::MeanFill: return true;
        default: return false;
    }
}

bool CurriculumState::refresh_due() const {
    return needs_scores() && (t_ % cfg_.refresh_every == 0 || !scores_valid_);
}

std::vector<double> CurriculumState::effective_scores() const {
    switch (cfg_.strategy) {
        case Strategy::ScOnly: {
            std::vector<double> s(scores_.spatial.size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 - scores_.spatial[i];
            return s;
        }
        case Strategy::TcOnly: {
            std::vector<double> s(scores_.temporal.size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 - scores_.temporal[i];
            return s;
        }
        case Strategy::Anti: {
            // Mirrored curriculum: thresholding negated scores retains the
            // hardest ceil(pi*V) nodes, ties included, exactly like the
            // easy-first path does on the natural scores.
            std::vector<double> s(scores_.diff.size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = -scores_.diff[i];
            return s;
        }
        default: return scores_.diff;
    }
}

void CurriculumState::step(const DifficultyReport* fresh_scores) {
    switch (cfg_.strategy) {
        case Strategy::None: {
            pi_ = 1.0;
            std::fill(mask_.begin(), mask_.end(), 1.0);
            std::fill(weights_.begin(), weights_.end(), 1.0);
            break;
        }
        case Strategy::PlainDropout: {
            pi_ = 1.0 - cfg_.dropout_p;
            for (int i = 0; i < num_nodes_; ++i) {
                mask_[i] = rng_.uniform() < cfg_.dropout_p ? 0.0 : 1.0;
            }
            weights_ = mask_;
            break;
        }
        default: {
            const bool refreshed = refresh_due();
            if (refreshed) {
                if (fresh_scores == nullptr) {
                    fail("state", "curriculum step " + std::to_string(t_) +
                                      " requires a fresh difficulty report");
                }
                if (fresh_scores->num_nodes() != num_nodes_) {
                    fail("shape", "difficulty report node count mismatch");
                }
                scores_ = *fresh_scores;
                scores_valid_ = true;
            }
            pi_ = scheduler(t_, cfg_.alpha_bar, cfg_.beta);
            const std::vector<double> eff = effective_scores();
            const double s_new = threshold(eff, pi_);
            const bool full_rank =
                static_cast<long>(std::ceil(pi_ * num_nodes_)) >= num_nodes_;

            double s_band;
            if (!have_prev_) {
                s_band = -std::numeric_limits<double>::infinity();
            } else if (refreshed) {
                // Scores changed under the carried-over threshold; treat any
                // retained node above the new threshold band as newly admitted.
                s_band = std::min(s_curr_, s_new);
            } else {
                s_band = s_curr_;  // node_weights rejects s_band > s_new
            }

            mask_ = build_mask(eff, s_new);
            if (saturated_) {
                // Curriculum is over: normal training, unit weights, even
                // though refreshed scores may have drifted past the carried
                // threshold.
                std::fill(weights_.begin(), weights_.end(), 1.0);
            } else {
                weights_ = cfg_.use_weighting ? node_weights(eff, s_band, s_new, pi_) : mask_;
            }

            s_prev_ = have_prev_ ? s_curr_ : s_band;
            s_curr_ = s_new;
            have_prev_ = true;
            saturated_ = saturated_ || full_rank;
            break;
        }
    }
    ++t_;
}

int CurriculumState::num_retained() const {
    int c = 0;
    for (double m : mask_) c += m > 0.0 ? 1 : 0;
    return c;
}

CurriculumState::TraceRow CurriculumState::trace_row() const {
    TraceRow row;
    row.t = t_ - 1;  // the update this mask/weight pair was produced for
    row.pi = pi_;
    row.s_t = cfg_.strategy == Strategy::Anti ? -s_curr_ : s_curr_;
    row.num_retained = num_retained();
    double sum = 0.0;
    for (double w : weights_) sum += w;
    row.mean_weight = weights_.empty() ? 0.0 : sum / static_cast<double>(weights_.size());
    return row;
}

void save_trace_csv(const std::vector<CurriculumState::TraceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write curriculum trace: " + path);
    out << "t,pi,S_t,num_retained,mean_weight\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%d,%.17g\n", r.t, r.pi, r.s_t,
                      r.num_retained, r.mean_weight);
        out << buf;
    }
}

}  // namespace stc
