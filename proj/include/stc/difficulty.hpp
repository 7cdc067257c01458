#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stc/graph.hpp"
#include "stc/tensor.hpp"

namespace stc {

// Pairwise cosine distances between L2-normalized representation rows.
// A zero-norm row cannot be normalized; its distances to every other node
// are pinned to the maximum of 2 and the row is flagged degenerate.
struct CosineDistances {
    Tensor d;                             // (V,V), symmetric, zero diagonal
    std::vector<std::uint8_t> degenerate;  // 1 where the input row had zero norm
};

CosineDistances pairwise_cosine_distance(const Tensor& h);  // h: (V, dim)

/// Mean over nodes of the nearest-rank rho-quantile of each node's distance
/// row (self-distance included). Quantile rank is ceil(rho*V), 1-based.
double select_radius(const Tensor& dist, double rho);

/// |B(h_i, R)| = #{ j : D_ij <= R }; the node itself always counts.
std::vector<int> ball_counts(const Tensor& dist, double radius);

/// Fraction of v_i's k-order neighbors inside its ball; 0 when the
/// neighborhood is empty.
std::vector<double> spatial_difficulty_term(const Tensor& dist, double radius,
                                            const NeighborIndex& neighbors);

/// b_i / (b_i + eps_R) with eps_R the mean ball cardinality.
std::vector<double> temporal_difficulty_term(const std::vector<int>& counts);

struct DifficultyReport {
    double radius = 0.0;
    double rho = 0.0;
    double epsilon_r = 0.0;  // mean ball cardinality
    int k = 0;
    std::vector<int> ball_count;
    std::vector<double> spatial;   // in [0,1]
    std::vector<double> temporal;  // in [0,1)
    std::vector<double> diff;      // 2 - spatial - temporal, in (0,2]

    int num_nodes() const { return static_cast<int>(diff.size()); }
};

DifficultyReport difficulty_scores(const Tensor& h, const NeighborIndex& neighbors, double rho);
DifficultyReport difficulty_scores(const Tensor& h, const Graph& g, int k, double rho);

// CSV: comment line with R, rho, epsilon_R, k, then node,ball_count,spatial,temporal,diff.
void save_difficulty_csv(const DifficultyReport& report, const std::string& path);

}  // namespace stc
