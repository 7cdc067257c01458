#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stc/tensor.hpp"

namespace stc {

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;
};

// Node set plus dense weighted adjacency. adjacency(i,j) > 0 iff the edge
// (i,j) exists; directed=false implies a symmetric matrix.
struct Graph {
    int num_nodes = 0;
    std::vector<Edge> edges;
    Tensor adjacency;  // (V,V)
    bool directed = false;

    static Graph from_edges(int num_nodes, std::vector<Edge> edges, bool directed);
    static Graph from_adjacency(Tensor adjacency);

    bool has_edge(int i, int j) const { return adjacency(i, j) > 0.0; }
};

// Pairwise raw distances with missing entries (NaN).
struct DistanceMatrix {
    int num_nodes = 0;
    std::vector<double> values;  // V*V row-major; NaN marks missing

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * num_nodes + j]; }
    void set(int i, int j, double v) { values[static_cast<std::size_t>(i) * num_nodes + j] = v; }
    bool missing(int i, int j) const;

    static DistanceMatrix empty(int num_nodes);  // all entries missing
};

/// Gaussian-kernel edge weighting w_ij -> exp(-(w_ij/sigma)^2) over present
/// distances; absent sigma means the standard deviation of all present
/// entries. Kernel values below sparsify_threshold are zeroed.
Graph gaussian_kernel_adjacency(const DistanceMatrix& distances,
                                std::optional<double> sigma = std::nullopt,
                                double sparsify_threshold = 0.0);

/// D^-1/2 (A+I) D^-1/2 with D the degree matrix of A+I (row sums).
Tensor normalized_adjacency(const Graph& g);

// Per-node k-order neighbor sets; the node itself is excluded.
struct NeighborIndex {
    int order = 0;
    std::vector<std::vector<int>> sets;  // each sorted ascending

    bool contains(int v, int u) const;
    std::size_t count(int v) const { return sets[v].size(); }
};

/// BFS over out-edges up to depth k. symmetrize=true ORs the adjacency with
/// its transpose before expansion.
NeighborIndex k_order_neighbors(const Graph& g, int k, bool symmetrize = false);

// File formats: edge list CSV with header "src,dst,weight"; distance matrix
// CSV of V rows x V columns with blank cells for missing entries.
Graph load_edge_list_csv(const std::string& path, int num_nodes = 0);
void save_edge_list_csv(const Graph& g, const std::string& path);
DistanceMatrix load_distance_csv(const std::string& path);

}  // namespace stc
