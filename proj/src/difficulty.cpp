#include "stc/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stc/error.hpp"

namespace stc {

CosineDistances pairwise_cosine_distance(const Tensor& h) {
    if (h.rank() != 2) fail("shape", "representations must be a (V, dim) matrix");
    const std::size_t n = h.dim(0), d = h.dim(1);

    CosineDistances out;
    out.degenerate.assign(n, 0);

    // Row-normalize first so variance along a direction cannot dominate.
    Tensor unit({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) sq += h(i, c) * h(i, c);
        if (sq > 0.0) {
            const double inv = 1.0 / std::sqrt(sq);
            for (std::size_t c = 0; c < d; ++c) unit(i, c) = h(i, c) * inv;
        } else {
            out.degenerate[i] = 1;
        }
    }

    out.d = Tensor({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v;
            if (out.degenerate[i] || out.degenerate[j]) {
                v = 2.0;  // maximal distance: degenerate rows are maximally hard
            } else {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += unit(i, c) * unit(j, c);
                v = 1.0 - dot;
            }
            out.d(i, j) = v;
            out.d(j, i) = v;
        }
    }
    return out;
}

double select_radius(const Tensor& dist, double rho) {
    const std::size_t n = dist.dim(0);
    if (n < 2) fail("domain", "graph too small: radius selection needs at least 2 nodes");
    if (!(rho > 0.0 && rho < 1.0)) fail("domain", "rho must lie in (0,1)");

    const std::size_t rank = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(n), std::ceil(rho * static_cast<double>(n))));
    std::vector<double> row(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[j] = dist(i, j);
        std::nth_element(row.begin(), row.begin() + (rank - 1), row.end());
        total += row[rank - 1];
    }
    return total / static_cast<double>(n);
}

std::vector<int> ball_counts(const Tensor& dist, double radius) {
    if (radius < 0.0) fail("domain", "ball radius must be non-negative");
    const std::size_t n = dist.dim(0);
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (dist(i, j) <= radius) ++c;
        }
        counts[i] = c;
    }
    return counts;
}

std::vector<double> spatial_difficulty_term(const Tensor& dist, double radius,
                                            const NeighborIndex& neighbors) {
    const std::size_t n = dist.dim(0);
    if (neighbors.sets.size() != n) {
        fail("shape", "neighbor index was built on a different node set");
    }
    std::vector<double> term(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& omega = neighbors.sets[i];
        if (omega.empty()) continue;  // no spatial evidence: maximally inconsistent
        int inside = 0;
        for (int j : omega) {
            if (dist(i, static_cast<std::size_t>(j)) <= radius) ++inside;
        }
        term[i] = static_cast<double>(inside) / static_cast<double>(omega.size());
    }
    return term;
}

std::vector<double> temporal_difficulty_term(const std::vector<int>& counts) {
    if (counts.empty()) fail("domain", "ball counts are empty");
    double eps = 0.0;
    for (int c : counts) {
        if (c < 1) fail("domain", "ball counts must be at least 1 (self-inclusion)");
        eps += static_cast<double>(c);
    }
    eps /= static_cast<double>(counts.size());
    std::vector<double> term(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double b = static_cast<double>(counts[i]);
        term[i] = b / (b + eps);
    }
    return term;
}

DifficultyReport difficulty_scores(const Tensor& h, const NeighborIndex& neighbors, double rho) {
    const CosineDistances cd = pairwise_cosine_distance(h);
    DifficultyReport report;
    report.rho = rho;
    report.k = neighbors.order;
    report.radius = select_radius(cd.d, rho);
    report.ball_count = ball_counts(cd.d, report.radius);
    report.spatial = spatial_difficulty_term(cd.d, report.radius, neighbors);
    report.temporal = temporal_difficulty_term(report.ball_count);

    double eps = 0.0;
    for (int c : report.ball_count) eps += static_cast<double>(c);
    report.epsilon_r = eps / static_cast<double>(report.ball_count.size());

    report.diff.resize(report.spatial.size());
    for (std::size_t i = 0; i < report.diff.size(); ++i) {
        report.diff[i] = 2.0 - report.spatial[i] - report.temporal[i];
    }
    return report;
}

DifficultyReport difficulty_scores(const Tensor& h, const Graph& g, int k, double rho) {
    return difficulty_scores(h, k_order_neighbors(g, k), rho);
}

void save_difficulty_csv(const DifficultyReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write difficulty report: " + path);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# R=%.17g rho=%.17g epsilon_R=%.17g k=%d\n", report.radius,
                  report.rho, report.epsilon_r, report.k);
    out << buf << "node,ball_count,spatial,temporal,diff\n";
    for (int i = 0; i < report.num_nodes(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", i, report.ball_count[i],
                      report.spatial[i], report.temporal[i], report.diff[i]);
        out << buf;
    }
}

}  // namespace stc
