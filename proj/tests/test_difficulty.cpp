#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stc/difficulty.hpp"
#include "stc/error.hpp"
#include "stc/graph.hpp"
#include "stc/rng.hpp"

using namespace stc;

namespace {

Tensor random_reps(int n, int d, Rng& rng) {
    Tensor h({static_cast<std::size_t>(n), static_cast<std::size_t>(d)});
    for (double& x : h.values()) x = rng.uniform(-1.0, 1.0);
    return h;
}

Graph random_graph(int n, double p, Rng& rng) {
    Tensor adj({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i != j && rng.uniform() < p) adj(i, j) = rng.uniform(0.2, 1.0);
        }
    return Graph::from_adjacency(std::move(adj));
}

// Naive per-pair cosine distance with explicit normalization.
double cosine_distance_oracle(const Tensor& h, int i, int j) {
    double ni = 0.0, nj = 0.0, dot = 0.0;
    for (std::size_t c = 0; c < h.dim(1); ++c) {
        ni += h(i, c) * h(i, c);
        nj += h(j, c) * h(j, c);
    }
    if (ni == 0.0 || nj == 0.0) return i == j ? 0.0 : 2.0;
    ni = std::sqrt(ni);
    nj = std::sqrt(nj);
    for (std::size_t c = 0; c < h.dim(1); ++c) dot += (h(i, c) / ni) * (h(j, c) / nj);
    return i == j ? 0.0 : 1.0 - dot;
}

}  // namespace

TEST_CASE("cosine distance of identical and antipodal rows") {
    Tensor h({3, 2}, {1.0, 2.0, 1.0, 2.0, -1.0, -2.0});
    CosineDistances cd = pairwise_cosine_distance(h);
    CHECK(cd.d(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cd.d(0, 2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cd.d(0, 0) == 0.0);
    CHECK(cd.d(1, 1) == 0.0);
}

TEST_CASE("cosine distance matches scalar oracle") {
    Rng rng(41);
    Tensor h = random_reps(10, 4, rng);
    CosineDistances cd = pairwise_cosine_distance(h);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            CHECK(cd.d(i, j) == doctest::Approx(cosine_distance_oracle(h, i, j)).epsilon(1e-12));
            CHECK(cd.d(i, j) == cd.d(j, i));
        }
}

TEST_CASE("zero-norm rows are flagged and maximally distant") {
    Tensor h({3, 2}, {0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    CosineDistances cd = pairwise_cosine_distance(h);
    CHECK(cd.degenerate[0] == 1);
    CHECK(cd.degenerate[1] == 0);
    CHECK(cd.d(0, 1) == 2.0);
    CHECK(cd.d(0, 2) == 2.0);
    CHECK(cd.d(0, 0) == 0.0);  // diagonal stays zero
}

TEST_CASE("radius selection on constant off-diagonal distances") {
    const int n = 6;
    Tensor d({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : 0.8;
    // rank ceil(0.5*6) = 3 > 1 picks the constant.
    CHECK(select_radius(d, 0.5) == doctest::Approx(0.8).epsilon(1e-15));
    // tiny rho -> rank 1 -> the self distance 0.
    CHECK(select_radius(d, 0.01) == 0.0);
}

TEST_CASE("radius selection matches the sort oracle") {
    Rng rng(43);
    Tensor h = random_reps(8, 3, rng);
    CosineDistances cd = pairwise_cosine_distance(h);
    const double rho = 0.3;
    double mean = 0.0;
    for (int i = 0; i < 8; ++i) {
        std::vector<double> row;
        for (int j = 0; j < 8; ++j) row.push_back(cd.d(i, j));
        std::sort(row.begin(), row.end());
        mean += row[static_cast<std::size_t>(std::ceil(rho * 8)) - 1];
    }
    mean /= 8.0;
    CHECK(select_radius(cd.d, rho) == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("radius selection rejects singleton graphs") {
    Tensor d({1, 1});
    CHECK_THROWS_WITH_AS(select_radius(d, 0.3), doctest::Contains("graph too small"), Error);
}

TEST_CASE("ball counts at extreme radii") {
    Rng rng(47);
    Tensor h = random_reps(7, 5, rng);
    CosineDistances cd = pairwise_cosine_distance(h);
    for (int c : ball_counts(cd.d, 0.0)) CHECK(c == 1);  // distinct reps: only self
    for (int c : ball_counts(cd.d, 2.0)) CHECK(c == 7);  // cosine distance is bounded by 2
}

TEST_CASE("ball counts match brute force") {
    Rng rng(53);
    Tensor h = random_reps(12, 4, rng);
    CosineDistances cd = pairwise_cosine_distance(h);
    const double r = 0.6;
    auto counts = ball_counts(cd.d, r);
    for (int i = 0; i < 12; ++i) {
        int want = 0;
        for (int j = 0; j < 12; ++j) {
            if (cd.d(i, j) <= r) ++want;
        }
        CHECK(counts[i] == want);
    }
}

TEST_CASE("spatial term edges and oracle") {
    Rng rng(59);
    Graph g = random_graph(12, 0.3, rng);
    NeighborIndex nbrs = k_order_neighbors(g, 2);
    Tensor h = random_reps(12, 4, rng);
    CosineDistances cd = pairwise_cosine_distance(h);
    const double r = select_radius(cd.d, 0.4);
    auto term = spatial_difficulty_term(cd.d, r, nbrs);
    for (int i = 0; i < 12; ++i) {
        if (nbrs.sets[i].empty()) {
            CHECK(term[i] == 0.0);
            continue;
        }
        int inside = 0;
        for (int j : nbrs.sets[i]) {
            if (cd.d(i, j) <= r) ++inside;
        }
        CHECK(term[i] ==
              doctest::Approx(static_cast<double>(inside) / nbrs.sets[i].size()).epsilon(1e-15));
    }

    // All neighbors inside / none inside.
    auto all_in = spatial_difficulty_term(cd.d, 2.0, nbrs);
    for (int i = 0; i < 12; ++i) {
        if (!nbrs.sets[i].empty()) CHECK(all_in[i] == 1.0);
    }
    auto none_in = spatial_difficulty_term(cd.d, 0.0, nbrs);  // distinct reps: nothing captured
    for (int i = 0; i < 12; ++i) CHECK(none_in[i] == 0.0);
}

TEST_CASE("temporal term values") {
    // Uniform density: every term is c/(c+c) = 0.5.
    for (double t : temporal_difficulty_term({3, 3, 3, 3})) CHECK(t == doctest::Approx(0.5));

    // b >> eps_R saturates toward 1 (1000 vs eps ~ 1).
    std::vector<int> counts(999, 1);
    counts.push_back(1000);
    auto terms = temporal_difficulty_term(counts);
    const double eps = (999.0 + 1000.0) / 1000.0;
    CHECK(terms.back() == doctest::Approx(1000.0 / (1000.0 + eps)).epsilon(1e-15));
    CHECK(terms.back() > 0.998);

    // b=2 against eps_R=10: 2/12.
    // counts {2, 18}: eps = 10.
    auto two = temporal_difficulty_term({2, 18});
    CHECK(two[0] == doctest::Approx(2.0 / 12.0).epsilon(1e-15));
}

TEST_CASE("temporal term is monotone in the ball count") {
    // Holding eps fixed: b/(b+eps) strictly increases in b.
    const double eps = 7.0;
    double prev = -1.0;
    for (int b = 1; b <= 50; ++b) {
        const double t = b / (b + eps);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("degenerate symmetric case gives Diff = 0.5 everywhere") {
    // Identical representations and non-empty neighborhoods: spatial = 1,
    // temporal = 0.5, diff = 0.5.
    const int n = 9;
    Tensor h({n, 3});
    for (int i = 0; i < n; ++i) {
        h(i, 0) = 0.4;
        h(i, 1) = -1.2;
        h(i, 2) = 0.7;
    }
    std::vector<Edge> ring;
    for (int i = 0; i < n; ++i) ring.push_back({i, (i + 1) % n, 1.0});
    Graph g = Graph::from_edges(n, ring, false);
    DifficultyReport rep = difficulty_scores(h, g, 1, 0.3);
    for (int i = 0; i < n; ++i) {
        CHECK(rep.spatial[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.temporal[i] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rep.diff[i] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("planted outlier scores harder than the cluster") {
    Rng rng(61);
    const int n = 10;
    Tensor h({n, 4});
    for (int i = 0; i < n - 1; ++i) {
        h(i, 0) = 1.0 + 0.01 * rng.uniform();
        h(i, 1) = 0.5 + 0.01 * rng.uniform();
        h(i, 2) = 0.0;
        h(i, 3) = 0.0;
    }
    // Orthogonal to the cluster.
    h(n - 1, 2) = 1.0;
    h(n - 1, 3) = 0.5;

    std::vector<Edge> ring;
    for (int i = 0; i < n; ++i) ring.push_back({i, (i + 1) % n, 1.0});
    Graph g = Graph::from_edges(n, ring, false);

    DifficultyReport rep = difficulty_scores(h, g, 1, 0.3);
    CHECK(rep.ball_count[n - 1] == 1);  // outlier ball holds only itself
    for (int i = 0; i < n - 1; ++i) CHECK(rep.diff[n - 1] > rep.diff[i]);
}

TEST_CASE("difficulty identity and report invariants") {
    Rng rng(67);
    Graph g = random_graph(15, 0.25, rng);
    Tensor h = random_reps(15, 6, rng);
    DifficultyReport rep = difficulty_scores(h, g, 2, 0.35);
    double eps = 0.0;
    for (int c : rep.ball_count) eps += c;
    eps /= 15.0;
    CHECK(rep.epsilon_r == doctest::Approx(eps).epsilon(1e-15));
    for (int i = 0; i < 15; ++i) {
        CHECK(rep.diff[i] == 2.0 - rep.spatial[i] - rep.temporal[i]);  // exact identity
        CHECK(rep.spatial[i] >= 0.0);
        CHECK(rep.spatial[i] <= 1.0);
        CHECK(rep.temporal[i] >= 0.0);
        CHECK(rep.temporal[i] < 1.0);
        CHECK(rep.diff[i] > 0.0);
        CHECK(rep.diff[i] <= 2.0);
    }
}

TEST_CASE("difficulty is invariant to per-row positive rescaling") {
    Rng rng(71);
    Graph g = random_graph(12, 0.3, rng);
    Tensor h = random_reps(12, 5, rng);
    Tensor scaled = h;
    for (int i = 0; i < 12; ++i) {
        const double c = rng.uniform(0.1, 10.0);
        for (int d = 0; d < 5; ++d) scaled(i, d) = h(i, d) * c;
    }
    DifficultyReport a = difficulty_scores(h, g, 2, 0.3);
    DifficultyReport b = difficulty_scores(scaled, g, 2, 0.3);
    CHECK(a.radius == doctest::Approx(b.radius).epsilon(1e-12));
    for (int i = 0; i < 12; ++i) {
        CHECK(a.diff[i] == doctest::Approx(b.diff[i]).epsilon(1e-12));
        CHECK(a.ball_count[i] == b.ball_count[i]);
    }
}

TEST_CASE("difficulty is permutation equivariant") {
    Rng rng(73);
    const int n = 9;
    Graph g = random_graph(n, 0.35, rng);
    Tensor h = random_reps(n, 4, rng);
    DifficultyReport base = difficulty_scores(h, g, 2, 0.3);

    // Relabel nodes by a fixed permutation.
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    Rng prng(5);
    prng.shuffle(perm);

    Tensor h2({n, 4});
    Tensor adj2({n, n});
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < 4; ++d) h2(perm[i], d) = h(i, d);
        for (int j = 0; j < n; ++j) adj2(perm[i], perm[j]) = g.adjacency(i, j);
    }
    DifficultyReport moved = difficulty_scores(h2, Graph::from_adjacency(std::move(adj2)), 2, 0.3);
    CHECK(moved.radius == doctest::Approx(base.radius).epsilon(1e-12));
    for (int i = 0; i < n; ++i) {
        CHECK(moved.diff[perm[i]] == doctest::Approx(base.diff[i]).epsilon(1e-12));
    }
}
