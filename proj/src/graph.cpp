#include "stc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "stc/error.hpp"

namespace stc {

namespace {

bool matrix_symmetric(const Tensor& a) {
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = i + 1; j < a.dim(1); ++j)
            if (a(i, j) != a(j, i)) return false;
    return true;
}

}  // namespace

Graph Graph::from_edges(int num_nodes, std::vector<Edge> edges, bool directed) {
    if (num_nodes <= 0) fail("domain", "graph must have at least one node");
    Graph g;
    g.num_nodes = num_nodes;
    g.directed = directed;
    g.adjacency = Tensor({static_cast<std::size_t>(num_nodes), static_cast<std::size_t>(num_nodes)});
    for (const Edge& e : edges) {
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
            fail("domain", "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                               ") references a node outside [0," + std::to_string(num_nodes) + ")");
        }
        if (!std::isfinite(e.weight) || e.weight < 0.0) {
            fail("domain", "edge weights must be finite and non-negative");
        }
        g.adjacency(e.src, e.dst) = e.weight;
        if (!directed) g.adjacency(e.dst, e.src) = e.weight;
    }
    g.edges = std::move(edges);
    return g;
}

Graph Graph::from_adjacency(Tensor adjacency) {
    if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
        fail("shape", "adjacency must be a square matrix");
    }
    Graph g;
    g.num_nodes = static_cast<int>(adjacency.dim(0));
    for (int i = 0; i < g.num_nodes; ++i) {
        for (int j = 0; j < g.num_nodes; ++j) {
            const double w = adjacency(i, j);
            if (!std::isfinite(w) || w < 0.0) {
                fail("domain", "adjacency entries must be finite and non-negative");
            }
            if (w > 0.0) g.edges.push_back({i, j, w});
        }
    }
    g.directed = !matrix_symmetric(adjacency);
    g.adjacency = std::move(adjacency);
    return g;
}

bool DistanceMatrix::missing(int i, int j) const { return std::isnan(at(i, j)); }

DistanceMatrix DistanceMatrix::empty(int num_nodes) {
    DistanceMatrix d;
    d.num_nodes = num_nodes;
    d.values.assign(static_cast<std::size_t>(num_nodes) * num_nodes,
                    std::numeric_limits<double>::quiet_NaN());
    return d;
}

Graph gaussian_kernel_adjacency(const DistanceMatrix& distances, std::optional<double> sigma,
                                double sparsify_threshold) {
    const int n = distances.num_nodes;
    if (n <= 0) fail("domain", "empty graph: distance matrix has no nodes");

    double sum = 0.0, sum_sq = 0.0;
    std::size_t present = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (distances.missing(i, j)) continue;
            const double d = distances.at(i, j);
            if (d < 0.0 || !std::isfinite(d)) fail("domain", "distances must be non-negative");
            sum += d;
            sum_sq += d * d;
            ++present;
        }
    }
    if (present == 0) fail("domain", "empty graph: all distances are missing");

    double s;
    if (sigma.has_value()) {
        s = *sigma;
        if (!(s > 0.0)) fail("domain", "sigma must be positive");
    } else {
        // Population standard deviation of the present entries.
        const double mean = sum / static_cast<double>(present);
        const double var = std::max(0.0, sum_sq / static_cast<double>(present) - mean * mean);
        s = std::sqrt(var);
        if (!(s > 0.0)) fail("domain", "sigma auto-selection failed: distances are constant");
    }

    Tensor adj({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (distances.missing(i, j)) continue;
            const double r = distances.at(i, j) / s;
            double w = std::exp(-r * r);
            if (w < sparsify_threshold) w = 0.0;
            adj(i, j) = w;
        }
    }
    return Graph::from_adjacency(std::move(adj));
}

Tensor normalized_adjacency(const Graph& g) {
    const std::size_t n = static_cast<std::size_t>(g.num_nodes);
    Tensor a_tilde = g.adjacency;
    for (std::size_t i = 0; i < n; ++i) a_tilde(i, i) += 1.0;

    std::vector<double> inv_sqrt_deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a_tilde(i, j);
        inv_sqrt_deg[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }

    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        if (inv_sqrt_deg[i] == 0.0) {
            out(i, i) = 1.0;  // zero-degree row falls back to identity
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = inv_sqrt_deg[i] * a_tilde(i, j) * inv_sqrt_deg[j];
        }
    }
    return out;
}

bool NeighborIndex::contains(int v, int u) const {
    const auto& s = sets[v];
    return std::binary_search(s.begin(), s.end(), u);
}

NeighborIndex k_order_neighbors(const Graph& g, int k, bool symmetrize) {
    if (k <= 0) fail("domain", "order must be positive");
    const int n = g.num_nodes;

    std::vector<std::vector<int>> out_edges(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const bool fwd = g.adjacency(i, j) > 0.0;
            const bool bwd = symmetrize && g.adjacency(j, i) > 0.0;
            if ((fwd || bwd) && i != j) out_edges[i].push_back(j);
        }
    }

    NeighborIndex idx;
    idx.order = k;
    idx.sets.resize(n);
    std::vector<int> depth(n);
    for (int v = 0; v < n; ++v) {
        std::fill(depth.begin(), depth.end(), -1);
        depth[v] = 0;
        std::deque<int> queue{v};
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            if (depth[u] == k) continue;
            for (int w : out_edges[u]) {
                if (depth[w] >= 0) continue;
                depth[w] = depth[u] + 1;
                queue.push_back(w);
                if (w != v) idx.sets[v].push_back(w);
            }
        }
        std::sort(idx.sets[v].begin(), idx.sets[v].end());
    }
    return idx;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        fail("io", "non-numeric cell '" + cell + "' at " + where);
    }
}

}  // namespace

Graph load_edge_list_csv(const std::string& path, int num_nodes) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open edge list: " + path);
    std::string line;
    if (!std::getline(in, line)) fail("io", "empty edge list: " + path);
    auto header = split_csv_line(line);
    if (header.size() != 3 || trim(header[0]) != "src" || trim(header[1]) != "dst" ||
        trim(header[2]) != "weight") {
        fail("io", "edge list must start with header 'src,dst,weight': " + path);
    }
    std::vector<Edge> edges;
    int max_node = -1;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 3) {
            fail("io", "ragged row " + std::to_string(row) + " in " + path);
        }
        const std::string where = path + ":" + std::to_string(row);
        Edge e;
        e.src = static_cast<int>(parse_double(trim(cells[0]), where));
        e.dst = static_cast<int>(parse_double(trim(cells[1]), where));
        e.weight = parse_double(trim(cells[2]), where);
        max_node = std::max({max_node, e.src, e.dst});
        edges.push_back(e);
    }
    if (edges.empty() && num_nodes == 0) fail("io", "edge list has no edges: " + path);
    const int n = num_nodes > 0 ? num_nodes : max_node + 1;
    Graph by_edges = Graph::from_edges(n, std::move(edges), /*directed=*/true);
    return Graph::from_adjacency(std::move(by_edges.adjacency));  // re-derive directedness
}

void save_edge_list_csv(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write edge list: " + path);
    out << "src,dst,weight\n";
    char buf[64];
    for (int i = 0; i < g.num_nodes; ++i) {
        for (int j = 0; j < g.num_nodes; ++j) {
            const double w = g.adjacency(i, j);
            if (w <= 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", w);
            out << i << "," << j << "," << buf << "\n";
        }
    }
}

DistanceMatrix load_distance_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open distance matrix: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        rows.push_back(split_csv_line(line));
    }
    const int n = static_cast<int>(rows.size());
    if (n == 0) fail("io", "empty distance matrix: " + path);
    DistanceMatrix d = DistanceMatrix::empty(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n) {
            fail("io", "distance matrix must be square; row " + std::to_string(i + 1) + " of " +
                           path + " has " + std::to_string(rows[i].size()) + " cells, expected " +
                           std::to_string(n));
        }
        for (int j = 0; j < n; ++j) {
            const std::string cell = trim(rows[i][j]);
            if (cell.empty()) continue;
            d.set(i, j, parse_double(cell, path + ":" + std::to_string(i + 1)));
        }
    }
    return d;
}

}  // namespace stc
