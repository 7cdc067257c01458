#include "stc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stc/error.hpp"
#include "stc/rng.hpp"

namespace stc {

namespace {

// in: (B,T_in,V,C_in), wt: (C_out,C_in,K) -> (B,T_in-K+1,V,C_out)
Tensor temporal_conv(const Tensor& in, const Tensor& wt, const Tensor& bt) {
    const std::size_t B = in.dim(0), T_in = in.dim(1), V = in.dim(2), C_in = in.dim(3);
    const std::size_t C_out = wt.dim(0), K = wt.dim(2);
    const std::size_t T_out = T_in - K + 1;
    Tensor out({B, T_out, V, C_out});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T_out; ++t)
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t co = 0; co < C_out; ++co) {
                    double acc = bt(co);
                    for (std::size_t tau = 0; tau < K; ++tau)
                        for (std::size_t ci = 0; ci < C_in; ++ci)
                            acc += wt(co, ci, tau) * in(b, t + tau, v, ci);
                    out(b, t, v, co) = acc;
                }
    return out;
}

// u: (B,T,V,C_in), adj: (V,V), wg: (C_in,C_out) -> adj * (u wg) + bg
Tensor graph_conv(const Tensor& u, const Tensor& adj, const Tensor& wg, const Tensor& bg) {
    const std::size_t B = u.dim(0), T = u.dim(1), V = u.dim(2), C_in = u.dim(3);
    const std::size_t C_out = wg.dim(1);
    Tensor out({B, T, V, C_out});
    std::vector<double> mixed(V * C_out);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) {
            std::fill(mixed.begin(), mixed.end(), 0.0);
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t ci = 0; ci < C_in; ++ci) {
                    const double x = u(b, t, v, ci);
                    if (x == 0.0) continue;
                    for (std::size_t co = 0; co < C_out; ++co)
                        mixed[v * C_out + co] += x * wg(ci, co);
                }
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t co = 0; co < C_out; ++co) {
                    double acc = bg(co);
                    for (std::size_t uu = 0; uu < V; ++uu)
                        acc += adj(v, uu) * mixed[uu * C_out + co];
                    out(b, t, v, co) = acc;
                }
        }
    return out;
}

Tensor relu(const Tensor& y) {
    Tensor z = y;
    for (double& x : z.values()) x = x > 0.0 ? x : 0.0;
    return z;
}

// Retained in-neighborhood donors for every dropped node under MeanFill.
std::vector<std::vector<int>> fill_lists(const MaskSpec& mask, std::size_t num_nodes) {
    std::vector<std::vector<int>> lists(num_nodes);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        if (mask.keep[v] != 0.0) continue;
        for (int j : mask.neighbors->sets[v]) {
            if (mask.keep[static_cast<std::size_t>(j)] != 0.0) lists[v].push_back(j);
        }
    }
    return lists;
}

void validate_mask(const MaskSpec& mask, std::size_t num_nodes) {
    if (mask.keep.size() != num_nodes) {
        fail("shape", "mask length " + std::to_string(mask.keep.size()) +
                          " does not match node count " + std::to_string(num_nodes));
    }
    for (double m : mask.keep) {
        if (m != 0.0 && m != 1.0) fail("domain", "mask entries must be 0 or 1");
    }
    if (mask.mode == MaskMode::MeanFill) {
        if (mask.neighbors == nullptr) fail("state", "mean-fill mask requires a neighbor index");
        if (mask.neighbors->sets.size() != num_nodes) {
            fail("shape", "mean-fill neighbor index node count mismatch");
        }
    }
}

}  // namespace

double glorot_uniform_bound(int fan_in, int fan_out) {
    if (fan_in <= 0 || fan_out <= 0) fail("domain", "fan sizes must be positive");
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

STModel STModel::init(const ModelConfig& cfg) {
    if (cfg.input_dim < 1) fail("config", "input_dim must be positive");
    if (cfg.window < 1) fail("config", "window must be positive");
    if (cfg.horizon < 1) fail("config", "horizon must be positive");
    if (cfg.blocks.empty()) fail("config", "model needs at least one block");
    if (cfg.tap_block < 0 || cfg.tap_block >= static_cast<int>(cfg.blocks.size())) {
        fail("config", "tap_block outside the block stack");
    }

    int min_window = 1;
    for (const BlockSpec& b : cfg.blocks) min_window += std::max(b.kernel, 1) - 1;

    STModel m;
    m.cfg_ = cfg;
    Rng rng(cfg.seed);
    int t = cfg.window;
    int c_in = cfg.input_dim;
    for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
        const bool last = b + 1 == cfg.blocks.size();
        int kernel = cfg.blocks[b].kernel;
        const int channels = cfg.blocks[b].channels;
        if (channels < 1) fail("config", "block channels must be positive");
        if (kernel == 0) {
            if (!last) fail("config", "only the last block may use an auto kernel (0)");
            kernel = t;
        }
        if (kernel < 1 || kernel > t) {
            fail("config", "window too short for stacked temporal kernels; need at least " +
                               std::to_string(min_window) + " steps");
        }
        m.cfg_.blocks[b].kernel = kernel;

        BlockParams p;
        p.t_in = t;
        p.t_out = t - kernel + 1;
        p.wt = Tensor({static_cast<std::size_t>(channels), static_cast<std::size_t>(c_in),
                       static_cast<std::size_t>(kernel)});
        p.bt = Tensor({static_cast<std::size_t>(channels)});
        p.wg = Tensor({static_cast<std::size_t>(channels), static_cast<std::size_t>(channels)});
        p.bg = Tensor({static_cast<std::size_t>(channels)});
        const double a_t = glorot_uniform_bound(c_in * kernel, channels * kernel);
        for (double& w : p.wt.values()) w = rng.uniform(-a_t, a_t);
        const double a_g = glorot_uniform_bound(channels, channels);
        for (double& w : p.wg.values()) w = rng.uniform(-a_g, a_g);
        m.blocks_.push_back(std::move(p));

        t = t - kernel + 1;
        c_in = channels;
    }
    if (t != 1) {
        fail("config", "temporal kernels must consume the whole window (got " + std::to_string(t) +
                           " residual steps); set the last kernel to 0 for auto sizing");
    }

    m.w_readout_ =
        Tensor({static_cast<std::size_t>(c_in), static_cast<std::size_t>(cfg.horizon)});
    m.b_readout_ = Tensor({static_cast<std::size_t>(cfg.horizon)});
    const double a_r = glorot_uniform_bound(c_in, cfg.horizon);
    for (double& w : m.w_readout_.values()) w = rng.uniform(-a_r, a_r);
    return m;
}

int STModel::tap_dim() const {
    const BlockParams& p = blocks_[static_cast<std::size_t>(cfg_.tap_block)];
    return p.t_out * static_cast<int>(p.bt.size());
}

Tensor STModel::apply_mask(const Tensor& z, const MaskSpec& mask) const {
    const std::size_t B = z.dim(0), T = z.dim(1), V = z.dim(2), C = z.dim(3);
    Tensor out = z;
    if (mask.mode == MaskMode::Zero) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t v = 0; v < V; ++v) {
                    if (mask.keep[v] != 0.0) continue;
                    for (std::size_t c = 0; c < C; ++c) out(b, t, v, c) = 0.0;
                }
        return out;
    }
    const auto lists = fill_lists(mask, V);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t v = 0; v < V; ++v) {
                if (mask.keep[v] != 0.0) continue;
                const auto& donors = lists[v];
                for (std::size_t c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int j : donors) acc += z(b, t, static_cast<std::size_t>(j), c);
                    out(b, t, v, c) = donors.empty() ? 0.0 : acc / static_cast<double>(donors.size());
                }
            }
    return out;
}

ForwardPass STModel::forward(const Tensor& x, const Graph& g, const MaskSpec* mask) const {
    if (x.rank() != 4) fail("shape", "model input must be (batch, window, nodes, features)");
    if (static_cast<int>(x.dim(1)) != cfg_.window ||
        static_cast<int>(x.dim(2)) != g.num_nodes ||
        static_cast<int>(x.dim(3)) != cfg_.input_dim) {
        fail("shape", "model input shape " + x.shape_string() + " does not match config");
    }
    if (mask != nullptr) validate_mask(*mask, x.dim(2));

    ForwardPass fp;
    fp.adj_norm = normalized_adjacency(g);
    fp.model_version = version_;
    if (mask != nullptr) {
        fp.mask = *mask;
        fp.masked = true;
    }

    fp.inputs.push_back(x);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const BlockParams& p = blocks_[b];
        Tensor u = temporal_conv(fp.inputs.back(), p.wt, p.bt);
        Tensor y = graph_conv(u, fp.adj_norm, p.wg, p.bg);
        Tensor z = relu(y);
        Tensor next = (fp.masked && static_cast<int>(b) == cfg_.tap_block)
                          ? apply_mask(z, fp.mask)
                          : z;
        fp.temporal_out.push_back(std::move(u));
        fp.graph_out.push_back(std::move(y));
        fp.block_out.push_back(std::move(z));
        fp.inputs.push_back(std::move(next));
    }

    // Tap: the pre-mask activations of the tap block, flattened per node.
    {
        const Tensor& z = fp.block_out[static_cast<std::size_t>(cfg_.tap_block)];
        const std::size_t B = z.dim(0), T = z.dim(1), V = z.dim(2), C = z.dim(3);
        fp.tap = Tensor({B, V, T * C});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t v = 0; v < V; ++v)
                    for (std::size_t c = 0; c < C; ++c) fp.tap(b, v, t * C + c) = z(b, t, v, c);
    }

    // Readout from the collapsed window (T == 1).
    const Tensor& h = fp.inputs.back();
    const std::size_t B = h.dim(0), V = h.dim(2), C = h.dim(3);
    const std::size_t S = static_cast<std::size_t>(cfg_.horizon);
    fp.pred = Tensor({B, S, V});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                double acc = b_readout_(s);
                for (std::size_t c = 0; c < C; ++c) acc += h(b, 0, v, c) * w_readout_(c, s);
                fp.pred(b, s, v) = acc;
            }
    fp.pred.check_finite("model forward");
    return fp;
}

Tensor STModel::run_suffix(const Tensor& masked_tap_out, const Graph*, const Tensor& adj_norm) const {
    Tensor cur = masked_tap_out;
    for (std::size_t b = static_cast<std::size_t>(cfg_.tap_block) + 1; b < blocks_.size(); ++b) {
        const BlockParams& p = blocks_[b];
        cur = relu(graph_conv(temporal_conv(cur, p.wt, p.bt), adj_norm, p.wg, p.bg));
    }
    const std::size_t B = cur.dim(0), V = cur.dim(2), C = cur.dim(3);
    const std::size_t S = static_cast<std::size_t>(cfg_.horizon);
    Tensor pred({B, S, V});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                double acc = b_readout_(s);
                for (std::size_t c = 0; c < C; ++c) acc += cur(b, 0, v, c) * w_readout_(c, s);
                pred(b, s, v) = acc;
            }
    return pred;
}

Tensor STModel::rerun_from_tap(const ForwardPass& fp, const Tensor& tap_block_activations,
                               const MaskSpec* mask) const {
    const Tensor& ref = fp.block_out[static_cast<std::size_t>(cfg_.tap_block)];
    if (!tap_block_activations.same_shape(ref)) {
        fail("shape", "tap activations shape mismatch: expected " + ref.shape_string());
    }
    Tensor masked = mask != nullptr ? apply_mask(tap_block_activations, *mask)
                                    : tap_block_activations;
    return run_suffix(masked, nullptr, fp.adj_norm);
}

Gradients STModel::backward(const ForwardPass& fp, const Tensor& loss_grad) const {
    if (fp.model_version != version_) {
        fail("state", "stale forward context: parameters changed since forward()");
    }
    if (!loss_grad.same_shape(fp.pred)) {
        fail("shape", "loss gradient shape " + loss_grad.shape_string() +
                          " does not match prediction " + fp.pred.shape_string());
    }

    const std::size_t L = blocks_.size();
    Gradients grads;
    grads.tensors.resize(4 * L + 2);

    const Tensor& h = fp.inputs.back();
    const std::size_t B = h.dim(0), V = h.dim(2), C_last = h.dim(3);
    const std::size_t S = static_cast<std::size_t>(cfg_.horizon);

    Tensor d_wr({C_last, S});
    Tensor d_br({S});
    Tensor d_h({B, std::size_t{1}, V, C_last});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v) {
                const double gp = loss_grad(b, s, v);
                if (gp == 0.0) continue;
                d_br(s) += gp;
                for (std::size_t c = 0; c < C_last; ++c) {
                    d_wr(c, s) += h(b, 0, v, c) * gp;
                    d_h(b, 0, v, c) += w_readout_(c, s) * gp;
                }
            }
    grads.tensors[4 * L] = std::move(d_wr);
    grads.tensors[4 * L + 1] = std::move(d_br);

    Tensor d_out = std::move(d_h);  // gradient w.r.t. inputs[b+1]
    for (std::size_t bi = L; bi-- > 0;) {
        const BlockParams& p = blocks_[bi];
        const Tensor& y = fp.graph_out[bi];
        const Tensor& u = fp.temporal_out[bi];
        const Tensor& in = fp.inputs[bi];
        const std::size_t T = y.dim(1), C = y.dim(3);
        const std::size_t C_in = in.dim(3), K = p.wt.dim(2);

        // Mask applied to this block's output: route gradients accordingly.
        Tensor d_z = std::move(d_out);
        if (fp.masked && static_cast<int>(bi) == cfg_.tap_block) {
            Tensor routed({B, T, V, C});
            if (fp.mask.mode == MaskMode::Zero) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t t = 0; t < T; ++t)
                        for (std::size_t v = 0; v < V; ++v) {
                            if (fp.mask.keep[v] == 0.0) continue;
                            for (std::size_t c = 0; c < C; ++c)
                                routed(b, t, v, c) = d_z(b, t, v, c);
                        }
            } else {
                const auto lists = fill_lists(fp.mask, V);
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t t = 0; t < T; ++t)
                        for (std::size_t v = 0; v < V; ++v) {
                            if (fp.mask.keep[v] != 0.0) {
                                for (std::size_t c = 0; c < C; ++c)
                                    routed(b, t, v, c) += d_z(b, t, v, c);
                            } else if (!lists[v].empty()) {
                                const double inv = 1.0 / static_cast<double>(lists[v].size());
                                for (int j : lists[v])
                                    for (std::size_t c = 0; c < C; ++c)
                                        routed(b, t, static_cast<std::size_t>(j), c) +=
                                            inv * d_z(b, t, v, c);
                            }
                        }
            }
            d_z = std::move(routed);
        }

        // ReLU
        Tensor d_y = std::move(d_z);
        for (std::size_t i = 0; i < d_y.size(); ++i) {
            if (y(i) <= 0.0) d_y(i) = 0.0;
        }

        // Graph conv: y = adj * (u wg) + bg
        // d_mixed = adj^T d_y ; d_u = d_mixed wg^T ; d_wg = u^T d_mixed
        Tensor d_wg({C, C});
        Tensor d_bg({C});
        const std::size_t C_mix = p.wg.dim(0);  // equals temporal-conv channels
        Tensor d_u({B, T, V, C_mix});
        {
            std::vector<double> d_mixed(V * C);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t t = 0; t < T; ++t) {
                    std::fill(d_mixed.begin(), d_mixed.end(), 0.0);
                    for (std::size_t v = 0; v < V; ++v)
                        for (std::size_t c = 0; c < C; ++c) {
                            const double gy = d_y(b, t, v, c);
                            if (gy == 0.0) continue;
                            d_bg(c) += gy;
                            for (std::size_t uu = 0; uu < V; ++uu)
                                d_mixed[uu * C + c] += fp.adj_norm(v, uu) * gy;
                        }
                    for (std::size_t uu = 0; uu < V; ++uu)
                        for (std::size_t ci = 0; ci < C_mix; ++ci) {
                            const double uv = u(b, t, uu, ci);
                            double acc = 0.0;
                            for (std::size_t c = 0; c < C; ++c) {
                                const double gm = d_mixed[uu * C + c];
                                acc += gm * p.wg(ci, c);
                                d_wg(ci, c) += uv * gm;
                            }
                            d_u(b, t, uu, ci) = acc;
                        }
                }
        }

        // Temporal conv: u[t] = sum_tau wt[tau] in[t+tau] + bt
        Tensor d_wt({C, C_in, K});
        Tensor d_bt({C});
        Tensor d_in({B, in.dim(1), V, C_in});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t v = 0; v < V; ++v)
                    for (std::size_t co = 0; co < C; ++co) {
                        const double gu = d_u(b, t, v, co);
                        if (gu == 0.0) continue;
                        d_bt(co) += gu;
                        for (std::size_t tau = 0; tau < K; ++tau)
                            for (std::size_t ci = 0; ci < C_in; ++ci) {
                                d_wt(co, ci, tau) += gu * in(b, t + tau, v, ci);
                                d_in(b, t + tau, v, ci) += gu * p.wt(co, ci, tau);
                            }
                    }

        grads.tensors[4 * bi + 0] = std::move(d_wt);
        grads.tensors[4 * bi + 1] = std::move(d_bt);
        grads.tensors[4 * bi + 2] = std::move(d_wg);
        grads.tensors[4 * bi + 3] = std::move(d_bg);
        d_out = std::move(d_in);
    }
    return grads;
}

std::size_t STModel::num_params() const {
    std::size_t n = 0;
    for (const Tensor* t : params()) n += t->size();
    return n;
}

std::vector<const Tensor*> STModel::params() const {
    std::vector<const Tensor*> out;
    for (const BlockParams& p : blocks_) {
        out.push_back(&p.wt);
        out.push_back(&p.bt);
        out.push_back(&p.wg);
        out.push_back(&p.bg);
    }
    out.push_back(&w_readout_);
    out.push_back(&b_readout_);
    return out;
}

std::vector<Tensor*> STModel::mutable_params() {
    ++version_;
    std::vector<Tensor*> out;
    for (BlockParams& p : blocks_) {
        out.push_back(&p.wt);
        out.push_back(&p.bt);
        out.push_back(&p.wg);
        out.push_back(&p.bg);
    }
    out.push_back(&w_readout_);
    out.push_back(&b_readout_);
    return out;
}

std::vector<double> STModel::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(num_params());
    for (const Tensor* t : params()) {
        flat.insert(flat.end(), t->values().begin(), t->values().end());
    }
    return flat;
}

void STModel::set_params(const std::vector<double>& flat) {
    if (flat.size() != num_params()) {
        fail("shape", "parameter vector length mismatch: expected " +
                          std::to_string(num_params()));
    }
    std::size_t off = 0;
    for (Tensor* t : mutable_params()) {
        std::copy(flat.begin() + off, flat.begin() + off + t->size(), t->values().begin());
        off += t->size();
    }
}

}  // namespace stc
