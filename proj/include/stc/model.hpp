#pragma once

#include <cstdint>
#include <vector>

#include "stc/graph.hpp"
#include "stc/tensor.hpp"

namespace stc {

// One forecasting block: valid temporal convolution (kernel steps consumed
// from the window), graph convolution over the normalized adjacency with a
// channel mixing matrix, then ReLU. A stack of blocks must consume the whole
// input window (final temporal length 1) before the affine readout maps each
// node's hidden vector to the S output steps.
struct BlockSpec {
    int kernel = 0;  // 0 on the last block means "consume the remaining steps"
    int channels = 0;
};

struct ModelConfig {
    int input_dim = 1;
    int window = 12;
    int horizon = 3;
    std::vector<BlockSpec> blocks = {{4, 12}, {0, 12}};
    int tap_block = 0;  // block whose output feeds difficulty evaluation
    std::uint64_t seed = 1;
};

enum class MaskMode {
    Zero,      // dropped node activations set to zero
    MeanFill,  // dropped node activations replaced by retained neighbor means
};

struct MaskSpec {
    std::vector<double> keep;  // per node, 0 or 1
    MaskMode mode = MaskMode::Zero;
    const NeighborIndex* neighbors = nullptr;  // required for MeanFill
};

struct Gradients {
    std::vector<Tensor> tensors;  // one per parameter tensor, model order
};

// Everything backward needs, captured by value: activations stay attached to
// the pass, so concurrent passes over one model snapshot do not interfere.
struct ForwardPass {
    Tensor pred;  // (B, S, V)
    Tensor tap;   // (B, V, tap_dim), pre-mask

    Tensor adj_norm;                  // (V, V)
    std::vector<Tensor> inputs;       // inputs[b] feeds block b; inputs[L] feeds the readout
    std::vector<Tensor> temporal_out; // per block, pre graph conv
    std::vector<Tensor> graph_out;    // per block, pre ReLU
    std::vector<Tensor> block_out;    // per block, post ReLU, pre mask
    MaskSpec mask;
    bool masked = false;
    std::uint64_t model_version = 0;
};

double glorot_uniform_bound(int fan_in, int fan_out);

class STModel {
public:
    static STModel init(const ModelConfig& cfg);

    // x: (batch, window, V, input_dim). Returns predictions plus the pre-mask
    // tap activations; when a mask is given it is applied to the tap block's
    // output before any downstream computation.
    ForwardPass forward(const Tensor& x, const Graph& g, const MaskSpec* mask = nullptr) const;

    // Exact gradients of sum(pred * loss_grad) w.r.t. every parameter.
    Gradients backward(const ForwardPass& fp, const Tensor& loss_grad) const;

    // Re-applies the mask to the given tap-block activations and re-runs the
    // remaining blocks and readout.
    Tensor rerun_from_tap(const ForwardPass& fp, const Tensor& tap_block_activations,
                          const MaskSpec* mask) const;

    const ModelConfig& config() const { return cfg_; }
    int tap_dim() const;
    int num_blocks() const { return static_cast<int>(blocks_.size()); }

    std::size_t num_params() const;
    std::vector<double> flatten_params() const;
    void set_params(const std::vector<double>& flat);
    std::vector<Tensor*> mutable_params();          // bumps the version
    std::vector<const Tensor*> params() const;
    std::uint64_t version() const { return version_; }

private:
    struct BlockParams {
        Tensor wt;  // (C_out, C_in, kernel)
        Tensor bt;  // (C_out)
        Tensor wg;  // (C_out, C_out)
        Tensor bg;  // (C_out)
        int t_in = 0;
        int t_out = 0;
    };

    Tensor apply_mask(const Tensor& z, const MaskSpec& mask) const;
    Tensor run_suffix(const Tensor& masked_tap_out, const Graph* g, const Tensor& adj_norm) const;

    ModelConfig cfg_;
    std::vector<BlockParams> blocks_;
    Tensor w_readout_;  // (C_last, S)
    Tensor b_readout_;  // (S)
    std::uint64_t version_ = 0;
};

}  // namespace stc
