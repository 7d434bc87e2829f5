#pragma once

#include <string>
#include <vector>

#include "bookrl/kernels.hpp"
#include "bookrl/rng.hpp"

namespace bookrl {

// Dense network: affine layers with rectifier on hidden layers and
// identity on the output. Weights are row-major out x in.
struct Mlp {
    struct Layer {
        int in = 0;
        int out = 0;
        std::vector<double> w;
        std::vector<double> b;
    };

    std::vector<Layer> layers;

    // Uniform init scaled by 1/sqrt(fan_in), biases zero.
    static Mlp make(const std::vector<int>& sizes, Rng& rng);

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    size_t parameter_count() const;

    std::vector<double> forward(const std::vector<double>& x) const;
};

// Per-layer activations for a batch; acts[0] holds the inputs and
// acts[l+1] the (post-rectifier) outputs of layer l, batch-major.
struct ForwardCache {
    int batch = 0;
    std::vector<std::vector<double>> acts;
};

void forward_batch(const Mlp& net, const std::vector<double>& x, int batch, ForwardCache& cache,
                   kernels::Mode mode = kernels::default_mode());

// Same shapes as the network, holding parameter gradients.
struct Gradients {
    std::vector<Mlp::Layer> layers;

    static Gradients like(const Mlp& net);
};

// dy is the batch-major gradient of the loss w.r.t. the network output.
// Batch contributions accumulate in fixed sample order.
void backward_batch(const Mlp& net, const ForwardCache& cache, const std::vector<double>& dy,
                    Gradients& grads, kernels::Mode mode = kernels::default_mode());

struct AdamState {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    Gradients m;
    Gradients v;

    static AdamState like(const Mlp& net, double learning_rate);
};

// Bias-corrected Adam update in place. Throws std::runtime_error on a
// non-finite gradient (training divergence signal).
void adam_step(AdamState& state, Mlp& net, const Gradients& grads);

// Optional checkpoint files; same JSON conventions as the book file.
std::string mlp_to_json_string(const Mlp& net);
void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace bookrl
