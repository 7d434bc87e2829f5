#include "bookrl/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bookrl {

Mlp Mlp::make(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
    Mlp net;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.in = sizes[l];
        layer.out = sizes[l + 1];
        if (layer.in < 1 || layer.out < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
        double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
        layer.w.resize(static_cast<size_t>(layer.out) * layer.in);
        for (double& w : layer.w) w = rng.uniform(-scale, scale);
        layer.b.assign(layer.out, 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

size_t Mlp::parameter_count() const {
    size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument("mlp forward: input size mismatch");
    }
    std::vector<double> cur = x;
    std::vector<double> next;
    for (size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        next.resize(layer.out);
        kernels::affine_forward_serial(cur.data(), 1, layer.in, layer.w.data(), layer.b.data(),
                                       layer.out, next.data());
        if (l + 1 < layers.size()) {
            kernels::relu_forward_serial(next.data(), layer.out);
        }
        cur.swap(next);
    }
    return cur;
}

void forward_batch(const Mlp& net, const std::vector<double>& x, int batch, ForwardCache& cache,
                   kernels::Mode mode) {
    if (net.layers.empty()) throw std::invalid_argument("mlp: empty network");
    if (x.size() != static_cast<size_t>(batch) * net.input_dim()) {
        throw std::invalid_argument("mlp forward_batch: input size mismatch");
    }
    cache.batch = batch;
    cache.acts.resize(net.layers.size() + 1);
    cache.acts[0] = x;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const Mlp::Layer& layer = net.layers[l];
        cache.acts[l + 1].resize(static_cast<size_t>(batch) * layer.out);
        kernels::affine_forward(cache.acts[l].data(), batch, layer.in, layer.w.data(),
                                layer.b.data(), layer.out, cache.acts[l + 1].data(), mode);
        if (l + 1 < net.layers.size()) {
            kernels::relu_forward(cache.acts[l + 1].data(),
                                  static_cast<int64_t>(batch) * layer.out, mode);
        }
    }
}

Gradients Gradients::like(const Mlp& net) {
    Gradients g;
    for (const Mlp::Layer& l : net.layers) {
        Mlp::Layer gl;
        gl.in = l.in;
        gl.out = l.out;
        gl.w.assign(l.w.size(), 0.0);
        gl.b.assign(l.b.size(), 0.0);
        g.layers.push_back(std::move(gl));
    }
    return g;
}

void backward_batch(const Mlp& net, const ForwardCache& cache, const std::vector<double>& dy,
                    Gradients& grads, kernels::Mode mode) {
    if (grads.layers.size() != net.layers.size()) {
        throw std::invalid_argument("mlp backward_batch: gradient shape mismatch");
    }
    int batch = cache.batch;
    if (dy.size() != static_cast<size_t>(batch) * net.output_dim()) {
        throw std::invalid_argument("mlp backward_batch: output gradient size mismatch");
    }
    std::vector<double> delta = dy;
    std::vector<double> delta_prev;
    for (size_t l = net.layers.size(); l-- > 0;) {
        const Mlp::Layer& layer = net.layers[l];
        kernels::affine_backward_params(cache.acts[l].data(), batch, layer.in, delta.data(),
                                        layer.out, grads.layers[l].w.data(),
                                        grads.layers[l].b.data(), mode);
        if (l > 0) {
            delta_prev.resize(static_cast<size_t>(batch) * layer.in);
            kernels::affine_backward_input(delta.data(), batch, layer.out, layer.w.data(),
                                           layer.in, delta_prev.data(), mode);
            // hidden activations are post-rectifier
            kernels::relu_backward(cache.acts[l].data(), delta_prev.data(),
                                   static_cast<int64_t>(batch) * layer.in, mode);
            delta.swap(delta_prev);
        }
    }
}

AdamState AdamState::like(const Mlp& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.m = Gradients::like(net);
    s.v = Gradients::like(net);
    return s;
}

namespace {

void adam_update_span(double* p, double* m, double* v, const double* g, size_t n,
                      const AdamState& s, double corr1, double corr2) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        double m_hat = m[i] / corr1;
        double v_hat = v[i] / corr2;
        p[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

}  // namespace

void adam_step(AdamState& state, Mlp& net, const Gradients& grads) {
    if (grads.layers.size() != net.layers.size()) {
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    for (const Mlp::Layer& gl : grads.layers) {
        for (double g : gl.w) {
            if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
        }
        for (double g : gl.b) {
            if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
        }
    }
    ++state.step;
    double corr1 = 1.0 - std::pow(state.beta1, state.step);
    double corr2 = 1.0 - std::pow(state.beta2, state.step);
    for (size_t l = 0; l < net.layers.size(); ++l) {
        adam_update_span(net.layers[l].w.data(), state.m.layers[l].w.data(),
                         state.v.layers[l].w.data(), grads.layers[l].w.data(),
                         net.layers[l].w.size(), state, corr1, corr2);
        adam_update_span(net.layers[l].b.data(), state.m.layers[l].b.data(),
                         state.v.layers[l].b.data(), grads.layers[l].b.data(),
                         net.layers[l].b.size(), state, corr1, corr2);
    }
}

std::string mlp_to_json_string(const Mlp& net) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const Mlp::Layer& l : net.layers) {
        nlohmann::ordered_json jl;
        jl["in"] = l.in;
        jl["out"] = l.out;
        jl["w"] = l.w;
        jl["b"] = l.b;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

void save_mlp(const Mlp& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << mlp_to_json_string(net);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(buf.str());
        Mlp net;
        for (const auto& jl : j.at("layers")) {
            Mlp::Layer l;
            l.in = jl.at("in").get<int>();
            l.out = jl.at("out").get<int>();
            l.w = jl.at("w").get<std::vector<double>>();
            l.b = jl.at("b").get<std::vector<double>>();
            if (l.w.size() != static_cast<size_t>(l.in) * l.out || l.b.size() != static_cast<size_t>(l.out)) {
                throw std::runtime_error("mlp checkpoint: layer shape mismatch");
            }
            if (!net.layers.empty() && net.layers.back().out != l.in) {
                throw std::runtime_error("mlp checkpoint: layer shapes do not compose");
            }
            net.layers.push_back(std::move(l));
        }
        if (net.layers.empty()) throw std::runtime_error("mlp checkpoint: no layers");
        return net;
    } catch (const nlohmann::ordered_json::exception& e) {
        throw std::runtime_error(std::string("mlp checkpoint is malformed: ") + e.what());
    }
}

}  // namespace bookrl
