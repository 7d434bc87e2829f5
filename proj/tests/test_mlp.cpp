#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>

#include "bookrl/mlp.hpp"
#include "bookrl/rng.hpp"

using namespace bookrl;

namespace {

Mlp hand_net_2_2_1() {
    Mlp net;
    Mlp::Layer l0;
    l0.in = 2;
    l0.out = 2;
    l0.w = {1.0, -1.0, 0.5, 2.0};
    l0.b = {0.0, -1.0};
    Mlp::Layer l1;
    l1.in = 2;
    l1.out = 1;
    l1.w = {2.0, -0.5};
    l1.b = {1.0};
    net.layers = {l0, l1};
    return net;
}

// scalar loss sum_k c[k] * y[k]; independent finite-difference oracle
double weighted_output(const Mlp& net, const std::vector<double>& x, int batch,
                       const std::vector<double>& c) {
    ForwardCache cache;
    forward_batch(net, x, batch, cache);
    const std::vector<double>& y = cache.acts.back();
    double loss = 0.0;
    for (size_t k = 0; k < y.size(); ++k) loss += c[k] * y[k];
    return loss;
}

// Smallest |pre-activation| over all hidden units; finite differences
// are only trustworthy away from the rectifier kink.
double kink_margin(const Mlp& net, const std::vector<double>& x, int batch) {
    double margin = 1e300;
    std::vector<double> cur(x);
    std::vector<double> next;
    for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
        const Mlp::Layer& layer = net.layers[l];
        next.assign(static_cast<size_t>(batch) * layer.out, 0.0);
        for (int bi = 0; bi < batch; ++bi) {
            for (int o = 0; o < layer.out; ++o) {
                double acc = layer.b[o];
                for (int i = 0; i < layer.in; ++i) {
                    acc += layer.w[static_cast<size_t>(o) * layer.in + i] *
                           cur[static_cast<size_t>(bi) * layer.in + i];
                }
                margin = std::min(margin, std::abs(acc));
                next[static_cast<size_t>(bi) * layer.out + o] = acc > 0.0 ? acc : 0.0;
            }
        }
        cur = next;
    }
    return margin;
}

double max_relative_gradient_error(Mlp net, int batch, const std::vector<double>& x, Rng& rng) {
    int out_dim = net.output_dim();
    std::vector<double> c(static_cast<size_t>(batch) * out_dim);
    for (double& v : c) v = rng.uniform(-1.0, 1.0);

    ForwardCache cache;
    forward_batch(net, x, batch, cache);
    Gradients grads = Gradients::like(net);
    backward_batch(net, cache, c, grads);

    double worst = 0.0;
    auto check_span = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (size_t i = 0; i < params.size(); ++i) {
            double saved = params[i];
            double h = 1e-6 * std::max(1.0, std::abs(saved));
            params[i] = saved + h;
            double up = weighted_output(net, x, batch, c);
            params[i] = saved - h;
            double down = weighted_output(net, x, batch, c);
            params[i] = saved;
            double numeric = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
        }
    };
    for (size_t l = 0; l < net.layers.size(); ++l) {
        check_span(net.layers[l].w, grads.layers[l].w);
        check_span(net.layers[l].b, grads.layers[l].b);
    }
    return worst;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("zero weights and biases give zero output") {
    Mlp net;
    Mlp::Layer l;
    l.in = 3;
    l.out = 2;
    l.w.assign(6, 0.0);
    l.b.assign(2, 0.0);
    net.layers = {l};
    auto y = net.forward({1.0, -2.0, 3.0});
    CHECK(y == std::vector<double>{0.0, 0.0});
}

TEST_CASE("identity single layer passes the input through") {
    Mlp net;
    Mlp::Layer l;
    l.in = 2;
    l.out = 2;
    l.w = {1.0, 0.0, 0.0, 1.0};
    l.b = {0.0, 0.0};
    net.layers = {l};  // output layer has no activation
    auto y = net.forward({-3.5, 4.25});
    CHECK(y == std::vector<double>{-3.5, 4.25});
}

TEST_CASE("hand-set 2-2-1 net matches the pencil value") {
    Mlp net = hand_net_2_2_1();
    // hidden pre-activations: (-1, 3.5); relu: (0, 3.5); out: 1 - 0.5*3.5
    auto y = net.forward({1.0, 2.0});
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(-0.75).epsilon(1e-15));
}

TEST_CASE("forward rejects shape mismatches") {
    Mlp net = hand_net_2_2_1();
    CHECK_THROWS_AS(net.forward({1.0}), std::invalid_argument);
    ForwardCache cache;
    CHECK_THROWS_AS(forward_batch(net, {1.0, 2.0, 3.0}, 2, cache), std::invalid_argument);
}

TEST_CASE("batched forward matches the single-sample path") {
    Rng rng(4);
    Mlp net = Mlp::make({3, 8, 2}, rng);
    std::vector<double> xs;
    std::vector<std::vector<double>> samples;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> s = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        samples.push_back(s);
        xs.insert(xs.end(), s.begin(), s.end());
    }
    ForwardCache cache;
    forward_batch(net, xs, 5, cache);
    for (int i = 0; i < 5; ++i) {
        auto y = net.forward(samples[i]);
        for (int o = 0; o < 2; ++o) {
            CHECK(y[o] == cache.acts.back()[static_cast<size_t>(i) * 2 + o]);
        }
    }
}

TEST_CASE("backward matches central finite differences on random nets") {
    Rng rng(2718);
    double worst = 0.0;
    int trials = 0;
    while (trials < 100) {
        std::vector<int> shape;
        int depth = 1 + rng.uniform_int(3);
        shape.push_back(1 + rng.uniform_int(4));
        for (int d = 0; d < depth; ++d) shape.push_back(1 + rng.uniform_int(5));
        Mlp net = Mlp::make(shape, rng);
        int batch = 1 + rng.uniform_int(4);
        std::vector<double> x(static_cast<size_t>(batch) * net.input_dim());
        for (double& v : x) v = rng.uniform(-1.5, 1.5);
        if (kink_margin(net, x, batch) < 1e-3) continue;  // too close to a rectifier kink
        worst = std::max(worst, max_relative_gradient_error(net, batch, x, rng));
        ++trials;
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
    Rng rng(5);
    Mlp net = Mlp::make({3, 4, 2}, rng);
    ForwardCache cache;
    forward_batch(net, {0.5, -0.5, 1.0}, 1, cache);
    Gradients grads = Gradients::like(net);
    backward_batch(net, cache, {0.0, 0.0}, grads);
    for (const auto& l : grads.layers) {
        for (double g : l.w) CHECK(g == 0.0);
        for (double g : l.b) CHECK(g == 0.0);
    }
}

TEST_CASE("linear net gradient of w.x with respect to w is x") {
    Mlp net;
    Mlp::Layer l;
    l.in = 3;
    l.out = 1;
    l.w = {0.2, -0.4, 0.6};
    l.b = {0.0};
    net.layers = {l};
    ForwardCache cache;
    std::vector<double> x = {2.0, 3.0, -1.0};
    forward_batch(net, x, 1, cache);
    Gradients grads = Gradients::like(net);
    backward_batch(net, cache, {1.0}, grads);
    CHECK(grads.layers[0].w == x);
    CHECK(grads.layers[0].b == std::vector<double>{1.0});
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    Rng rng(6);
    Mlp net = Mlp::make({2, 4, 1}, rng);
    Mlp before = net;
    AdamState opt = AdamState::like(net, 1e-3);
    Gradients zero = Gradients::like(net);
    for (int i = 0; i < 3; ++i) adam_step(opt, net, zero);
    for (size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(net.layers[l].w == before.layers[l].w);
        CHECK(net.layers[l].b == before.layers[l].b);
    }
}

TEST_CASE("first adam step moves each parameter by about lr against the gradient sign") {
    Mlp net;
    Mlp::Layer l;
    l.in = 1;
    l.out = 2;
    l.w = {0.5, -0.25};
    l.b = {0.0, 0.0};
    net.layers = {l};
    AdamState opt = AdamState::like(net, 1e-3);
    Gradients g = Gradients::like(net);
    g.layers[0].w = {0.2, -0.7};
    g.layers[0].b = {0.0, 0.0};
    adam_step(opt, net, g);
    // bias correction makes the first update lr * g / (|g| + eps)
    CHECK(net.layers[0].w[0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
    CHECK(net.layers[0].w[1] == doctest::Approx(-0.25 + 1e-3).epsilon(1e-6));
    CHECK(net.layers[0].b[0] == 0.0);
}

TEST_CASE("identical nets with identical gradient streams stay identical") {
    Rng rng_a(7);
    Rng rng_b(7);
    Mlp a = Mlp::make({3, 6, 2}, rng_a);
    Mlp b = Mlp::make({3, 6, 2}, rng_b);
    AdamState opt_a = AdamState::like(a, 5e-4);
    AdamState opt_b = AdamState::like(b, 5e-4);
    Rng grad_rng(8);
    for (int step = 0; step < 20; ++step) {
        Gradients g = Gradients::like(a);
        for (auto& l : g.layers) {
            for (double& v : l.w) v = grad_rng.uniform(-1, 1);
            for (double& v : l.b) v = grad_rng.uniform(-1, 1);
        }
        adam_step(opt_a, a, g);
        adam_step(opt_b, b, g);
    }
    for (size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].w == b.layers[l].w);
        CHECK(a.layers[l].b == b.layers[l].b);
    }
}

TEST_CASE("non-finite gradients are refused") {
    Rng rng(9);
    Mlp net = Mlp::make({2, 2}, rng);
    AdamState opt = AdamState::like(net, 1e-3);
    Gradients g = Gradients::like(net);
    g.layers[0].w[0] = INFINITY;
    CHECK_THROWS_AS(adam_step(opt, net, g), std::runtime_error);
}

TEST_CASE("checkpoint round trip preserves parameters exactly") {
    Rng rng(10);
    Mlp net = Mlp::make({4, 16, 3}, rng);
    auto path = (std::filesystem::temp_directory_path() / "bookrl_net.json").string();
    save_mlp(net, path);
    Mlp loaded = load_mlp(path);
    REQUIRE(loaded.layers.size() == net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(loaded.layers[l].w == net.layers[l].w);
        CHECK(loaded.layers[l].b == net.layers[l].b);
    }
    std::filesystem::remove(path);
}

TEST_CASE("weight init is seeded and scaled by fan-in") {
    Rng rng_a(11);
    Rng rng_b(11);
    Mlp a = Mlp::make({16, 8}, rng_a);
    Mlp b = Mlp::make({16, 8}, rng_b);
    CHECK(a.layers[0].w == b.layers[0].w);
    double bound = 1.0 / std::sqrt(16.0);
    for (double w : a.layers[0].w) {
        CHECK(w >= -bound);
        CHECK(w <= bound);
    }
    for (double bias : a.layers[0].b) CHECK(bias == 0.0);
}

}  // TEST_SUITE
