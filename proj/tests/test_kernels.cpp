#include <doctest.h>

#include <cstring>
#include <tuple>
#include <vector>

#include "bookrl/kernels.hpp"
#include "bookrl/rng.hpp"

using namespace bookrl;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("serial and openmp affine kernels agree bit for bit") {
    Rng rng(8);
    const std::tuple<int, int, int> shapes[] = {{1, 3, 5}, {7, 16, 9}, {64, 33, 17}, {256, 64, 64}};
    for (auto [batch, in_dim, out_dim] : shapes) {
        auto x = random_vec(static_cast<size_t>(batch) * in_dim, rng);
        auto w = random_vec(static_cast<size_t>(out_dim) * in_dim, rng);
        auto b = random_vec(out_dim, rng);

        std::vector<double> y1(static_cast<size_t>(batch) * out_dim);
        std::vector<double> y2(y1.size());
        kernels::affine_forward_serial(x.data(), batch, in_dim, w.data(), b.data(), out_dim, y1.data());
        kernels::affine_forward_omp(x.data(), batch, in_dim, w.data(), b.data(), out_dim, y2.data());
        CHECK(bits_equal(y1, y2));

        auto dy = random_vec(y1.size(), rng);
        std::vector<double> dx1(x.size()), dx2(x.size());
        kernels::affine_backward_input_serial(dy.data(), batch, out_dim, w.data(), in_dim, dx1.data());
        kernels::affine_backward_input_omp(dy.data(), batch, out_dim, w.data(), in_dim, dx2.data());
        CHECK(bits_equal(dx1, dx2));

        std::vector<double> dw1(w.size()), dw2(w.size()), db1(out_dim), db2(out_dim);
        kernels::affine_backward_params_serial(x.data(), batch, in_dim, dy.data(), out_dim,
                                               dw1.data(), db1.data());
        kernels::affine_backward_params_omp(x.data(), batch, in_dim, dy.data(), out_dim,
                                            dw2.data(), db2.data());
        CHECK(bits_equal(dw1, dw2));
        CHECK(bits_equal(db1, db2));
    }
}

TEST_CASE("relu kernels agree and behave") {
    Rng rng(9);
    auto v = random_vec(1000, rng);
    auto v2 = v;
    kernels::relu_forward_serial(v.data(), static_cast<int64_t>(v.size()));
    kernels::relu_forward_omp(v2.data(), static_cast<int64_t>(v2.size()));
    CHECK(bits_equal(v, v2));
    for (double x : v) CHECK(x >= 0.0);

    auto out = random_vec(1000, rng);
    auto dy1 = random_vec(1000, rng);
    auto dy2 = dy1;
    kernels::relu_backward_serial(out.data(), dy1.data(), 1000);
    kernels::relu_backward_omp(out.data(), dy2.data(), 1000);
    CHECK(bits_equal(dy1, dy2));
    for (size_t i = 0; i < out.size(); ++i) {
        if (out[i] <= 0.0) CHECK(dy1[i] == 0.0);
    }
}

TEST_CASE("affine forward computes w x + b") {
    // 2x3 weight, hand-checked
    std::vector<double> w = {1.0, 2.0, 3.0, -1.0, 0.5, 0.0};
    std::vector<double> b = {0.5, -2.0};
    std::vector<double> x = {2.0, -1.0, 4.0};
    std::vector<double> y(2);
    kernels::affine_forward_serial(x.data(), 1, 3, w.data(), b.data(), 2, y.data());
    CHECK(y[0] == doctest::Approx(0.5 + 2.0 - 2.0 + 12.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(-2.0 - 2.0 - 0.5).epsilon(1e-15));
}

TEST_CASE("parallel_for covers every index exactly once in both modes") {
    for (auto mode : {kernels::Mode::Serial, kernels::Mode::OpenMp}) {
        std::vector<int> hits(5000, 0);
        kernels::parallel_for(static_cast<int64_t>(hits.size()), [&](int64_t i) { ++hits[i]; }, mode);
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("default mode is switchable") {
    auto saved = kernels::default_mode();
    kernels::set_default_mode(kernels::Mode::Serial);
    CHECK(kernels::default_mode() == kernels::Mode::Serial);
    kernels::set_default_mode(saved);
}

}  // TEST_SUITE
