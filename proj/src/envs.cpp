#include "bookrl/env.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "bookrl/rng.hpp"

namespace bookrl {

namespace {

constexpr double kPi = 3.14159265358979323846;

class CartPoleEnv final : public Env {
public:
    CartPoleEnv() {
        double theta_thr = 12.0 * kPi / 180.0;
        spec_.id = "cartpole";
        spec_.state_dims = 4;
        spec_.action_count = 2;
        spec_.max_steps = 500;
        spec_.default_quantizer.levels = 128;
        spec_.default_quantizer.lower = {-2.4, -3.0, -theta_thr, -3.0};
        spec_.default_quantizer.upper = {2.4, 3.0, theta_thr, 3.0};
        spec_.reward_shaping = RewardShaping::tanh10;
    }

    const EnvSpec& spec() const override { return spec_; }

protected:
    std::vector<double> do_reset(uint64_t seed) override {
        Rng rng(mix64(seed));
        for (double& v : state_) v = rng.uniform(-0.05, 0.05);
        return {state_.begin(), state_.end()};
    }

    StepResult do_step(int action) override {
        constexpr double gravity = 9.8;
        constexpr double mass_cart = 1.0;
        constexpr double mass_pole = 0.1;
        constexpr double total_mass = mass_cart + mass_pole;
        constexpr double half_length = 0.5;
        constexpr double pole_mass_length = mass_pole * half_length;
        constexpr double force_mag = 10.0;
        constexpr double tau = 0.02;
        const double theta_thr = 12.0 * kPi / 180.0;

        double x = state_[0], x_dot = state_[1], theta = state_[2], theta_dot = state_[3];
        double force = action == 1 ? force_mag : -force_mag;
        double cos_t = std::cos(theta);
        double sin_t = std::sin(theta);
        double temp = (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
        double theta_acc = (gravity * sin_t - cos_t * temp) /
                           (half_length * (4.0 / 3.0 - mass_pole * cos_t * cos_t / total_mass));
        double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

        x += tau * x_dot;
        x_dot += tau * x_acc;
        theta += tau * theta_dot;
        theta_dot += tau * theta_acc;
        state_ = {x, x_dot, theta, theta_dot};

        StepResult r;
        r.next_state = {x, x_dot, theta, theta_dot};
        r.reward = 1.0;
        r.terminal = std::abs(x) > 2.4 || std::abs(theta) > theta_thr;
        return r;
    }

private:
    EnvSpec spec_;
    std::array<double, 4> state_{};
};

class ChainEnv final : public Env {
public:
    explicit ChainEnv(const ChainConfig& cfg) : cfg_(cfg) {
        if (cfg_.n_states < 2) throw std::invalid_argument("chain: need at least 2 states");
        spec_.id = "chain";
        spec_.state_dims = 1;
        spec_.action_count = 2;
        spec_.max_steps = cfg_.max_steps;
        spec_.default_quantizer.levels = cfg_.n_states;
        spec_.default_quantizer.lower = {0.0};
        spec_.default_quantizer.upper = {static_cast<double>(cfg_.n_states)};
        spec_.reward_shaping = RewardShaping::identity;
    }

    const EnvSpec& spec() const override { return spec_; }

protected:
    std::vector<double> do_reset(uint64_t) override {
        pos_ = 0;
        return {0.0};
    }

    StepResult do_step(int action) override {
        int next = pos_ + (action == 1 ? 1 : -1);
        if (next < 0) next = 0;
        if (next > cfg_.n_states - 1) next = cfg_.n_states - 1;
        pos_ = next;
        StepResult r;
        r.next_state = {static_cast<double>(pos_)};
        r.reward = 0.0;
        for (const auto& [cell, reward] : cfg_.cell_rewards) {
            if (cell == pos_) r.reward = reward;
        }
        r.terminal = false;
        for (int cell : cfg_.terminal_cells) {
            if (cell == pos_) r.terminal = true;
        }
        return r;
    }

private:
    ChainConfig cfg_;
    EnvSpec spec_;
    int pos_ = 0;
};

// Cell layout, y increasing along the corridor:
//   (0,0) -> (0,1) -> (0,2)=low fork -> (-1,3) or (1,3) -> (0,4)
//   -> (0,5)=high fork -> (-1,6) bomb -1 | (1,6) money +1
class CrossroadsEnv final : public Env {
public:
    CrossroadsEnv() {
        spec_.id = "crossroads";
        spec_.state_dims = 2;
        spec_.action_count = 2;
        spec_.max_steps = 50;
        spec_.default_quantizer.levels = 16;
        spec_.default_quantizer.lower = {-2.0, 0.0};
        spec_.default_quantizer.upper = {2.0, 8.0};
        spec_.reward_shaping = RewardShaping::identity;
    }

    const EnvSpec& spec() const override { return spec_; }

protected:
    std::vector<double> do_reset(uint64_t) override {
        x_ = 0;
        y_ = 0;
        return state();
    }

    StepResult do_step(int action) override {
        StepResult r;
        r.reward = 0.0;
        r.terminal = false;
        if (y_ == 2 && x_ == 0) {
            // low-stakes fork: both branches identical
            x_ = action == 0 ? -1 : 1;
            y_ = 3;
        } else if (y_ == 3) {
            x_ = 0;
            y_ = 4;
        } else if (y_ == 5 && x_ == 0) {
            // high-stakes fork: bomb or money
            x_ = action == 0 ? -1 : 1;
            y_ = 6;
            r.reward = action == 0 ? -1.0 : 1.0;
            r.terminal = true;
        } else {
            y_ += 1;
        }
        r.next_state = state();
        return r;
    }

private:
    std::vector<double> state() const { return {static_cast<double>(x_), static_cast<double>(y_)}; }

    EnvSpec spec_;
    int x_ = 0;
    int y_ = 0;
};

}  // namespace

std::unique_ptr<Env> make_cartpole() { return std::make_unique<CartPoleEnv>(); }
std::unique_ptr<Env> make_chain(const ChainConfig& cfg) { return std::make_unique<ChainEnv>(cfg); }
std::unique_ptr<Env> make_crossroads() { return std::make_unique<CrossroadsEnv>(); }

std::vector<double> crossroads_low_stakes_cell() { return {0.0, 2.0}; }
std::vector<double> crossroads_high_stakes_cell() { return {0.0, 5.0}; }

std::unique_ptr<Env> make_env(const std::string& id) {
    if (id == "cartpole") return make_cartpole();
    if (id == "chain") return make_chain();
    if (id == "crossroads") return make_crossroads();
    throw std::invalid_argument("unknown environment id: " + id);
}

bool is_known_env(const std::string& id) {
    return id == "cartpole" || id == "chain" || id == "crossroads";
}

}  // namespace bookrl
