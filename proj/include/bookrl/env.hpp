#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bookrl/quantizer.hpp"

namespace bookrl {

struct EnvSpec {
    std::string id;
    int state_dims = 0;
    int action_count = 0;
    int max_steps = 0;
    QuantizerConfig default_quantizer;  // per-environment bounds for book keys
    RewardShaping reward_shaping = RewardShaping::identity;
};

struct StepResult {
    std::vector<double> next_state;
    double reward = 0.0;  // raw, unshaped
    bool terminal = false;
};

// Episodic environment. Deterministic given (seed, action sequence).
// Instances are single-threaded; run independent instances concurrently.
class Env {
public:
    virtual ~Env() = default;

    virtual const EnvSpec& spec() const = 0;

    std::vector<double> reset(uint64_t seed) {
        episode_steps_ = 0;
        done_ = false;
        return do_reset(seed);
    }

    // Throws std::logic_error when called after the episode terminated.
    // Terminal is forced once the step count reaches max_steps.
    StepResult step(int action) {
        if (done_) throw std::logic_error("env: step after terminal");
        if (action < 0 || action >= spec().action_count) {
            throw std::invalid_argument("env: action index out of range");
        }
        ++steps_taken_;
        ++episode_steps_;
        StepResult r = do_step(action);
        if (episode_steps_ >= spec().max_steps) r.terminal = true;
        done_ = r.terminal;
        return r;
    }

    bool done() const { return done_; }

    // Lifetime step() count, across episodes. Used to assert that book
    // readers never touch the environment while pre-training.
    uint64_t steps_taken() const { return steps_taken_; }

protected:
    virtual std::vector<double> do_reset(uint64_t seed) = 0;
    virtual StepResult do_step(int action) = 0;

private:
    uint64_t steps_taken_ = 0;
    int episode_steps_ = 0;
    bool done_ = false;
};

// ids: "cartpole", "chain", "crossroads"
std::unique_ptr<Env> make_env(const std::string& id);
bool is_known_env(const std::string& id);

// Classic cart-pole balancing task: 4-d state, two actions, +1 reward
// per step, explicit Euler dynamics, 500-step cap.
std::unique_ptr<Env> make_cartpole();

struct ChainConfig {
    int n_states = 6;
    std::vector<std::pair<int, double>> cell_rewards = {{5, 1.0}};  // reward on entering the cell
    std::vector<int> terminal_cells = {5};
    int max_steps = 100;
};

// Deterministic left/right walk on a line of cells; observation is the
// cell index as a 1-vector. Starts at cell 0.
std::unique_ptr<Env> make_chain(const ChainConfig& cfg = {});

// Corridor with a low-stakes fork (both branches identical) followed by
// a high-stakes fork (+1 vs -1 terminal). Observation is the (x, y)
// cell position.
std::unique_ptr<Env> make_crossroads();

// Cell positions of the two fork clusters, for importance checks.
std::vector<double> crossroads_low_stakes_cell();
std::vector<double> crossroads_high_stakes_cell();

}  // namespace bookrl
