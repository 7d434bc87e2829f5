#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bookrl/book.hpp"
#include "bookrl/env.hpp"
#include "bookrl/mlp.hpp"
#include "bookrl/rng.hpp"

namespace bookrl {

enum class WriterAlgo { tabular_q, dqn };

WriterAlgo writer_algo_from_string(const std::string& name);
const char* to_string(WriterAlgo algo);

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    long decay_steps = 0;  // 0 resolves to half of total_steps at run start

    double at(long step) const {
        if (decay_steps <= 0 || step >= decay_steps) return end;
        return start + (end - start) * (static_cast<double>(step) / static_cast<double>(decay_steps));
    }
};

struct WriterConfig {
    WriterAlgo algo = WriterAlgo::dqn;
    long total_steps = 200000;
    EpsilonSchedule epsilon;
    double gamma = 0.99;
    double learning_rate = 5e-4;  // Adam rate for dqn, step size for tabular
    int replay_capacity = 50000;
    int batch_size = 32;
    int target_sync_period = 500;  // learner updates between target refreshes
    long learn_start = 1000;       // replay size before updates begin
    int hidden_width = 64;

    void validate() const;
};

// Ring buffer of transitions with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition tr);
    size_t size() const { return full_ ? data_.size() : next_; }
    size_t capacity() const { return data_.size(); }
    const Transition& at(size_t i) const { return data_[i]; }

    void sample(size_t n, Rng& rng, std::vector<const Transition*>& out) const;

private:
    std::vector<Transition> data_;
    size_t next_ = 0;
    bool full_ = false;
};

// With probability epsilon a uniform action, otherwise the argmax
// (lowest index on ties). Always consumes one uniform draw.
int epsilon_greedy(const std::vector<double>& q_values, double epsilon, Rng& rng);

int argmax_lowest(const std::vector<double>& values);

using QTable = std::unordered_map<LinguisticState, std::vector<double>, LinguisticStateHash>;

// One-step TD update on the quantized table.
void tabular_q_update(QTable& table, const QuantizerConfig& quantizer, const Transition& tr,
                      double alpha, double gamma, int action_count);

// One Adam step on the mean squared TD error of a batch; returns the
// pre-step loss.
double dqn_update(Mlp& net, const Mlp& target_net, const std::vector<const Transition*>& batch,
                  double gamma, AdamState& opt);

struct EpisodeMetric {
    long episode = 0;
    long steps = 0;
    double score = 0.0;  // raw, unshaped return
};

struct TrainedWriter {
    WriterAlgo algo = WriterAlgo::dqn;
    QTable table;              // tabular_q
    QuantizerConfig quantizer;
    Mlp net;                   // dqn
    int action_count = 0;
    std::vector<EpisodeMetric> metrics;

    std::vector<double> action_values(const std::vector<double>& state) const;
    int greedy(const std::vector<double>& state) const;
};

// Algorithm 1's outer loop: act, learn every step, feed each terminated
// episode into the book. Passing book = nullptr disables writing and
// changes nothing else.
TrainedWriter train_writer(Env& env, const WriterConfig& cfg, Book* book, uint64_t seed);

using Policy = std::function<int(const std::vector<double>&)>;

// Greedy rollouts without learning; mean raw episode return.
double evaluate(const Policy& policy, Env& env, int episodes, uint64_t seed);

namespace detail {

struct LoopHooks {
    long eval_every = 0;
    std::function<void(long steps_done)> on_eval;
};

// Drives one learner through episodes until total_steps env steps.
// Learner needs action_values(state) and observe(transition).
template <class Learner>
std::vector<EpisodeMetric> run_episodic_training(Env& env, Learner& learner, long total_steps,
                                                 EpsilonSchedule eps, RewardShaping shaping,
                                                 Book* book, uint64_t seed,
                                                 const LoopHooks& hooks = {}) {
    if (eps.decay_steps <= 0) eps.decay_steps = total_steps / 2;
    Rng policy_rng(substream(seed, 1));
    std::vector<EpisodeMetric> metrics;
    long step = 0;
    long episode_idx = 0;
    while (step < total_steps) {
        std::vector<double> state = env.reset(substream(seed, 1000 + static_cast<uint64_t>(episode_idx)));
        Episode ep;
        double raw_score = 0.0;
        long ep_steps = 0;
        bool terminated = false;
        while (step < total_steps) {
            double epsilon = eps.at(step);
            int action = epsilon_greedy(learner.action_values(state), epsilon, policy_rng);
            StepResult sr = env.step(action);
            Transition tr{state, action, shape_reward(sr.reward, shaping), sr.next_state, sr.terminal};
            learner.observe(tr);
            raw_score += sr.reward;
            ++ep_steps;
            ++step;
            state = sr.next_state;
            terminated = tr.terminal;
            ep.steps.push_back(std::move(tr));
            if (hooks.eval_every > 0 && step % hooks.eval_every == 0 && hooks.on_eval) {
                hooks.on_eval(step);
            }
            if (terminated) break;
        }
        if (terminated) {
            if (book != nullptr) book->record_episode(ep);
            metrics.push_back({episode_idx, ep_steps, raw_score});
        }
        ++episode_idx;
    }
    return metrics;
}

struct TabularLearner {
    QTable table;
    QuantizerConfig quantizer;
    double alpha = 0.1;
    double gamma = 0.99;
    int action_count = 0;

    std::vector<double> action_values(const std::vector<double>& state) const;
    void observe(const Transition& tr);
};

struct DqnLearner {
    Mlp net;
    Mlp target;
    AdamState opt;
    ReplayBuffer replay;
    Rng replay_rng;
    double gamma = 0.99;
    int batch_size = 32;
    int target_sync_period = 500;
    long learn_start = 1000;
    long updates = 0;
    double last_loss = 0.0;

    DqnLearner(Mlp initial, const WriterConfig& cfg, uint64_t seed);

    std::vector<double> action_values(const std::vector<double>& state) const;
    void observe(const Transition& tr);
};

}  // namespace detail

}  // namespace bookrl
