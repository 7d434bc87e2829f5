#pragma once

#include <string>
#include <vector>

#include "bookrl/agents.hpp"
#include "bookrl/book.hpp"
#include "bookrl/env.hpp"
#include "bookrl/mlp.hpp"

namespace bookrl {

enum class ReaderHead { q_head, va_head };

ReaderHead reader_head_from_string(const std::string& name);
const char* to_string(ReaderHead head);

struct ReaderConfig {
    ReaderHead head = ReaderHead::q_head;
    long iterations = 10000;
    int batch_size = 8;
    double learning_rate = 5e-4;
    int hidden_width = 64;
    uint64_t seed = 0;

    void validate() const;
};

// Masked squared-error gradient for one sample: unknown actions get no
// gradient. Returns the sample's loss contribution; writes 2*(pred -
// q)/scale into dy for known actions, zero elsewhere.
double masked_q_loss_grad(const double* pred, const std::vector<double>& q,
                          const std::vector<uint8_t>& known, double scale, double* dy);

// Supervise net(sample)[a] toward stored q[a] for known actions only,
// sampling entries uniformly with replacement. Throws on an empty book.
void pretrain_q_reader(const PublishedBook& book, Mlp& net, const ReaderConfig& cfg);

// Supervise v_net toward the decoded state value and a_net toward the
// decoded advantages; entries with no known action with f > 0 are
// skipped. Throws when no entry is decodable.
void pretrain_va_reader(const PublishedBook& book, Mlp& v_net, Mlp& a_net, const ReaderConfig& cfg);

// Networks trained from a book alone; action selection reads the q head
// or the advantage head.
struct Reader {
    ReaderHead head = ReaderHead::q_head;
    int action_count = 0;
    Mlp q_net;
    Mlp v_net;
    Mlp a_net;

    std::vector<double> action_values(const std::vector<double>& state) const;
    int greedy(const std::vector<double>& state) const;
};

// Fresh networks, pre-trained from the published book without touching
// any environment.
Reader pretrain_reader(const PublishedBook& book, const ReaderConfig& cfg);

Policy greedy_policy_from(const Reader& reader);

// Conventional environment training continued from the reader's
// parameters: TD with replay on the q net, or on the composite
// v(s) + a(s, .) for the va head. Zero steps leaves the nets unchanged.
std::vector<EpisodeMetric> continue_training(Reader& reader, Env& env, const WriterConfig& cfg,
                                             uint64_t seed);

namespace detail {

// Shared by continue_training and the from-scratch baseline curves.
template <class Learner>
std::vector<EpisodeMetric> run_reader_loop(Env& env, Learner& learner, const WriterConfig& cfg,
                                           uint64_t seed, const LoopHooks& hooks = {}) {
    return run_episodic_training(env, learner, cfg.total_steps, cfg.epsilon,
                                 env.spec().reward_shaping, nullptr, seed, hooks);
}

// TD learner over the composite q(s, a) = v(s) + a(s, a), with target
// copies of both nets.
struct VaLearner {
    Mlp v_net, a_net;
    Mlp v_target, a_target;
    AdamState opt_v, opt_a;
    ReplayBuffer replay;
    Rng replay_rng;
    double gamma = 0.99;
    int batch_size = 32;
    int target_sync_period = 500;
    long learn_start = 1000;
    long updates = 0;

    VaLearner(Mlp v, Mlp a, const WriterConfig& cfg, uint64_t seed);

    std::vector<double> action_values(const std::vector<double>& state) const;
    void observe(const Transition& tr);
};

double va_update(Mlp& v_net, Mlp& a_net, const Mlp& v_target, const Mlp& a_target,
                 const std::vector<const Transition*>& batch, double gamma, AdamState& opt_v,
                 AdamState& opt_a);

}  // namespace detail

}  // namespace bookrl
