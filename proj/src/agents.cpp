#include "bookrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bookrl {

WriterAlgo writer_algo_from_string(const std::string& name) {
    if (name == "tabular_q") return WriterAlgo::tabular_q;
    if (name == "dqn") return WriterAlgo::dqn;
    throw std::invalid_argument("unknown writer algo: " + name);
}

const char* to_string(WriterAlgo algo) {
    switch (algo) {
        case WriterAlgo::tabular_q: return "tabular_q";
        case WriterAlgo::dqn: return "dqn";
    }
    return "?";
}

void WriterConfig::validate() const {
    if (total_steps < 1) throw std::invalid_argument("writer: total_steps must be >= 1");
    if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0) {
        throw std::invalid_argument("writer: epsilon must stay in [0, 1]");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("writer: gamma must be in (0, 1]");
    if (learning_rate <= 0.0) throw std::invalid_argument("writer: learning_rate must be positive");
    if (algo == WriterAlgo::dqn) {
        if (replay_capacity < 1 || batch_size < 1 || target_sync_period < 1 || hidden_width < 1) {
            throw std::invalid_argument("writer: dqn parameters must be positive");
        }
    }
}

ReplayBuffer::ReplayBuffer(size_t capacity) {
    if (capacity < 1) throw std::invalid_argument("replay: capacity must be positive");
    data_.resize(capacity);
}

void ReplayBuffer::push(Transition tr) {
    data_[next_] = std::move(tr);
    ++next_;
    if (next_ == data_.size()) {
        next_ = 0;
        full_ = true;
    }
}

void ReplayBuffer::sample(size_t n, Rng& rng, std::vector<const Transition*>& out) const {
    size_t sz = size();
    if (sz == 0) throw std::logic_error("replay: sampling from empty buffer");
    out.clear();
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        out.push_back(&data_[static_cast<size_t>(rng.uniform_int(static_cast<int>(sz)))]);
    }
}

int argmax_lowest(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("argmax over empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

int epsilon_greedy(const std::vector<double>& q_values, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0, 1]");
    if (q_values.empty()) throw std::invalid_argument("epsilon_greedy: empty q vector");
    double u = rng.uniform();
    if (u < epsilon) return rng.uniform_int(static_cast<int>(q_values.size()));
    return argmax_lowest(q_values);
}

void tabular_q_update(QTable& table, const QuantizerConfig& quantizer, const Transition& tr,
                      double alpha, double gamma, int action_count) {
    LinguisticState key = quantize(tr.state, quantizer);
    auto [it, inserted] = table.try_emplace(key, std::vector<double>(action_count, 0.0));
    std::vector<double>& q = it->second;
    double target = tr.reward;
    if (!tr.terminal) {
        LinguisticState next_key = quantize(tr.next_state, quantizer);
        auto nit = table.find(next_key);
        if (nit != table.end()) {
            target += gamma * *std::max_element(nit->second.begin(), nit->second.end());
        }
    }
    q[tr.action] += alpha * (target - q[tr.action]);
}

double dqn_update(Mlp& net, const Mlp& target_net, const std::vector<const Transition*>& batch,
                  double gamma, AdamState& opt) {
    if (batch.empty()) throw std::invalid_argument("dqn_update: empty batch");
    int b = static_cast<int>(batch.size());
    int in_dim = net.input_dim();
    int out_dim = net.output_dim();

    std::vector<double> xs(static_cast<size_t>(b) * in_dim);
    std::vector<double> xs_next(static_cast<size_t>(b) * in_dim);
    for (int i = 0; i < b; ++i) {
        const Transition& tr = *batch[i];
        if (static_cast<int>(tr.state.size()) != in_dim) {
            throw std::invalid_argument("dqn_update: transition state size mismatch");
        }
        std::copy(tr.state.begin(), tr.state.end(), xs.begin() + static_cast<size_t>(i) * in_dim);
        std::copy(tr.next_state.begin(), tr.next_state.end(),
                  xs_next.begin() + static_cast<size_t>(i) * in_dim);
    }

    ForwardCache next_cache;
    forward_batch(target_net, xs_next, b, next_cache);
    const std::vector<double>& q_next = next_cache.acts.back();

    ForwardCache cache;
    forward_batch(net, xs, b, cache);
    const std::vector<double>& q = cache.acts.back();

    std::vector<double> dy(static_cast<size_t>(b) * out_dim, 0.0);
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        const Transition& tr = *batch[i];
        double target = tr.reward;
        if (!tr.terminal) {
            const double* row = q_next.data() + static_cast<size_t>(i) * out_dim;
            double best = row[0];
            for (int a = 1; a < out_dim; ++a) best = std::max(best, row[a]);
            target += gamma * best;
        }
        double pred = q[static_cast<size_t>(i) * out_dim + tr.action];
        double diff = pred - target;
        loss += diff * diff;
        dy[static_cast<size_t>(i) * out_dim + tr.action] = 2.0 * diff / b;
    }
    loss /= b;
    if (!std::isfinite(loss)) throw std::runtime_error("dqn_update: non-finite loss");

    Gradients grads = Gradients::like(net);
    backward_batch(net, cache, dy, grads);
    adam_step(opt, net, grads);
    return loss;
}

namespace detail {

std::vector<double> TabularLearner::action_values(const std::vector<double>& state) const {
    auto it = table.find(quantize(state, quantizer));
    if (it == table.end()) return std::vector<double>(action_count, 0.0);
    return it->second;
}

void TabularLearner::observe(const Transition& tr) {
    tabular_q_update(table, quantizer, tr, alpha, gamma, action_count);
}

DqnLearner::DqnLearner(Mlp initial, const WriterConfig& cfg, uint64_t seed)
    : net(std::move(initial)),
      target(net),
      opt(AdamState::like(net, cfg.learning_rate)),
      replay(static_cast<size_t>(cfg.replay_capacity)),
      replay_rng(substream(seed, 3)),
      gamma(cfg.gamma),
      batch_size(cfg.batch_size),
      target_sync_period(cfg.target_sync_period),
      learn_start(cfg.learn_start) {}

std::vector<double> DqnLearner::action_values(const std::vector<double>& state) const {
    return net.forward(state);
}

void DqnLearner::observe(const Transition& tr) {
    replay.push(tr);
    if (replay.size() < static_cast<size_t>(std::max<long>(batch_size, learn_start))) return;
    std::vector<const Transition*> batch;
    replay.sample(static_cast<size_t>(batch_size), replay_rng, batch);
    last_loss = dqn_update(net, target, batch, gamma, opt);
    ++updates;
    if (updates % target_sync_period == 0) target = net;
}

}  // namespace detail

std::vector<double> TrainedWriter::action_values(const std::vector<double>& state) const {
    if (algo == WriterAlgo::tabular_q) {
        auto it = table.find(quantize(state, quantizer));
        if (it == table.end()) return std::vector<double>(action_count, 0.0);
        return it->second;
    }
    return net.forward(state);
}

int TrainedWriter::greedy(const std::vector<double>& state) const {
    return argmax_lowest(action_values(state));
}

TrainedWriter train_writer(Env& env, const WriterConfig& cfg, Book* book, uint64_t seed) {
    cfg.validate();
    if (book != nullptr && book->action_count() != env.spec().action_count) {
        throw std::invalid_argument("train_writer: book action count does not match environment");
    }
    TrainedWriter out;
    out.algo = cfg.algo;
    out.action_count = env.spec().action_count;
    // table keys must match the book keys; fall back to the env default
    // when writing is disabled
    out.quantizer = book != nullptr ? book->quantizer() : env.spec().default_quantizer;

    if (cfg.algo == WriterAlgo::tabular_q) {
        detail::TabularLearner learner;
        learner.quantizer = out.quantizer;
        learner.alpha = cfg.learning_rate;
        learner.gamma = cfg.gamma;
        learner.action_count = env.spec().action_count;
        out.metrics = detail::run_episodic_training(env, learner, cfg.total_steps, cfg.epsilon,
                                                    env.spec().reward_shaping, book, seed);
        out.table = std::move(learner.table);
    } else {
        Rng init_rng(substream(seed, 2));
        Mlp initial = Mlp::make({env.spec().state_dims, cfg.hidden_width, env.spec().action_count}, init_rng);
        detail::DqnLearner learner(std::move(initial), cfg, seed);
        out.metrics = detail::run_episodic_training(env, learner, cfg.total_steps, cfg.epsilon,
                                                    env.spec().reward_shaping, book, seed);
        out.net = std::move(learner.net);
    }
    return out;
}

double evaluate(const Policy& policy, Env& env, int episodes, uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        std::vector<double> state = env.reset(substream(seed, static_cast<uint64_t>(e)));
        double score = 0.0;
        while (true) {
            StepResult sr = env.step(policy(state));
            score += sr.reward;
            state = sr.next_state;
            if (sr.terminal) break;
        }
        total += score;
    }
    return total / episodes;
}

}  // namespace bookrl
