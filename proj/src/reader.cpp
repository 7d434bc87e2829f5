#include "bookrl/reader.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bookrl {

ReaderHead reader_head_from_string(const std::string& name) {
    if (name == "q_head") return ReaderHead::q_head;
    if (name == "va_head") return ReaderHead::va_head;
    throw std::invalid_argument("unknown reader head: " + name);
}

const char* to_string(ReaderHead head) {
    switch (head) {
        case ReaderHead::q_head: return "q_head";
        case ReaderHead::va_head: return "va_head";
    }
    return "?";
}

void ReaderConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("reader: iterations must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("reader: batch_size must be positive");
    if (learning_rate <= 0.0) throw std::invalid_argument("reader: learning_rate must be positive");
    if (hidden_width < 1) throw std::invalid_argument("reader: hidden_width must be positive");
}

double masked_q_loss_grad(const double* pred, const std::vector<double>& q,
                          const std::vector<uint8_t>& known, double scale, double* dy) {
    double loss = 0.0;
    for (size_t a = 0; a < q.size(); ++a) {
        if (!known[a]) {
            dy[a] = 0.0;
            continue;
        }
        double diff = pred[a] - q[a];
        loss += diff * diff;
        dy[a] = 2.0 * diff / scale;
    }
    return loss;
}

void pretrain_q_reader(const PublishedBook& book, Mlp& net, const ReaderConfig& cfg) {
    cfg.validate();
    if (book.entries.empty()) throw std::invalid_argument("pretrain: published book is empty");
    int in_dim = net.input_dim();
    int out_dim = net.output_dim();
    if (in_dim != static_cast<int>(book.quantizer.lower.size()) || out_dim != book.action_count) {
        throw std::invalid_argument("pretrain: network shape does not match book metadata");
    }

    Rng rng(substream(cfg.seed, 11));
    AdamState opt = AdamState::like(net, cfg.learning_rate);
    int b = cfg.batch_size;
    std::vector<double> xs(static_cast<size_t>(b) * in_dim);
    std::vector<double> dy(static_cast<size_t>(b) * out_dim);
    std::vector<const PublishedEntry*> batch(b);
    ForwardCache cache;
    Gradients grads = Gradients::like(net);

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        for (int i = 0; i < b; ++i) {
            batch[i] = &book.entries[static_cast<size_t>(rng.uniform_int(static_cast<int>(book.entries.size())))];
            std::copy(batch[i]->sample.begin(), batch[i]->sample.end(),
                      xs.begin() + static_cast<size_t>(i) * in_dim);
        }
        forward_batch(net, xs, b, cache);
        const std::vector<double>& pred = cache.acts.back();
        for (int i = 0; i < b; ++i) {
            masked_q_loss_grad(pred.data() + static_cast<size_t>(i) * out_dim, batch[i]->q,
                               batch[i]->known, b, dy.data() + static_cast<size_t>(i) * out_dim);
        }
        backward_batch(net, cache, dy, grads);
        adam_step(opt, net, grads);
    }
}

void pretrain_va_reader(const PublishedBook& book, Mlp& v_net, Mlp& a_net, const ReaderConfig& cfg) {
    cfg.validate();
    if (book.entries.empty()) throw std::invalid_argument("pretrain: published book is empty");
    int in_dim = a_net.input_dim();
    int out_dim = a_net.output_dim();
    if (in_dim != static_cast<int>(book.quantizer.lower.size()) || out_dim != book.action_count ||
        v_net.input_dim() != in_dim || v_net.output_dim() != 1) {
        throw std::invalid_argument("pretrain: network shape does not match book metadata");
    }

    // decode once; stale entries (every known f zero) are skipped
    struct VaTarget {
        const PublishedEntry* entry;
        double v;
        std::vector<double> adv;  // per action, zero where unknown
    };
    std::vector<VaTarget> targets;
    for (const PublishedEntry& e : book.entries) {
        bool decodable = false;
        for (size_t a = 0; a < e.known.size(); ++a) {
            if (e.known[a] && e.f[a] > 0) decodable = true;
        }
        if (!decodable) continue;
        DecodedVA d = decode_va(e);
        VaTarget t;
        t.entry = &e;
        t.v = d.v;
        t.adv.assign(out_dim, 0.0);
        for (const auto& [action, adv] : d.advantages) t.adv[action] = adv;
        targets.push_back(std::move(t));
    }
    if (targets.empty()) throw std::invalid_argument("pretrain: no decodable entries in book");

    Rng rng(substream(cfg.seed, 13));
    AdamState opt_v = AdamState::like(v_net, cfg.learning_rate);
    AdamState opt_a = AdamState::like(a_net, cfg.learning_rate);
    int b = cfg.batch_size;
    std::vector<double> xs(static_cast<size_t>(b) * in_dim);
    std::vector<double> dv(static_cast<size_t>(b));
    std::vector<double> da(static_cast<size_t>(b) * out_dim);
    std::vector<const VaTarget*> batch(b);
    ForwardCache v_cache, a_cache;
    Gradients v_grads = Gradients::like(v_net);
    Gradients a_grads = Gradients::like(a_net);

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        for (int i = 0; i < b; ++i) {
            batch[i] = &targets[static_cast<size_t>(rng.uniform_int(static_cast<int>(targets.size())))];
            std::copy(batch[i]->entry->sample.begin(), batch[i]->entry->sample.end(),
                      xs.begin() + static_cast<size_t>(i) * in_dim);
        }
        forward_batch(v_net, xs, b, v_cache);
        forward_batch(a_net, xs, b, a_cache);
        const std::vector<double>& v_pred = v_cache.acts.back();
        const std::vector<double>& a_pred = a_cache.acts.back();
        for (int i = 0; i < b; ++i) {
            dv[i] = 2.0 * (v_pred[i] - batch[i]->v) / b;
            const std::vector<uint8_t>& known = batch[i]->entry->known;
            for (int a = 0; a < out_dim; ++a) {
                size_t idx = static_cast<size_t>(i) * out_dim + a;
                da[idx] = known[a] ? 2.0 * (a_pred[idx] - batch[i]->adv[a]) / b : 0.0;
            }
        }
        backward_batch(v_net, v_cache, dv, v_grads);
        adam_step(opt_v, v_net, v_grads);
        backward_batch(a_net, a_cache, da, a_grads);
        adam_step(opt_a, a_net, a_grads);
    }
}

std::vector<double> Reader::action_values(const std::vector<double>& state) const {
    if (head == ReaderHead::q_head) return q_net.forward(state);
    return a_net.forward(state);
}

int Reader::greedy(const std::vector<double>& state) const {
    return argmax_lowest(action_values(state));
}

Reader pretrain_reader(const PublishedBook& book, const ReaderConfig& cfg) {
    Reader reader;
    reader.head = cfg.head;
    reader.action_count = book.action_count;
    int in_dim = static_cast<int>(book.quantizer.lower.size());
    Rng init_rng(substream(cfg.seed, 7));
    if (cfg.head == ReaderHead::q_head) {
        reader.q_net = Mlp::make({in_dim, cfg.hidden_width, book.action_count}, init_rng);
        pretrain_q_reader(book, reader.q_net, cfg);
    } else {
        reader.v_net = Mlp::make({in_dim, cfg.hidden_width, 1}, init_rng);
        reader.a_net = Mlp::make({in_dim, cfg.hidden_width, book.action_count}, init_rng);
        pretrain_va_reader(book, reader.v_net, reader.a_net, cfg);
    }
    return reader;
}

Policy greedy_policy_from(const Reader& reader) {
    return [&reader](const std::vector<double>& state) { return reader.greedy(state); };
}

namespace detail {

VaLearner::VaLearner(Mlp v, Mlp a, const WriterConfig& cfg, uint64_t seed)
    : v_net(std::move(v)),
      a_net(std::move(a)),
      v_target(v_net),
      a_target(a_net),
      opt_v(AdamState::like(v_net, cfg.learning_rate)),
      opt_a(AdamState::like(a_net, cfg.learning_rate)),
      replay(static_cast<size_t>(cfg.replay_capacity)),
      replay_rng(substream(seed, 3)),
      gamma(cfg.gamma),
      batch_size(cfg.batch_size),
      target_sync_period(cfg.target_sync_period),
      learn_start(cfg.learn_start) {}

std::vector<double> VaLearner::action_values(const std::vector<double>& state) const {
    // v(s) shifts every action equally; the advantage head alone ranks them
    return a_net.forward(state);
}

void VaLearner::observe(const Transition& tr) {
    replay.push(tr);
    if (replay.size() < static_cast<size_t>(std::max<long>(batch_size, learn_start))) return;
    std::vector<const Transition*> batch;
    replay.sample(static_cast<size_t>(batch_size), replay_rng, batch);
    va_update(v_net, a_net, v_target, a_target, batch, gamma, opt_v, opt_a);
    ++updates;
    if (updates % target_sync_period == 0) {
        v_target = v_net;
        a_target = a_net;
    }
}

double va_update(Mlp& v_net, Mlp& a_net, const Mlp& v_target, const Mlp& a_target,
                 const std::vector<const Transition*>& batch, double gamma, AdamState& opt_v,
                 AdamState& opt_a) {
    if (batch.empty()) throw std::invalid_argument("va_update: empty batch");
    int b = static_cast<int>(batch.size());
    int in_dim = a_net.input_dim();
    int out_dim = a_net.output_dim();

    std::vector<double> xs(static_cast<size_t>(b) * in_dim);
    std::vector<double> xs_next(static_cast<size_t>(b) * in_dim);
    for (int i = 0; i < b; ++i) {
        const Transition& tr = *batch[i];
        std::copy(tr.state.begin(), tr.state.end(), xs.begin() + static_cast<size_t>(i) * in_dim);
        std::copy(tr.next_state.begin(), tr.next_state.end(),
                  xs_next.begin() + static_cast<size_t>(i) * in_dim);
    }

    ForwardCache vt_cache, at_cache;
    forward_batch(v_target, xs_next, b, vt_cache);
    forward_batch(a_target, xs_next, b, at_cache);
    const std::vector<double>& v_next = vt_cache.acts.back();
    const std::vector<double>& a_next = at_cache.acts.back();

    ForwardCache v_cache, a_cache;
    forward_batch(v_net, xs, b, v_cache);
    forward_batch(a_net, xs, b, a_cache);
    const std::vector<double>& v_pred = v_cache.acts.back();
    const std::vector<double>& a_pred = a_cache.acts.back();

    std::vector<double> dv(static_cast<size_t>(b), 0.0);
    std::vector<double> da(static_cast<size_t>(b) * out_dim, 0.0);
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        const Transition& tr = *batch[i];
        double target = tr.reward;
        if (!tr.terminal) {
            const double* row = a_next.data() + static_cast<size_t>(i) * out_dim;
            double best = row[0];
            for (int a = 1; a < out_dim; ++a) best = std::max(best, row[a]);
            target += gamma * (v_next[i] + best);
        }
        double pred = v_pred[i] + a_pred[static_cast<size_t>(i) * out_dim + tr.action];
        double diff = pred - target;
        loss += diff * diff;
        dv[i] = 2.0 * diff / b;
        da[static_cast<size_t>(i) * out_dim + tr.action] = 2.0 * diff / b;
    }
    loss /= b;
    if (!std::isfinite(loss)) throw std::runtime_error("va_update: non-finite loss");

    Gradients v_grads = Gradients::like(v_net);
    Gradients a_grads = Gradients::like(a_net);
    backward_batch(v_net, v_cache, dv, v_grads);
    backward_batch(a_net, a_cache, da, a_grads);
    adam_step(opt_v, v_net, v_grads);
    adam_step(opt_a, a_net, a_grads);
    return loss;
}

}  // namespace detail

std::vector<EpisodeMetric> continue_training(Reader& reader, Env& env, const WriterConfig& cfg,
                                             uint64_t seed) {
    if (cfg.total_steps == 0) return {};
    cfg.validate();
    if (reader.action_count != env.spec().action_count) {
        throw std::invalid_argument("continue_training: reader/env action count mismatch");
    }
    if (reader.head == ReaderHead::q_head) {
        detail::DqnLearner learner(std::move(reader.q_net), cfg, seed);
        auto metrics = detail::run_reader_loop(env, learner, cfg, seed);
        reader.q_net = std::move(learner.net);
        return metrics;
    }
    detail::VaLearner learner(std::move(reader.v_net), std::move(reader.a_net), cfg, seed);
    auto metrics = detail::run_reader_loop(env, learner, cfg, seed);
    reader.v_net = std::move(learner.v_net);
    reader.a_net = std::move(learner.a_net);
    return metrics;
}

}  // namespace bookrl
