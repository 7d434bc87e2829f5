#include "bookrl/book.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bookrl/kernels.hpp"
#include "bookrl/rng.hpp"

namespace bookrl {

void Episode::validate(int action_count) const {
    if (steps.empty()) return;
    for (size_t i = 0; i < steps.size(); ++i) {
        const Transition& tr = steps[i];
        if (tr.action < 0 || tr.action >= action_count) {
            throw std::invalid_argument("episode: action index out of range");
        }
        bool last = (i + 1 == steps.size());
        if (tr.terminal != last) {
            throw std::invalid_argument("episode: terminal flag must be set on the last step only");
        }
    }
}

PriorityMethod priority_method_from_string(const std::string& name) {
    if (name == "proposed") return PriorityMethod::proposed;
    if (name == "random") return PriorityMethod::random;
    if (name == "frequency_only") return PriorityMethod::frequency_only;
    if (name == "per_style") return PriorityMethod::per_style;
    throw std::invalid_argument("unknown priority method: " + name);
}

const char* to_string(PriorityMethod method) {
    switch (method) {
        case PriorityMethod::proposed: return "proposed";
        case PriorityMethod::random: return "random";
        case PriorityMethod::frequency_only: return "frequency_only";
        case PriorityMethod::per_style: return "per_style";
    }
    return "?";
}

void BookParams::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("book: gamma must be in (0, 1]");
    if (f_limit < 1) throw std::invalid_argument("book: f_limit must be positive");
    if (decay_period < 0) throw std::invalid_argument("book: decay_period must be non-negative");
    if (!(prune_keep_fraction > 0.0 && prune_keep_fraction <= 1.0)) {
        throw std::invalid_argument("book: prune_keep_fraction must be in (0, 1]");
    }
}

int BookEntry::known_count() const {
    int n = 0;
    for (uint8_t k : known) n += k ? 1 : 0;
    return n;
}

namespace {

// max/min over known actions; returns false when fewer than two known
bool known_q_range(const std::vector<double>& q, const std::vector<uint8_t>& known,
                   double& lo, double& hi) {
    int count = 0;
    for (size_t a = 0; a < q.size(); ++a) {
        if (!known[a]) continue;
        if (count == 0) {
            lo = hi = q[a];
        } else {
            if (q[a] < lo) lo = q[a];
            if (q[a] > hi) hi = q[a];
        }
        ++count;
    }
    return count >= 2;
}

template <class E>
double importance_impl(const E& e) {
    double lo = 0.0, hi = 0.0;
    if (!known_q_range(e.q, e.known, lo, hi)) return 0.0;
    return hi - lo;
}

template <class E>
double entry_priority_impl(const E& e) {
    double imp = importance_impl(e);
    int max_f = 0;
    for (size_t a = 0; a < e.f.size(); ++a) {
        if (e.known[a] && e.f[a] > max_f) max_f = e.f[a];
    }
    return imp * max_f;
}

template <class E>
std::vector<QSample> decode_q_impl(const E& e, const std::vector<double>& state) {
    std::vector<QSample> out;
    for (size_t a = 0; a < e.q.size(); ++a) {
        if (e.known[a]) out.push_back({state, static_cast<int>(a), e.q[a]});
    }
    return out;
}

template <class E>
DecodedVA decode_va_impl(const E& e, const std::vector<double>& state) {
    double weighted = 0.0;
    long total_f = 0;
    for (size_t a = 0; a < e.q.size(); ++a) {
        if (!e.known[a]) continue;
        weighted += static_cast<double>(e.f[a]) * e.q[a];
        total_f += e.f[a];
    }
    if (total_f == 0) {
        throw std::runtime_error("decode_va: entry has no known action with f > 0");
    }
    DecodedVA out;
    out.state = state;
    out.v = weighted / static_cast<double>(total_f);
    for (size_t a = 0; a < e.q.size(); ++a) {
        if (e.known[a]) out.advantages.emplace_back(static_cast<int>(a), e.q[a] - out.v);
    }
    return out;
}

}  // namespace

double importance(const BookEntry& entry) { return importance_impl(entry); }
double importance(const PublishedEntry& entry) { return importance_impl(entry); }

double priority(const BookEntry& entry, int action) {
    if (action < 0 || action >= static_cast<int>(entry.f.size())) {
        throw std::invalid_argument("priority: action index out of range");
    }
    return importance(entry) * entry.f[action];
}

double entry_priority(const BookEntry& entry) { return entry_priority_impl(entry); }
double entry_priority(const PublishedEntry& entry) { return entry_priority_impl(entry); }

double beta(int f_current, int f_successor) {
    if (f_current < 0 || f_successor < 0) {
        throw std::invalid_argument("beta: negative frequency");
    }
    if (f_current == 0 && f_successor == 0) {
        throw std::invalid_argument("beta: both frequencies zero (successor frequency starts at 1)");
    }
    if (f_current == 0) return 0.0;
    return static_cast<double>(f_current) / static_cast<double>(f_current + f_successor);
}

std::vector<QSample> decode_q(const BookEntry& entry) { return decode_q_impl(entry, entry.sample_state); }
std::vector<QSample> decode_q(const PublishedEntry& entry) { return decode_q_impl(entry, entry.sample); }

DecodedVA decode_va(const BookEntry& entry) { return decode_va_impl(entry, entry.sample_state); }
DecodedVA decode_va(const PublishedEntry& entry) { return decode_va_impl(entry, entry.sample); }

Book::Book(QuantizerConfig quantizer, int action_count, size_t capacity, BookParams params)
    : quantizer_(std::move(quantizer)), action_count_(action_count), capacity_(capacity), params_(params) {
    quantizer_.validate();
    params_.validate();
    if (action_count_ < 1) throw std::invalid_argument("book: action_count must be positive");
    if (capacity_ < 1) throw std::invalid_argument("book: capacity must be positive");
}

std::pair<double, int> Book::credible_target(const Transition& tr) const {
    if (tr.terminal) return {tr.reward, 1};
    LinguisticState succ = quantize(tr.next_state, quantizer_);
    auto it = entries_.find(succ);
    if (it == entries_.end()) return {tr.reward, 1};
    const BookEntry& e = it->second;
    int best = -1;
    double best_q = 0.0;
    for (int a = 0; a < action_count_; ++a) {
        if (!e.known[a]) continue;
        if (best < 0 || e.q[a] > best_q) {
            best = a;
            best_q = e.q[a];
        }
    }
    if (best < 0) return {tr.reward, 1};
    // A decayed-to-zero successor frequency still anchors a credible
    // estimate; it carries at least the weight of a missing successor.
    int f_succ = e.f[best] < 1 ? 1 : e.f[best];
    return {tr.reward + params_.gamma * best_q, f_succ};
}

void Book::update_entry(const LinguisticState& key, int action, const std::vector<double>& sample,
                        double q_target, int f_successor) {
    if (action < 0 || action >= action_count_) {
        throw std::invalid_argument("update_entry: action index out of range");
    }
    if (!std::isfinite(q_target)) {
        throw std::invalid_argument("update_entry: non-finite q target");
    }
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        if (entries_.size() >= capacity_) prune_to(insert_keep_target());
        BookEntry e;
        e.key = key;
        e.sample_state = sample;
        e.q.assign(action_count_, 0.0);
        e.f.assign(action_count_, 0);
        e.known.assign(action_count_, 0);
        e.last_residual.assign(action_count_, 0.0);
        e.seq = next_seq_++;
        it = entries_.emplace(key, std::move(e)).first;
        if (seen_keys_.insert(key).second) {
            ++stats_.distinct_states;
        }
    }
    BookEntry& e = it->second;
    double q_old = e.known[action] ? e.q[action] : 0.0;
    double b = beta(e.f[action], f_successor);
    e.q[action] = b * q_old + (1.0 - b) * q_target;
    e.last_residual[action] = std::abs(q_target - q_old);
    e.f[action] = std::min(e.f[action] + f_successor, params_.f_limit);
    e.known[action] = 1;
    ++e.hits;
    ++stats_.total_updates;
}

void Book::record_episode(const Episode& ep) {
    if (ep.steps.empty()) return;
    ep.validate(action_count_);
    for (size_t i = ep.steps.size(); i-- > 0;) {
        const Transition& tr = ep.steps[i];
        auto [target, f_succ] = credible_target(tr);
        update_entry(quantize(tr.state, quantizer_), tr.action, tr.state, target, f_succ);
    }
    ++episodes_recorded_;
    if (params_.decay_period > 0 && episodes_recorded_ % static_cast<uint64_t>(params_.decay_period) == 0) {
        decay();
    }
}

void Book::decay() {
    auto snap = snapshot_by_seq();
    kernels::parallel_for(static_cast<int64_t>(snap.size()), [&](int64_t i) {
        for (int& f : snap[i]->f) {
            if (f > 0) --f;
        }
    });
}

std::vector<BookEntry*> Book::snapshot_by_seq() {
    std::vector<BookEntry*> snap;
    snap.reserve(entries_.size());
    for (auto& [key, e] : entries_) snap.push_back(&e);
    std::sort(snap.begin(), snap.end(), [](const BookEntry* a, const BookEntry* b) { return a->seq < b->seq; });
    return snap;
}

std::vector<const BookEntry*> Book::snapshot_by_seq() const {
    std::vector<const BookEntry*> snap;
    snap.reserve(entries_.size());
    for (const auto& [key, e] : entries_) snap.push_back(&e);
    std::sort(snap.begin(), snap.end(), [](const BookEntry* a, const BookEntry* b) { return a->seq < b->seq; });
    return snap;
}

std::vector<double> Book::selection_scores(const std::vector<const BookEntry*>& snap, uint64_t salt) const {
    std::vector<double> scores(snap.size(), 0.0);
    switch (params_.priority_method) {
        case PriorityMethod::proposed:
            kernels::parallel_for(static_cast<int64_t>(snap.size()),
                                  [&](int64_t i) { scores[i] = entry_priority(*snap[i]); });
            break;
        case PriorityMethod::frequency_only:
            kernels::parallel_for(static_cast<int64_t>(snap.size()), [&](int64_t i) {
                int max_f = 0;
                for (int f : snap[i]->f) max_f = std::max(max_f, f);
                scores[i] = max_f;
            });
            break;
        case PriorityMethod::per_style:
            kernels::parallel_for(static_cast<int64_t>(snap.size()), [&](int64_t i) {
                double r = 0.0;
                for (size_t a = 0; a < snap[i]->last_residual.size(); ++a) {
                    if (snap[i]->known[a]) r = std::max(r, snap[i]->last_residual[a]);
                }
                scores[i] = r;
            });
            break;
        case PriorityMethod::random: {
            // Scores drawn in snapshot (seq) order so selection depends
            // only on the seed, the salt, and the book contents.
            Rng rng(substream(params_.selection_seed, salt));
            for (double& s : scores) s = rng.uniform();
            break;
        }
    }
    return scores;
}

size_t Book::insert_keep_target() const {
    auto keep = static_cast<size_t>(std::ceil(static_cast<double>(capacity_) * params_.prune_keep_fraction));
    // leave room for the incoming entry
    return std::min(keep, capacity_ - 1);
}

void Book::prune_to(size_t keep) {
    if (entries_.size() <= keep) return;
    auto snap = snapshot_by_seq();
    std::vector<const BookEntry*> view(snap.begin(), snap.end());
    std::vector<double> scores = selection_scores(view, ++prune_count_);
    std::vector<size_t> order(snap.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<LinguisticState> victims;
    victims.reserve(order.size() - keep);
    for (size_t r = keep; r < order.size(); ++r) victims.push_back(snap[order[r]]->key);
    for (const LinguisticState& k : victims) entries_.erase(k);
}

void Book::prune() {
    if (entries_.size() <= capacity_) return;
    auto keep = static_cast<size_t>(std::ceil(static_cast<double>(capacity_) * params_.prune_keep_fraction));
    prune_to(keep);
}

void Book::set_capacity(size_t capacity) {
    if (capacity < 1) throw std::invalid_argument("book: capacity must be positive");
    capacity_ = capacity;
}

PublishedBook Book::publish(int n, const std::string& env_id, const std::string& writer_algo) const {
    if (n < 1) throw std::invalid_argument("publish: n must be >= 1");
    auto snap = snapshot_by_seq();
    std::vector<double> scores = selection_scores(snap, 0);  // salt 0: repeat publishes identical
    std::vector<size_t> order(snap.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    size_t take = std::min(static_cast<size_t>(n), snap.size());

    // Selection follows the configured rule; the published ordering is
    // always entry priority so the snapshot layout is rule-independent.
    std::vector<const BookEntry*> picked;
    picked.reserve(take);
    for (size_t r = 0; r < take; ++r) picked.push_back(snap[order[r]]);
    std::stable_sort(picked.begin(), picked.end(), [](const BookEntry* a, const BookEntry* b) {
        double pa = entry_priority(*a), pb = entry_priority(*b);
        if (pa != pb) return pa > pb;
        return a->seq < b->seq;
    });

    PublishedBook out;
    out.env_id = env_id;
    out.writer_algo = writer_algo;
    out.action_count = action_count_;
    out.gamma = params_.gamma;
    out.quantizer = quantizer_;
    out.entries.reserve(picked.size());
    for (const BookEntry* e : picked) {
        PublishedEntry pe;
        pe.bins = e->key.bins;
        pe.sample = e->sample_state;
        pe.q = e->q;
        pe.f = e->f;
        pe.known = e->known;
        out.entries.push_back(std::move(pe));
    }
    return out;
}

const BookEntry* Book::find(const LinguisticState& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const BookEntry*> Book::entries_by_priority() const {
    auto snap = snapshot_by_seq();
    std::vector<double> scores = selection_scores(snap, 0);
    std::vector<size_t> order(snap.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<const BookEntry*> out;
    out.reserve(snap.size());
    for (size_t r : order) out.push_back(snap[r]);
    return out;
}

std::vector<const BookEntry*> Book::entries_by_insertion() const { return snapshot_by_seq(); }

double Book::mean_hits_live() const {
    if (entries_.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [key, e] : entries_) total += static_cast<double>(e.hits);
    return total / static_cast<double>(entries_.size());
}

}  // namespace bookrl
