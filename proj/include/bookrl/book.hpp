#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bookrl/quantizer.hpp"

namespace bookrl {

// One environment step (reward already shaped).
struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

// Ordered terminated sequence: last step terminal, no earlier one.
struct Episode {
    std::vector<Transition> steps;

    void validate(int action_count) const;  // throws std::invalid_argument
};

enum class PriorityMethod { proposed, random, frequency_only, per_style };

PriorityMethod priority_method_from_string(const std::string& name);
const char* to_string(PriorityMethod method);

struct BookParams {
    double gamma = 0.99;
    int f_limit = 20;
    int decay_period = 100;  // episodes; 0 disables decay
    double prune_keep_fraction = 0.5;
    PriorityMethod priority_method = PriorityMethod::proposed;
    uint64_t selection_seed = 0;  // drives the `random` retention rule only

    void validate() const;
};

// Per-cluster record. q[a]/f[a] are meaningful only where known[a] is
// set; unknown slots stay at the 0 placeholder and are ignored by every
// max/min/argmax.
struct BookEntry {
    LinguisticState key;
    std::vector<double> sample_state;   // representative raw state of the cluster
    std::vector<double> q;              // per action
    std::vector<int> f;                 // hit frequency per action, capped at f_limit
    std::vector<uint8_t> known;         // has (key, action) ever been updated
    std::vector<double> last_residual;  // |q_target - q_old| of the latest update, per action
    uint64_t hits = 0;                  // lifetime update count; never capped or decayed
    uint64_t seq = 0;                   // insertion order, stable tie-breaking

    int known_count() const;
};

// max-over-known minus min-over-known q; 0 with fewer than two known actions
double importance(const BookEntry& entry);

// importance times hit frequency
double priority(const BookEntry& entry, int action);

// max over actions of priority(entry, a)
double entry_priority(const BookEntry& entry);

// Blending weight from hit frequencies: f_current / (f_current + f_successor).
// Throws std::invalid_argument when both are zero.
double beta(int f_current, int f_successor);

struct QSample {
    std::vector<double> state;
    int action = 0;
    double q = 0.0;
};

struct DecodedVA {
    std::vector<double> state;
    double v = 0.0;
    std::vector<std::pair<int, double>> advantages;  // (action, q - v) for known actions
};

// Published snapshot entry; same content as a BookEntry minus the
// write-side bookkeeping.
struct PublishedEntry {
    std::vector<int32_t> bins;
    std::vector<double> sample;
    std::vector<double> q;
    std::vector<int> f;
    std::vector<uint8_t> known;
};

// Immutable top-N snapshot plus the metadata a reader needs.
struct PublishedBook {
    int format_version = 1;
    std::string env_id;
    std::string writer_algo;
    int action_count = 0;
    double gamma = 0.99;
    QuantizerConfig quantizer;
    std::vector<PublishedEntry> entries;  // entry-priority descending
};

std::vector<QSample> decode_q(const BookEntry& entry);
std::vector<QSample> decode_q(const PublishedEntry& entry);

// Frequency-weighted mean of q over known actions plus per-action gaps.
// Throws std::runtime_error when every known action has f = 0 (stale
// entry; callers skip it).
DecodedVA decode_va(const BookEntry& entry);
DecodedVA decode_va(const PublishedEntry& entry);

double importance(const PublishedEntry& entry);
double entry_priority(const PublishedEntry& entry);

struct BookStats {
    uint64_t total_updates = 0;    // update_entry calls absorbed
    uint64_t distinct_states = 0;  // distinct linguistic states ever written

    double mean_hits_per_state() const {
        return distinct_states == 0 ? 0.0 : static_cast<double>(total_updates) / static_cast<double>(distinct_states);
    }
};

// Bounded map LinguisticState -> BookEntry. Single-writer; the credible
// backward update, decay, pruning and publishing live here.
class Book {
public:
    Book(QuantizerConfig quantizer, int action_count, size_t capacity, BookParams params = {});

    // Target value and successor frequency for one transition, read
    // against the book's current contents. Terminal transitions anchor
    // at the raw reward with frequency 1; missing successors likewise.
    std::pair<double, int> credible_target(const Transition& tr) const;

    // Blend q_target into (key, action). Creates the entry (pruning
    // first if at capacity) when absent; never rejects a write.
    void update_entry(const LinguisticState& key, int action, const std::vector<double>& sample,
                      double q_target, int f_successor);

    // Backward pass over a terminated episode, then decay bookkeeping.
    // Empty episodes are a no-op.
    void record_episode(const Episode& ep);

    // Every f reduced by 1, floored at 0. known flags unchanged.
    void decay();

    // If over capacity, keep the ceil(capacity * prune_keep_fraction)
    // entries ranked highest by the configured retention rule.
    void prune();

    // Top min(n, size) entries by the configured retention rule,
    // emitted in entry-priority-descending order. Does not modify the
    // book. Throws std::invalid_argument when n < 1.
    PublishedBook publish(int n, const std::string& env_id, const std::string& writer_algo) const;

    const BookEntry* find(const LinguisticState& key) const;
    size_t size() const { return entries_.size(); }
    size_t capacity() const { return capacity_; }
    void set_capacity(size_t capacity);  // applies at the next insert/prune
    int action_count() const { return action_count_; }
    const BookParams& params() const { return params_; }
    const QuantizerConfig& quantizer() const { return quantizer_; }
    uint64_t episodes_recorded() const { return episodes_recorded_; }
    const BookStats& stats() const { return stats_; }

    // Live entries ranked by the configured rule (ties: older first).
    std::vector<const BookEntry*> entries_by_priority() const;
    // Live entries in insertion order.
    std::vector<const BookEntry*> entries_by_insertion() const;

    // Mean lifetime hits over the current live entries.
    double mean_hits_live() const;

private:
    std::vector<BookEntry*> snapshot_by_seq();
    std::vector<const BookEntry*> snapshot_by_seq() const;
    // Retention score per entry under the configured method; `salt`
    // decorrelates the random rule between prune and publish calls.
    std::vector<double> selection_scores(const std::vector<const BookEntry*>& snap, uint64_t salt) const;
    void prune_to(size_t keep);
    size_t insert_keep_target() const;

    QuantizerConfig quantizer_;
    int action_count_ = 0;
    size_t capacity_ = 0;
    BookParams params_;
    std::unordered_map<LinguisticState, BookEntry, LinguisticStateHash> entries_;
    std::unordered_set<LinguisticState, LinguisticStateHash> seen_keys_;
    uint64_t next_seq_ = 0;
    uint64_t episodes_recorded_ = 0;
    uint64_t prune_count_ = 0;
    BookStats stats_;
};

}  // namespace bookrl
