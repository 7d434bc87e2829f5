#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bookrl/agents.hpp"
#include "bookrl/book.hpp"
#include "bookrl/reader.hpp"

namespace bookrl {

// Everything one experiment needs: environment, writer, book, reader
// and the sweep/ablation axes.
struct ExperimentConfig {
    std::string env_id = "cartpole";
    WriterConfig writer;
    ReaderConfig reader;
    BookParams book;
    size_t book_capacity = 100000;
    int levels = 0;  // quantization override; 0 keeps the env default
    std::vector<int> publish_sizes = {500};
    std::vector<int> level_sweep = {16, 32, 64, 128, 256};
    std::vector<uint64_t> seeds = {1};
    int eval_episodes = 100;
    long baseline_eval_every = 2000;
    int baseline_eval_episodes = 20;
    int smoothing_window = 20;  // trailing mean over this many evaluations
    std::string out_dir = "out";

    void validate() const;
    QuantizerConfig quantizer_for_env(const EnvSpec& spec) const;
};

struct RatioReport {
    double score = 0.0;
    long transitions_to_match = 0;
    double ratio = 0.0;  // publish_size / transitions_to_match
    bool matched = false;
};

struct BaselinePoint {
    long transitions = 0;
    double score = 0.0;     // raw evaluation mean
    double smoothed = 0.0;  // trailing mean over the smoothing window
};

struct WriteResult {
    std::vector<std::string> book_files;  // one per publish size
    std::string metrics_file;
    double writer_score = 0.0;  // final greedy evaluation
    BookStats book_stats;
    double mean_hits_published = 0.0;  // over the largest published set
    uint64_t book_size = 0;
    uint64_t episodes = 0;
};

// Train a writer with a book attached, publish at each configured size,
// write the book files and the per-episode metrics CSV.
WriteResult run_write(const ExperimentConfig& cfg, uint64_t seed);

struct ReadEvalResult {
    double score = 0.0;
    uint64_t env_steps_during_pretrain = 0;  // must be zero
    int entries = 0;
};

// Pre-train a reader from a book file and evaluate it greedily.
ReadEvalResult run_read_eval(const PublishedBook& book, const ExperimentConfig& cfg, uint64_t seed);
ReadEvalResult run_read_eval_file(const std::string& book_file, const ExperimentConfig& cfg,
                                  uint64_t seed);

// First baseline point whose smoothed score reaches reader_score.
RatioReport compute_ratio(double reader_score, const std::vector<BaselinePoint>& baseline,
                          int publish_size);

// From-scratch training of the reader's algorithm family with periodic
// greedy evaluation; feeds compute_ratio.
std::vector<BaselinePoint> run_baseline(const ExperimentConfig& cfg, uint64_t seed);

struct ScoreSummary {
    double median = 0.0;
    double lower_quartile = 0.0;
    double upper_quartile = 0.0;
    double mean = 0.0;
};

ScoreSummary summarize_scores(std::vector<double> scores);
double median_of(std::vector<double> scores);

struct AblationResult {
    // method -> per-seed reader scores, seed order
    std::map<std::string, std::vector<double>> scores;
    std::map<std::string, ScoreSummary> summary;
};

// Four retention rules, each writing/publishing/reading per seed.
AblationResult run_priority_ablation(const ExperimentConfig& cfg);

struct SweepRow {
    int levels = 0;
    double mean_hits_per_state = 0.0;  // lifetime updates / distinct states
    double mean_hits_published = 0.0;  // mean lifetime hits over published entries
    uint64_t distinct_states = 0;
    double writer_score = 0.0;
    double reader_score = 0.0;
};

// Per quantization level: write, publish, read, evaluate, and record
// the hit statistics.
std::vector<SweepRow> run_quantization_sweep(const ExperimentConfig& cfg, uint64_t seed);

// CSV helpers; doubles are written with shortest round-trip precision.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows);
std::string format_double(double v);

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetric>& metrics);
void write_baseline_csv(const std::string& path, const std::vector<BaselinePoint>& points);
std::vector<BaselinePoint> load_baseline_csv(const std::string& path);

}  // namespace bookrl
