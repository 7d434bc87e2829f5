#include "bookrl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bookrl/book_io.hpp"

namespace bookrl {

void ExperimentConfig::validate() const {
    if (!is_known_env(env_id)) throw std::invalid_argument("unknown environment id: " + env_id);
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (book_capacity < 1) throw std::invalid_argument("config: book capacity must be positive");
    for (int n : publish_sizes) {
        if (n < 1) throw std::invalid_argument("config: publish sizes must be positive");
    }
    if (eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be positive");
    writer.validate();
    reader.validate();
    book.validate();
}

QuantizerConfig ExperimentConfig::quantizer_for_env(const EnvSpec& spec) const {
    QuantizerConfig q = spec.default_quantizer;
    if (levels > 0) q.levels = levels;
    return q;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << header << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ",";
            out << row[i];
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetric>& metrics) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(metrics.size());
    for (const EpisodeMetric& m : metrics) {
        rows.push_back({std::to_string(m.episode), std::to_string(m.steps), format_double(m.score)});
    }
    write_csv(path, "episode,steps,score", rows);
}

void write_baseline_csv(const std::string& path, const std::vector<BaselinePoint>& points) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(points.size());
    for (const BaselinePoint& p : points) {
        rows.push_back({std::to_string(p.transitions), format_double(p.score), format_double(p.smoothed)});
    }
    write_csv(path, "transitions,score,smoothed", rows);
}

std::vector<BaselinePoint> load_baseline_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open baseline curve: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("baseline curve is empty: " + path);
    if (line != "transitions,score,smoothed") {
        throw std::runtime_error("baseline curve has unexpected header: " + path);
    }
    std::vector<BaselinePoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        BaselinePoint p;
        if (!std::getline(row, cell, ',')) throw std::runtime_error("baseline curve row malformed");
        p.transitions = std::stol(cell);
        if (!std::getline(row, cell, ',')) throw std::runtime_error("baseline curve row malformed");
        p.score = std::stod(cell);
        if (!std::getline(row, cell, ',')) throw std::runtime_error("baseline curve row malformed");
        p.smoothed = std::stod(cell);
        points.push_back(p);
    }
    return points;
}

namespace {

std::string book_file_name(const ExperimentConfig& cfg, uint64_t seed, int publish_size) {
    std::ostringstream name;
    name << "book_" << cfg.env_id << "_" << to_string(cfg.writer.algo) << "_seed" << seed << "_N"
         << publish_size << ".json";
    return (std::filesystem::path(cfg.out_dir) / name.str()).string();
}

double mean_hits_over_published(const Book& book, const PublishedBook& published) {
    if (published.entries.empty()) return 0.0;
    double total = 0.0;
    for (const PublishedEntry& e : published.entries) {
        const BookEntry* live = book.find(LinguisticState{e.bins});
        if (live != nullptr) total += static_cast<double>(live->hits);
    }
    return total / static_cast<double>(published.entries.size());
}

}  // namespace

WriteResult run_write(const ExperimentConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    auto env = make_env(cfg.env_id);

    BookParams params = cfg.book;
    params.gamma = cfg.writer.gamma;
    Book book(cfg.quantizer_for_env(env->spec()), env->spec().action_count, cfg.book_capacity, params);

    TrainedWriter writer = train_writer(*env, cfg.writer, &book, seed);

    WriteResult result;
    result.book_stats = book.stats();
    result.book_size = book.size();
    result.episodes = book.episodes_recorded();

    std::ostringstream metrics_name;
    metrics_name << "metrics_" << cfg.env_id << "_" << to_string(cfg.writer.algo) << "_seed" << seed
                 << ".csv";
    result.metrics_file = (std::filesystem::path(cfg.out_dir) / metrics_name.str()).string();
    write_metrics_csv(result.metrics_file, writer.metrics);

    int largest = 0;
    for (int n : cfg.publish_sizes) largest = std::max(largest, n);
    for (int n : cfg.publish_sizes) {
        PublishedBook published = book.publish(n, cfg.env_id, to_string(cfg.writer.algo));
        if (n == largest) result.mean_hits_published = mean_hits_over_published(book, published);
        std::string path = book_file_name(cfg, seed, n);
        save_published(published, path);
        result.book_files.push_back(path);
    }

    auto eval_env = make_env(cfg.env_id);
    result.writer_score = evaluate([&writer](const std::vector<double>& s) { return writer.greedy(s); },
                                   *eval_env, cfg.eval_episodes, substream(seed, 77));
    return result;
}

ReadEvalResult run_read_eval(const PublishedBook& book, const ExperimentConfig& cfg, uint64_t seed) {
    if (book.env_id != cfg.env_id) {
        throw std::invalid_argument("book was written for environment '" + book.env_id +
                                    "', not '" + cfg.env_id + "'");
    }
    auto env = make_env(cfg.env_id);
    if (book.action_count != env->spec().action_count ||
        static_cast<int>(book.quantizer.lower.size()) != env->spec().state_dims) {
        throw std::invalid_argument("book metadata does not match the environment");
    }

    ReaderConfig reader_cfg = cfg.reader;
    reader_cfg.seed = substream(seed, 21);
    Reader reader = pretrain_reader(book, reader_cfg);
    ReadEvalResult result;
    result.entries = static_cast<int>(book.entries.size());
    result.env_steps_during_pretrain = env->steps_taken();  // reader never saw the env
    result.score = evaluate(greedy_policy_from(reader), *env, cfg.eval_episodes, substream(seed, 23));
    return result;
}

ReadEvalResult run_read_eval_file(const std::string& book_file, const ExperimentConfig& cfg,
                                  uint64_t seed) {
    return run_read_eval(load_published(book_file), cfg, seed);
}

RatioReport compute_ratio(double reader_score, const std::vector<BaselinePoint>& baseline,
                          int publish_size) {
    if (publish_size < 1) throw std::invalid_argument("compute_ratio: publish_size must be positive");
    RatioReport report;
    report.score = reader_score;
    for (const BaselinePoint& p : baseline) {
        if (p.smoothed >= reader_score) {
            report.matched = true;
            report.transitions_to_match = p.transitions;
            report.ratio = static_cast<double>(publish_size) / static_cast<double>(p.transitions);
            return report;
        }
    }
    report.matched = false;
    report.transitions_to_match = 0;
    report.ratio = 0.0;
    return report;
}

std::vector<BaselinePoint> run_baseline(const ExperimentConfig& cfg, uint64_t seed) {
    cfg.validate();
    auto env = make_env(cfg.env_id);
    auto eval_env = make_env(cfg.env_id);
    const EnvSpec& spec = env->spec();

    std::vector<BaselinePoint> points;
    std::vector<double> recent;
    auto record = [&](double score, long transitions) {
        recent.push_back(score);
        size_t window = static_cast<size_t>(std::max(1, cfg.smoothing_window));
        size_t from = recent.size() > window ? recent.size() - window : 0;
        double sum = 0.0;
        for (size_t i = from; i < recent.size(); ++i) sum += recent[i];
        points.push_back({transitions, score, sum / static_cast<double>(recent.size() - from)});
    };

    detail::LoopHooks hooks;
    hooks.eval_every = cfg.baseline_eval_every;

    if (cfg.reader.head == ReaderHead::q_head) {
        Rng init_rng(substream(seed, 2));
        Mlp initial = Mlp::make({spec.state_dims, cfg.writer.hidden_width, spec.action_count}, init_rng);
        detail::DqnLearner learner(std::move(initial), cfg.writer, seed);
        hooks.on_eval = [&](long steps_done) {
            Policy policy = [&](const std::vector<double>& s) {
                return argmax_lowest(learner.net.forward(s));
            };
            record(evaluate(policy, *eval_env, cfg.baseline_eval_episodes, substream(seed, 55)),
                   steps_done);
        };
        detail::run_episodic_training(*env, learner, cfg.writer.total_steps, cfg.writer.epsilon,
                                      spec.reward_shaping, nullptr, seed, hooks);
    } else {
        Rng init_rng(substream(seed, 2));
        Mlp v = Mlp::make({spec.state_dims, cfg.writer.hidden_width, 1}, init_rng);
        Mlp a = Mlp::make({spec.state_dims, cfg.writer.hidden_width, spec.action_count}, init_rng);
        detail::VaLearner learner(std::move(v), std::move(a), cfg.writer, seed);
        hooks.on_eval = [&](long steps_done) {
            Policy policy = [&](const std::vector<double>& s) {
                return argmax_lowest(learner.a_net.forward(s));
            };
            record(evaluate(policy, *eval_env, cfg.baseline_eval_episodes, substream(seed, 55)),
                   steps_done);
        };
        detail::run_episodic_training(*env, learner, cfg.writer.total_steps, cfg.writer.epsilon,
                                      spec.reward_shaping, nullptr, seed, hooks);
    }
    return points;
}

double median_of(std::vector<double> scores) {
    if (scores.empty()) throw std::invalid_argument("median of empty set");
    std::sort(scores.begin(), scores.end());
    size_t n = scores.size();
    if (n % 2 == 1) return scores[n / 2];
    return 0.5 * (scores[n / 2 - 1] + scores[n / 2]);
}

ScoreSummary summarize_scores(std::vector<double> scores) {
    if (scores.empty()) throw std::invalid_argument("summary of empty set");
    std::sort(scores.begin(), scores.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(scores.size() - 1);
        size_t lo = static_cast<size_t>(std::floor(pos));
        size_t hi = static_cast<size_t>(std::ceil(pos));
        double frac = pos - static_cast<double>(lo);
        return scores[lo] * (1.0 - frac) + scores[hi] * frac;
    };
    ScoreSummary s;
    s.median = quantile(0.5);
    s.lower_quartile = quantile(0.25);
    s.upper_quartile = quantile(0.75);
    double sum = 0.0;
    for (double v : scores) sum += v;
    s.mean = sum / static_cast<double>(scores.size());
    return s;
}

AblationResult run_priority_ablation(const ExperimentConfig& cfg) {
    cfg.validate();
    const PriorityMethod methods[] = {PriorityMethod::proposed, PriorityMethod::random,
                                      PriorityMethod::frequency_only, PriorityMethod::per_style};
    int publish_size = cfg.publish_sizes.empty() ? 1000 : cfg.publish_sizes.front();

    AblationResult result;
    for (PriorityMethod method : methods) {
        std::vector<double>& scores = result.scores[to_string(method)];
        for (uint64_t seed : cfg.seeds) {
            ExperimentConfig arm = cfg;
            arm.book.priority_method = method;
            arm.book.selection_seed = substream(seed, 31);
            arm.publish_sizes = {publish_size};
            arm.out_dir = (std::filesystem::path(cfg.out_dir) / to_string(method)).string();
            WriteResult written = run_write(arm, seed);
            ReadEvalResult read = run_read_eval_file(written.book_files.front(), arm, seed);
            scores.push_back(read.score);
        }
        result.summary[to_string(method)] = summarize_scores(scores);
    }
    return result;
}

std::vector<SweepRow> run_quantization_sweep(const ExperimentConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::vector<SweepRow> rows;
    for (int levels : cfg.level_sweep) {
        ExperimentConfig arm = cfg;
        arm.levels = levels;
        arm.out_dir = (std::filesystem::path(cfg.out_dir) / ("levels" + std::to_string(levels))).string();
        WriteResult written = run_write(arm, seed);
        ReadEvalResult read = run_read_eval_file(written.book_files.front(), arm, seed);
        SweepRow row;
        row.levels = levels;
        row.mean_hits_per_state = written.book_stats.mean_hits_per_state();
        row.mean_hits_published = written.mean_hits_published;
        row.distinct_states = written.book_stats.distinct_states;
        row.writer_score = written.writer_score;
        row.reader_score = read.score;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bookrl
