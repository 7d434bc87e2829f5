// Command-line front end: write books while training, publish, read
// them into fresh agents, evaluate, and run the ablation/sweep
// protocols. Any long flag can also come from a JSON config file passed
// with --config; explicit flags win.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bookrl/book_io.hpp"
#include "bookrl/harness.hpp"
#include "bookrl/reader.hpp"

using namespace bookrl;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json load_config_object(int argc, char** argv) {
    std::string path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    }
    if (path.empty()) return ordered_json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    ordered_json j = ordered_json::parse(in);
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    return j;
}

template <class T>
void from_config(const ordered_json& cfg, const char* key, T& out) {
    if (cfg.contains(key)) out = cfg.at(key).get<T>();
}

struct CommonOpts {
    std::string env_id = "cartpole";
    std::string algo = "dqn";
    std::string head = "q_head";
    std::vector<uint64_t> seeds = {1};
    long steps = 200000;
    size_t book_capacity = 100000;
    std::vector<int> publish_sizes = {500};
    int levels = 0;
    std::vector<int> level_sweep = {16, 32, 64, 128, 256};
    std::string out_dir = "out";
    int eval_episodes = 100;
    long iterations = 10000;
    int reader_batch = 8;
    double lr = 0.0;  // 0 = per-algo default
    double gamma = 0.99;
    int f_limit = 20;
    int decay_period = 100;
    double keep_fraction = 0.5;
    std::string priority_method = "proposed";
    int replay_capacity = 50000;
    int batch_size = 32;
    int target_sync = 500;
    long learn_start = 1000;
    int hidden = 64;
    double eps_start = 1.0;
    double eps_end = 0.05;
    long eps_decay_steps = 0;
    long baseline_eval_every = 2000;
    int baseline_eval_episodes = 20;

    void apply_config(const ordered_json& cfg) {
        from_config(cfg, "env", env_id);
        from_config(cfg, "algo", algo);
        from_config(cfg, "head", head);
        from_config(cfg, "seed", seeds);
        from_config(cfg, "steps", steps);
        from_config(cfg, "book-capacity", book_capacity);
        from_config(cfg, "publish-size", publish_sizes);
        from_config(cfg, "levels", levels);
        from_config(cfg, "level-sweep", level_sweep);
        from_config(cfg, "out", out_dir);
        from_config(cfg, "eval-episodes", eval_episodes);
        from_config(cfg, "iterations", iterations);
        from_config(cfg, "reader-batch", reader_batch);
        from_config(cfg, "lr", lr);
        from_config(cfg, "gamma", gamma);
        from_config(cfg, "f-limit", f_limit);
        from_config(cfg, "decay-period", decay_period);
        from_config(cfg, "keep-fraction", keep_fraction);
        from_config(cfg, "priority-method", priority_method);
        from_config(cfg, "replay-capacity", replay_capacity);
        from_config(cfg, "batch-size", batch_size);
        from_config(cfg, "target-sync", target_sync);
        from_config(cfg, "learn-start", learn_start);
        from_config(cfg, "hidden", hidden);
        from_config(cfg, "eps-start", eps_start);
        from_config(cfg, "eps-end", eps_end);
        from_config(cfg, "eps-decay-steps", eps_decay_steps);
        from_config(cfg, "baseline-eval-every", baseline_eval_every);
        from_config(cfg, "baseline-eval-episodes", baseline_eval_episodes);
    }

    void add_write_flags(CLI::App* cmd) {
        cmd->add_option("--env", env_id, "environment id (cartpole, chain, crossroads)");
        cmd->add_option("--algo", algo, "writer algorithm (tabular_q, dqn)");
        cmd->add_option("--seed", seeds, "seed(s), repeatable");
        cmd->add_option("--steps", steps, "total environment steps");
        cmd->add_option("--book-capacity", book_capacity, "working book capacity K");
        cmd->add_option("--publish-size", publish_sizes, "published sizes N, repeatable");
        cmd->add_option("--levels", levels, "quantization levels (0 = env default)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--gamma", gamma, "discount factor");
        cmd->add_option("--lr", lr, "learning rate (default 5e-4 dqn, 0.1 tabular)");
        cmd->add_option("--f-limit", f_limit, "hit frequency cap");
        cmd->add_option("--decay-period", decay_period, "episodes between frequency decays");
        cmd->add_option("--keep-fraction", keep_fraction, "fraction kept when pruning");
        cmd->add_option("--priority-method", priority_method,
                        "retention rule (proposed, random, frequency_only, per_style)");
        cmd->add_option("--replay-capacity", replay_capacity, "dqn replay size");
        cmd->add_option("--batch-size", batch_size, "dqn batch size");
        cmd->add_option("--target-sync", target_sync, "dqn target sync period");
        cmd->add_option("--learn-start", learn_start, "replay warmup before updates");
        cmd->add_option("--hidden", hidden, "hidden layer width");
        cmd->add_option("--eps-start", eps_start, "initial exploration rate");
        cmd->add_option("--eps-end", eps_end, "final exploration rate");
        cmd->add_option("--eps-decay-steps", eps_decay_steps,
                        "steps to reach the final rate (0 = half of --steps)");
        cmd->add_option("--eval-episodes", eval_episodes, "greedy evaluation episodes");
    }

    void add_reader_flags(CLI::App* cmd) {
        cmd->add_option("--head", head, "reader head (q_head, va_head)");
        cmd->add_option("--iterations", iterations, "pre-training iterations");
        cmd->add_option("--reader-batch", reader_batch, "pre-training batch size");
    }

    ExperimentConfig to_experiment() const {
        ExperimentConfig cfg;
        cfg.env_id = env_id;
        cfg.writer.algo = writer_algo_from_string(algo);
        cfg.writer.total_steps = steps;
        cfg.writer.gamma = gamma;
        cfg.writer.learning_rate =
            lr > 0.0 ? lr : (cfg.writer.algo == WriterAlgo::tabular_q ? 0.1 : 5e-4);
        cfg.writer.replay_capacity = replay_capacity;
        cfg.writer.batch_size = batch_size;
        cfg.writer.target_sync_period = target_sync;
        cfg.writer.learn_start = learn_start;
        cfg.writer.hidden_width = hidden;
        cfg.writer.epsilon = {eps_start, eps_end, eps_decay_steps};
        cfg.reader.head = reader_head_from_string(head);
        cfg.reader.iterations = iterations;
        cfg.reader.batch_size = reader_batch;
        cfg.reader.hidden_width = hidden;
        cfg.book.gamma = gamma;
        cfg.book.f_limit = f_limit;
        cfg.book.decay_period = decay_period;
        cfg.book.prune_keep_fraction = keep_fraction;
        cfg.book.priority_method = priority_method_from_string(priority_method);
        cfg.book_capacity = book_capacity;
        cfg.levels = levels;
        cfg.publish_sizes = publish_sizes;
        cfg.level_sweep = level_sweep;
        cfg.seeds = seeds;
        cfg.eval_episodes = eval_episodes;
        cfg.baseline_eval_every = baseline_eval_every;
        cfg.baseline_eval_episodes = baseline_eval_episodes;
        cfg.out_dir = out_dir;
        return cfg;
    }
};

void dump_json(const ordered_json& j, const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

int cmd_write(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.to_experiment();
    ordered_json summary = ordered_json::array();
    for (uint64_t seed : cfg.seeds) {
        WriteResult res = run_write(cfg, seed);
        ordered_json row;
        row["seed"] = seed;
        row["writer_score"] = res.writer_score;
        row["book_size"] = res.book_size;
        row["episodes"] = res.episodes;
        row["distinct_states"] = res.book_stats.distinct_states;
        row["total_updates"] = res.book_stats.total_updates;
        row["mean_hits_per_state"] = res.book_stats.mean_hits_per_state();
        row["book_files"] = res.book_files;
        row["metrics_file"] = res.metrics_file;
        summary.push_back(row);
        std::printf("seed %llu: writer score %.2f, book %llu entries, %zu file(s)\n",
                    static_cast<unsigned long long>(seed), res.writer_score,
                    static_cast<unsigned long long>(res.book_size), res.book_files.size());
    }
    dump_json(summary, (std::filesystem::path(cfg.out_dir) / "write_summary.json").string());
    return 0;
}

int cmd_publish(const std::string& in, int publish_size, const std::string& out) {
    PublishedBook book = load_published(in);
    if (publish_size < 1) throw std::invalid_argument("--publish-size must be positive");
    if (static_cast<size_t>(publish_size) < book.entries.size()) {
        book.entries.resize(publish_size);  // entries are stored priority-descending
    }
    save_published(book, out);
    std::printf("published %zu entries to %s\n", book.entries.size(), out.c_str());
    return 0;
}

int cmd_read(const CommonOpts& opts, const std::string& book_file, long continue_steps,
             const std::string& save_net) {
    PublishedBook book = load_published(book_file);
    ExperimentConfig cfg = opts.to_experiment();
    cfg.env_id = book.env_id;  // the book names its environment

    ordered_json summary = ordered_json::array();
    for (uint64_t seed : cfg.seeds) {
        ReadEvalResult res = run_read_eval(book, cfg, seed);
        ordered_json row;
        row["seed"] = seed;
        row["score"] = res.score;
        row["entries"] = res.entries;
        row["env_steps_during_pretrain"] = res.env_steps_during_pretrain;
        std::printf("seed %llu: reader score %.2f over %d episodes (pretrain env steps: %llu)\n",
                    static_cast<unsigned long long>(seed), res.score, cfg.eval_episodes,
                    static_cast<unsigned long long>(res.env_steps_during_pretrain));

        if (continue_steps > 0 || !save_net.empty()) {
            ReaderConfig reader_cfg = cfg.reader;
            reader_cfg.seed = substream(seed, 21);  // same stream as run_read_eval
            Reader reader = pretrain_reader(book, reader_cfg);
            if (continue_steps > 0) {
                WriterConfig train_cfg = cfg.writer;
                train_cfg.total_steps = continue_steps;
                auto env = make_env(cfg.env_id);
                auto metrics = continue_training(reader, *env, train_cfg, substream(seed, 29));
                std::ostringstream name;
                name << "continue_" << cfg.env_id << "_" << to_string(cfg.reader.head) << "_seed"
                     << seed << ".csv";
                std::filesystem::create_directories(cfg.out_dir);
                std::string path = (std::filesystem::path(cfg.out_dir) / name.str()).string();
                write_metrics_csv(path, metrics);
                auto eval_env = make_env(cfg.env_id);
                double after = evaluate(greedy_policy_from(reader), *eval_env, cfg.eval_episodes,
                                        substream(seed, 23));
                row["continued_steps"] = continue_steps;
                row["continued_score"] = after;
                row["curve_file"] = path;
                std::printf("seed %llu: score after %ld conventional steps: %.2f\n",
                            static_cast<unsigned long long>(seed), continue_steps, after);
            }
            if (!save_net.empty()) {
                if (cfg.reader.head == ReaderHead::q_head) {
                    save_mlp(reader.q_net, save_net);
                } else {
                    save_mlp(reader.a_net, save_net);
                }
                row["net_file"] = save_net;
            }
        }
        summary.push_back(row);
    }
    std::filesystem::create_directories(cfg.out_dir);
    dump_json(summary, (std::filesystem::path(cfg.out_dir) / "read_summary.json").string());
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& net_file, bool random_policy) {
    auto env = make_env(opts.env_id);
    uint64_t seed = opts.seeds.front();
    double score = 0.0;
    if (random_policy) {
        Rng rng(substream(seed, 41));
        int actions = env->spec().action_count;
        score = evaluate(
            [&rng, actions](const std::vector<double>&) { return rng.uniform_int(actions); }, *env,
            opts.eval_episodes, substream(seed, 23));
    } else {
        if (net_file.empty()) throw std::invalid_argument("pass --net or --random");
        Mlp net = load_mlp(net_file);
        if (net.input_dim() != env->spec().state_dims ||
            net.output_dim() != env->spec().action_count) {
            throw std::invalid_argument("checkpoint shape does not match the environment");
        }
        score = evaluate(
            [&net](const std::vector<double>& s) { return argmax_lowest(net.forward(s)); }, *env,
            opts.eval_episodes, substream(seed, 23));
    }
    std::printf("mean score over %d episodes: %.4f\n", opts.eval_episodes, score);
    return 0;
}

int cmd_baseline(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.to_experiment();
    std::filesystem::create_directories(cfg.out_dir);
    for (uint64_t seed : cfg.seeds) {
        std::vector<BaselinePoint> curve = run_baseline(cfg, seed);
        std::ostringstream name;
        name << "baseline_" << cfg.env_id << "_" << to_string(cfg.reader.head) << "_seed" << seed
             << ".csv";
        std::string path = (std::filesystem::path(cfg.out_dir) / name.str()).string();
        write_baseline_csv(path, curve);
        std::printf("seed %llu: %zu baseline points -> %s\n", static_cast<unsigned long long>(seed),
                    curve.size(), path.c_str());
    }
    return 0;
}

int cmd_ratio(double score, int publish_size, const std::string& baseline_csv,
              const std::string& out) {
    std::vector<BaselinePoint> curve = load_baseline_csv(baseline_csv);
    RatioReport report = compute_ratio(score, curve, publish_size);
    ordered_json j;
    j["score"] = report.score;
    j["publish_size"] = publish_size;
    j["matched"] = report.matched;
    j["transitions_to_match"] = report.transitions_to_match;
    j["ratio"] = report.ratio;
    if (!out.empty()) dump_json(j, out);
    if (report.matched) {
        std::printf("score %.2f matched at %ld transitions; ratio %.6f (%.4f%%)\n", report.score,
                    report.transitions_to_match, report.ratio, report.ratio * 100.0);
    } else {
        std::printf("score %.2f was never matched by the baseline curve\n", report.score);
    }
    return 0;
}

int cmd_ablate(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.to_experiment();
    AblationResult result = run_priority_ablation(cfg);
    ordered_json j;
    for (const auto& [method, scores] : result.scores) {
        const ScoreSummary& s = result.summary.at(method);
        j[method] = {{"scores", scores},
                     {"median", s.median},
                     {"lower_quartile", s.lower_quartile},
                     {"upper_quartile", s.upper_quartile},
                     {"mean", s.mean}};
        std::printf("%-15s median %8.2f  iqr [%8.2f, %8.2f]\n", method.c_str(), s.median,
                    s.lower_quartile, s.upper_quartile);
    }
    dump_json(j, (std::filesystem::path(cfg.out_dir) / "ablation_summary.json").string());

    std::vector<std::vector<std::string>> rows;
    for (const auto& [method, scores] : result.scores) {
        for (size_t i = 0; i < scores.size(); ++i) {
            rows.push_back({method, std::to_string(cfg.seeds[i]), format_double(scores[i])});
        }
    }
    write_csv((std::filesystem::path(cfg.out_dir) / "ablation_scores.csv").string(),
              "method,seed,score", rows);
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    ExperimentConfig cfg = opts.to_experiment();
    uint64_t seed = cfg.seeds.front();
    std::vector<SweepRow> rows = run_quantization_sweep(cfg, seed);
    std::vector<std::vector<std::string>> csv_rows;
    ordered_json j = ordered_json::array();
    for (const SweepRow& row : rows) {
        csv_rows.push_back({std::to_string(row.levels), format_double(row.mean_hits_per_state),
                            format_double(row.mean_hits_published),
                            std::to_string(row.distinct_states), format_double(row.writer_score),
                            format_double(row.reader_score)});
        ordered_json r;
        r["levels"] = row.levels;
        r["mean_hits_per_state"] = row.mean_hits_per_state;
        r["mean_hits_published"] = row.mean_hits_published;
        r["distinct_states"] = row.distinct_states;
        r["writer_score"] = row.writer_score;
        r["reader_score"] = row.reader_score;
        j.push_back(r);
        std::printf("levels %4d: %10.2f hits/state, %6llu states, writer %8.2f, reader %8.2f\n",
                    row.levels, row.mean_hits_per_state,
                    static_cast<unsigned long long>(row.distinct_states), row.writer_score,
                    row.reader_score);
    }
    std::filesystem::create_directories(cfg.out_dir);
    write_csv((std::filesystem::path(cfg.out_dir) / "sweep.csv").string(),
              "levels,mean_hits_per_state,mean_hits_published,distinct_states,writer_score,reader_score",
              csv_rows);
    dump_json(j, (std::filesystem::path(cfg.out_dir) / "sweep_summary.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BOOK episodic-memory toolkit: write, publish, and read transferable RL books"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string config_path;
    app.add_option("--config", config_path, "JSON file supplying any long flag")->expected(1);

    try {
        opts.apply_config(load_config_object(argc, argv));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    auto* write = app.add_subcommand("write", "train a writer and publish its book");
    opts.add_write_flags(write);

    auto* publish = app.add_subcommand("publish", "re-publish the top N of an existing book file");
    std::string in_file, out_file = "book.json";
    int publish_n = 500;
    publish->add_option("--in", in_file, "input book file")->required();
    publish->add_option("--publish-size", publish_n, "entries to keep");
    publish->add_option("--out", out_file, "output book file");

    auto* read = app.add_subcommand("read", "pre-train a reader from a book and evaluate it");
    std::string book_file, save_net;
    long continue_steps = 0;
    read->add_option("--book", book_file, "published book file")->required();
    opts.add_reader_flags(read);
    read->add_option("--seed", opts.seeds, "seed(s), repeatable");
    read->add_option("--lr", opts.lr, "reader learning rate");
    read->add_option("--hidden", opts.hidden, "hidden layer width");
    read->add_option("--eval-episodes", opts.eval_episodes, "evaluation episodes");
    read->add_option("--out", opts.out_dir, "output directory");
    read->add_option("--continue-steps", continue_steps, "conventional training steps afterwards");
    read->add_option("--save-net", save_net, "write the reader network checkpoint here");

    auto* eval = app.add_subcommand("eval", "evaluate a network checkpoint or a random policy");
    std::string net_file;
    bool random_policy = false;
    eval->add_option("--env", opts.env_id, "environment id");
    eval->add_option("--net", net_file, "network checkpoint file");
    eval->add_flag("--random", random_policy, "evaluate a uniform random policy instead");
    eval->add_option("--episodes", opts.eval_episodes, "episodes");
    eval->add_option("--seed", opts.seeds, "seed");

    auto* baseline =
        app.add_subcommand("baseline", "from-scratch learning curve for the ratio metric");
    opts.add_write_flags(baseline);
    opts.add_reader_flags(baseline);
    baseline->add_option("--eval-every", opts.baseline_eval_every, "steps between evaluations");
    baseline->add_option("--baseline-eval-episodes", opts.baseline_eval_episodes,
                         "episodes per evaluation");

    auto* ratio = app.add_subcommand("ratio", "publish size over transitions-to-match");
    double ratio_score = 0.0;
    int ratio_publish = 500;
    std::string baseline_csv, ratio_out;
    ratio->add_option("--score", ratio_score, "reader score to match")->required();
    ratio->add_option("--publish-size", ratio_publish, "published book size");
    ratio->add_option("--baseline", baseline_csv, "baseline curve CSV")->required();
    ratio->add_option("--out", ratio_out, "report JSON path");

    auto* ablate = app.add_subcommand("ablate-priority", "compare the four retention rules");
    opts.add_write_flags(ablate);
    opts.add_reader_flags(ablate);

    auto* sweep =
        app.add_subcommand("sweep-quantization", "hits and scores across quantization levels");
    opts.add_write_flags(sweep);
    opts.add_reader_flags(sweep);
    sweep->add_option("--level-sweep", opts.level_sweep, "levels to sweep, repeatable");

    // the ablation protocol pins K = 10,000 and N = 1,000 unless overridden
    ablate->parse_complete_callback([&] {
        if (ablate->count("--book-capacity") == 0) opts.book_capacity = 10000;
        if (ablate->count("--publish-size") == 0) opts.publish_sizes = {1000};
    });
    sweep->parse_complete_callback([&] {
        if (sweep->count("--publish-size") == 0) opts.publish_sizes = {1000};
    });

    CLI11_PARSE(app, argc, argv);

    try {
        if (write->parsed()) return cmd_write(opts);
        if (publish->parsed()) return cmd_publish(in_file, publish_n, out_file);
        if (read->parsed()) return cmd_read(opts, book_file, continue_steps, save_net);
        if (eval->parsed()) return cmd_eval(opts, net_file, random_policy);
        if (baseline->parsed()) return cmd_baseline(opts);
        if (ratio->parsed()) return cmd_ratio(ratio_score, ratio_publish, baseline_csv, ratio_out);
        if (ablate->parsed()) return cmd_ablate(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
