#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>

#include "bookrl/book.hpp"
#include "bookrl/rng.hpp"

using namespace bookrl;

namespace {

QuantizerConfig line_quantizer(int cells) {
    QuantizerConfig cfg;
    cfg.levels = cells;
    cfg.lower = {0.0};
    cfg.upper = {static_cast<double>(cells)};
    return cfg;
}

Book line_book(int cells, int actions, size_t capacity, BookParams params = {}) {
    return Book(line_quantizer(cells), actions, capacity, params);
}

Transition tr1d(double s, int a, double r, double s_next, bool terminal) {
    return Transition{{s}, a, r, {s_next}, terminal};
}

BookEntry entry_with(std::vector<double> q, std::vector<int> f, std::vector<uint8_t> known) {
    BookEntry e;
    e.q = std::move(q);
    e.f = std::move(f);
    e.known = std::move(known);
    e.last_residual.assign(e.q.size(), 0.0);
    e.sample_state = {0.0};
    return e;
}

LinguisticState key1d(int bin) { return LinguisticState{{bin}}; }

}  // namespace

TEST_SUITE("book") {

TEST_CASE("beta blending weights") {
    CHECK(beta(3, 1) == 0.75);
    CHECK(beta(0, 1) == 0.0);
    CHECK(beta(5, 5) == 0.5);
    CHECK_THROWS_AS(beta(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(beta(-1, 1), std::invalid_argument);
}

TEST_CASE("beta stays in [0, 1) whenever the successor count is positive") {
    for (int f = 0; f <= 20; ++f) {
        for (int fs = 1; fs <= 20; ++fs) {
            double b = beta(f, fs);
            CHECK(b >= 0.0);
            CHECK(b < 1.0);
        }
    }
}

TEST_CASE("credible target of a terminal transition is the reward") {
    auto book = line_book(6, 2, 100);
    auto [q, f] = book.credible_target(tr1d(0, 0, 1.0, 1, true));
    CHECK(q == 1.0);
    CHECK(f == 1);
}

TEST_CASE("credible target bootstraps from the stored successor") {
    auto book = line_book(6, 2, 100);
    // successor cluster at cell 1: q = {2.0 (F=4), 1.0 (F=9)}
    book.update_entry(key1d(1), 0, {1.0}, 2.0, 4);
    book.update_entry(key1d(1), 1, {1.0}, 1.0, 9);
    REQUIRE(book.find(key1d(1)) != nullptr);
    REQUIRE(book.find(key1d(1))->f[0] == 4);
    REQUIRE(book.find(key1d(1))->f[1] == 9);

    auto [q, f] = book.credible_target(tr1d(0, 0, 0.0, 1.0, false));
    CHECK(q == doctest::Approx(1.98).epsilon(1e-12));
    CHECK(f == 4);
}

TEST_CASE("credible target falls back when the successor cluster is absent") {
    auto book = line_book(6, 2, 100);
    auto [q, f] = book.credible_target(tr1d(0, 0, 0.5, 3.0, false));
    CHECK(q == 0.5);
    CHECK(f == 1);
}

TEST_CASE("credible target argmax breaks ties toward the lowest action") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(1), 0, {1.0}, 2.0, 3);
    book.update_entry(key1d(1), 1, {1.0}, 2.0, 9);
    auto [q, f] = book.credible_target(tr1d(0, 0, 0.0, 1.0, false));
    CHECK(q == doctest::Approx(0.99 * 2.0).epsilon(1e-12));
    CHECK(f == 3);  // action 0's frequency
}

TEST_CASE("a decayed-to-zero successor frequency still counts as one hit") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(1), 0, {1.0}, 2.0, 1);
    for (int i = 0; i < 3; ++i) book.decay();
    REQUIRE(book.find(key1d(1))->f[0] == 0);
    auto [q, f] = book.credible_target(tr1d(0, 0, 0.0, 1.0, false));
    CHECK(q == doctest::Approx(1.98).epsilon(1e-12));
    CHECK(f == 1);
}

TEST_CASE("update blends toward the target with the frequency weight") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(0), 0, {0.0}, 2.0, 3);  // q = 2.0, f = 3
    REQUIRE(book.find(key1d(0))->q[0] == 2.0);
    REQUIRE(book.find(key1d(0))->f[0] == 3);
    book.update_entry(key1d(0), 0, {0.0}, 1.0, 1);
    CHECK(book.find(key1d(0))->q[0] == doctest::Approx(1.75).epsilon(1e-12));  // 0.75*2 + 0.25*1
    CHECK(book.find(key1d(0))->f[0] == 4);
}

TEST_CASE("a new entry adopts the target wholly") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(2), 1, {2.5}, 5.0, 1);
    const BookEntry* e = book.find(key1d(2));
    REQUIRE(e != nullptr);
    CHECK(e->q[1] == 5.0);
    CHECK(e->f[1] == 1);
    CHECK(e->known[1]);
    CHECK_FALSE(e->known[0]);
    CHECK(e->sample_state == std::vector<double>{2.5});
}

TEST_CASE("frequency saturates at the limit") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(0), 0, {0.0}, 1.0, 19);
    book.update_entry(key1d(0), 0, {0.0}, 1.0, 5);
    CHECK(book.find(key1d(0))->f[0] == 20);  // min(19 + 5, 20)
}

TEST_CASE("updated q lies between the old value and the target") {
    Rng rng(99);
    auto book = line_book(6, 2, 100);
    for (int trial = 0; trial < 500; ++trial) {
        double target = rng.uniform(-10.0, 10.0);
        int f_succ = 1 + rng.uniform_int(20);
        const BookEntry* before = book.find(key1d(0));
        bool was_known = before != nullptr && before->known[0];
        double old_q = was_known ? before->q[0] : 0.0;
        book.update_entry(key1d(0), 0, {0.0}, target, f_succ);
        double now = book.find(key1d(0))->q[0];
        double lo = std::min(old_q, target), hi = std::max(old_q, target);
        if (!was_known) {
            CHECK(now == target);
        } else {
            CHECK(now >= lo - 1e-12);
            CHECK(now <= hi + 1e-12);
        }
    }
}

TEST_CASE("one-step episode fills one entry") {
    auto book = line_book(6, 2, 100);
    Episode ep;
    ep.steps.push_back(tr1d(0, 1, 1.0, 1, true));
    book.record_episode(ep);
    CHECK(book.size() == 1);
    const BookEntry* e = book.find(key1d(0));
    REQUIRE(e != nullptr);
    CHECK(e->q[1] == 1.0);
    CHECK(e->f[1] == 1);
}

TEST_CASE("backward order makes the successor visible within one episode") {
    auto book = line_book(6, 2, 100);
    Episode ep;
    ep.steps.push_back(tr1d(0, 1, 0.0, 1, false));
    ep.steps.push_back(tr1d(1, 1, 1.0, 2, true));
    book.record_episode(ep);
    CHECK(book.find(key1d(1))->q[1] == 1.0);
    CHECK(book.find(key1d(0))->q[1] == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("replaying a deterministic episode is a fixed point for q") {
    BookParams params;
    params.decay_period = 0;  // isolate the update rule
    auto book = line_book(6, 2, 100, params);
    Episode ep;
    ep.steps.push_back(tr1d(0, 1, 0.0, 1, false));
    ep.steps.push_back(tr1d(1, 1, 0.5, 2, false));
    ep.steps.push_back(tr1d(2, 1, 1.0, 3, true));
    book.record_episode(ep);
    std::vector<double> q_after_first;
    for (int c = 0; c < 3; ++c) q_after_first.push_back(book.find(key1d(c))->q[1]);
    for (int replay = 0; replay < 7; ++replay) book.record_episode(ep);
    for (int c = 0; c < 3; ++c) {
        CHECK(book.find(key1d(c))->q[1] == q_after_first[c]);
    }
}

TEST_CASE("empty episode is a no-op") {
    auto book = line_book(6, 2, 100);
    book.record_episode(Episode{});
    CHECK(book.size() == 0);
    CHECK(book.episodes_recorded() == 0);
}

TEST_CASE("malformed episodes are rejected") {
    auto book = line_book(6, 2, 100);
    Episode no_terminal;
    no_terminal.steps.push_back(tr1d(0, 0, 0.0, 1, false));
    CHECK_THROWS_AS(book.record_episode(no_terminal), std::invalid_argument);
    Episode early_terminal;
    early_terminal.steps.push_back(tr1d(0, 0, 0.0, 1, true));
    early_terminal.steps.push_back(tr1d(1, 0, 0.0, 2, true));
    CHECK_THROWS_AS(book.record_episode(early_terminal), std::invalid_argument);
    Episode bad_action;
    bad_action.steps.push_back(tr1d(0, 5, 0.0, 1, true));
    CHECK_THROWS_AS(book.record_episode(bad_action), std::invalid_argument);
}

TEST_CASE("importance is the max-min gap over known actions") {
    CHECK(importance(entry_with({1.0, -0.5}, {1, 1}, {1, 1})) == 1.5);
    CHECK(importance(entry_with({7.0, 0.0}, {1, 0}, {1, 0})) == 0.0);  // single known action
    CHECK(importance(entry_with({2.0, 2.0, 2.0}, {1, 1, 1}, {1, 1, 1})) == 0.0);
    CHECK(importance(entry_with({3.0, -1.0, 0.5}, {1, 1, 1}, {1, 1, 1})) == 4.0);
}

TEST_CASE("priority multiplies importance by frequency") {
    auto e = entry_with({1.0, -0.5}, {4, 2}, {1, 1});
    CHECK(priority(e, 0) == 6.0);
    CHECK(priority(e, 1) == 3.0);
    CHECK(entry_priority(e) == 6.0);
    auto zero_f = entry_with({1.0, -0.5}, {0, 2}, {1, 1});
    CHECK(priority(zero_f, 0) == 0.0);
    auto flat = entry_with({2.0, 2.0}, {9, 9}, {1, 1});
    CHECK(priority(flat, 0) == 0.0);
    CHECK_THROWS_AS(priority(e, 5), std::invalid_argument);
}

TEST_CASE("decay lowers frequencies to a floor of zero and keeps known flags") {
    auto book = line_book(6, 2, 100);
    book.update_entry(key1d(0), 0, {0.0}, 1.0, 20);
    REQUIRE(book.find(key1d(0))->f[0] == 20);
    book.decay();
    CHECK(book.find(key1d(0))->f[0] == 19);
    for (int i = 0; i < 25; ++i) book.decay();
    CHECK(book.find(key1d(0))->f[0] == 0);
    CHECK(book.find(key1d(0))->known[0]);
}

TEST_CASE("decay runs every decay_period recorded episodes") {
    BookParams params;
    params.decay_period = 2;
    auto book = line_book(6, 2, 100, params);
    Episode ep;
    ep.steps.push_back(tr1d(0, 0, 1.0, 1, true));
    book.record_episode(ep);
    CHECK(book.find(key1d(0))->f[0] == 1);  // episode 1: no decay yet
    book.record_episode(ep);
    // episode 2: f had grown to 2, then decayed once
    CHECK(book.find(key1d(0))->f[0] == 1);
}

TEST_CASE("prune keeps the top keep-fraction by entry priority") {
    auto book = line_book(10, 2, 100);
    // entry i has importance i and f = 1 -> priority i
    for (int i = 0; i < 6; ++i) {
        book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 0.0, 1);
        book.update_entry(key1d(i), 1, {static_cast<double>(i)}, static_cast<double>(i), 1);
    }
    book.set_capacity(4);
    book.prune();
    CHECK(book.size() == 2);  // ceil(4 * 0.5)
    CHECK(book.find(key1d(5)) != nullptr);
    CHECK(book.find(key1d(4)) != nullptr);
}

TEST_CASE("prune below capacity is a no-op") {
    auto book = line_book(10, 2, 100);
    for (int i = 0; i < 6; ++i) book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 1.0, 1);
    book.prune();
    CHECK(book.size() == 6);
}

TEST_CASE("prune resolves ties by keeping the oldest entries") {
    auto book = line_book(10, 2, 100);
    for (int i = 0; i < 6; ++i) book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 1.0, 1);
    book.set_capacity(4);
    book.prune();  // all priorities zero (single known action)
    CHECK(book.size() == 2);
    CHECK(book.find(key1d(0)) != nullptr);
    CHECK(book.find(key1d(1)) != nullptr);
}

TEST_CASE("inserting at capacity prunes instead of rejecting") {
    auto book = line_book(64, 2, 8);
    for (int i = 0; i < 40; ++i) {
        book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 1.0, 1);
        CHECK(book.size() <= 8);
    }
}

TEST_CASE("publish returns the top-n by priority, source unmodified") {
    auto book = line_book(16, 2, 100);
    for (int i = 0; i < 10; ++i) {
        book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 0.0, 1);
        book.update_entry(key1d(i), 1, {static_cast<double>(i)}, static_cast<double>(i), 1);
    }
    PublishedBook top3 = book.publish(3, "line", "tabular_q");
    CHECK(book.size() == 10);
    REQUIRE(top3.entries.size() == 3);
    CHECK(top3.entries[0].bins[0] == 9);
    CHECK(top3.entries[1].bins[0] == 8);
    CHECK(top3.entries[2].bins[0] == 7);
    CHECK(top3.env_id == "line");
    CHECK(top3.writer_algo == "tabular_q");
    CHECK(top3.action_count == 2);

    // dominance: every included priority >= every excluded priority
    double min_included = 1e300;
    for (const auto& e : top3.entries) min_included = std::min(min_included, entry_priority(e));
    for (const BookEntry* e : book.entries_by_priority()) {
        bool included = false;
        for (const auto& pe : top3.entries) {
            if (pe.bins == e->key.bins) included = true;
        }
        if (!included) CHECK(entry_priority(*e) <= min_included);
    }
}

TEST_CASE("publish caps at the book size and repeats identically") {
    auto book = line_book(16, 2, 100);
    for (int i = 0; i < 5; ++i) book.update_entry(key1d(i), 0, {static_cast<double>(i)}, 1.0, 1);
    PublishedBook all = book.publish(1000, "line", "dqn");
    CHECK(all.entries.size() == 5);
    PublishedBook again = book.publish(1000, "line", "dqn");
    REQUIRE(again.entries.size() == all.entries.size());
    for (size_t i = 0; i < all.entries.size(); ++i) {
        CHECK(again.entries[i].bins == all.entries[i].bins);
        CHECK(again.entries[i].q == all.entries[i].q);
    }
    CHECK_THROWS_AS(book.publish(0, "line", "dqn"), std::invalid_argument);
}

TEST_CASE("publishing an empty book yields an empty snapshot") {
    auto book = line_book(16, 2, 100);
    PublishedBook empty = book.publish(10, "line", "dqn");
    CHECK(empty.entries.empty());
    CHECK(empty.action_count == 2);
}

TEST_CASE("decode_q emits one tuple per known action, values untouched") {
    auto e = entry_with({2.0, -1.0, 0.25}, {3, 0, 1}, {1, 0, 1});
    e.sample_state = {4.5};
    auto decoded = decode_q(e);
    REQUIRE(decoded.size() == 2);
    CHECK(decoded[0].state == std::vector<double>{4.5});
    CHECK(decoded[0].action == 0);
    CHECK(decoded[0].q == 2.0);
    CHECK(decoded[1].action == 2);
    CHECK(decoded[1].q == 0.25);
    auto none = entry_with({0.0, 0.0}, {0, 0}, {0, 0});
    CHECK(decode_q(none).empty());
}

TEST_CASE("decode_va computes the frequency-weighted value and gaps") {
    auto e = entry_with({2.0, 0.0}, {3, 1}, {1, 1});
    auto d = decode_va(e);
    CHECK(d.v == doctest::Approx(1.5).epsilon(1e-12));
    REQUIRE(d.advantages.size() == 2);
    CHECK(d.advantages[0].second == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.advantages[1].second == doctest::Approx(-1.5).epsilon(1e-12));

    auto single = entry_with({2.0, 0.0}, {3, 0}, {1, 0});
    auto ds = decode_va(single);
    CHECK(ds.v == 2.0);
    REQUIRE(ds.advantages.size() == 1);
    CHECK(ds.advantages[0].second == 0.0);

    auto equal_f = entry_with({4.0, 1.0}, {7, 7}, {1, 1});
    CHECK(decode_va(equal_f).v == doctest::Approx(2.5).epsilon(1e-12));

    auto stale = entry_with({4.0, 1.0}, {0, 0}, {1, 1});
    CHECK_THROWS_AS(decode_va(stale), std::runtime_error);
}

TEST_CASE("decoded advantages are zero-sum under the frequency weights") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        int actions = 2 + rng.uniform_int(4);
        std::vector<double> q(actions);
        std::vector<int> f(actions);
        std::vector<uint8_t> known(actions, 0);
        bool any = false;
        for (int a = 0; a < actions; ++a) {
            if (rng.uniform() < 0.7) {
                known[a] = 1;
                q[a] = rng.uniform(-100.0, 100.0);
                f[a] = rng.uniform_int(21);
                any = any || f[a] > 0;
            }
        }
        if (!any) continue;
        auto d = decode_va(entry_with(q, f, known));
        double weighted_sum = 0.0;
        for (const auto& [a, adv] : d.advantages) weighted_sum += f[a] * adv;
        CHECK(std::abs(weighted_sum) < 1e-9);
    }
}

TEST_CASE("doubling all frequencies leaves the decoded value unchanged") {
    auto e = entry_with({2.0, 0.0, 5.0}, {3, 1, 2}, {1, 1, 1});
    auto e2 = entry_with({2.0, 0.0, 5.0}, {6, 2, 4}, {1, 1, 1});
    auto d = decode_va(e);
    auto d2 = decode_va(e2);
    CHECK(d.v == doctest::Approx(d2.v).epsilon(1e-12));
    for (size_t i = 0; i < d.advantages.size(); ++i) {
        CHECK(d.advantages[i].second == doctest::Approx(d2.advantages[i].second).epsilon(1e-12));
    }
}

TEST_CASE("randomized episode stream keeps every invariant") {
    Rng rng(2024);
    BookParams params;
    params.decay_period = 10;
    auto book = line_book(32, 3, 50, params);
    for (int episode = 0; episode < 400; ++episode) {
        Episode ep;
        int len = 1 + rng.uniform_int(12);
        for (int t = 0; t < len; ++t) {
            double s = rng.uniform(0.0, 32.0);
            double s_next = rng.uniform(0.0, 32.0);
            ep.steps.push_back(tr1d(s, rng.uniform_int(3), rng.uniform(-1.0, 1.0), s_next, t + 1 == len));
        }
        book.record_episode(ep);

        CHECK(book.size() <= 50);
        for (const BookEntry* e : book.entries_by_insertion()) {
            for (int a = 0; a < 3; ++a) {
                CHECK(e->f[a] >= 0);
                CHECK(e->f[a] <= params.f_limit);
                if (!e->known[a]) CHECK(e->f[a] == 0);
            }
            CHECK(quantize(e->sample_state, book.quantizer()) == e->key);
        }
        if (episode % 50 == 7) {
            PublishedBook published = book.publish(10, "line", "dqn");
            double min_included = 1e300;
            for (const auto& e : published.entries) {
                min_included = std::min(min_included, entry_priority(e));
            }
            size_t found = 0;
            for (const BookEntry* e : book.entries_by_insertion()) {
                bool included = false;
                for (const auto& pe : published.entries) {
                    if (pe.bins == e->key.bins) included = true;
                }
                if (included) {
                    ++found;
                } else {
                    CHECK(entry_priority(*e) <= min_included + 1e-12);
                }
            }
            CHECK(found == published.entries.size());
        }
    }
    CHECK(book.stats().total_updates > 0);
    CHECK(book.stats().distinct_states >= book.size());
}

TEST_CASE("symmetric experience in a single-cluster book has zero importance") {
    QuantizerConfig cfg;
    cfg.levels = 1;
    cfg.lower = {-1.0};
    cfg.upper = {1.0};
    Book book(cfg, 2, 10);
    Episode left;
    left.steps.push_back(Transition{{0.0}, 0, 0.5, {0.2}, true});
    Episode right;
    right.steps.push_back(Transition{{0.0}, 1, 0.5, {-0.2}, true});
    for (int i = 0; i < 5; ++i) {
        book.record_episode(left);
        book.record_episode(right);
    }
    REQUIRE(book.size() == 1);
    for (const BookEntry* e : book.entries_by_insertion()) {
        CHECK(importance(*e) == 0.0);
    }
}

}  // TEST_SUITE
