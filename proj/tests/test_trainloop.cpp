#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "amp/trainloop.hpp"

using namespace amp;
using namespace amp::train;
using tasks::TaskId;

namespace {

ReplayEntry entry(int tag) {
    ReplayEntry e;
    e.q.tokens = {static_cast<tasks::Token>(tag)};
    e.a.tokens = {static_cast<tasks::Token>(tag)};
    return e;
}

int tag_of(const ReplayEntry& e) { return e.q.tokens[0]; }

RunConfig tiny_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.task = TaskId::PermutationPowering;
    cfg.model.d_embed = 8;
    cfg.model.d_model = 16;
    cfg.model.encoder_layers = 1;
    cfg.model.decoder_layers = 1;
    cfg.model.heads = 2;
    cfg.seed = seed;
    cfg.contexts_per_batch = 2;
    cfg.max_difficulty = 8;
    cfg.eval_every = 20;
    cfg.eval_amplified = 10;
    cfg.curriculum_every = 10;
    cfg.coded_h_every = 10;
    cfg.test_set_size = 24;
    cfg.lr_x = 1e-3;
    cfg.lr_hprime = 1e-3;
    return cfg;
}

}  // namespace

TEST_CASE("replay entries are removed exactly at the usage cap") {
    ReplayBuffer buf(100, 3);
    buf.push(entry(1));
    Rng rng(7);
    std::size_t uses = 0;
    while (buf.size() > 0) {
        auto got = buf.sample(1, rng);
        REQUIRE(got.size() == 1);
        uses += got.size();
        CHECK(got[0].usage <= 3);
    }
    CHECK(uses == 3);  // exactly cap draws, then gone
    CHECK(buf.max_usage_seen() == 3);
    CHECK(buf.sample(4, rng).empty());
}

TEST_CASE("replay eviction is oldest-first at capacity") {
    ReplayBuffer buf(4, 10);
    for (int i = 0; i < 6; ++i) buf.push(entry(i));
    CHECK(buf.size() == 4);
    Rng rng(1);
    std::set<int> seen;
    for (int k = 0; k < 200; ++k)
        for (const auto& e : buf.sample(1, rng)) seen.insert(tag_of(e));
    CHECK(seen == std::set<int>{2, 3, 4, 5});
}

TEST_CASE("a sample batch never trains any entry past the cap") {
    ReplayBuffer buf(50, 10);
    for (int i = 0; i < 20; ++i) buf.push(entry(i));
    Rng rng(5);
    auto big = buf.sample(500, rng);
    CHECK(big.size() == 200);  // 20 entries, 10 uses each
    CHECK(buf.size() == 0);
    CHECK(buf.max_usage_seen() == 10);
}

TEST_CASE("curriculum advances at the threshold and not below") {
    Curriculum cur;
    cur.difficulty = 12;
    CHECK(advance_curriculum(cur, WindowStats{100, 86}).difficulty == 13);
    CHECK(advance_curriculum(cur, WindowStats{100, 84}).difficulty == 12);
    CHECK(advance_curriculum(cur, WindowStats{40, 34}).difficulty == 13);  // exactly 0.85
}

TEST_CASE("an all-? window has no remainder and never advances") {
    Curriculum cur;
    cur.difficulty = 9;
    CHECK(advance_curriculum(cur, WindowStats{0, 0}).difficulty == 9);
}

TEST_CASE("difficulty is clamped at the run cap") {
    Curriculum cur;
    cur.difficulty = 16;
    cur.max_difficulty = 16;
    CHECK(advance_curriculum(cur, WindowStats{10, 10}).difficulty == 16);
}

TEST_CASE("size sampling mixes the top difficulty with a power-law tail") {
    Curriculum cur;
    cur.difficulty = 32;
    Rng rng(11);
    int top = 0, total = 4000, below = 0;
    for (int i = 0; i < total; ++i) {
        int n = cur.sample_size(TaskId::PermutationPowering, rng);
        REQUIRE(n >= 8);
        REQUIRE(n <= 32);
        top += n == 32;
        below += n < 16;
    }
    CHECK(top > total * 0.45);
    CHECK(top < total * 0.60);
    CHECK(below > 0);  // the 1/n tail reaches small sizes
    // union find only sees perfect squares
    for (int i = 0; i < 50; ++i) {
        int n = cur.sample_size(TaskId::UnionFind, rng);
        int r = static_cast<int>(std::lround(std::sqrt(n)));
        CHECK(r * r == n);
    }
}

TEST_CASE("config text round-trips and the hash pairs modes") {
    RunConfig cfg = tiny_config(42);
    cfg.steps = 123;
    cfg.out_dir = "/tmp/some/dir";
    RunConfig back = config_from_text(config_to_text(cfg));
    CHECK(config_to_text(back) == config_to_text(cfg));

    RunConfig ia = cfg, sup = cfg;
    ia.mode = Mode::IteratedAmplification;
    sup.mode = Mode::SupervisedBaseline;
    sup.out_dir = "/elsewhere";
    CHECK(config_hash(ia) == config_hash(sup));  // only the data source differs
    RunConfig other = cfg;
    other.seed = 43;
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config parser accepts comments and rejects unknown keys") {
    RunConfig c = config_from_text("# a comment\n seed = 9 # trailing\n\nsteps=4\n");
    CHECK(c.seed == 9);
    CHECK(c.steps == 4);
    CHECK_THROWS_AS((void)config_from_text("bogus_key = 1\n"), Error);
}

TEST_CASE("test set splits into thirds at n_max, 8, and uniform") {
    auto set = build_test_set(TaskId::PermutationPowering, 64, 3, 300);
    REQUIRE(set.size() == 300);
    int at_max = 0, at_min = 0, between = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        int n = set[i].ctx.n;
        if (i % 3 == 0) CHECK(n == 64);
        if (i % 3 == 1) CHECK(n == 8);
        at_max += n == 64;
        at_min += n == 8;
        between += n > 8 && n < 64;
        CHECK(set[i].truth == tasks::ground_truth(TaskId::PermutationPowering, set[i].ctx,
                                                  set[i].q));
    }
    CHECK(at_max >= 100);
    CHECK(at_min >= 100);
    CHECK(between > 50);
}

TEST_CASE("test set at n_max=8 collapses to a single size") {
    auto set = build_test_set(TaskId::WildcardSearch, 8, 5, 60);
    for (const auto& item : set) CHECK(item.ctx.n == 8);
}

TEST_CASE("test sets are identical under a fixed seed") {
    auto a = build_test_set(TaskId::ShortestPath, 32, 77, 45);
    auto b = build_test_set(TaskId::ShortestPath, 32, 77, 45);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ctx.facts == b[i].ctx.facts);
        CHECK(a[i].q == b[i].q);
        CHECK(a[i].truth == b[i].truth);
    }
}

TEST_CASE("metrics rows survive the CSV round trip") {
    MetricsRow r;
    r.step = 1500;
    r.mode = Mode::SupervisedBaseline;
    r.task = TaskId::UnionFind;
    r.difficulty = 16;
    r.depth = 3;
    r.accuracy_X = 0.8125;
    r.accuracy_amplified = std::nan("");
    r.loss_X = 1.25;
    r.loss_Hprime = std::nan("");
    r.oracle_calls_H = 4242;
    r.buffer_size = 999;
    MetricsRow b = metrics_from_csv(metrics_to_csv(r));
    CHECK(b.step == r.step);
    CHECK(b.mode == r.mode);
    CHECK(b.task == r.task);
    CHECK(b.depth == r.depth);
    CHECK(b.accuracy_X == doctest::Approx(r.accuracy_X));
    CHECK(std::isnan(b.accuracy_amplified));
    CHECK(std::isnan(b.loss_Hprime));
    CHECK(b.oracle_calls_H == 4242);
    CHECK(metrics_header().rfind("step,mode,task,difficulty,depth", 0) == 0);
}

TEST_CASE("a zero-step run emits the initial checkpoint and empty metrics") {
    namespace fs = std::filesystem;
    RunConfig cfg = tiny_config(1);
    cfg.steps = 0;
    cfg.out_dir = "/tmp/amp_test_run0";
    fs::remove_all(cfg.out_dir);
    auto art = run_iterated_amplification(cfg);
    CHECK(art.metrics.empty());
    CHECK(art.steps_run == 0);
    CHECK(fs::exists(cfg.out_dir + "/metrics.csv"));
    CHECK(fs::exists(cfg.out_dir + "/manifest.txt"));
    CHECK(fs::exists(cfg.out_dir + "/model_card.txt"));
    CHECK(fs::exists(cfg.out_dir + "/x_final.ckpt"));
    CHECK(fs::exists(cfg.out_dir + "/hprime_final.ckpt"));

    // the checkpoint restores into a fresh learner of the same config
    model::NeuralLearner fresh(cfg.task, cfg.model, 999);
    auto meta = fresh.load_checkpoint(cfg.out_dir + "/x_final.ckpt");
    CHECK(meta.at("config_hash") == art.hash);
    CHECK(ad::param_distance(fresh.net().params(), art.x->net().params()) == 0.0f);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("short runs: schema parity, label blindness, and audits") {
    RunConfig cfg = tiny_config(6);
    cfg.steps = 40;
    auto ia = run_iterated_amplification(cfg);
    auto sup = run_supervised_baseline(cfg);

    CHECK(ia.hash == sup.hash);
    REQUIRE(!ia.metrics.empty());
    REQUIRE(!sup.metrics.empty());

    // label blindness: no ground-truth call feeds IA training data
    CHECK(ia.ground_truth_training_calls == 0);
    CHECK(ia.ledger.totals().ground_truth == 0);
    CHECK(sup.ground_truth_training_calls > 0);

    // the coded expert is metered, X subcalls flow through the ledger
    CHECK(ia.ledger.totals().coded_h > 0);
    CHECK(ia.ledger.totals().x > 0);
    CHECK(sup.ledger.totals().coded_h == 0);

    // audits
    CHECK(ia.max_usage_seen <= cfg.usage_cap);
    CHECK(sup.max_usage_seen <= cfg.usage_cap);
    CHECK(ia.min_polyak_distance > 0.0);
    CHECK(ia.pairs_consumed > 0);

    // identical metrics schema across modes
    auto header_like = [](const MetricsRow& r) {
        std::ostringstream os;
        os << r.step << '/' << r.depth;
        return os.str();
    };
    CHECK(ia.metrics.size() == sup.metrics.size());
    for (std::size_t i = 0; i < std::min(ia.metrics.size(), sup.metrics.size()); ++i)
        CHECK(header_like(ia.metrics[i]) == header_like(sup.metrics[i]));
    for (const auto& r : sup.metrics) {
        CHECK(std::isnan(r.accuracy_amplified));
        CHECK(std::isnan(r.loss_Hprime));
    }
    for (const auto& r : ia.metrics)
        if (r.depth == -1) CHECK(!std::isnan(r.accuracy_amplified));
}

TEST_CASE("runs are deterministic under a fixed seed") {
    RunConfig cfg = tiny_config(13);
    cfg.steps = 20;
    auto a = run_iterated_amplification(cfg);
    auto b = run_iterated_amplification(cfg);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i)
        CHECK(metrics_to_csv(a.metrics[i]) == metrics_to_csv(b.metrics[i]));
    CHECK(a.ledger.totals().coded_h == b.ledger.totals().coded_h);
    CHECK(a.pairs_consumed == b.pairs_consumed);
}
