#include "amp/trainloop.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "amp/error.hpp"

namespace amp::train {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---- Replay buffer --------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity, int usage_cap)
    : capacity_(capacity), cap_(usage_cap) {
    if (capacity == 0 || usage_cap <= 0) throw ContractError("replay buffer: bad limits");
}

void ReplayBuffer::push(ReplayEntry e) {
    e.usage = 0;
    if (entries_.size() == capacity_) entries_.pop_front();  // oldest first
    entries_.push_back(std::move(e));
}

std::vector<ReplayEntry> ReplayBuffer::sample(std::size_t count, Rng& rng) {
    std::vector<ReplayEntry> out;
    if (entries_.empty()) return out;
    out.reserve(count);
    std::vector<bool> dead(entries_.size(), false);
    std::size_t alive = entries_.size();
    for (std::size_t k = 0; k < count && alive > 0; ++k) {
        std::size_t i = rng.next_below(entries_.size());
        while (dead[i]) i = (i + 1) % entries_.size();
        ReplayEntry& e = entries_[i];
        ++e.usage;
        max_usage_seen_ = std::max(max_usage_seen_, e.usage);
        out.push_back(e);
        if (e.usage >= cap_) {  // removed exactly at the cap
            dead[i] = true;
            --alive;
        }
    }
    std::size_t w = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (!dead[i]) {
            if (w != i) entries_[w] = std::move(entries_[i]);
            ++w;
        }
    entries_.resize(w);
    return out;
}

// ---- Curriculum -----------------------------------------------------------

int Curriculum::sample_size(TaskId task, Rng& rng) const {
    int n = difficulty;
    if (difficulty > tasks::kMinSize && !rng.next_bool()) {
        // p(n) proportional to 1/n on [8, difficulty]
        double z = 0;
        for (int v = tasks::kMinSize; v <= difficulty; ++v) z += 1.0 / v;
        double u = rng.next_double() * z;
        for (n = tasks::kMinSize; n < difficulty; ++n) {
            u -= 1.0 / n;
            if (u <= 0) break;
        }
    }
    return tasks::round_size_for_task(task, n);
}

Curriculum advance_curriculum(const Curriculum& cur, const WindowStats& window) {
    Curriculum next = cur;
    if (window.considered == 0) return next;  // all-"?" window: no signal
    if (window.accuracy() >= cur.threshold)
        next.difficulty = std::min(cur.difficulty + 1, cur.max_difficulty);
    return next;
}

// ---- Configuration --------------------------------------------------------

const char* mode_name(Mode m) {
    return m == Mode::IteratedAmplification ? "ia" : "supervised";
}

Mode mode_from_name(const std::string& name) {
    if (name == "ia") return Mode::IteratedAmplification;
    if (name == "supervised") return Mode::SupervisedBaseline;
    throw ContractError("unknown mode: " + name + " (expected ia|supervised)");
}

void RunConfig::validate() const {
    model.validate();
    if (steps < 0) throw ContractError("config: steps must be >= 0");
    if (contexts_per_batch <= 0) throw ContractError("config: contexts_per_batch must be > 0");
    if (threshold <= 0 || threshold > 1) throw ContractError("config: threshold out of (0,1]");
    if (polyak_horizon < 1) throw ContractError("config: polyak_horizon must be >= 1");
    if (usage_cap <= 0) throw ContractError("config: usage_cap must be > 0");
    if (max_difficulty < tasks::kMinSize || max_difficulty > tasks::kMaxSize)
        throw ContractError("config: max_difficulty out of [8,64]");
    if (coded_h_every <= 0 || eval_every <= 0 || curriculum_every <= 0 ||
        gen_contexts_per_step < 0 || hprime_steps_per_step < 0)
        throw ContractError("config: cadence fields must be positive");
    if (lr_x <= 0 || lr_hprime <= 0) throw ContractError("config: learning rates must be > 0");
    if (test_set_size <= 0) throw ContractError("config: test_set_size must be > 0");
}

std::string config_to_text(const RunConfig& c) {
    std::ostringstream os;
    os << "task = " << tasks::task_name(c.task) << '\n';
    os << "mode = " << mode_name(c.mode) << '\n';
    os << "seed = " << c.seed << '\n';
    os << "steps = " << c.steps << '\n';
    os << "d_embed = " << c.model.d_embed << '\n';
    os << "d_model = " << c.model.d_model << '\n';
    os << "encoder_layers = " << c.model.encoder_layers << '\n';
    os << "decoder_layers = " << c.model.decoder_layers << '\n';
    os << "heads = " << c.model.heads << '\n';
    os << "vocab_size = " << c.model.vocab_size << '\n';
    os << "max_answer_len = " << c.model.max_answer_len << '\n';
    os << "double_precision = " << (c.model.double_precision ? 1 : 0) << '\n';
    os << "contexts_per_batch = " << c.contexts_per_batch << '\n';
    os << "questions_per_context = " << c.questions_per_context << '\n';
    os << "threshold = " << c.threshold << '\n';
    os << "polyak_horizon = " << c.polyak_horizon << '\n';
    os << "usage_cap = " << c.usage_cap << '\n';
    os << "buffer_capacity = " << c.buffer_capacity << '\n';
    os << "max_difficulty = " << c.max_difficulty << '\n';
    os << "coded_h_every = " << c.coded_h_every << '\n';
    os << "hprime_steps_per_step = " << c.hprime_steps_per_step << '\n';
    os << "gen_contexts_per_step = " << c.gen_contexts_per_step << '\n';
    os << "eval_every = " << c.eval_every << '\n';
    os << "eval_amplified = " << c.eval_amplified << '\n';
    os << "curriculum_every = " << c.curriculum_every << '\n';
    os << "hprime_warmup_accuracy = " << c.hprime_warmup_accuracy << '\n';
    os << "lr_x = " << c.lr_x << '\n';
    os << "lr_hprime = " << c.lr_hprime << '\n';
    os << "test_set_size = " << c.test_set_size << '\n';
    os << "stop_at_threshold = " << (c.stop_at_threshold ? 1 : 0) << '\n';
    os << "out_dir = " << c.out_dir << '\n';
    return os.str();
}

RunConfig config_from_text(const std::string& text) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ContractError("config: malformed line: " + line);
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        auto num = [&] { return std::stod(val); };
        if (key == "task") c.task = tasks::task_from_name(val);
        else if (key == "mode") c.mode = mode_from_name(val);
        else if (key == "seed") c.seed = std::stoull(val);
        else if (key == "steps") c.steps = std::stoll(val);
        else if (key == "d_embed") c.model.d_embed = std::stoi(val);
        else if (key == "d_model") c.model.d_model = std::stoi(val);
        else if (key == "encoder_layers") c.model.encoder_layers = std::stoi(val);
        else if (key == "decoder_layers") c.model.decoder_layers = std::stoi(val);
        else if (key == "heads") c.model.heads = std::stoi(val);
        else if (key == "vocab_size") c.model.vocab_size = std::stoi(val);
        else if (key == "max_answer_len") c.model.max_answer_len = std::stoi(val);
        else if (key == "double_precision") c.model.double_precision = std::stoi(val) != 0;
        else if (key == "contexts_per_batch") c.contexts_per_batch = std::stoi(val);
        else if (key == "questions_per_context") c.questions_per_context = std::stoi(val);
        else if (key == "threshold") c.threshold = num();
        else if (key == "polyak_horizon") c.polyak_horizon = num();
        else if (key == "usage_cap") c.usage_cap = std::stoi(val);
        else if (key == "buffer_capacity") c.buffer_capacity = std::stoull(val);
        else if (key == "max_difficulty") c.max_difficulty = std::stoi(val);
        else if (key == "coded_h_every") c.coded_h_every = std::stoi(val);
        else if (key == "hprime_steps_per_step") c.hprime_steps_per_step = std::stoi(val);
        else if (key == "gen_contexts_per_step") c.gen_contexts_per_step = std::stoi(val);
        else if (key == "eval_every") c.eval_every = std::stoi(val);
        else if (key == "eval_amplified") c.eval_amplified = std::stoi(val);
        else if (key == "curriculum_every") c.curriculum_every = std::stoi(val);
        else if (key == "hprime_warmup_accuracy") c.hprime_warmup_accuracy = num();
        else if (key == "lr_x") c.lr_x = num();
        else if (key == "lr_hprime") c.lr_hprime = num();
        else if (key == "test_set_size") c.test_set_size = std::stoi(val);
        else if (key == "stop_at_threshold") c.stop_at_threshold = std::stoi(val) != 0;
        else if (key == "out_dir") c.out_dir = val;
        else throw ContractError("config: unknown key: " + key);
    }
    return c;
}

std::string config_hash(const RunConfig& cfg) {
    // FNV-1a over the config text minus the pairing-irrelevant lines, so an
    // IA run and its baseline twin share the hash.
    std::istringstream is(config_to_text(cfg));
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("mode = ", 0) == 0 || line.rfind("out_dir = ", 0) == 0) continue;
        for (char ch : line) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
        h ^= '\n';
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// ---- Evaluation set -------------------------------------------------------

std::vector<TestItem> build_test_set(TaskId task, int n_max, std::uint64_t seed, int count) {
    if (n_max < tasks::kMinSize) throw ContractError("build_test_set: n_max below minimum");
    std::vector<TestItem> out;
    out.reserve(count);
    Rng root(seed);
    for (int i = 0; i < count; ++i) {
        Rng rng = root.split(i);
        int n = n_max;
        if (i % 3 == 1) n = tasks::kMinSize;
        else if (i % 3 == 2) n = rng.next_int(tasks::kMinSize, n_max);
        n = tasks::round_size_for_task(task, n);
        TestItem item;
        item.ctx = tasks::gen_context(task, n, rng);
        item.q = tasks::sample_question(task, item.ctx, rng);
        item.truth = tasks::ground_truth(task, item.ctx, item.q);
        item.depth = tasks::question_depth(task, item.ctx, item.q);
        out.push_back(std::move(item));
    }
    return out;
}

// ---- Metrics --------------------------------------------------------------

std::string metrics_header() {
    return "step,mode,task,difficulty,depth,accuracy_X,accuracy_amplified,"
           "loss_X,loss_Hprime,oracle_calls_H,buffer_size";
}

namespace {
std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}
}  // namespace

std::string metrics_to_csv(const MetricsRow& r) {
    std::ostringstream os;
    os << r.step << ',' << mode_name(r.mode) << ',' << tasks::task_name(r.task) << ','
       << r.difficulty << ',' << r.depth << ',' << fmt(r.accuracy_X) << ','
       << fmt(r.accuracy_amplified) << ',' << fmt(r.loss_X) << ',' << fmt(r.loss_Hprime) << ','
       << r.oracle_calls_H << ',' << r.buffer_size;
    return os.str();
}

MetricsRow metrics_from_csv(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            f.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    f.push_back(cur);
    if (f.size() != 11) throw ContractError("metrics: bad column count in: " + line);
    MetricsRow r;
    r.step = std::stoll(f[0]);
    r.mode = mode_from_name(f[1]);
    r.task = tasks::task_from_name(f[2]);
    r.difficulty = std::stoi(f[3]);
    r.depth = std::stoi(f[4]);
    auto num = [](const std::string& s) { return s == "nan" ? kNaN : std::stod(s); };
    r.accuracy_X = num(f[5]);
    r.accuracy_amplified = num(f[6]);
    r.loss_X = num(f[7]);
    r.loss_Hprime = num(f[8]);
    r.oracle_calls_H = std::stoull(f[9]);
    r.buffer_size = std::stoull(f[10]);
    return r;
}

// ---- The run driver -------------------------------------------------------

namespace {

struct DepthAcc {
    std::map<int, WindowStats> by_depth;
    WindowStats all;
    void add(int depth, bool correct) {
        ++all.considered;
        all.correct += correct;
        auto& d = by_depth[depth];
        ++d.considered;
        d.correct += correct;
    }
};

RunArtifacts run(RunConfig cfg) {
    cfg.validate();
    bool ia = cfg.mode == Mode::IteratedAmplification;

    RunArtifacts art;
    art.cfg = cfg;
    art.hash = config_hash(cfg);

    Rng root(cfg.seed);
    Rng rng_ctx = root.split(1);
    Rng rng_q = root.split(2);
    Rng rng_ep = root.split(3);
    Rng rng_buf = root.split(4);
    Rng rng_hp = root.split(5);
    Rng rng_win = root.split(6);

    art.x = std::make_shared<model::NeuralLearner>(cfg.task, cfg.model,
                                                   root.split(7).next_u64());
    art.x->adam_config().lr = static_cast<float>(cfg.lr_x);
    art.x_target = std::make_shared<model::NeuralLearner>(cfg.task, cfg.model,
                                                          root.split(8).next_u64());
    art.x_target->copy_params_from(*art.x);
    if (ia) {
        art.hp = std::make_shared<hprime::HPrimePredictor>(cfg.task, cfg.model,
                                                           root.split(9).next_u64());
        art.hp->adam_config().lr = static_cast<float>(cfg.lr_hprime);
    }

    auto test = build_test_set(cfg.task, cfg.max_difficulty, root.split(10).next_u64(),
                               cfg.test_set_size);

    Curriculum cur;
    cur.max_difficulty = cfg.max_difficulty;
    cur.threshold = cfg.threshold;
    ReplayBuffer buf(cfg.buffer_capacity, cfg.usage_cap);
    amplify::CodedExpert coded;

    std::deque<amplify::Transcript> pool;       // H' training transcripts
    std::vector<amplify::Transcript> held;      // warm-up accuracy probe
    bool hp_warm = false;
    WindowStats win;
    double loss_x = kNaN, loss_hp = kNaN;

    auto gen_questions = [&](const Context& ctx) {
        int count = cfg.questions_per_context > 0 ? cfg.questions_per_context
                                                  : static_cast<int>(ctx.facts.size());
        std::vector<Question> qs;
        qs.reserve(count);
        for (int i = 0; i < count; ++i) qs.push_back(tasks::sample_question(cfg.task, ctx, rng_q));
        return qs;
    };

    auto evaluate = [&](std::int64_t step) {
        DepthAcc ax, amp_acc;
        for (const auto& item : test) {
            auto h = art.x->encode_context(item.ctx);
            Answer got = art.x->answer(*h, item.q, 0);
            ax.add(item.depth, got == item.truth);
        }
        if (ia) {
            amplify::DecisionSource& ds =
                hp_warm ? static_cast<amplify::DecisionSource&>(*art.hp) : coded;
            int limit = std::min<int>(cfg.eval_amplified, static_cast<int>(test.size()));
            for (int i = 0; i < limit; ++i) {
                const auto& item = test[i];
                Rng er = root.split(0x5000 + step).split(i);
                auto res = amplify::amplify_answer(ds, *art.x_target, item.ctx, item.q, er,
                                                   nullptr);
                amp_acc.add(item.depth, res.answer == item.truth);
            }
        }
        auto ledger_h = art.ledger.totals().coded_h;
        MetricsRow base;
        base.step = step;
        base.mode = cfg.mode;
        base.task = cfg.task;
        base.difficulty = cur.difficulty;
        base.loss_X = loss_x;
        base.loss_Hprime = ia ? loss_hp : kNaN;
        base.oracle_calls_H = ledger_h;
        base.buffer_size = buf.size();
        MetricsRow agg = base;
        agg.depth = -1;
        agg.accuracy_X = ax.all.accuracy();
        agg.accuracy_amplified = ia && amp_acc.all.considered ? amp_acc.all.accuracy() : kNaN;
        art.metrics.push_back(agg);
        for (const auto& [d, s] : ax.by_depth) {
            MetricsRow row = base;
            row.depth = d;
            row.accuracy_X = s.accuracy();
            auto it = amp_acc.by_depth.find(d);
            row.accuracy_amplified =
                ia && it != amp_acc.by_depth.end() ? it->second.accuracy() : kNaN;
            art.metrics.push_back(row);
        }
        if (art.steps_to_threshold < 0 && agg.accuracy_X >= cfg.threshold)
            art.steps_to_threshold = step;
        if (std::getenv("AMP_PROGRESS")) {
            std::fprintf(stderr, "[%s %s seed %llu] %s\n", mode_name(cfg.mode),
                         tasks::task_name(cfg.task),
                         static_cast<unsigned long long>(cfg.seed),
                         metrics_to_csv(agg).c_str());
            for (const auto& [d, s] : ax.by_depth)
                std::fprintf(stderr, "    depth %d: %.3f (%llu)\n", d, s.accuracy(),
                             static_cast<unsigned long long>(s.considered));
        }
        double dist = ad::param_distance(art.x->net().params(), art.x_target->net().params());
        if (art.min_polyak_distance < 0 || dist < art.min_polyak_distance)
            art.min_polyak_distance = dist;
        return agg.accuracy_X;
    };

    for (std::int64_t step = 1; step <= cfg.steps; ++step) {
        auto t_gen = std::chrono::steady_clock::now();

        // (1) coded-H episode batch -> transcripts (the metered H budget)
        if (ia && step % cfg.coded_h_every == 1 % cfg.coded_h_every) {
            Context ctx = tasks::gen_context(cfg.task, cur.sample_size(cfg.task, rng_ctx),
                                             rng_ctx);
            ctx.id = static_cast<std::uint64_t>(step) << 20;
            auto results = amplify::batch_amplify(coded, *art.x_target, ctx,
                                                  gen_questions(ctx), rng_ep, &art.ledger);
            for (auto& r : results) {
                if (held.size() < 96 && (held.size() + pool.size()) % 7 == 0)
                    held.push_back(std::move(r.transcript));
                else
                    pool.push_back(std::move(r.transcript));
            }
            while (pool.size() > 4096) pool.pop_front();
        }

        // (2) H' steps on transcript minibatches
        if (ia && !pool.empty()) {
            for (int k = 0; k < cfg.hprime_steps_per_step; ++k) {
                std::vector<amplify::Transcript> batch;
                for (int j = 0; j < 8; ++j) batch.push_back(pool[rng_hp.next_below(pool.size())]);
                loss_hp = art.hp->train_step(batch);
            }
            if (!hp_warm && step % 50 == 0 && held.size() >= 48 &&
                art.hp->decision_accuracy(held) > cfg.hprime_warmup_accuracy)
                hp_warm = true;
        }

        // (3) fill the replay buffer
        for (int g = 0; g < cfg.gen_contexts_per_step; ++g) {
            Context ctx = tasks::gen_context(cfg.task, cur.sample_size(cfg.task, rng_ctx),
                                             rng_ctx);
            ctx.id = (static_cast<std::uint64_t>(step) << 20) | (g + 1);
            auto qs = gen_questions(ctx);
            auto handle = art.x->encode_context(ctx);
            if (!ia) {
                for (const auto& q : qs) {
                    Answer a = tasks::ground_truth(cfg.task, ctx, q);
                    ++art.ground_truth_training_calls;
                    buf.push(ReplayEntry{handle, q, a, PairSource::GroundTruth, 0});
                }
            } else {
                amplify::DecisionSource& ds =
                    hp_warm ? static_cast<amplify::DecisionSource&>(*art.hp) : coded;
                auto before = art.ledger.totals().coded_h;
                auto results = amplify::batch_amplify(ds, *art.x_target, ctx, qs, rng_ep,
                                                      &art.ledger);
                if (!hp_warm)
                    art.coded_h_warmup_decisions += art.ledger.totals().coded_h - before;
                for (std::size_t i = 0; i < qs.size(); ++i)
                    buf.push(ReplayEntry{handle, qs[i], results[i].answer,
                                         PairSource::Amplified, 0});
            }
        }
        art.wall_generation += seconds_since(t_gen);

        // (4) X supervised step on a buffer sample
        auto t_train = std::chrono::steady_clock::now();
        int per_ctx = cfg.questions_per_context > 0 ? cfg.questions_per_context : cur.difficulty;
        std::size_t want = static_cast<std::size_t>(cfg.contexts_per_batch) * per_ctx;
        auto drawn = buf.sample(want, rng_buf);
        if (!drawn.empty()) {
            std::vector<TrainExample> batch;
            batch.reserve(drawn.size());
            for (auto& e : drawn) batch.push_back(TrainExample{e.ctx, e.q, e.a});
            loss_x = art.x->train(batch);
            art.pairs_consumed += drawn.size();
            // Curriculum window: X's own answers on a few just-trained pairs,
            // "?" excluded.
            for (int k = 0; k < 6 && k < static_cast<int>(drawn.size()); ++k) {
                const auto& e = drawn[rng_win.next_below(drawn.size())];
                Answer got = art.x->answer(*e.ctx, e.q, 0);
                if (tasks::is_unknown(cfg.task, got)) continue;
                ++win.considered;
                win.correct += got == e.a;
            }
        }
        art.x_target->polyak_from(*art.x, cfg.polyak_horizon);
        art.wall_training += seconds_since(t_train);

        if (step % cfg.curriculum_every == 0) {
            Curriculum next = advance_curriculum(cur, win);
            if (next.difficulty != cur.difficulty) {
                std::ostringstream ev;
                ev << step << ':' << next.difficulty << ':' << win.accuracy() << ':'
                   << win.considered;
                art.curriculum_events.push_back(ev.str());
            }
            cur = next;
            win = WindowStats{};
        }
        art.steps_run = step;
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            double acc = evaluate(step);
            if (cfg.stop_at_threshold && acc >= cfg.threshold) break;
        }
    }

    art.max_usage_seen = buf.max_usage_seen();
    if (!cfg.out_dir.empty()) write_artifacts(art);
    return art;
}

}  // namespace

RunArtifacts run_iterated_amplification(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::IteratedAmplification;
    return run(c);
}

RunArtifacts run_supervised_baseline(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::SupervisedBaseline;
    return run(c);
}

void write_artifacts(const RunArtifacts& art) {
    namespace fs = std::filesystem;
    const std::string& dir = art.cfg.out_dir;
    if (dir.empty()) throw ContractError("write_artifacts: empty out_dir");
    fs::create_directories(dir);

    {
        std::ofstream os(dir + "/config.txt");
        os << config_to_text(art.cfg);
    }
    {
        std::ofstream os(dir + "/metrics.csv");
        os << metrics_header() << '\n';
        for (const auto& r : art.metrics) os << metrics_to_csv(r) << '\n';
    }
    {
        const auto& m = art.cfg.model;
        std::ofstream os(dir + "/model_card.txt");
        os << "architecture: token-embedding encoder/decoder with pointer output\n"
           << "task: " << tasks::task_name(art.cfg.task) << '\n'
           << "d_embed: " << m.d_embed << '\n'
           << "d_model: " << m.d_model << '\n'
           << "encoder_layers: " << m.encoder_layers << '\n'
           << "decoder_layers: " << m.decoder_layers << '\n'
           << "heads: " << m.heads << '\n'
           << "mlp_hidden: " << m.mlp_hidden() << '\n'
           << "max_answer_len: " << m.max_answer_len << '\n'
           << "precision: " << (m.double_precision ? "double" : "float") << '\n';
    }
    ckpt::Meta meta{{"config_hash", art.hash}, {"seed", std::to_string(art.cfg.seed)},
                    {"step", std::to_string(art.steps_run)}};
    art.x->save_checkpoint(dir + "/x_final.ckpt", meta);
    art.x_target->save_checkpoint(dir + "/x_target_final.ckpt", meta);
    if (art.hp) art.hp->save_checkpoint(dir + "/hprime_final.ckpt", meta);

    auto totals = art.ledger.totals();
    std::ofstream os(dir + "/manifest.txt");
    os << "config_hash = " << art.hash << '\n'
       << "task = " << tasks::task_name(art.cfg.task) << '\n'
       << "mode = " << mode_name(art.cfg.mode) << '\n'
       << "seed = " << art.cfg.seed << '\n'
       << "start_step = 0\n"
       << "end_step = " << art.steps_run << '\n'
       << "steps_to_threshold = " << art.steps_to_threshold << '\n'
       << "pairs_consumed = " << art.pairs_consumed << '\n'
       << "coded_h_calls = " << totals.coded_h << '\n'
       << "hprime_calls = " << totals.hprime << '\n'
       << "x_subcalls = " << totals.x << '\n'
       << "coded_h_warmup_decisions = " << art.coded_h_warmup_decisions << '\n'
       << "ground_truth_training_calls = " << art.ground_truth_training_calls << '\n'
       << "max_usage_seen = " << art.max_usage_seen << '\n'
       << "min_polyak_distance = " << art.min_polyak_distance << '\n';
    os << "curriculum_advances =";
    for (const auto& ev : art.curriculum_events) os << ' ' << ev;
    os << '\n'
       << "wall_generation = " << art.wall_generation << '\n'
       << "wall_training = " << art.wall_training << '\n'
       << "artifacts = config.txt metrics.csv model_card.txt x_final.ckpt x_target_final.ckpt"
       << (art.hp ? " hprime_final.ckpt" : "") << '\n';
}

}  // namespace amp::train
