// Command-line entry points: training runs, coded-expert validation,
// amplification-dynamics simulation, and metrics aggregation.  Exit codes:
// 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "amp/trainloop.hpp"

namespace fs = std::filesystem;
using namespace amp;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

std::uint64_t default_seed() {
    if (const char* s = std::getenv("AMP_SEED")) return std::strtoull(s, nullptr, 10);
    return 1;
}

tasks::TaskId parse_task(const std::string& name) {
    try {
        return tasks::task_from_name(name);
    } catch (const Error&) {
        std::ostringstream os;
        os << "unknown task '" << name << "'; available:";
        for (tasks::TaskId t : tasks::kAllTasks) os << ' ' << tasks::task_name(t);
        throw CLI::ValidationError(os.str());
    }
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string task = "permutation";
    std::string mode = "ia";
    std::string preset = "desk";
    std::string config_file;
    std::string out;
    std::uint64_t seed = default_seed();
    std::int64_t steps = -1;  // -1: keep config/default value
    int max_difficulty = 0;
    int contexts = 0;
    double lr = 0;
    bool stop_at_threshold = false;
};

int run_train(const TrainArgs& a) {
    train::RunConfig cfg;
    if (!a.config_file.empty()) {
        std::ifstream is(a.config_file);
        if (!is) throw ContractError("cannot read config file: " + a.config_file);
        std::stringstream ss;
        ss << is.rdbuf();
        cfg = train::config_from_text(ss.str());
    }
    // flags override the file
    cfg.task = parse_task(a.task);
    cfg.mode = train::mode_from_name(a.mode);
    cfg.seed = a.seed;
    if (a.steps >= 0) cfg.steps = a.steps;
    if (a.preset == "paper") {
        cfg.model = model::ModelConfig::paper();
    } else if (a.preset == "desk") {
        cfg.model = model::ModelConfig::desk();
        // Desk scale trades the paper's schedule for one a workstation can
        // finish: higher learning rate, smaller batches.
        cfg.lr_x = cfg.lr_hprime = 1e-3;
        cfg.contexts_per_batch = 4;
    } else {
        throw CLI::ValidationError("unknown preset '" + a.preset + "' (desk|paper)");
    }
    if (a.max_difficulty > 0) cfg.max_difficulty = a.max_difficulty;
    if (a.contexts > 0) cfg.contexts_per_batch = a.contexts;
    if (a.lr > 0) cfg.lr_x = cfg.lr_hprime = a.lr;
    if (a.stop_at_threshold) cfg.stop_at_threshold = true;
    if (!a.out.empty()) cfg.out_dir = a.out;

    int rounded = tasks::round_size_for_task(cfg.task, cfg.max_difficulty);
    bool was_rounded = rounded != cfg.max_difficulty;
    cfg.max_difficulty = rounded;
    cfg.validate();

    auto art = cfg.mode == train::Mode::IteratedAmplification
                   ? train::run_iterated_amplification(cfg)
                   : train::run_supervised_baseline(cfg);
    if (was_rounded && !cfg.out_dir.empty()) {
        std::ofstream os(cfg.out_dir + "/manifest.txt", std::ios::app);
        os << "note = max_difficulty rounded to " << rounded << " for this task\n";
    }
    std::cout << "run complete: steps=" << art.steps_run
              << " steps_to_threshold=" << art.steps_to_threshold
              << " hash=" << art.hash << '\n';
    return kOk;
}

// ---- oracle-check ---------------------------------------------------------

int run_oracle_check(const std::string& task_name, int n, int episodes, std::uint64_t seed) {
    tasks::TaskId task = parse_task(task_name);
    n = tasks::round_size_for_task(task, n);
    if (episodes == 0) {
        std::cout << "oracle-check: 0 episodes requested; vacuous pass (warning)\n";
        return kOk;
    }
    amplify::CodedExpert expert;
    auto x = learners::ground_truth_wrapper(task);
    Rng root(seed);
    int match = 0;
    for (int i = 0; i < episodes; ++i) {
        Rng rng = root.split(i);
        tasks::Context ctx = tasks::gen_context(task, n, rng);
        tasks::Question q = tasks::sample_question(task, ctx, rng);
        auto res = amplify::amplify_answer(expert, *x, ctx, q, rng);
        match += res.answer == tasks::ground_truth(task, ctx, q);
    }
    double rate = static_cast<double>(match) / episodes;
    std::cout << "oracle-check: task=" << tasks::task_name(task) << " n=" << n
              << " episodes=" << episodes << " match=" << match << " rate=" << rate << '\n';
    return match == episodes ? kOk : kRuntime;
}

// ---- dynamics -------------------------------------------------------------

int run_dynamics(const std::string& task_name, double p, int max_depth, int trials,
                 std::uint64_t seed) {
    tasks::TaskId task = parse_task(task_name);
    if (p < 0 || p > 1) throw CLI::ValidationError("--accuracy must lie in [0,1]");
    amplify::CodedExpert expert;
    auto x = learners::noisy_oracle_learner(task, {p});
    Rng root(seed);
    std::cout << "depth,trials,accuracy\n";
    for (int depth = 0; depth <= max_depth; ++depth) {
        int done = 0, hit = 0;
        // rejection-sample questions of the requested depth
        for (int i = 0; done < trials && i < trials * 64; ++i) {
            Rng rng = root.split((static_cast<std::uint64_t>(depth) << 32) | i);
            tasks::Context ctx = tasks::gen_context(task, tasks::kMaxSize, rng);
            tasks::Question q = tasks::sample_question(task, ctx, rng);
            if (tasks::question_depth(task, ctx, q) != depth) continue;
            ++done;
            auto res = amplify::amplify_answer(expert, *x, ctx, q, rng);
            hit += res.answer == tasks::ground_truth(task, ctx, q);
        }
        if (done == 0) continue;  // depth unreachable for this task
        std::cout << depth << ',' << done << ',' << static_cast<double>(hit) / done << '\n';
    }
    return kOk;
}

// ---- report ---------------------------------------------------------------

struct RunDir {
    std::string dir;
    std::map<std::string, std::string> manifest;
    std::vector<train::MetricsRow> rows;
};

RunDir load_run(const std::string& dir) {
    RunDir r;
    r.dir = dir;
    std::ifstream mf(dir + "/manifest.txt");
    std::ifstream cf(dir + "/metrics.csv");
    if (!mf || !cf) throw ContractError("not a completed run directory: " + dir);
    std::string line;
    while (std::getline(mf, line)) {
        auto eq = line.find(" = ");
        if (eq != std::string::npos) r.manifest[line.substr(0, eq)] = line.substr(eq + 3);
    }
    std::getline(cf, line);
    if (line != train::metrics_header())
        throw ContractError("unrecognized metrics header in " + dir);
    while (std::getline(cf, line))
        if (!line.empty()) r.rows.push_back(train::metrics_from_csv(line));
    return r;
}

int run_report(const std::vector<std::string>& dirs) {
    std::vector<RunDir> runs;
    for (const auto& d : dirs) runs.push_back(load_run(d));
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].manifest["task"] != runs[0].manifest["task"])
            throw ContractError("refusing to aggregate runs over different tasks: " +
                                runs[0].manifest["task"] + " vs " + runs[i].manifest["task"]);

    std::cout << "# accuracy series (aggregate over depths)\n";
    std::cout << "run,mode,step,accuracy_X,accuracy_amplified\n";
    for (const auto& r : runs)
        for (const auto& row : r.rows)
            if (row.depth == -1)
                std::cout << r.dir << ',' << train::mode_name(row.mode) << ',' << row.step
                          << ',' << row.accuracy_X << ',' << row.accuracy_amplified << '\n';

    std::cout << "\n# depth-split series\n";
    std::cout << "run,mode,step,depth,accuracy_X,accuracy_amplified\n";
    for (const auto& r : runs)
        for (const auto& row : r.rows)
            if (row.depth >= 0)
                std::cout << r.dir << ',' << train::mode_name(row.mode) << ',' << row.step
                          << ',' << row.depth << ',' << row.accuracy_X << ','
                          << row.accuracy_amplified << '\n';

    std::cout << "\n# oracle ledger summary\n";
    std::cout << "run,task,mode,coded_h_calls,hprime_calls,x_subcalls,"
                 "ground_truth_training_calls,pairs_consumed\n";
    for (auto& r : runs)
        std::cout << r.dir << ',' << r.manifest["task"] << ',' << r.manifest["mode"] << ','
                  << r.manifest["coded_h_calls"] << ',' << r.manifest["hprime_calls"] << ','
                  << r.manifest["x_subcalls"] << ','
                  << r.manifest["ground_truth_training_calls"] << ','
                  << r.manifest["pairs_consumed"] << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iterated-amplification experiment runner"};
    app.require_subcommand(1);

    TrainArgs ta;
    CLI::App* tr = app.add_subcommand("train", "run a training experiment");
    tr->add_option("--task", ta.task, "task id");
    tr->add_option("--mode", ta.mode, "ia|supervised");
    tr->add_option("--preset", ta.preset, "desk|paper");
    tr->add_option("--seed", ta.seed, "rng seed (default from AMP_SEED)");
    tr->add_option("--steps", ta.steps, "X optimizer step budget");
    tr->add_option("--out", ta.out, "artifact directory");
    tr->add_option("--config", ta.config_file, "flat key-value config file");
    tr->add_option("--max-difficulty", ta.max_difficulty, "curriculum cap");
    tr->add_option("--contexts", ta.contexts, "contexts per batch");
    tr->add_option("--lr", ta.lr, "learning rate for X and H'");
    tr->add_flag("--stop-at-threshold", ta.stop_at_threshold,
                 "halt at the first eval above the accuracy threshold");

    std::string oc_task = "permutation";
    int oc_n = 8, oc_episodes = 100;
    std::uint64_t oc_seed = default_seed();
    CLI::App* oc = app.add_subcommand("oracle-check", "validate the coded expert");
    oc->add_option("--task", oc_task, "task id");
    oc->add_option("--n", oc_n, "instance size");
    oc->add_option("--episodes", oc_episodes, "episode count");
    oc->add_option("--seed", oc_seed, "rng seed");

    std::string dy_task = "permutation";
    double dy_p = 0.9;
    int dy_depths = 5, dy_trials = 1000;
    std::uint64_t dy_seed = default_seed();
    CLI::App* dy = app.add_subcommand("dynamics", "amplified accuracy per depth");
    dy->add_option("--task", dy_task, "task id");
    dy->add_option("--accuracy", dy_p, "per-call X accuracy p");
    dy->add_option("--depths", dy_depths, "maximum depth");
    dy->add_option("--trials", dy_trials, "episodes per depth");
    dy->add_option("--seed", dy_seed, "rng seed");

    std::vector<std::string> rp_dirs;
    CLI::App* rp = app.add_subcommand("report", "aggregate metrics from run directories");
    rp->add_option("--runs", rp_dirs, "run directories")->required();

    try {
        app.parse(argc, argv);
        if (tr->parsed()) return run_train(ta);
        if (oc->parsed()) return run_oracle_check(oc_task, oc_n, oc_episodes, oc_seed);
        if (dy->parsed()) return run_dynamics(dy_task, dy_p, dy_depths, dy_trials, dy_seed);
        if (rp->parsed()) return run_report(rp_dirs);
        return kUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
