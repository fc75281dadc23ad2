#pragma once

// The four-process training orchestration: (1) coded-H episodes producing
// transcripts, (2) H' training on those transcripts, (3) Amplify over H' and
// the Polyak-averaged X filling the replay buffer, (4) supervised X steps on
// buffer samples.  The supervised baseline swaps process (3) for ground-truth
// labels and keeps everything else identical.

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "amp/amplify.hpp"
#include "amp/hprime.hpp"
#include "amp/model.hpp"

namespace amp::train {

using learners::TrainExample;
using tasks::Answer;
using tasks::Context;
using tasks::Question;
using tasks::TaskId;

// ---- Replay buffer --------------------------------------------------------

enum class PairSource { Amplified, Transcript, GroundTruth };

struct ReplayEntry {
    learners::ContextHandlePtr ctx;
    Question q;
    Answer a;
    PairSource source = PairSource::Amplified;
    int usage = 0;
};

// FIFO over (context, question, answer) pairs.  Oldest entries are evicted
// on overflow; an entry is removed exactly when its usage count reaches the
// cap, so nothing is ever trained on more than `usage_cap` times.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity = 100000, int usage_cap = 10);

    void push(ReplayEntry e);
    // Uniform draws with replacement; every draw counts as one use.  Entries
    // hitting the cap drop out mid-call and cannot be drawn again.
    std::vector<ReplayEntry> sample(std::size_t count, Rng& rng);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    int usage_cap() const { return cap_; }
    // Audit over every entry ever buffered (capped entries included).
    int max_usage_seen() const { return max_usage_seen_; }

  private:
    std::size_t capacity_;
    int cap_;
    int max_usage_seen_ = 0;
    std::deque<ReplayEntry> entries_;
};

// ---- Curriculum -----------------------------------------------------------

// Windowed accuracy with "?" answers excluded from the denominator.
struct WindowStats {
    std::uint64_t considered = 0;
    std::uint64_t correct = 0;
    double accuracy() const {
        return considered ? static_cast<double>(correct) / considered : 0.0;
    }
};

struct Curriculum {
    int difficulty = tasks::kMinSize;       // current max instance size
    int max_difficulty = tasks::kMaxSize;   // run-level cap
    double threshold = 0.85;

    // difficulty with probability 0.5, else p(n) proportional to 1/n on
    // [8, difficulty]; the result is rounded to a valid size for the task.
    int sample_size(TaskId task, Rng& rng) const;
};

// Difficulty +1 when the windowed accuracy reaches the threshold; an empty
// window (every answer was "?") never advances.
Curriculum advance_curriculum(const Curriculum& cur, const WindowStats& window);

// ---- Run configuration ----------------------------------------------------

enum class Mode { IteratedAmplification, SupervisedBaseline };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct RunConfig {
    TaskId task = TaskId::PermutationPowering;
    Mode mode = Mode::IteratedAmplification;
    model::ModelConfig model;            // preset
    std::uint64_t seed = 1;
    std::int64_t steps = 0;              // X optimizer step budget

    // Paper defaults: 50 contexts per batch, questions per context equal to
    // the fact count (0 keeps that rule), threshold 0.85, horizon 1000.
    int contexts_per_batch = 50;
    int questions_per_context = 0;
    double threshold = 0.85;
    double polyak_horizon = 1000;
    int usage_cap = 10;
    std::size_t buffer_capacity = 100000;
    int max_difficulty = tasks::kMaxSize;

    // Interleaving ratios and cadences (documented defaults; the paper gives
    // only totals).
    int coded_h_every = 50;      // X steps per coded-H episode batch
    int hprime_steps_per_step = 1;
    int gen_contexts_per_step = 1;  // process-3 contexts per X step
    int eval_every = 500;        // X steps between test-set evaluations
    int eval_amplified = 120;    // amplified-eval episodes per evaluation
    int curriculum_every = 100;  // X steps between curriculum checks
    double hprime_warmup_accuracy = 0.9;

    double lr_x = 1e-5;          // paper default; desk preset raises this
    double lr_hprime = 1e-5;
    int test_set_size = 300;
    bool stop_at_threshold = false;  // halt at the first eval >= threshold

    std::string out_dir;         // empty: in-memory artifacts only

    void validate() const;  // throws Error on inconsistent fields
};

// Flat key-value serialization ("key = value", '#' comments) and the content
// hash recorded in manifests.  The hash excludes the mode and output path so
// paired IA/baseline runs verify as same-config.
std::string config_to_text(const RunConfig& cfg);
RunConfig config_from_text(const std::string& text);
std::string config_hash(const RunConfig& cfg);

// ---- Evaluation set -------------------------------------------------------

struct TestItem {
    Context ctx;
    Question q;
    Answer truth;
    int depth = 0;
};

// One third of items at n_max, one third at the minimum size, one third
// uniform in between.
std::vector<TestItem> build_test_set(TaskId task, int n_max, std::uint64_t seed,
                                     int count = 300);

// ---- Metrics --------------------------------------------------------------

struct MetricsRow {
    std::int64_t step = 0;
    Mode mode = Mode::IteratedAmplification;
    TaskId task = TaskId::PermutationPowering;
    int difficulty = 0;
    int depth = -1;  // -1: aggregate over all depths
    double accuracy_X = 0.0;
    double accuracy_amplified = 0.0;  // NaN when not measured
    double loss_X = 0.0;
    double loss_Hprime = 0.0;  // NaN in baseline mode
    std::uint64_t oracle_calls_H = 0;
    std::uint64_t buffer_size = 0;
};

std::string metrics_header();
std::string metrics_to_csv(const MetricsRow& row);
MetricsRow metrics_from_csv(const std::string& line);

// ---- Runs -----------------------------------------------------------------

struct RunArtifacts {
    RunConfig cfg;
    std::string hash;
    std::vector<MetricsRow> metrics;
    amplify::OracleLedger ledger;

    std::int64_t steps_run = 0;
    std::int64_t steps_to_threshold = -1;  // first eval step at >= threshold
    std::uint64_t pairs_consumed = 0;      // (Q,A) draws by the X optimizer
    std::uint64_t ground_truth_training_calls = 0;  // label-blindness audit
    std::uint64_t coded_h_warmup_decisions = 0;     // process-3 pre-warmup H use
    int max_usage_seen = 0;
    // One "step:difficulty:accuracy:considered" entry per curriculum advance.
    std::vector<std::string> curriculum_events;
    double min_polyak_distance = -1.0;  // smallest online/target L2 gap seen
    double wall_generation = 0.0;       // seconds in data generation
    double wall_training = 0.0;         // seconds in optimizer steps

    std::shared_ptr<model::NeuralLearner> x;         // online
    std::shared_ptr<model::NeuralLearner> x_target;  // Polyak average
    std::shared_ptr<hprime::HPrimePredictor> hp;     // IA mode only
};

RunArtifacts run_iterated_amplification(const RunConfig& cfg);
RunArtifacts run_supervised_baseline(const RunConfig& cfg);

// Writes manifest.txt, config.txt, metrics.csv, model_card.txt, and the
// final checkpoints under cfg.out_dir (which must exist).
void write_artifacts(const RunArtifacts& art);

}  // namespace amp::train
