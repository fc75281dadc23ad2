#pragma once

// The Amplify(X) composition engine: runs one episode by interleaving expert
// decisions (coded H or learned H'), X's subanswers, and primitive lookups.
// Records transcripts and accounts oracle calls.

#include <array>
#include <cstdint>
#include <string>

#include "amp/decompose.hpp"
#include "amp/learners.hpp"

namespace amp::amplify {

using decompose::EpisodeState;
using decompose::ExpertDecision;
using learners::ContextHandlePtr;
using learners::Learner;
using tasks::Answer;
using tasks::Context;
using tasks::Question;
using tasks::TaskId;

struct TranscriptPair {
    Question q;
    Answer a;
    bool primitive = false;
    bool coerced = false;  // X output was malformed and replaced by "?"
};

struct Transcript {
    TaskId task;
    std::uint64_t context_id = 0;
    Question root;
    int depth = 0;
    std::vector<TranscriptPair> pairs;
    Answer final;
};

// Per-task call accounting.  Counts are monotone within a run.
struct OracleLedger {
    struct Counts {
        std::uint64_t coded_h = 0;   // decisions by the coded expert
        std::uint64_t hprime = 0;    // decisions by the learned predictor
        std::uint64_t x = 0;         // subquestions answered by X
        std::uint64_t ground_truth = 0;
    };
    std::array<Counts, 5> per_task{};

    Counts& operator[](TaskId t) { return per_task[static_cast<int>(t)]; }
    const Counts& operator[](TaskId t) const { return per_task[static_cast<int>(t)]; }
    Counts totals() const {
        Counts sum;
        for (const Counts& c : per_task) {
            sum.coded_h += c.coded_h;
            sum.hprime += c.hprime;
            sum.x += c.x;
            sum.ground_truth += c.ground_truth;
        }
        return sum;
    }
};

// Source of expert decisions: the coded H or a trained H'.
class DecisionSource {
  public:
    virtual ~DecisionSource() = default;
    virtual ExpertDecision next(const EpisodeState& state, Rng& rng) = 0;
    virtual bool is_coded() const = 0;
};

// Wraps decompose::expert_step.
class CodedExpert final : public DecisionSource {
  public:
    ExpertDecision next(const EpisodeState& state, Rng& rng) override {
        return decompose::expert_step(state, rng);
    }
    bool is_coded() const override { return true; }
};

struct EpisodeResult {
    Answer answer;
    Transcript transcript;
};

// One amplification episode over an already-encoded context.
EpisodeResult amplify_answer(DecisionSource& expert, Learner& x, const ContextHandlePtr& ctx,
                             const Question& q, Rng& rng, OracleLedger* ledger = nullptr);

// Convenience overload that encodes the context itself.
EpisodeResult amplify_answer(DecisionSource& expert, Learner& x, const Context& ctx,
                             const Question& q, Rng& rng, OracleLedger* ledger = nullptr);

// Batch over one shared context: the context encoding is computed once and
// reused by every episode.  Episode i uses rng.split(i), so results match
// mapped amplify_answer calls with the same per-episode streams.
std::vector<EpisodeResult> batch_amplify(DecisionSource& expert, Learner& x, const Context& ctx,
                                         const std::vector<Question>& questions, Rng& rng,
                                         OracleLedger* ledger = nullptr);

// Append-only line format for transcript logs; bit-exact replay.
std::string transcript_to_line(const Transcript& t);
Transcript transcript_from_line(const std::string& line);

}  // namespace amp::amplify
