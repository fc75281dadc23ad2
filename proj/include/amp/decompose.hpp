#pragma once

// The hard-coded decomposition expert H.  expert_step is a pure decision
// function over the episode state: it sequentially proposes subquestions
// given the subanswers so far and eventually produces the final answer.
// It never receives a Context; the only way it touches the instance is by
// asking primitive questions.

#include <variant>

#include "amp/qformat.hpp"
#include "amp/rng.hpp"

namespace amp::decompose {

using tasks::Answer;
using tasks::Question;
using tasks::TaskId;

struct AskSub {
    Question q;  // recursive, answered by X
};
struct AskPrimitive {
    Question q;  // answered exactly from the context
};
struct Final {
    Answer a;
};
using ExpertDecision = std::variant<AskSub, AskPrimitive, Final>;

struct EpisodeStep {
    Question q;
    Answer a;
    bool primitive = false;
};

struct EpisodeState {
    TaskId task;
    Question root;
    std::vector<EpisodeStep> steps;

    int sub_count() const {
        int c = 0;
        for (const auto& s : steps) c += !s.primitive;
        return c;
    }
};

// Per-task bound on X-directed subquestions in one episode.
int k_max(TaskId task);

// Next decision given the state.  The random branches (shortest path /
// union find) draw from rng only when the branch ask is newly emitted;
// on replay the branch is inferred from the recorded step kind, so feeding
// the recorded subanswers reproduces the decisions exactly.
ExpertDecision expert_step(const EpisodeState& state, Rng& rng);

}  // namespace amp::decompose
