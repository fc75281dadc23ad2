#pragma once

// The Learner contract shared by X and H', plus non-neural reference
// learners (random, noisy-oracle, ground-truth) used for bootstrapping
// tests and dynamics simulation.

#include <memory>
#include <vector>

#include "amp/tasks.hpp"

namespace amp::learners {

using tasks::Answer;
using tasks::Context;
using tasks::Question;
using tasks::TaskId;

// Opaque reusable context encoding.  The base keeps the raw context so
// training can re-encode with gradients; implementations attach caches.
struct ContextHandle {
    explicit ContextHandle(Context c) : ctx(std::move(c)) {}
    virtual ~ContextHandle() = default;
    Context ctx;
};
using ContextHandlePtr = std::shared_ptr<ContextHandle>;

struct TrainExample {
    ContextHandlePtr ctx;
    Question q;
    Answer a;
};

class Learner {
  public:
    virtual ~Learner() = default;

    // Two-phase contract: encode once, answer many times.
    virtual ContextHandlePtr encode_context(const Context& ctx) = 0;

    // Deterministic given (parameters, inputs, seed); safe for concurrent
    // callers on a frozen parameter snapshot.
    virtual Answer answer(const ContextHandle& h, const Question& q, std::uint64_t seed) = 0;

    // Supervised step on (question, answer) pairs; returns the loss, or NaN
    // for learners with nothing to train.
    virtual double train(const std::vector<TrainExample>& batch) = 0;
};

// Uniform draws of well-formed answer shapes; train is a no-op.
std::unique_ptr<Learner> random_learner(TaskId task);

// Answers ground truth with probability p(depth(q)), otherwise a uniformly
// wrong shape-valid answer.  Depths beyond the vector reuse the last entry.
std::unique_ptr<Learner> noisy_oracle_learner(TaskId task, std::vector<double> accuracy_by_depth);

// Delegates to the brute-force oracle; upper-bound reference.
std::unique_ptr<Learner> ground_truth_wrapper(TaskId task);

}  // namespace amp::learners
