#include "amp/learners.hpp"

#include <cmath>
#include <limits>

namespace amp::learners {

namespace {

using namespace amp::tasks;

class RandomLearner final : public Learner {
  public:
    explicit RandomLearner(TaskId task) : task_(task) {}

    ContextHandlePtr encode_context(const Context& ctx) override {
        return std::make_shared<ContextHandle>(ctx);
    }

    Answer answer(const ContextHandle& h, const Question& q, std::uint64_t seed) override {
        Rng rng(seed);
        auto candidates = answer_candidates(task_, h.ctx, q);
        return candidates[rng.next_below(candidates.size())];
    }

    double train(const std::vector<TrainExample>&) override {
        return std::numeric_limits<double>::quiet_NaN();
    }

  private:
    TaskId task_;
};

class NoisyOracleLearner final : public Learner {
  public:
    NoisyOracleLearner(TaskId task, std::vector<double> acc)
        : task_(task), acc_(std::move(acc)) {
        if (acc_.empty()) throw ContractError("accuracy_by_depth must be nonempty");
        for (double p : acc_)
            if (p < 0.0 || p > 1.0) throw ContractError("accuracy outside [0,1]");
    }

    ContextHandlePtr encode_context(const Context& ctx) override {
        return std::make_shared<ContextHandle>(ctx);
    }

    Answer answer(const ContextHandle& h, const Question& q, std::uint64_t seed) override {
        Rng rng(seed);
        Answer truth = ground_truth(task_, h.ctx, q);
        int depth = question_depth(task_, h.ctx, q);
        double p = acc_[std::min<std::size_t>(depth, acc_.size() - 1)];
        if (rng.next_double() < p) return truth;
        // uniformly wrong: shape-valid answers excluding the correct one
        auto candidates = answer_candidates(task_, h.ctx, q);
        std::erase(candidates, truth);
        if (candidates.empty()) return truth;
        return candidates[rng.next_below(candidates.size())];
    }

    double train(const std::vector<TrainExample>&) override {
        return std::numeric_limits<double>::quiet_NaN();
    }

  private:
    TaskId task_;
    std::vector<double> acc_;
};

class GroundTruthWrapper final : public Learner {
  public:
    explicit GroundTruthWrapper(TaskId task) : task_(task) {}

    ContextHandlePtr encode_context(const Context& ctx) override {
        return std::make_shared<ContextHandle>(ctx);
    }

    Answer answer(const ContextHandle& h, const Question& q, std::uint64_t) override {
        return ground_truth(task_, h.ctx, q);
    }

    double train(const std::vector<TrainExample>&) override {
        return std::numeric_limits<double>::quiet_NaN();
    }

  private:
    TaskId task_;
};

}  // namespace

std::unique_ptr<Learner> random_learner(TaskId task) {
    return std::make_unique<RandomLearner>(task);
}

std::unique_ptr<Learner> noisy_oracle_learner(TaskId task, std::vector<double> accuracy_by_depth) {
    return std::make_unique<NoisyOracleLearner>(task, std::move(accuracy_by_depth));
}

std::unique_ptr<Learner> ground_truth_wrapper(TaskId task) {
    return std::make_unique<GroundTruthWrapper>(task);
}

}  // namespace amp::learners
