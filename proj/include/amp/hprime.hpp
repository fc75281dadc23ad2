#pragma once

// The learned decision predictor H'.  It never sees a Context: its input is
// the transcript so far (root question plus the question/answer pairs), its
// output is the next expert decision.  The network is the same
// pointer-augmented sequence model as X, with sentence-position embeddings
// (transcript order matters) and two extra vocabulary symbols: the
// Final marker and the Primitive marker.  A bare emission is a subquestion.

#include <memory>
#include <optional>
#include <vector>

#include "amp/amplify.hpp"
#include "amp/model.hpp"

namespace amp::hprime {

using amplify::Transcript;
using decompose::EpisodeState;
using decompose::ExpertDecision;
using tasks::Question;
using tasks::TaskId;
using tasks::Token;

// Extension symbols appended after the task vocabulary.
Token final_marker(TaskId task);
Token primitive_marker(TaskId task);
int hprime_vocab_size(TaskId task);

// Decision <-> token sequence.  decode returns nullopt for malformed input.
std::vector<Token> encode_decision(TaskId task, const ExpertDecision& d);
std::optional<ExpertDecision> decode_decision(TaskId task, const std::vector<Token>& toks);

// Transcript items: item 0 is the root question, then one 13-token item per
// recorded pair (question 8, answer 4, kind slot: primitive marker or pad).
std::vector<std::vector<Token>> transcript_items(TaskId task, const Question& root,
                                                 const std::vector<decompose::EpisodeStep>& steps);

class HPrimePredictor : public amplify::DecisionSource {
  public:
    HPrimePredictor(TaskId task, const model::ModelConfig& cfg, std::uint64_t seed);
    ~HPrimePredictor() override;

    // Greedy decode over the transcript prefix; malformed output degrades to
    // Final "?" so the episode always terminates.
    ExpertDecision next(const EpisodeState& state, Rng& rng) override;
    bool is_coded() const override { return false; }

    // One optimizer step on every decision point of the given transcripts
    // (each prefix of each transcript is one supervised example).  Returns
    // the mean marginal cross-entropy.
    double train_step(const std::vector<Transcript>& transcripts);

    // Fraction of decision points reproduced token-exactly by greedy decode.
    double decision_accuracy(const std::vector<Transcript>& transcripts);

    TaskId task() const { return task_; }
    model::SeqModel<float>& net() { return *net_; }
    ad::AdamConfig<float>& adam_config() { return adam_cfg_; }
    std::uint64_t train_steps() const { return steps_; }

    void save_checkpoint(const std::string& path, const ckpt::Meta& meta = {});
    ckpt::Meta load_checkpoint(const std::string& path);

  private:
    TaskId task_;
    std::unique_ptr<model::SeqModel<float>> net_;
    ad::AdamState<float> adam_;
    ad::AdamConfig<float> adam_cfg_;
    std::uint64_t steps_ = 0;
};

std::unique_ptr<HPrimePredictor> hprime_predictor(TaskId task, const model::ModelConfig& cfg,
                                                  std::uint64_t seed);

}  // namespace amp::hprime
