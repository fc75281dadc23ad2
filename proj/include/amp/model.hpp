#pragma once

// The question-answering architecture: per-fact token embedding, a
// self-attention context encoder (LayerNorm + BatchNorm residual layers),
// a cross-attention question decoder, and a pointer-augmented output head
// that either generates a vocabulary token or copies one out of a context
// sentence.  The same machinery backs both X (facts in, answers out) and
// the H' decision predictor (transcript items in, decisions out); H' adds
// sentence-position embeddings because transcript order matters.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amp/autodiff.hpp"
#include "amp/checkpoint.hpp"
#include "amp/learners.hpp"
#include "amp/tasks.hpp"

namespace amp::model {

using tasks::Answer;
using tasks::Context;
using tasks::Question;
using tasks::TaskId;
using tasks::Token;

struct ModelConfig {
    int d_embed = 32;
    int d_model = 64;
    int encoder_layers = 2;
    int decoder_layers = 2;
    int heads = 4;
    int vocab_size = 0;        // 0 = take the task vocabulary size
    int max_answer_len = 4;    // tokens before the forced stop
    bool double_precision = false;

    int mlp_hidden() const { return 4 * d_model; }
    void validate() const;  // throws Error on bad field combinations

    static ModelConfig desk() { return ModelConfig{}; }
    static ModelConfig paper() {
        ModelConfig c;
        c.d_embed = 100;
        c.d_model = 512;
        c.encoder_layers = 6;
        c.decoder_layers = 3;
        c.heads = 8;
        return c;
    }
};

// Encoder output for one context: one row of width d_model per sentence.
// Fact order only permutes rows; the values per fact do not change.
template <class Real>
struct ContextEncoding {
    std::uint64_t context_id = 0;
    std::uint64_t snapshot_id = 0;  // bumped on every optimizer step
    int d_model = 0;
    std::vector<std::vector<Token>> sentences;  // padded originals (copy source)
    std::vector<Real> rows;                     // [sents, d_model]
    int sentence_count() const { return static_cast<int>(sentences.size()); }
};

struct GenerateResult {
    Answer answer;
    bool truncated = false;
};

// Shared network over padded token sentences.  `sent_width` is the fixed
// per-sentence token count (8 for facts, 13 for transcript items); shorter
// sentences take the pad token, and pad positions are masked out of the
// copy head.
template <class Real>
class SeqModel {
  public:
    SeqModel(TaskId task, const ModelConfig& cfg, int vocab_size, int sent_width,
             int max_sentences, bool sentence_positions, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_; }
    int sent_width() const { return width_; }

    ad::ParamStore<Real>& params() { return params_; }
    const ad::ParamStore<Real>& params() const { return params_; }
    std::vector<ad::BnStats<Real>>& bn_stats() { return bn_; }
    std::uint64_t snapshot_id() const { return snapshot_; }
    void bump_snapshot() { ++snapshot_; }

    // Frozen batch norm: normalization always uses the stored statistics, in
    // training too (gamma/beta still learn).  Used where batches are too
    // small for meaningful batch statistics.
    void set_frozen_bn(bool frozen) { frozen_bn_ = frozen; }
    bool frozen_bn() const { return frozen_bn_; }

    // Pads to `width` (throws Error on longer input or unknown token).
    std::vector<Token> pad_tokens(const std::vector<Token>& toks, int width) const;

    // Tape graph pieces.  All ids live on the caller's tape so training can
    // compose them and backprop through the whole stack.
    ad::Tape<Real>::Id embed_sentences(ad::Tape<Real>& t,
                                       const std::vector<std::vector<Token>>& padded);
    ad::Tape<Real>::Id encode(ad::Tape<Real>& t, typename ad::Tape<Real>::Id sents, bool train);
    // One decoder state per row of `states`; cross-attention over `enc` only,
    // so rows never interact (inference mode).
    ad::Tape<Real>::Id decode(ad::Tape<Real>& t, typename ad::Tape<Real>::Id states,
                              typename ad::Tape<Real>::Id enc, bool train);
    // Question tokens -> decoder input rows (embedding + projection).
    ad::Tape<Real>::Id embed_queries(ad::Tape<Real>& t,
                                     const std::vector<std::vector<Token>>& padded);

    // Autoregressive emission states: row per (answer vector, position) with
    // the previous-token embedding mixed in.  prev[i] is the token emitted
    // before position pos[i] (the start slot uses pad).
    ad::Tape<Real>::Id emit_states(ad::Tape<Real>& t, typename ad::Tape<Real>::Id answer_vecs,
                                   const std::vector<int>& vec_of_row,
                                   const std::vector<Token>& prev,
                                   const std::vector<int>& pos);
    // Pointer head: [rows, vocab + sents*sent_width] logits; pad positions
    // of the copy block are masked to -inf.
    ad::Tape<Real>::Id output_logits(ad::Tape<Real>& t, typename ad::Tape<Real>::Id emit,
                                     typename ad::Tape<Real>::Id enc,
                                     const std::vector<std::vector<Token>>& sentences);

    // Slot groups for marginal_cross_entropy: the generate slot plus every
    // copy slot holding `target` in `sentences`.
    std::vector<int> target_slots(Token target,
                                  const std::vector<std::vector<Token>>& sentences) const;

    // Frozen-parameter helpers -----------------------------------------
    ContextEncoding<Real> run_encoder(std::uint64_t context_id,
                                      const std::vector<std::vector<Token>>& raw_sentences);
    // Greedy by default; with `sample` the path is drawn from the marginal
    // per-token distribution using `seed`.  The stop token is the pad.
    GenerateResult generate(const ContextEncoding<Real>& enc,
                            const std::vector<Token>& query, int max_len, bool sample,
                            std::uint64_t seed);

  private:
    TaskId task_;
    ModelConfig cfg_;
    int vocab_ = 0;
    int width_ = 0;
    int max_sents_ = 0;
    bool positions_ = false;
    bool frozen_bn_ = false;
    std::uint64_t snapshot_ = 0;
    ad::ParamStore<Real> params_;
    std::vector<ad::BnStats<Real>> bn_;  // one per encoder + decoder layer
};

// ---- Spec-level operations over the X model -------------------------------

template <class Real>
std::vector<Real> embed_fact(SeqModel<Real>& m, const tasks::Fact& fact);

template <class Real>
ContextEncoding<Real> encode_context(SeqModel<Real>& m, const Context& ctx);

// Per-question answer vectors of width d_model (first emission conditioning).
template <class Real>
std::vector<std::vector<Real>> decode_questions(SeqModel<Real>& m,
                                                const std::vector<Question>& questions,
                                                const ContextEncoding<Real>& enc);

template <class Real>
GenerateResult generate_answer(SeqModel<Real>& m, const ContextEncoding<Real>& enc,
                               const Question& q, bool sample = false,
                               std::uint64_t seed = 0);

// Mean over target tokens of -log marginal p(token); every target answer is
// extended with the stop (pad) token.
template <class Real>
double answer_loss(SeqModel<Real>& m, const Context& ctx,
                   const std::vector<Question>& questions,
                   const std::vector<Answer>& answers);

// ---- The X learner --------------------------------------------------------

struct TrainHooks {
    double last_loss = 0.0;
    std::uint64_t encode_calls = 0;
    std::uint64_t train_steps = 0;
};

class NeuralLearner : public learners::Learner {
  public:
    NeuralLearner(TaskId task, const ModelConfig& cfg, std::uint64_t seed);
    ~NeuralLearner() override;

    learners::ContextHandlePtr encode_context(const Context& ctx) override;
    Answer answer(const learners::ContextHandle& h, const Question& q,
                  std::uint64_t seed) override;
    double train(const std::vector<learners::TrainExample>& batch) override;

    TaskId task() const { return task_; }
    const TrainHooks& hooks() const { return hooks_; }
    ad::AdamConfig<float>& adam_config() { return adam_cfg_; }
    SeqModel<float>& net() { return *net_; }
    // Polyak copy of another learner's parameters into this one.
    void polyak_from(const NeuralLearner& online, double horizon);
    void copy_params_from(const NeuralLearner& other);

    // Parameters, Adam state, and batch-norm statistics in one file; the
    // model card describing the active config rides in the metadata.
    void save_checkpoint(const std::string& path, const ckpt::Meta& meta = {});
    ckpt::Meta load_checkpoint(const std::string& path);

  private:
    TaskId task_;
    std::unique_ptr<SeqModel<float>> net_;
    ad::AdamState<float> adam_;
    ad::AdamConfig<float> adam_cfg_;
    TrainHooks hooks_;
};

std::unique_ptr<NeuralLearner> neural_learner(TaskId task, const ModelConfig& cfg,
                                              std::uint64_t seed);

}  // namespace amp::model
