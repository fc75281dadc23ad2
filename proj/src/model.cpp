#include "amp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "amp/qformat.hpp"
#include "amp/rng.hpp"

namespace amp::model {

namespace {

// Questions are shorter than facts but share the 8-token budget.
constexpr int kQueryWidth = 8;
constexpr double kMaskLogit = -1e9;

template <class Real>
Real fan_in_scale(int fan_in) {
    // Uniform [-s, s] with variance 1/fan_in.
    return static_cast<Real>(std::sqrt(3.0 / fan_in));
}

}  // namespace

void ModelConfig::validate() const {
    if (d_embed <= 0 || d_model <= 0 || encoder_layers <= 0 || decoder_layers <= 0 || heads <= 0)
        throw ContractError("ModelConfig: all dimensions must be positive");
    if (d_model % heads != 0) throw ContractError("ModelConfig: d_model not divisible by heads");
    if (max_answer_len <= 0) throw ContractError("ModelConfig: max_answer_len must be positive");
}

// ---- SeqModel -------------------------------------------------------------

template <class Real>
SeqModel<Real>::SeqModel(TaskId task, const ModelConfig& cfg, int vocab_size, int sent_width,
                         int max_sentences, bool sentence_positions, std::uint64_t seed)
    : task_(task),
      cfg_(cfg),
      vocab_(vocab_size > 0 ? vocab_size : static_cast<int>(tasks::vocab(task).size())),
      width_(sent_width),
      max_sents_(max_sentences),
      positions_(sentence_positions) {
    cfg_.validate();
    if (width_ <= 0 || max_sents_ <= 0) throw ContractError("SeqModel: bad sentence geometry");
    std::uint64_t s = seed;
    int d = cfg_.d_model, de = cfg_.d_embed, dh = cfg_.mlp_hidden();
    auto mat = [&](const std::string& name, int r, int c) {
        params_.add(name, r, c, fan_in_scale<Real>(r), &s);
    };
    auto bias = [&](const std::string& name, int c) { params_.add(name, 1, c, Real(0), &s); };
    auto gain = [&](const std::string& name, int c) {
        auto& e = params_.add(name, 1, c, Real(0), &s);
        std::fill(e.v.begin(), e.v.end(), Real(1));
    };

    params_.add("tok_embed", vocab_, de, fan_in_scale<Real>(de), &s);
    mat("sent_proj_w", width_ * de, d);
    bias("sent_proj_b", d);
    mat("query_proj_w", kQueryWidth * de, d);
    bias("query_proj_b", d);
    if (positions_) params_.add("sent_pos", max_sents_, d, fan_in_scale<Real>(d), &s);

    auto block = [&](const std::string& p) {
        mat(p + ".wq", d, d);
        mat(p + ".wk", d, d);
        mat(p + ".wv", d, d);
        mat(p + ".wo", d, d);
        gain(p + ".ln1_g", d);
        bias(p + ".ln1_b", d);
        mat(p + ".mlp_w1", d, dh);
        bias(p + ".mlp_b1", dh);
        mat(p + ".mlp_w2", dh, d);
        bias(p + ".mlp_b2", d);
        gain(p + ".bn_g", d);
        bias(p + ".bn_b", d);
        gain(p + ".ln2_g", d);
        bias(p + ".ln2_b", d);
    };
    for (int l = 0; l < cfg_.encoder_layers; ++l) block("enc" + std::to_string(l));
    for (int l = 0; l < cfg_.decoder_layers; ++l) block("dec" + std::to_string(l));
    bn_.resize(cfg_.encoder_layers + cfg_.decoder_layers);

    mat("emit.w_a", d, d);
    mat("emit.w_p", de, d);
    params_.add("emit.pos", cfg_.max_answer_len + 1, d, fan_in_scale<Real>(d), &s);
    bias("emit.b", d);
    mat("emit.w_h", d, d);
    bias("emit.b_h", d);

    mat("out.gen_w", d, vocab_);
    bias("out.gen_b", vocab_);
    mat("out.sent_w", d, d);
    mat("out.idx_w", d, width_);
    bias("out.idx_b", width_);
}

template <class Real>
std::vector<tasks::Token> SeqModel<Real>::pad_tokens(const std::vector<Token>& toks,
                                                     int width) const {
    if (static_cast<int>(toks.size()) > width)
        throw ContractError("SeqModel: sentence longer than its width");
    for (Token t : toks)
        if (t >= vocab_) throw ContractError("SeqModel: token outside vocabulary");
    std::vector<Token> out(toks);
    out.resize(width, tasks::vocab(task_).pad());
    return out;
}

// Gathers column j of every sentence, concatenates the per-column embedding
// blocks, and applies the linear projection.
template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::embed_sentences(
    ad::Tape<Real>& t, const std::vector<std::vector<Token>>& padded) {
    if (padded.empty()) throw ContractError("SeqModel: no sentences");
    auto emb = t.param(params_.at("tok_embed"));
    typename ad::Tape<Real>::Id cat = -1;
    for (int j = 0; j < width_; ++j) {
        std::vector<int> idx(padded.size());
        for (std::size_t f = 0; f < padded.size(); ++f) {
            if (static_cast<int>(padded[f].size()) != width_)
                throw ContractError("SeqModel: sentence not padded to width");
            idx[f] = padded[f][j];
        }
        auto col = t.gather_rows(emb, idx);
        cat = (j == 0) ? col : t.concat_cols(cat, col);
    }
    auto x = t.add_row(t.matmul(cat, t.param(params_.at("sent_proj_w"))),
                       t.param(params_.at("sent_proj_b")));
    if (positions_) {
        if (static_cast<int>(padded.size()) > max_sents_)
            throw ContractError("SeqModel: more sentences than position slots");
        std::vector<int> pos(padded.size());
        for (std::size_t f = 0; f < padded.size(); ++f) pos[f] = static_cast<int>(f);
        x = t.add(x, t.gather_rows(t.param(params_.at("sent_pos")), pos));
    }
    return x;
}

template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::embed_queries(
    ad::Tape<Real>& t, const std::vector<std::vector<Token>>& padded) {
    if (padded.empty()) throw ContractError("SeqModel: no queries");
    auto emb = t.param(params_.at("tok_embed"));
    typename ad::Tape<Real>::Id cat = -1;
    for (int j = 0; j < kQueryWidth; ++j) {
        std::vector<int> idx(padded.size());
        for (std::size_t q = 0; q < padded.size(); ++q) {
            if (static_cast<int>(padded[q].size()) != kQueryWidth)
                throw ContractError("SeqModel: query not padded to width");
            idx[q] = padded[q][j];
        }
        auto col = t.gather_rows(emb, idx);
        cat = (j == 0) ? col : t.concat_cols(cat, col);
    }
    return t.add_row(t.matmul(cat, t.param(params_.at("query_proj_w"))),
                     t.param(params_.at("query_proj_b")));
}

// Folds the batch's per-feature moments into the running statistics.  Rows
// below two carry no variance information and are skipped.
template <class Real>
static void track_bn_stats(ad::BnStats<Real>& stats, const Real* v, int rows, int cols,
                           Real momentum) {
    if (rows < 2) return;
    std::vector<Real> mu(cols, Real(0)), var(cols, Real(0));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) mu[j] += v[static_cast<std::size_t>(i) * cols + j];
    for (int j = 0; j < cols; ++j) mu[j] /= rows;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            Real d = v[static_cast<std::size_t>(i) * cols + j] - mu[j];
            var[j] += d * d;
        }
    for (int j = 0; j < cols; ++j) var[j] /= rows;
    if (!stats.warm) {
        stats.mean = mu;
        stats.var = var;
        stats.warm = true;
        return;
    }
    for (int j = 0; j < cols; ++j) {
        stats.mean[j] = momentum * stats.mean[j] + (Real(1) - momentum) * mu[j];
        stats.var[j] = momentum * stats.var[j] + (Real(1) - momentum) * var[j];
    }
}

// y = LN(x + Attn(x; kv)); z = LN(y + BN(MLP(y))).
template <class Real>
static typename ad::Tape<Real>::Id run_block(ad::Tape<Real>& t, ad::ParamStore<Real>& ps,
                                             const std::string& p, typename ad::Tape<Real>::Id x,
                                             typename ad::Tape<Real>::Id kv, int heads,
                                             ad::BnStats<Real>& stats, bool train) {
    auto q = t.matmul(x, t.param(ps.at(p + ".wq")));
    auto k = t.matmul(kv, t.param(ps.at(p + ".wk")));
    auto v = t.matmul(kv, t.param(ps.at(p + ".wv")));
    auto att = t.matmul(t.attention(q, k, v, heads), t.param(ps.at(p + ".wo")));
    auto y = t.layer_norm(t.add(x, att), t.param(ps.at(p + ".ln1_g")),
                          t.param(ps.at(p + ".ln1_b")));
    auto h = t.relu(t.add_row(t.matmul(y, t.param(ps.at(p + ".mlp_w1"))),
                              t.param(ps.at(p + ".mlp_b1"))));
    auto m = t.add_row(t.matmul(h, t.param(ps.at(p + ".mlp_w2"))),
                       t.param(ps.at(p + ".mlp_b2")));
    // Normalization always reads the running statistics, so training and
    // inference share one function; training batches only feed the stats.
    // Per-context batches are far too small for batch statistics to agree
    // with evaluation-time normalization.  Momentum 0.9 keeps the stats
    // close behind the optimizer.
    if (train) track_bn_stats(stats, t.val(m), t.rows(m), t.cols(m), Real(0.9));
    auto b = t.batch_norm(m, t.param(ps.at(p + ".bn_g")), t.param(ps.at(p + ".bn_b")), stats,
                          false, Real(0.9));
    return t.layer_norm(t.add(y, b), t.param(ps.at(p + ".ln2_g")), t.param(ps.at(p + ".ln2_b")));
}

template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::encode(ad::Tape<Real>& t,
                                                   typename ad::Tape<Real>::Id sents,
                                                   bool train) {
    auto x = sents;
    for (int l = 0; l < cfg_.encoder_layers; ++l)
        x = run_block(t, params_, "enc" + std::to_string(l), x, x, cfg_.heads, bn_[l],
                      train && !frozen_bn_);
    return x;
}

template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::decode(ad::Tape<Real>& t,
                                                   typename ad::Tape<Real>::Id states,
                                                   typename ad::Tape<Real>::Id enc, bool train) {
    auto x = states;
    for (int l = 0; l < cfg_.decoder_layers; ++l)
        x = run_block(t, params_, "dec" + std::to_string(l), x, enc, cfg_.heads,
                      bn_[cfg_.encoder_layers + l], train && !frozen_bn_);
    return x;
}

template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::emit_states(ad::Tape<Real>& t,
                                                        typename ad::Tape<Real>::Id answer_vecs,
                                                        const std::vector<int>& vec_of_row,
                                                        const std::vector<Token>& prev,
                                                        const std::vector<int>& pos) {
    if (vec_of_row.size() != prev.size() || prev.size() != pos.size())
        throw ContractError("SeqModel: emit row descriptors disagree");
    auto base = t.gather_rows(answer_vecs, vec_of_row);
    auto u = t.matmul(base, t.param(params_.at("emit.w_a")));
    std::vector<int> pidx(prev.begin(), prev.end());
    auto pe = t.gather_rows(t.param(params_.at("tok_embed")), pidx);
    u = t.add(u, t.matmul(pe, t.param(params_.at("emit.w_p"))));
    u = t.add(u, t.gather_rows(t.param(params_.at("emit.pos")), pos));
    u = t.add_row(u, t.param(params_.at("emit.b")));
    return t.relu(t.add_row(t.matmul(u, t.param(params_.at("emit.w_h"))),
                            t.param(params_.at("emit.b_h"))));
}

template <class Real>
typename ad::Tape<Real>::Id SeqModel<Real>::output_logits(
    ad::Tape<Real>& t, typename ad::Tape<Real>::Id emit, typename ad::Tape<Real>::Id enc,
    const std::vector<std::vector<Token>>& sentences) {
    int S = static_cast<int>(sentences.size());
    auto gen = t.add_row(t.matmul(emit, t.param(params_.at("out.gen_w"))),
                         t.param(params_.at("out.gen_b")));
    auto sp = t.matmul(emit, t.param(params_.at("out.sent_w")));
    auto sent = t.scale(t.matmul_nt(sp, enc), Real(1.0 / std::sqrt((double)cfg_.d_model)));
    auto idx = t.add_row(t.matmul(emit, t.param(params_.at("out.idx_w"))),
                         t.param(params_.at("out.idx_b")));
    auto logits = t.concat_cols(gen, t.outer_add(sent, idx));
    // Pad slots can never be copied; push them out of the softmax.
    std::vector<Real> mask(static_cast<std::size_t>(vocab_) + S * width_, Real(0));
    Token pad = tasks::vocab(task_).pad();
    for (int f = 0; f < S; ++f)
        for (int j = 0; j < width_; ++j)
            if (sentences[f][j] == pad) mask[vocab_ + f * width_ + j] = Real(kMaskLogit);
    return t.add_row(logits, t.input(1, vocab_ + S * width_, mask.data()));
}

template <class Real>
std::vector<int> SeqModel<Real>::target_slots(
    Token target, const std::vector<std::vector<Token>>& sentences) const {
    if (target >= vocab_) throw ContractError("SeqModel: target token outside vocabulary");
    std::vector<int> slots{static_cast<int>(target)};
    Token pad = tasks::vocab(task_).pad();
    if (target == pad) return slots;  // the stop token is generate-only
    for (std::size_t f = 0; f < sentences.size(); ++f)
        for (int j = 0; j < width_; ++j)
            if (sentences[f][j] == target) slots.push_back(vocab_ + static_cast<int>(f) * width_ + j);
    return slots;
}

template <class Real>
ContextEncoding<Real> SeqModel<Real>::run_encoder(
    std::uint64_t context_id, const std::vector<std::vector<Token>>& raw_sentences) {
    ContextEncoding<Real> out;
    out.context_id = context_id;
    out.snapshot_id = snapshot_;
    out.d_model = cfg_.d_model;
    out.sentences.reserve(raw_sentences.size());
    for (const auto& s : raw_sentences) out.sentences.push_back(pad_tokens(s, width_));
    ad::Tape<Real> t;
    auto enc = encode(t, embed_sentences(t, out.sentences), /*train=*/false);
    const Real* v = t.val(enc);
    out.rows.assign(v, v + raw_sentences.size() * static_cast<std::size_t>(cfg_.d_model));
    return out;
}

template <class Real>
GenerateResult SeqModel<Real>::generate(const ContextEncoding<Real>& enc,
                                        const std::vector<Token>& query, int max_len,
                                        bool sample, std::uint64_t seed) {
    int S = enc.sentence_count();
    int d = cfg_.d_model;
    Token pad = tasks::vocab(task_).pad();

    std::vector<Real> avec(d);
    {
        ad::Tape<Real> t;
        auto e = t.input(S, d, enc.rows.data());
        auto q = embed_queries(t, {pad_tokens(query, kQueryWidth)});
        auto a = decode(t, q, e, /*train=*/false);
        std::memcpy(avec.data(), t.val(a), sizeof(Real) * d);
    }

    Rng rng(seed);
    GenerateResult res;
    Token prev = pad;
    for (int posn = 0; posn <= max_len; ++posn) {
        ad::Tape<Real> t;
        auto e = t.input(S, d, enc.rows.data());
        auto a = t.input(1, d, avec.data());
        auto em = emit_states(t, a, {0}, {prev}, {posn});
        auto pr = t.softmax_rows(output_logits(t, em, e, enc.sentences));
        const Real* p = t.val(pr);
        // Marginal per-token probability: generate slot plus all copy slots.
        std::vector<double> ptok(p, p + vocab_);
        for (int f = 0; f < S; ++f)
            for (int j = 0; j < width_; ++j) {
                Token tk = enc.sentences[f][j];
                if (tk != pad) ptok[tk] += p[vocab_ + f * width_ + j];
            }
        int pick = 0;
        if (sample) {
            double total = 0;
            for (double x : ptok) total += x;
            double r = rng.next_double() * total, acc = 0;
            for (int v = 0; v < vocab_; ++v) {
                acc += ptok[v];
                if (r < acc) {
                    pick = v;
                    break;
                }
            }
        } else {
            pick = static_cast<int>(std::max_element(ptok.begin(), ptok.end()) - ptok.begin());
        }
        if (pick == pad) return res;
        if (posn == max_len) break;  // the last slot may only stop
        res.answer.tokens.push_back(static_cast<Token>(pick));
        prev = static_cast<Token>(pick);
    }
    res.truncated = true;
    return res;
}

// ---- Shared loss builder --------------------------------------------------

namespace {

template <class Real>
struct QaLoss {
    typename ad::Tape<Real>::Id loss;
    int token_rows = 0;
};

template <class Real>
QaLoss<Real> build_qa_loss(SeqModel<Real>& m, ad::Tape<Real>& t,
                           const std::vector<std::vector<Token>>& padded_sents,
                           const std::vector<Question>& questions,
                           const std::vector<Answer>& answers, bool train) {
    if (questions.size() != answers.size() || questions.empty())
        throw ContractError("qa loss: question/answer batch mismatch");
    Token stop = m.pad_tokens({}, 1)[0];
    auto enc = m.encode(t, m.embed_sentences(t, padded_sents), train);
    std::vector<std::vector<Token>> qpad;
    qpad.reserve(questions.size());
    for (const auto& q : questions) qpad.push_back(m.pad_tokens(q.tokens, 8));
    auto avecs = m.decode(t, m.embed_queries(t, qpad), enc, train);

    std::vector<int> vor, pos;
    std::vector<Token> prev;
    std::vector<std::vector<int>> slots;
    for (std::size_t qi = 0; qi < answers.size(); ++qi) {
        std::vector<Token> toks = answers[qi].tokens;
        if (static_cast<int>(toks.size()) > m.config().max_answer_len)
            throw ContractError("qa loss: target longer than max answer length");
        toks.push_back(stop);
        for (std::size_t ti = 0; ti < toks.size(); ++ti) {
            vor.push_back(static_cast<int>(qi));
            pos.push_back(static_cast<int>(ti));
            prev.push_back(ti == 0 ? stop : toks[ti - 1]);
            slots.push_back(m.target_slots(toks[ti], padded_sents));
        }
    }
    auto em = m.emit_states(t, avecs, vor, prev, pos);
    auto lg = m.output_logits(t, em, enc, padded_sents);
    return {t.marginal_cross_entropy(lg, slots), static_cast<int>(slots.size())};
}

}  // namespace

// ---- Spec-level operations ------------------------------------------------

template <class Real>
std::vector<Real> embed_fact(SeqModel<Real>& m, const tasks::Fact& fact) {
    ad::Tape<Real> t;
    auto x = m.embed_sentences(t, {m.pad_tokens(fact.tokens, m.sent_width())});
    const Real* v = t.val(x);
    return std::vector<Real>(v, v + m.config().d_model);
}

template <class Real>
ContextEncoding<Real> encode_context(SeqModel<Real>& m, const Context& ctx) {
    if (ctx.facts.size() < 8 || ctx.facts.size() > 128)
        throw ContractError("encode_context: fact count out of range");
    std::vector<std::vector<Token>> raw;
    raw.reserve(ctx.facts.size());
    for (const auto& f : ctx.facts) raw.push_back(f.tokens);
    return m.run_encoder(ctx.id, raw);
}

template <class Real>
std::vector<std::vector<Real>> decode_questions(SeqModel<Real>& m,
                                                const std::vector<Question>& questions,
                                                const ContextEncoding<Real>& enc) {
    if (questions.empty()) throw ContractError("decode_questions: no questions");
    ad::Tape<Real> t;
    auto e = t.input(enc.sentence_count(), enc.d_model, enc.rows.data());
    std::vector<std::vector<Token>> qpad;
    for (const auto& q : questions) qpad.push_back(m.pad_tokens(q.tokens, 8));
    auto a = m.decode(t, m.embed_queries(t, qpad), e, /*train=*/false);
    std::vector<std::vector<Real>> out(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const Real* v = t.val(a) + i * static_cast<std::size_t>(enc.d_model);
        out[i].assign(v, v + enc.d_model);
    }
    return out;
}

template <class Real>
GenerateResult generate_answer(SeqModel<Real>& m, const ContextEncoding<Real>& enc,
                               const Question& q, bool sample, std::uint64_t seed) {
    return m.generate(enc, q.tokens, m.config().max_answer_len, sample, seed);
}

template <class Real>
double answer_loss(SeqModel<Real>& m, const Context& ctx,
                   const std::vector<Question>& questions,
                   const std::vector<Answer>& answers) {
    std::vector<std::vector<Token>> padded;
    for (const auto& f : ctx.facts) padded.push_back(m.pad_tokens(f.tokens, m.sent_width()));
    ad::Tape<Real> t;
    auto r = build_qa_loss(m, t, padded, questions, answers, /*train=*/false);
    return static_cast<double>(t.val(r.loss)[0]);
}

// ---- NeuralLearner --------------------------------------------------------

namespace {

struct NeuralHandle : learners::ContextHandle {
    explicit NeuralHandle(Context c) : ContextHandle(std::move(c)) {}
    ContextEncoding<float> enc;
};

}  // namespace

NeuralLearner::NeuralLearner(TaskId task, const ModelConfig& cfg, std::uint64_t seed)
    : task_(task) {
    int vocab = cfg.vocab_size > 0 ? cfg.vocab_size : static_cast<int>(tasks::vocab(task).size());
    net_ = std::make_unique<SeqModel<float>>(task, cfg, vocab, /*sent_width=*/8,
                                             /*max_sentences=*/128,
                                             /*sentence_positions=*/false, seed);
}

NeuralLearner::~NeuralLearner() = default;

learners::ContextHandlePtr NeuralLearner::encode_context(const Context& ctx) {
    auto h = std::make_shared<NeuralHandle>(ctx);
    h->enc = model::encode_context(*net_, ctx);
    ++hooks_.encode_calls;
    return h;
}

Answer NeuralLearner::answer(const learners::ContextHandle& h, const Question& q,
                             std::uint64_t seed) {
    auto& nh = const_cast<NeuralHandle&>(static_cast<const NeuralHandle&>(h));
    if (nh.enc.snapshot_id != net_->snapshot_id()) {
        nh.enc = model::encode_context(*net_, nh.ctx);
        ++hooks_.encode_calls;
    }
    return generate_answer(*net_, nh.enc, q, /*sample=*/false, seed).answer;
}

double NeuralLearner::train(const std::vector<learners::TrainExample>& batch) {
    if (batch.empty()) return 0.0;
    // Group by context so each encoding is built once per step.
    std::unordered_map<const learners::ContextHandle*, std::vector<std::size_t>> groups;
    std::vector<const learners::ContextHandle*> order;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto* key = batch[i].ctx.get();
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(i);
    }
    // First pass: token-row counts for cross-group weighting.
    auto row_count = [&](const std::vector<std::size_t>& idx) {
        int rows = 0;
        for (std::size_t i : idx) rows += static_cast<int>(batch[i].a.tokens.size()) + 1;
        return rows;
    };
    int total_rows = 0;
    for (auto* key : order) total_rows += row_count(groups[key]);

    net_->params().zero_grad();
    double loss_sum = 0.0;
    for (auto* key : order) {
        const auto& idx = groups[key];
        std::vector<std::vector<Token>> padded;
        for (const auto& f : key->ctx.facts)
            padded.push_back(net_->pad_tokens(f.tokens, net_->sent_width()));
        std::vector<Question> qs;
        std::vector<Answer> as;
        for (std::size_t i : idx) {
            qs.push_back(batch[i].q);
            as.push_back(batch[i].a);
        }
        ad::Tape<float> t;
        auto r = build_qa_loss(*net_, t, padded, qs, as, /*train=*/true);
        float w = static_cast<float>(r.token_rows) / static_cast<float>(total_rows);
        auto weighted = t.scale(r.loss, w);
        t.backward(weighted);
        loss_sum += static_cast<double>(t.val(weighted)[0]);
    }
    ad::adam_step(net_->params(), adam_, adam_cfg_);
    net_->bump_snapshot();
    ++hooks_.train_steps;
    hooks_.last_loss = loss_sum;
    return loss_sum;
}

void NeuralLearner::polyak_from(const NeuralLearner& online, double horizon) {
    ad::polyak_update(net_->params(), online.net_->params(), horizon);
    // Running statistics track the online network with the same horizon.
    auto& mine = net_->bn_stats();
    const auto& theirs = online.net_->bn_stats();
    double a = 1.0 - 1.0 / horizon;
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (!theirs[i].warm) continue;
        if (!mine[i].warm) {
            mine[i] = theirs[i];
            continue;
        }
        for (std::size_t j = 0; j < mine[i].mean.size(); ++j) {
            mine[i].mean[j] = static_cast<float>(a * mine[i].mean[j] + (1 - a) * theirs[i].mean[j]);
            mine[i].var[j] = static_cast<float>(a * mine[i].var[j] + (1 - a) * theirs[i].var[j]);
        }
    }
    net_->bump_snapshot();
}

void NeuralLearner::copy_params_from(const NeuralLearner& other) {
    auto& dst = net_->params().entries();
    const auto& src = other.net_->params().entries();
    if (dst.size() != src.size()) throw ContractError("copy_params_from: store mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i].v = src[i].v;
    net_->bn_stats() = other.net_->bn_stats();
    net_->bump_snapshot();
}

void NeuralLearner::save_checkpoint(const std::string& path, const ckpt::Meta& meta) {
    ckpt::Meta m = meta;
    const ModelConfig& c = net_->config();
    m["task"] = tasks::task_name(task_);
    m["d_embed"] = std::to_string(c.d_embed);
    m["d_model"] = std::to_string(c.d_model);
    m["encoder_layers"] = std::to_string(c.encoder_layers);
    m["decoder_layers"] = std::to_string(c.decoder_layers);
    m["heads"] = std::to_string(c.heads);
    m["vocab_size"] = std::to_string(net_->vocab_size());
    m["max_answer_len"] = std::to_string(c.max_answer_len);
    ckpt::save(path, net_->params(), &adam_, &net_->bn_stats(), m);
}

ckpt::Meta NeuralLearner::load_checkpoint(const std::string& path) {
    ckpt::Meta m = ckpt::load(path, net_->params(), &adam_, &net_->bn_stats());
    net_->bump_snapshot();
    return m;
}

std::unique_ptr<NeuralLearner> neural_learner(TaskId task, const ModelConfig& cfg,
                                              std::uint64_t seed) {
    return std::make_unique<NeuralLearner>(task, cfg, seed);
}

// ---- Instantiations -------------------------------------------------------

template class SeqModel<float>;
template class SeqModel<double>;

#define AMP_MODEL_INSTANTIATE(Real)                                                          \
    template std::vector<Real> embed_fact(SeqModel<Real>&, const tasks::Fact&);              \
    template ContextEncoding<Real> encode_context(SeqModel<Real>&, const Context&);          \
    template std::vector<std::vector<Real>> decode_questions(                                \
        SeqModel<Real>&, const std::vector<Question>&, const ContextEncoding<Real>&);        \
    template GenerateResult generate_answer(SeqModel<Real>&, const ContextEncoding<Real>&,   \
                                            const Question&, bool, std::uint64_t);           \
    template double answer_loss(SeqModel<Real>&, const Context&,                             \
                                const std::vector<Question>&, const std::vector<Answer>&);

AMP_MODEL_INSTANTIATE(float)
AMP_MODEL_INSTANTIATE(double)

}  // namespace amp::model
