#include "amp/hprime.hpp"

#include <cstring>

namespace amp::hprime {

namespace {

constexpr int kItemWidth = 13;  // question 8 + answer 4 + kind slot
constexpr int kMaxItems = 66;   // root + episode guard + margin
constexpr int kDecisionLen = 9; // marker + question payload

int task_vocab_size(TaskId task) { return static_cast<int>(tasks::vocab(task).size()); }

}  // namespace

Token primitive_marker(TaskId task) { return static_cast<Token>(task_vocab_size(task)); }
Token final_marker(TaskId task) { return static_cast<Token>(task_vocab_size(task) + 1); }
int hprime_vocab_size(TaskId task) { return task_vocab_size(task) + 2; }

std::vector<Token> encode_decision(TaskId task, const ExpertDecision& d) {
    std::vector<Token> out;
    if (const auto* f = std::get_if<decompose::Final>(&d)) {
        out.push_back(final_marker(task));
        out.insert(out.end(), f->a.tokens.begin(), f->a.tokens.end());
    } else if (const auto* p = std::get_if<decompose::AskPrimitive>(&d)) {
        out.push_back(primitive_marker(task));
        out.insert(out.end(), p->q.tokens.begin(), p->q.tokens.end());
    } else {
        const auto& s = std::get<decompose::AskSub>(d);
        out.insert(out.end(), s.q.tokens.begin(), s.q.tokens.end());
    }
    return out;
}

std::optional<ExpertDecision> decode_decision(TaskId task, const std::vector<Token>& toks) {
    if (toks.empty()) return std::nullopt;
    int V = task_vocab_size(task);
    auto payload_ok = [&](std::size_t from, std::size_t max_len) {
        if (toks.size() <= from || toks.size() - from > max_len) return false;
        for (std::size_t i = from; i < toks.size(); ++i)
            if (toks[i] >= V) return false;
        return true;
    };
    if (toks[0] == final_marker(task)) {
        if (!payload_ok(1, 4)) return std::nullopt;
        return ExpertDecision{decompose::Final{
            tasks::Answer{{toks.begin() + 1, toks.end()}}}};
    }
    if (toks[0] == primitive_marker(task)) {
        if (!payload_ok(1, 8)) return std::nullopt;
        tasks::Question q{{toks.begin() + 1, toks.end()}, tasks::QuestionKind::Primitive};
        return ExpertDecision{decompose::AskPrimitive{std::move(q)}};
    }
    if (!payload_ok(0, 8)) return std::nullopt;
    tasks::Question q{toks, tasks::QuestionKind::Recursive};
    return ExpertDecision{decompose::AskSub{std::move(q)}};
}

std::vector<std::vector<Token>> transcript_items(
    TaskId task, const Question& root, const std::vector<decompose::EpisodeStep>& steps) {
    Token pad = tasks::vocab(task).pad();
    std::vector<std::vector<Token>> items;
    items.reserve(steps.size() + 1);
    std::vector<Token> r = root.tokens;
    if (r.size() > kItemWidth) throw ContractError("transcript_items: root too long");
    r.resize(kItemWidth, pad);
    items.push_back(std::move(r));
    for (const auto& s : steps) {
        if (s.q.tokens.size() > 8 || s.a.tokens.size() > 4)
            throw ContractError("transcript_items: oversized pair");
        std::vector<Token> it(kItemWidth, pad);
        std::copy(s.q.tokens.begin(), s.q.tokens.end(), it.begin());
        std::copy(s.a.tokens.begin(), s.a.tokens.end(), it.begin() + 8);
        if (s.primitive) it[12] = primitive_marker(task);
        items.push_back(std::move(it));
    }
    return items;
}

// ---- HPrimePredictor ------------------------------------------------------

HPrimePredictor::HPrimePredictor(TaskId task, const model::ModelConfig& cfg, std::uint64_t seed)
    : task_(task) {
    model::ModelConfig c = cfg;
    c.vocab_size = hprime_vocab_size(task);
    if (c.max_answer_len < kDecisionLen) c.max_answer_len = kDecisionLen;
    net_ = std::make_unique<model::SeqModel<float>>(task, c, c.vocab_size, kItemWidth, kMaxItems,
                                                    /*sentence_positions=*/true, seed);
    // Decision points arrive one at a time; batch statistics over one or two
    // transcript items are meaningless, so normalization stays frozen.
    net_->set_frozen_bn(true);
}

HPrimePredictor::~HPrimePredictor() = default;

ExpertDecision HPrimePredictor::next(const EpisodeState& state, Rng& rng) {
    (void)rng;  // greedy: the predictor is deterministic given its parameters
    auto items = transcript_items(task_, state.root, state.steps);
    auto enc = net_->run_encoder(0, items);
    auto res = net_->generate(enc, state.root.tokens, net_->config().max_answer_len,
                              /*sample=*/false, /*seed=*/0);
    auto d = decode_decision(task_, res.answer.tokens);
    if (d) return *d;
    return decompose::Final{tasks::unknown_answer(task_)};
}

namespace {

struct DecisionPoint {
    std::vector<std::vector<Token>> items;
    Question root;
    std::vector<Token> target;
};

std::vector<DecisionPoint> decision_points(TaskId task, const std::vector<Transcript>& ts) {
    std::vector<DecisionPoint> out;
    for (const auto& t : ts) {
        std::vector<decompose::EpisodeStep> prefix;
        for (std::size_t i = 0; i <= t.pairs.size(); ++i) {
            DecisionPoint p;
            p.items = transcript_items(task, t.root, prefix);
            p.root = t.root;
            if (i < t.pairs.size()) {
                const auto& pr = t.pairs[i];
                ExpertDecision d = pr.primitive
                                       ? ExpertDecision{decompose::AskPrimitive{pr.q}}
                                       : ExpertDecision{decompose::AskSub{pr.q}};
                p.target = encode_decision(task, d);
                prefix.push_back({pr.q, pr.a, pr.primitive});
            } else {
                p.target = encode_decision(task, ExpertDecision{decompose::Final{t.final}});
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace

double HPrimePredictor::train_step(const std::vector<Transcript>& transcripts) {
    auto points = decision_points(task_, transcripts);
    if (points.empty()) return 0.0;
    Token stop = net_->pad_tokens({}, 1)[0];
    int total_rows = 0;
    for (const auto& p : points) total_rows += static_cast<int>(p.target.size()) + 1;

    net_->params().zero_grad();
    double loss = 0.0;
    for (const auto& p : points) {
        ad::Tape<float> t;
        auto enc = net_->encode(t, net_->embed_sentences(t, p.items), /*train=*/true);
        auto av = net_->decode(t, net_->embed_queries(t, {net_->pad_tokens(p.root.tokens, 8)}),
                               enc, /*train=*/true);
        std::vector<Token> toks = p.target;
        toks.push_back(stop);
        std::vector<int> vor, pos;
        std::vector<Token> prev;
        std::vector<std::vector<int>> slots;
        for (std::size_t ti = 0; ti < toks.size(); ++ti) {
            vor.push_back(0);
            pos.push_back(static_cast<int>(ti));
            prev.push_back(ti == 0 ? stop : toks[ti - 1]);
            slots.push_back(net_->target_slots(toks[ti], p.items));
        }
        auto lg = net_->output_logits(t, net_->emit_states(t, av, vor, prev, pos), enc, p.items);
        auto ce = t.marginal_cross_entropy(lg, slots);
        auto w = t.scale(ce, static_cast<float>(toks.size()) / total_rows);
        t.backward(w);
        loss += static_cast<double>(t.val(w)[0]);
    }
    ad::adam_step(net_->params(), adam_, adam_cfg_);
    net_->bump_snapshot();
    ++steps_;
    return loss;
}

double HPrimePredictor::decision_accuracy(const std::vector<Transcript>& transcripts) {
    auto points = decision_points(task_, transcripts);
    if (points.empty()) return 0.0;
    int hit = 0;
    for (const auto& p : points) {
        auto enc = net_->run_encoder(0, p.items);
        auto res = net_->generate(enc, p.root.tokens, net_->config().max_answer_len, false, 0);
        hit += !res.truncated && res.answer.tokens == p.target;
    }
    return static_cast<double>(hit) / points.size();
}

void HPrimePredictor::save_checkpoint(const std::string& path, const ckpt::Meta& meta) {
    ckpt::Meta m = meta;
    m["task"] = tasks::task_name(task_);
    m["kind"] = "hprime";
    m["vocab_size"] = std::to_string(net_->vocab_size());
    ckpt::save(path, net_->params(), &adam_, &net_->bn_stats(), m);
}

ckpt::Meta HPrimePredictor::load_checkpoint(const std::string& path) {
    ckpt::Meta m = ckpt::load(path, net_->params(), &adam_, &net_->bn_stats());
    net_->bump_snapshot();
    return m;
}

std::unique_ptr<HPrimePredictor> hprime_predictor(TaskId task, const model::ModelConfig& cfg,
                                                  std::uint64_t seed) {
    return std::make_unique<HPrimePredictor>(task, cfg, seed);
}

}  // namespace amp::hprime
