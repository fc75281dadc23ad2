#include "amp/amplify.hpp"

#include <nlohmann/json.hpp>

namespace amp::amplify {

using namespace amp::tasks;
using json = nlohmann::json;

namespace {

// Malformed X output (empty or out-of-vocabulary) is coerced to "?" before
// the expert sees it; the transcript keeps the flag.
Answer sanitize(TaskId task, Answer a, bool* coerced) {
    *coerced = a.tokens.empty() || !in_vocabulary(task, a.tokens);
    if (*coerced) return unknown_answer(task);
    return a;
}

}  // namespace

EpisodeResult amplify_answer(DecisionSource& expert, Learner& x, const ContextHandlePtr& ctx,
                             const Question& q, Rng& rng, OracleLedger* ledger) {
    if (q.kind != QuestionKind::Recursive)
        throw ContractError("amplify_answer expects a recursive question");
    TaskId task = ctx->ctx.task;
    EpisodeState state{task, q, {}};
    Transcript t;
    t.task = task;
    t.context_id = ctx->ctx.id;
    t.root = q;
    t.depth = question_depth(task, ctx->ctx, q);
    Rng expert_rng = rng.split(0x48);
    Rng primitive_rng = rng.split(0x50);
    Rng x_seed_rng = rng.split(0x58);
    int max_subs = decompose::k_max(task);
    for (;;) {
        ExpertDecision d = expert.next(state, expert_rng);
        if (ledger) {
            auto& c = (*ledger)[task];
            (expert.is_coded() ? c.coded_h : c.hprime) += 1;
        }
        if (auto* fin = std::get_if<decompose::Final>(&d)) {
            t.final = fin->a;
            if (t.final.tokens.empty()) t.final = unknown_answer(task);
            return EpisodeResult{t.final, std::move(t)};
        }
        if (auto* sub = std::get_if<decompose::AskSub>(&d)) {
            if (state.sub_count() >= max_subs)
                throw ContractError("expert exceeded k_max subquestions");
            if (ledger) (*ledger)[task].x += 1;
            bool coerced = false;
            Answer a = sanitize(task, x.answer(*ctx, sub->q, x_seed_rng.next_u64()), &coerced);
            state.steps.push_back({sub->q, a, false});
            t.pairs.push_back({sub->q, a, false, coerced});
        } else {
            auto& prim = std::get<decompose::AskPrimitive>(d);
            Answer a = answer_primitive(task, ctx->ctx, prim.q, primitive_rng);
            state.steps.push_back({prim.q, a, true});
            t.pairs.push_back({prim.q, a, true, false});
        }
    }
}

EpisodeResult amplify_answer(DecisionSource& expert, Learner& x, const Context& ctx,
                             const Question& q, Rng& rng, OracleLedger* ledger) {
    ContextHandlePtr h = x.encode_context(ctx);
    return amplify_answer(expert, x, h, q, rng, ledger);
}

std::vector<EpisodeResult> batch_amplify(DecisionSource& expert, Learner& x, const Context& ctx,
                                         const std::vector<Question>& questions, Rng& rng,
                                         OracleLedger* ledger) {
    std::vector<EpisodeResult> out;
    if (questions.empty()) return out;
    ContextHandlePtr h = x.encode_context(ctx);  // shared across all episodes
    out.reserve(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
        Rng episode_rng = rng.split(i);
        out.push_back(amplify_answer(expert, x, h, questions[i], episode_rng, ledger));
    }
    return out;
}

std::string transcript_to_line(const Transcript& t) {
    json j;
    j["task"] = task_name(t.task);
    j["ctx"] = t.context_id;
    j["root"] = t.root.tokens;
    j["depth"] = t.depth;
    json pairs = json::array();
    for (const TranscriptPair& p : t.pairs)
        pairs.push_back({p.q.tokens, p.a.tokens, p.primitive, p.coerced});
    j["pairs"] = std::move(pairs);
    j["final"] = t.final.tokens;
    return j.dump();
}

Transcript transcript_from_line(const std::string& line) {
    json j = json::parse(line);
    Transcript t;
    t.task = task_from_name(j.at("task").get<std::string>());
    t.context_id = j.at("ctx").get<std::uint64_t>();
    t.root.tokens = j.at("root").get<std::vector<Token>>();
    t.root.kind = QuestionKind::Recursive;
    t.depth = j.at("depth").get<int>();
    for (const json& p : j.at("pairs")) {
        TranscriptPair tp;
        tp.q.tokens = p.at(0).get<std::vector<Token>>();
        tp.a.tokens = p.at(1).get<std::vector<Token>>();
        tp.primitive = p.at(2).get<bool>();
        tp.q.kind = tp.primitive ? QuestionKind::Primitive : QuestionKind::Recursive;
        tp.coerced = p.at(3).get<bool>();
        t.pairs.push_back(std::move(tp));
    }
    t.final.tokens = j.at("final").get<std::vector<Token>>();
    return t;
}

}  // namespace amp::amplify
