#include "amp/decompose.hpp"

#include <algorithm>

namespace amp::decompose {

using namespace amp::tasks;

namespace {

constexpr int kUnknownDist = 1 << 20;

// Linear script over the recorded steps.  `ask` either consumes the next
// recorded (question, answer) pair or aborts the replay by emitting the
// decision that produces it.
struct Emit {
    ExpertDecision decision;
};

class Script {
  public:
    Script(const EpisodeState& st, Rng& rng) : st_(st), rng_(rng) {}

    Answer ask(const Question& q) {
        if (i_ < st_.steps.size()) return st_.steps[i_++].a;
        if (q.kind == QuestionKind::Primitive) throw Emit{AskPrimitive{q}};
        throw Emit{AskSub{q}};
    }

    // Random two-way branch; inferred from the record when replaying.
    // `true` selects the X-directed alternative.
    bool branch_to_x() {
        if (i_ < st_.steps.size()) return !st_.steps[i_].primitive;
        return rng_.next_bool();
    }

    ExpertDecision final(Answer a) {
        if (i_ != st_.steps.size())
            throw ContractError("episode state has unconsumed steps");
        if (a.tokens.empty()) a = unknown_answer(st_.task);
        return Final{std::move(a)};
    }

    ExpertDecision final_unknown() { return final(unknown_answer(st_.task)); }

  private:
    const EpisodeState& st_;
    Rng& rng_;
    std::size_t i_ = 0;
};

// ---- Permutation powering -------------------------------------------------
// sigma^{2k}(x) = sigma^k(sigma^k(x)); odd exponents append one primitive
// sigma lookup.

ExpertDecision run_perm(const EpisodeState& st, Script& s) {
    auto root = parse_perm_question(st.root);
    if (!root || root->k < 2) return s.final_unknown();
    int half = root->k / 2;
    auto y = parse_element_answer(st.task, s.ask(make_perm_question(half, root->x)));
    if (!y) return s.final_unknown();
    auto z = parse_element_answer(st.task, s.ask(make_perm_question(half, *y)));
    if (!z) return s.final_unknown();
    if (root->k % 2 == 0) return s.final(make_element_answer(st.task, *z));
    auto w = parse_element_answer(st.task, s.ask(make_perm_question(1, *z)));
    if (!w) return s.final_unknown();
    return s.final(make_element_answer(st.task, *w));
}

// ---- Sequential assignments ----------------------------------------------

ExpertDecision run_seq(const EpisodeState& st, Script& s) {
    auto var = parse_value_question(st.root);
    if (!var) return s.final_unknown();
    auto def = parse_def_answer(s.ask(make_def_question(*var)));
    if (!def) return s.final_unknown();
    if (def->is_constant) return s.final(make_int_answer(st.task, def->constant));
    auto vy = parse_int_answer(st.task, s.ask(make_value_question(def->y)));
    auto vz = parse_int_answer(st.task, s.ask(make_value_question(def->z)));
    if (!vy || !vz || *vy < 1 || *vy > 8 || *vz < 1 || *vz > 8) return s.final_unknown();
    auto r = parse_int_answer(st.task, s.ask(make_flookup_question(*vy, *vz)));
    if (!r) return s.final_unknown();
    return s.final(make_int_answer(st.task, *r));
}

// ---- Wildcard search ------------------------------------------------------

ExpertDecision run_wc(const EpisodeState& st, Script& s) {
    auto pat = parse_wc_question(st.root);
    if (!pat || wc_wildcard_count(*pat) == 0) return s.final_unknown();
    WcPattern p0 = *pat, p1 = *pat;
    for (int i = 0; i < 6; ++i)
        if ((*pat)[i] == kWildcard) {
            p0[i] = 0;
            p1[i] = 1;
            break;
        }
    auto a0 = parse_int_answer(st.task, s.ask(make_wc_question(p0)));
    auto a1 = parse_int_answer(st.task, s.ask(make_wc_question(p1)));
    if (!a0 || !a1) return s.final_unknown();
    int sum = *a0 + *a1;
    if (sum < -64 || sum > 64) return s.final_unknown();
    return s.final(make_int_answer(st.task, sum));
}

// ---- Union find -----------------------------------------------------------

ExpertDecision run_uf(const EpisodeState& st, Script& s) {
    auto root = parse_uf_question(st.root);
    if (!root) return s.final_unknown();
    int x = root->x;

    if (root->form == UfForm::Label) {
        Answer lbl = s.ask(make_uf_labeled_question(x));
        if (auto l = parse_int_answer(st.task, lbl)) return s.final(make_int_answer(st.task, *l));
        auto y = parse_element_answer(st.task, s.ask(make_uf_question(UfForm::PathVertex, x)));
        if (!y) return s.final_unknown();
        auto conn = parse_yes_no_answer(st.task, s.ask(make_uf_connected_question(x, *y)));
        if (!conn || !*conn) return s.final_unknown();
        auto l = parse_int_answer(st.task, s.ask(make_uf_question(UfForm::Label, *y)));
        if (!l || *l < 1 || *l > 8) return s.final_unknown();
        return s.final(make_int_answer(st.task, *l));
    }

    if (root->form == UfForm::HowFar) {
        Answer lbl = s.ask(make_uf_labeled_question(x));
        if (parse_int_answer(st.task, lbl)) return s.final(make_int_answer(st.task, 0));
        auto z = parse_element_answer(st.task, s.ask(make_uf_question(UfForm::PathVertex, x)));
        if (!z || *z == x) return s.final_unknown();
        auto conn = parse_yes_no_answer(st.task, s.ask(make_uf_connected_question(x, *z)));
        if (!conn || !*conn) return s.final_unknown();
        auto d = parse_int_answer(st.task, s.ask(make_uf_question(UfForm::HowFar, *z)));
        if (!d || *d < 0 || *d >= 63) return s.final_unknown();
        return s.final(make_int_answer(st.task, *d + 1));
    }

    // PathVertex: candidate from X, second candidate from X or from the
    // random-neighbor primitive, validated by connectivity, compared by
    // how-far answers.
    Answer az = s.ask(make_uf_question(UfForm::PathVertex, x));
    auto z = parse_element_answer(st.task, az);
    Answer aw;
    bool w_from_x = s.branch_to_x();
    if (w_from_x) aw = s.ask(make_uf_question(UfForm::PathVertex, x));
    else aw = s.ask(make_uf_neighbor_question(x));
    auto w = parse_element_answer(st.task, aw);

    auto validate = [&](std::optional<int> c) -> bool {
        if (!c || *c == x) return false;
        auto conn = parse_yes_no_answer(st.task, s.ask(make_uf_connected_question(x, *c)));
        return conn && *conn;
    };
    bool zok = validate(z);
    bool wok = w_from_x ? validate(w) : w.has_value();  // a returned neighbor is connected
    if (!zok && !wok) {
        if (is_unknown(st.task, az) && is_unknown(st.task, aw)) return s.final_unknown();
        auto r = parse_element_answer(st.task, s.ask(make_uf_neighbor_question(x)));
        return r ? s.final(make_element_answer(st.task, *r)) : s.final_unknown();
    }
    if (zok != wok) {
        int c = zok ? *z : *w;
        return s.final(make_element_answer(st.task, c));
    }
    if (*z == *w) return s.final(make_element_answer(st.task, *z));
    auto dist_of = [&](int c) {
        auto d = parse_int_answer(st.task, s.ask(make_uf_question(UfForm::HowFar, c)));
        return d && *d >= 0 ? *d : kUnknownDist;
    };
    int dz = dist_of(*z);
    int dw = dist_of(*w);
    if (dz >= kUnknownDist && dw >= kUnknownDist) return s.final_unknown();
    return s.final(make_element_answer(st.task, dz <= dw ? *z : *w));
}

// ---- Shortest path --------------------------------------------------------
// Full procedure: adjacency short-circuit, the self-referential first-vertex
// subquestion, the random-choice branch, adjacency validation, and distance
// comparison.

ExpertDecision run_sp(const EpisodeState& st, Script& s) {
    auto root = parse_sp_question(st.root);
    if (!root) return s.final_unknown();
    int x = root->x, y = root->y;

    if (root->form == SpForm::Distance) {
        auto adj = parse_yes_no_answer(st.task, s.ask(make_sp_edge_question(x, y)));
        if (adj && *adj) return s.final(make_int_answer(st.task, 1));
        auto z = parse_element_answer(st.task, s.ask(make_sp_first_question(x, y)));
        if (!z) return s.final_unknown();
        auto zadj = parse_yes_no_answer(st.task, s.ask(make_sp_edge_question(x, *z)));
        if (!zadj || !*zadj) return s.final_unknown();
        auto d = parse_int_answer(st.task, s.ask(make_sp_dist_question(*z, y)));
        if (!d || *d < 1 || *d >= 64) return s.final_unknown();
        return s.final(make_int_answer(st.task, *d + 1));
    }

    Answer az = s.ask(make_sp_first_question(x, y));
    auto z = parse_element_answer(st.task, az);
    Answer aw;
    bool w_from_x = s.branch_to_x();
    if (w_from_x) aw = s.ask(make_sp_first_question(x, y));
    else aw = s.ask(make_sp_neighbor_question(x));
    auto w = parse_element_answer(st.task, aw);

    auto adjacent = [&](std::optional<int> c) -> bool {
        if (!c) return false;
        auto adj = parse_yes_no_answer(st.task, s.ask(make_sp_edge_question(x, *c)));
        return adj && *adj;
    };
    bool zadj = adjacent(z);
    bool wadj = adjacent(w);
    if (!zadj && !wadj) {
        if (is_unknown(st.task, az) && is_unknown(st.task, aw)) return s.final_unknown();
        auto r = parse_element_answer(st.task, s.ask(make_sp_neighbor_question(x)));
        return r ? s.final(make_element_answer(st.task, *r)) : s.final_unknown();
    }
    if (zadj != wadj) {
        return s.final(make_element_answer(st.task, zadj ? *z : *w));
    }
    if (*z == *w) return s.final(make_element_answer(st.task, *z));
    auto dist_of = [&](int c) {
        auto d = parse_int_answer(st.task, s.ask(make_sp_dist_question(c, y)));
        return d && *d >= 1 ? *d : kUnknownDist;
    };
    int dz = dist_of(*z);
    int dw = dist_of(*w);
    if (dz >= kUnknownDist && dw >= kUnknownDist) return s.final_unknown();
    return s.final(make_element_answer(st.task, dz <= dw ? *z : *w));
}

}  // namespace

int k_max(TaskId task) {
    switch (task) {
        case TaskId::PermutationPowering: return 2;
        case TaskId::SequentialAssignments: return 2;
        case TaskId::WildcardSearch: return 2;
        case TaskId::UnionFind: return 4;
        case TaskId::ShortestPath: return 4;
    }
    throw ContractError("bad task");
}

ExpertDecision expert_step(const EpisodeState& state, Rng& rng) {
    if (state.sub_count() > k_max(state.task))
        throw ContractError("episode exceeded the per-task subquestion bound");
    Script script(state, rng);
    try {
        switch (state.task) {
            case TaskId::PermutationPowering: return run_perm(state, script);
            case TaskId::SequentialAssignments: return run_seq(state, script);
            case TaskId::WildcardSearch: return run_wc(state, script);
            case TaskId::UnionFind: return run_uf(state, script);
            case TaskId::ShortestPath: return run_sp(state, script);
        }
        throw ContractError("bad task");
    } catch (Emit& e) {
        return std::move(e.decision);
    }
}

}  // namespace amp::decompose
