#include "amp/qformat.hpp"

namespace amp::tasks {

namespace {

// Prefix tokens are looked up by name so this file stays independent of the
// vocab layout.
Token tok(TaskId task, const char* name) { return vocab(task).token(name); }

}  // namespace

// ---- Permutation powering -------------------------------------------------

Question make_perm_question(int k, int x) {
    if (k < 1 || k >= 64) throw ContractError("permutation exponent out of range");
    const Vocab& v = vocab(TaskId::PermutationPowering);
    Token zero = tok(TaskId::PermutationPowering, "0");
    Token one = tok(TaskId::PermutationPowering, "1");
    Question q;
    int msb = 0;
    while ((1 << (msb + 1)) <= k) ++msb;
    for (int b = msb; b >= 0; --b) q.tokens.push_back((k >> b) & 1 ? one : zero);
    v.append_element(x, q.tokens);
    q.kind = k == 1 ? QuestionKind::Primitive : QuestionKind::Recursive;
    return q;
}

std::optional<PermQuestion> parse_perm_question(const Question& q) {
    const Vocab& v = vocab(TaskId::PermutationPowering);
    Token zero = tok(TaskId::PermutationPowering, "0");
    Token one = tok(TaskId::PermutationPowering, "1");
    std::size_t i = 0;
    int k = 0;
    while (i < q.tokens.size() && (q.tokens[i] == zero || q.tokens[i] == one)) {
        k = (k << 1) | (q.tokens[i] == one ? 1 : 0);
        ++i;
    }
    if (i == 0 || i > 6 || q.tokens[0] != one) return std::nullopt;  // leading bit must be 1
    if (q.tokens.size() != i + 2) return std::nullopt;
    int x = v.read_element(q.tokens, i);
    if (x == 0) return std::nullopt;
    return PermQuestion{k, x};
}

// ---- Sequential assignments ----------------------------------------------

Question make_value_question(int var) {
    Question q;
    vocab(TaskId::SequentialAssignments).append_element(var, q.tokens);
    q.kind = QuestionKind::Recursive;
    return q;
}

Question make_def_question(int var) {
    Question q;
    q.tokens.push_back(tok(TaskId::SequentialAssignments, "def"));
    vocab(TaskId::SequentialAssignments).append_element(var, q.tokens);
    q.kind = QuestionKind::Primitive;
    return q;
}

Question make_flookup_question(int a, int b) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    Question q;
    q.tokens = {v.int_token(a), v.int_token(b)};
    q.kind = QuestionKind::Primitive;
    return q;
}

std::optional<int> parse_value_question(const Question& q) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    if (q.tokens.size() != 2) return std::nullopt;
    int var = v.read_element(q.tokens, 0);
    if (var == 0) return std::nullopt;
    return var;
}

std::optional<int> parse_def_question(const Question& q) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    if (q.tokens.size() != 3 || q.tokens[0] != tok(TaskId::SequentialAssignments, "def"))
        return std::nullopt;
    int var = v.read_element(q.tokens, 1);
    if (var == 0) return std::nullopt;
    return var;
}

std::optional<std::pair<int, int>> parse_flookup_question(const Question& q) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    if (q.tokens.size() != 2 || !v.is_int(q.tokens[0]) || !v.is_int(q.tokens[1]))
        return std::nullopt;
    return std::make_pair(v.int_value(q.tokens[0]), v.int_value(q.tokens[1]));
}

Answer make_def_answer(const Definition& d) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    Answer a;
    if (d.is_constant) {
        a.tokens.push_back(v.int_token(d.constant));
    } else {
        v.append_element(d.y, a.tokens);
        v.append_element(d.z, a.tokens);
    }
    return a;
}

std::optional<Definition> parse_def_answer(const Answer& a) {
    const Vocab& v = vocab(TaskId::SequentialAssignments);
    if (a.tokens.size() == 1 && v.is_int(a.tokens[0])) {
        Definition d;
        d.is_constant = true;
        d.constant = v.int_value(a.tokens[0]);
        return d;
    }
    if (a.tokens.size() == 4) {
        Definition d;
        d.y = v.read_element(a.tokens, 0);
        d.z = v.read_element(a.tokens, 2);
        if (d.y && d.z) return d;
    }
    return std::nullopt;
}

// ---- Union find -----------------------------------------------------------

namespace {
const char* uf_prefix(UfForm f) {
    switch (f) {
        case UfForm::Label: return "L";
        case UfForm::PathVertex: return "P";
        case UfForm::HowFar: return "F";
    }
    throw ContractError("bad uf form");
}
}  // namespace

Question make_uf_question(UfForm form, int x) {
    Question q;
    q.tokens.push_back(tok(TaskId::UnionFind, uf_prefix(form)));
    vocab(TaskId::UnionFind).append_element(x, q.tokens);
    q.kind = QuestionKind::Recursive;
    return q;
}

Question make_uf_neighbor_question(int x) {
    Question q;
    q.tokens.push_back(tok(TaskId::UnionFind, "RN"));
    vocab(TaskId::UnionFind).append_element(x, q.tokens);
    q.kind = QuestionKind::Primitive;
    return q;
}

Question make_uf_connected_question(int x, int y) {
    Question q;
    q.tokens.push_back(tok(TaskId::UnionFind, "C"));
    vocab(TaskId::UnionFind).append_element(x, q.tokens);
    vocab(TaskId::UnionFind).append_element(y, q.tokens);
    q.kind = QuestionKind::Primitive;
    return q;
}

Question make_uf_labeled_question(int x) {
    Question q;
    q.tokens.push_back(tok(TaskId::UnionFind, "LBL"));
    vocab(TaskId::UnionFind).append_element(x, q.tokens);
    q.kind = QuestionKind::Primitive;
    return q;
}

std::optional<UfQuestion> parse_uf_question(const Question& q) {
    const Vocab& v = vocab(TaskId::UnionFind);
    if (q.tokens.size() != 3) return std::nullopt;
    int x = v.read_element(q.tokens, 1);
    if (x == 0) return std::nullopt;
    for (UfForm f : {UfForm::Label, UfForm::PathVertex, UfForm::HowFar})
        if (q.tokens[0] == tok(TaskId::UnionFind, uf_prefix(f))) return UfQuestion{f, x};
    return std::nullopt;
}

// ---- Wildcard search ------------------------------------------------------

Question make_wc_question(const WcPattern& pattern) {
    const Vocab& v = vocab(TaskId::WildcardSearch);
    Question q;
    bool any_wild = false;
    for (int d : pattern) {
        if (d < 0 || d > kWildcard) throw ContractError("bad wildcard pattern digit");
        any_wild |= d == kWildcard;
        q.tokens.push_back(v.token(d == 0 ? "0" : d == 1 ? "1" : "*"));
    }
    q.kind = any_wild ? QuestionKind::Recursive : QuestionKind::Primitive;
    return q;
}

std::optional<WcPattern> parse_wc_question(const Question& q) {
    const Vocab& v = vocab(TaskId::WildcardSearch);
    if (q.tokens.size() != 6) return std::nullopt;
    WcPattern p{};
    for (int i = 0; i < 6; ++i) {
        Token t = q.tokens[i];
        if (t == v.token("0")) p[i] = 0;
        else if (t == v.token("1")) p[i] = 1;
        else if (t == v.token("*")) p[i] = kWildcard;
        else return std::nullopt;
    }
    return p;
}

int wc_wildcard_count(const WcPattern& p) {
    int c = 0;
    for (int d : p) c += d == kWildcard;
    return c;
}

// ---- Shortest path --------------------------------------------------------

namespace {
Question sp_pair_question(const char* prefix, int x, int y, QuestionKind kind) {
    Question q;
    q.tokens.push_back(tok(TaskId::ShortestPath, prefix));
    vocab(TaskId::ShortestPath).append_element(x, q.tokens);
    vocab(TaskId::ShortestPath).append_element(y, q.tokens);
    q.kind = kind;
    return q;
}
}  // namespace

Question make_sp_dist_question(int x, int y) {
    return sp_pair_question("D", x, y, QuestionKind::Recursive);
}
Question make_sp_first_question(int x, int y) {
    return sp_pair_question("FV", x, y, QuestionKind::Recursive);
}
Question make_sp_edge_question(int x, int y) {
    return sp_pair_question("E", x, y, QuestionKind::Primitive);
}

Question make_sp_neighbor_question(int x) {
    Question q;
    q.tokens.push_back(tok(TaskId::ShortestPath, "RN"));
    vocab(TaskId::ShortestPath).append_element(x, q.tokens);
    q.kind = QuestionKind::Primitive;
    return q;
}

std::optional<SpQuestion> parse_sp_question(const Question& q) {
    const Vocab& v = vocab(TaskId::ShortestPath);
    if (q.tokens.size() != 5) return std::nullopt;
    int x = v.read_element(q.tokens, 1);
    int y = v.read_element(q.tokens, 3);
    if (x == 0 || y == 0) return std::nullopt;
    if (q.tokens[0] == tok(TaskId::ShortestPath, "D")) return SpQuestion{SpForm::Distance, x, y};
    if (q.tokens[0] == tok(TaskId::ShortestPath, "FV"))
        return SpQuestion{SpForm::FirstVertex, x, y};
    return std::nullopt;
}

// ---- Answers --------------------------------------------------------------

Answer make_element_answer(TaskId task, int v) {
    Answer a;
    vocab(task).append_element(v, a.tokens);
    return a;
}

Answer make_int_answer(TaskId task, int v) { return Answer{{vocab(task).int_token(v)}}; }

Answer make_yes_answer(TaskId task) { return Answer{{vocab(task).token("yes")}}; }
Answer make_no_answer(TaskId task) { return Answer{{vocab(task).token("no")}}; }

std::optional<int> parse_element_answer(TaskId task, const Answer& a) {
    if (a.tokens.size() != 2) return std::nullopt;
    int v = vocab(task).read_element(a.tokens, 0);
    if (v == 0) return std::nullopt;
    return v;
}

std::optional<int> parse_int_answer(TaskId task, const Answer& a) {
    const Vocab& v = vocab(task);
    if (a.tokens.size() != 1 || !v.is_int(a.tokens[0])) return std::nullopt;
    return v.int_value(a.tokens[0]);
}

std::optional<bool> parse_yes_no_answer(TaskId task, const Answer& a) {
    if (a.tokens.size() != 1) return std::nullopt;
    if (a.tokens[0] == vocab(task).token("yes")) return true;
    if (a.tokens[0] == vocab(task).token("no")) return false;
    return std::nullopt;
}

}  // namespace amp::tasks
