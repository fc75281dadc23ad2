#include "amp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

namespace amp::tasks {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

int isqrt_exact(int n) {
    int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

std::uint64_t fnv1a(const Context& ctx) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(ctx.task));
    mix(static_cast<std::uint64_t>(ctx.n));
    for (const Fact& f : ctx.facts) {
        mix(0xffULL);
        for (Token t : f.tokens) mix(t);
    }
    return h;
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.next_below(i)]);
}

// ---- Decoded context views ------------------------------------------------

struct PermView {
    int n;
    std::vector<int> sigma;  // 1-indexed
};

PermView decode_perm(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    PermView p{ctx.n, std::vector<int>(ctx.n + 1, 0)};
    for (const Fact& f : ctx.facts) {
        if (f.tokens.size() != 4) throw ContractError("malformed permutation fact");
        int x = v.read_element(f.tokens, 0), y = v.read_element(f.tokens, 2);
        if (x < 1 || x > ctx.n || y < 1 || y > ctx.n || p.sigma[x] != 0)
            throw ContractError("malformed permutation fact");
        p.sigma[x] = y;
    }
    return p;
}

struct SeqView {
    int n;
    int f[9][9] = {};                // 1-indexed function table
    std::vector<Definition> defs;    // 1-indexed by variable
    std::vector<bool> defined;
};

SeqView decode_seq(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    SeqView s;
    s.n = ctx.n;
    s.defs.resize(ctx.n + 1);
    s.defined.assign(ctx.n + 1, false);
    for (const Fact& f : ctx.facts) {
        if (f.tokens.size() == 3 && v.is_int(f.tokens[0])) {
            int a = v.int_value(f.tokens[0]), b = v.int_value(f.tokens[1]),
                c = v.int_value(f.tokens[2]);
            s.f[a][b] = c;
        } else if (f.tokens.size() == 3) {
            int x = v.read_element(f.tokens, 0);
            if (x < 1 || x > ctx.n || !v.is_int(f.tokens[2]) || s.defined[x])
                throw ContractError("malformed assignment fact");
            s.defs[x] = Definition{true, v.int_value(f.tokens[2]), 0, 0};
            s.defined[x] = true;
        } else if (f.tokens.size() == 6) {
            int x = v.read_element(f.tokens, 0), y = v.read_element(f.tokens, 2),
                z = v.read_element(f.tokens, 4);
            if (x < 1 || x > ctx.n || y < 1 || z < 1 || s.defined[x])
                throw ContractError("malformed assignment fact");
            s.defs[x] = Definition{false, 0, y, z};
            s.defined[x] = true;
        } else {
            throw ContractError("malformed assignment fact");
        }
    }
    return s;
}

struct UfView {
    int n;
    std::vector<std::vector<int>> adj;  // 1-indexed, sorted
    std::vector<int> label;             // 0 = unlabeled
};

UfView decode_uf(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    UfView u{ctx.n, std::vector<std::vector<int>>(ctx.n + 1), std::vector<int>(ctx.n + 1, 0)};
    for (const Fact& f : ctx.facts) {
        if (f.tokens.size() == 4) {
            int x = v.read_element(f.tokens, 0), y = v.read_element(f.tokens, 2);
            if (x < 1 || x > ctx.n || y < 1 || y > ctx.n) throw ContractError("bad forest edge");
            u.adj[x].push_back(y);
            u.adj[y].push_back(x);
        } else if (f.tokens.size() == 3) {
            int x = v.read_element(f.tokens, 0);
            if (x < 1 || x > ctx.n || !v.is_int(f.tokens[2]))
                throw ContractError("bad label fact");
            u.label[x] = v.int_value(f.tokens[2]);
        } else {
            throw ContractError("malformed union-find fact");
        }
    }
    for (auto& a : u.adj) std::sort(a.begin(), a.end());
    return u;
}

struct WcView {
    int values[64] = {};  // f over {0,1}^6, bitstring read MSB first
};

WcView decode_wc(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    Token one = v.token("1"), zero = v.token("0");
    WcView w;
    for (const Fact& f : ctx.facts) {
        if (f.tokens.size() != 7) throw ContractError("malformed wildcard fact");
        int idx = 0;
        for (int i = 0; i < 6; ++i) {
            if (f.tokens[i] != one && f.tokens[i] != zero)
                throw ContractError("malformed wildcard fact");
            idx = (idx << 1) | (f.tokens[i] == one ? 1 : 0);
        }
        w.values[idx] = v.int_value(f.tokens[6]);
    }
    return w;
}

struct SpView {
    int n;
    std::vector<std::vector<int>> out;  // sorted out-neighbors, 1-indexed
    bool edge(int x, int y) const {
        return std::binary_search(out[x].begin(), out[x].end(), y);
    }
};

SpView decode_sp(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    SpView g{ctx.n, std::vector<std::vector<int>>(ctx.n + 1)};
    for (const Fact& f : ctx.facts) {
        if (f.tokens.size() != 4) throw ContractError("malformed edge fact");
        int x = v.read_element(f.tokens, 0), y = v.read_element(f.tokens, 2);
        if (x < 1 || x > ctx.n || y < 1 || y > ctx.n) throw ContractError("bad edge");
        g.out[x].push_back(y);
    }
    for (auto& a : g.out) std::sort(a.begin(), a.end());
    return g;
}

// ---- Shared graph helpers -------------------------------------------------

// Plain BFS distance (dist(x, x) = 0 here; the cycle convention for
// self-distance questions is layered on top).
std::vector<int> bfs_from(const SpView& g, int src) {
    std::vector<int> d(g.n + 1, kInf);
    std::deque<int> q{src};
    d[src] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int w : g.out[u])
            if (d[w] == kInf) {
                d[w] = d[u] + 1;
                q.push_back(w);
            }
    }
    return d;
}

// Distance-question semantics: dist(x, x) is the length of the shortest
// cycle containing x; kInf when unreachable.
int sp_question_distance(const SpView& g, int x, int y) {
    if (x != y) return bfs_from(g, x)[y];
    int best = kInf;
    for (int z : g.out[x]) {
        int d = bfs_from(g, z)[x];
        if (d < kInf) best = std::min(best, d + 1);
    }
    return best;
}

// Canonical "first vertex on the path from x to y": the out-neighbor z
// minimizing the distance-question value from z to y (ties to the smallest
// vertex).  This matches the answer the comparison-based decomposition
// settles on, including the self-distance convention when z == y.
int sp_canonical_first(const SpView& g, int x, int y) {
    int best = 0, best_d = kInf;
    for (int z : g.out[x]) {
        int d = sp_question_distance(g, z, y);
        if (d < best_d) best_d = d, best = z;
    }
    return best_d >= kInf ? 0 : best;
}

struct UfPaths {
    std::vector<int> dist;  // to the component's labeled vertex
    std::vector<int> next;  // next hop toward it (0 at the labeled vertex)
};

// BFS outward from every labeled vertex; in a forest this labels each
// component exactly once.
UfPaths uf_paths(const UfView& u) {
    UfPaths p{std::vector<int>(u.n + 1, kInf), std::vector<int>(u.n + 1, 0)};
    std::deque<int> q;
    for (int v = 1; v <= u.n; ++v)
        if (u.label[v]) {
            p.dist[v] = 0;
            q.push_back(v);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int w : u.adj[v])
            if (p.dist[w] == kInf) {
                p.dist[w] = p.dist[v] + 1;
                p.next[w] = v;
                q.push_back(w);
            }
    }
    return p;
}

int uf_component_label(const UfView& u, int x) {
    // walk to the labeled vertex
    UfPaths p = uf_paths(u);
    int v = x;
    while (v != 0 && p.dist[v] > 0) v = p.next[v];
    return v == 0 || p.dist[v] == kInf ? 0 : u.label[v];
}

}  // namespace

// ---- Sizes ----------------------------------------------------------------

bool valid_size(TaskId task, int n) {
    if (n < kMinSize || n > kMaxSize) return false;
    if (task == TaskId::UnionFind) return isqrt_exact(n) != 0;
    return true;
}

int round_size_for_task(TaskId task, int n) {
    n = std::clamp(n, kMinSize, kMaxSize);
    if (task != TaskId::UnionFind) return n;
    static constexpr int squares[] = {9, 16, 25, 36, 49, 64};
    int best = squares[0];
    for (int s : squares)
        if (std::abs(s - n) < std::abs(best - n)) best = s;
    return best;
}

// ---- Context generation ---------------------------------------------------

namespace {

Context gen_perm(int n, Rng& rng) {
    Context ctx{TaskId::PermutationPowering, n, {}, 0};
    const Vocab& v = vocab(ctx.task);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 1);
    shuffle(perm, rng);
    for (int x = 1; x <= n; ++x) {
        Fact f;
        v.append_element(x, f.tokens);
        v.append_element(perm[x - 1], f.tokens);
        ctx.facts.push_back(std::move(f));
    }
    shuffle(ctx.facts, rng);
    return ctx;
}

Context gen_seq(int n, Rng& rng) {
    Context ctx{TaskId::SequentialAssignments, n, {}, 0};
    const Vocab& v = vocab(ctx.task);
    for (int a = 1; a <= 8; ++a)
        for (int b = 1; b <= 8; ++b) {
            Fact f;
            f.tokens = {v.int_token(a), v.int_token(b), v.int_token(rng.next_int(1, 8))};
            ctx.facts.push_back(std::move(f));
        }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 1);
    shuffle(order, rng);
    int roots = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
    for (int i = 0; i < n; ++i) {
        int x = order[i];
        Fact f;
        v.append_element(x, f.tokens);
        if (i < roots) {
            f.tokens.push_back(v.int_token(rng.next_int(1, 8)));
        } else {
            int y = order[rng.next_below(i)];
            int z = order[rng.next_below(i)];
            v.append_element(y, f.tokens);
            v.append_element(z, f.tokens);
        }
        ctx.facts.push_back(std::move(f));
    }
    shuffle(ctx.facts, rng);
    return ctx;
}

Context gen_uf(int n, Rng& rng) {
    if (!isqrt_exact(n)) throw ContractError("union find size must be a perfect square");
    int c = isqrt_exact(n);
    Context ctx{TaskId::UnionFind, n, {}, 0};
    const Vocab& v = vocab(ctx.task);
    // vertices -> components, all components non-empty
    std::vector<int> comp(n + 1);
    for (;;) {
        std::vector<int> count(c, 0);
        for (int i = 1; i <= n; ++i) {
            comp[i] = static_cast<int>(rng.next_below(c));
            ++count[comp[i]];
        }
        if (std::all_of(count.begin(), count.end(), [](int k) { return k > 0; })) break;
    }
    std::vector<int> labels = {1, 2, 3, 4, 5, 6, 7, 8};
    shuffle(labels, rng);
    for (int k = 0; k < c; ++k) {
        std::vector<int> members;
        for (int i = 1; i <= n; ++i)
            if (comp[i] == k) members.push_back(i);
        // uniform labeled tree on the members via a Pruefer sequence
        int m = static_cast<int>(members.size());
        std::vector<std::pair<int, int>> edges;
        if (m >= 2) {
            std::vector<int> pruefer(m - 2);
            for (int& p : pruefer) p = static_cast<int>(rng.next_below(m));
            std::vector<int> degree(m, 1);
            for (int p : pruefer) ++degree[p];
            std::vector<bool> used(m, false);
            for (int p : pruefer) {
                int leaf = -1;
                for (int i = 0; i < m; ++i)
                    if (degree[i] == 1 && !used[i]) {
                        leaf = i;
                        break;
                    }
                used[leaf] = true;
                --degree[p];
                edges.emplace_back(members[leaf], members[p]);
            }
            int u = -1, w = -1;
            for (int i = 0; i < m; ++i)
                if (!used[i] && degree[i] == 1) (u < 0 ? u : w) = i;
            edges.emplace_back(members[u], members[w]);
        }
        for (auto [a, b] : edges) {
            Fact f;
            v.append_element(a, f.tokens);
            v.append_element(b, f.tokens);
            ctx.facts.push_back(std::move(f));
        }
        int labeled = members[rng.next_below(m)];
        Fact lf;
        v.append_element(labeled, lf.tokens);
        lf.tokens.push_back(v.int_token(labels[k]));
        ctx.facts.push_back(std::move(lf));
    }
    shuffle(ctx.facts, rng);
    return ctx;
}

Context gen_wc(int n, Rng& rng) {
    Context ctx{TaskId::WildcardSearch, n, {}, 0};
    const Vocab& v = vocab(ctx.task);
    Token one = v.token("1"), zero = v.token("0");
    std::vector<int> inputs(64);
    std::iota(inputs.begin(), inputs.end(), 0);
    shuffle(inputs, rng);
    for (int i = 0; i < n; ++i) {
        Fact f;
        for (int b = 5; b >= 0; --b)
            f.tokens.push_back((inputs[i] >> b) & 1 ? one : zero);
        f.tokens.push_back(v.int_token(rng.next_bool() ? 1 : -1));
        ctx.facts.push_back(std::move(f));
    }
    shuffle(ctx.facts, rng);
    return ctx;
}

Context gen_sp(int n, Rng& rng) {
    Context ctx{TaskId::ShortestPath, n, {}, 0};
    const Vocab& v = vocab(ctx.task);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
    for (int x = 1; x <= n; ++x)
        for (int y = 1; y <= n; ++y)
            if (x != y) pairs.emplace_back(x, y);
    // partial Fisher-Yates: first 2n entries are a uniform sample
    for (int i = 0; i < 2 * n; ++i)
        std::swap(pairs[i], pairs[i + rng.next_below(pairs.size() - i)]);
    for (int i = 0; i < 2 * n; ++i) {
        Fact f;
        v.append_element(pairs[i].first, f.tokens);
        v.append_element(pairs[i].second, f.tokens);
        ctx.facts.push_back(std::move(f));
    }
    shuffle(ctx.facts, rng);
    return ctx;
}

}  // namespace

Context gen_context(TaskId task, int n, Rng& rng) {
    if (!valid_size(task, n))
        throw ContractError(std::string("invalid size for task ") + task_name(task) + ": " +
                            std::to_string(n));
    Context ctx;
    switch (task) {
        case TaskId::PermutationPowering: ctx = gen_perm(n, rng); break;
        case TaskId::SequentialAssignments: ctx = gen_seq(n, rng); break;
        case TaskId::UnionFind: ctx = gen_uf(n, rng); break;
        case TaskId::WildcardSearch: ctx = gen_wc(n, rng); break;
        case TaskId::ShortestPath: ctx = gen_sp(n, rng); break;
    }
    ctx.id = fnv1a(ctx);
    return ctx;
}

// ---- Question sampling ----------------------------------------------------

Question sample_question(TaskId task, const Context& ctx, Rng& rng) {
    switch (task) {
        case TaskId::PermutationPowering: {
            // leading-bit length uniform in {2..6}, lower bits uniform -> k in [2, 64)
            int len = rng.next_int(2, 6);
            int k = 1;
            for (int i = 1; i < len; ++i) k = (k << 1) | (rng.next_bool() ? 1 : 0);
            return make_perm_question(k, rng.next_int(1, ctx.n));
        }
        case TaskId::SequentialAssignments:
            return make_value_question(rng.next_int(1, ctx.n));
        case TaskId::UnionFind: {
            UfForm form = static_cast<UfForm>(rng.next_below(3));
            if (form != UfForm::PathVertex) return make_uf_question(form, rng.next_int(1, ctx.n));
            // path-vertex questions are only posed for unlabeled vertices
            UfView u = decode_uf(ctx);
            std::vector<int> unlabeled;
            for (int v = 1; v <= ctx.n; ++v)
                if (!u.label[v]) unlabeled.push_back(v);
            return make_uf_question(form, unlabeled[rng.next_below(unlabeled.size())]);
        }
        case TaskId::WildcardSearch: {
            int w = rng.next_int(1, 6);
            std::vector<int> pos = {0, 1, 2, 3, 4, 5};
            shuffle(pos, rng);
            WcPattern p{};
            for (int i = 0; i < 6; ++i) p[i] = rng.next_bool() ? 1 : 0;
            for (int i = 0; i < w; ++i) p[pos[i]] = kWildcard;
            return make_wc_question(p);
        }
        case TaskId::ShortestPath: {
            SpView g = decode_sp(ctx);
            if (rng.next_bool()) {
                return make_sp_dist_question(rng.next_int(1, ctx.n), rng.next_int(1, ctx.n));
            }
            // first-vertex questions only for pairs where an answer exists
            for (int attempt = 0; attempt < 4096; ++attempt) {
                int x = rng.next_int(1, ctx.n), y = rng.next_int(1, ctx.n);
                if (sp_canonical_first(g, x, y) != 0) return make_sp_first_question(x, y);
            }
            // degenerate graph with no answerable first-vertex pair
            return make_sp_dist_question(rng.next_int(1, ctx.n), rng.next_int(1, ctx.n));
        }
    }
    throw ContractError("bad task");
}

// ---- Primitive answering --------------------------------------------------

Answer answer_primitive(TaskId task, const Context& ctx, const Question& q, Rng& rng) {
    if (q.kind != QuestionKind::Primitive)
        throw ContractError("answer_primitive called on a non-primitive question");
    switch (task) {
        case TaskId::PermutationPowering: {
            auto p = parse_perm_question(q);
            if (!p || p->k != 1) break;
            PermView view = decode_perm(ctx);
            if (p->x < 1 || p->x > view.n) break;
            return make_element_answer(task, view.sigma[p->x]);
        }
        case TaskId::SequentialAssignments: {
            SeqView s = decode_seq(ctx);
            if (auto var = parse_def_question(q)) {
                if (*var < 1 || *var > s.n || !s.defined[*var]) break;
                return make_def_answer(s.defs[*var]);
            }
            if (auto ab = parse_flookup_question(q))
                return make_int_answer(task, s.f[ab->first][ab->second]);
            break;
        }
        case TaskId::UnionFind: {
            UfView u = decode_uf(ctx);
            const Vocab& v = vocab(task);
            const auto& toks = q.tokens;
            if (toks.size() == 3 && toks[0] == v.token("RN")) {
                int x = v.read_element(toks, 1);
                if (x < 1 || x > u.n) break;
                if (u.adj[x].empty()) return unknown_answer(task);
                return make_element_answer(task, u.adj[x][rng.next_below(u.adj[x].size())]);
            }
            if (toks.size() == 3 && toks[0] == v.token("LBL")) {
                int x = v.read_element(toks, 1);
                if (x < 1 || x > u.n) break;
                return u.label[x] ? make_int_answer(task, u.label[x]) : make_no_answer(task);
            }
            if (toks.size() == 5 && toks[0] == v.token("C")) {
                int x = v.read_element(toks, 1), y = v.read_element(toks, 3);
                if (x < 1 || x > u.n || y < 1 || y > u.n) break;
                // connectivity via labeled-vertex BFS covers the whole forest
                UfPaths p = uf_paths(u);
                std::vector<int> root(u.n + 1);
                for (int w = 1; w <= u.n; ++w) {
                    int t = w;
                    while (p.next[t] != 0) t = p.next[t];
                    root[w] = t;
                }
                return root[x] == root[y] ? make_yes_answer(task) : make_no_answer(task);
            }
            break;
        }
        case TaskId::WildcardSearch: {
            auto p = parse_wc_question(q);
            if (!p || wc_wildcard_count(*p) != 0) break;
            WcView w = decode_wc(ctx);
            int idx = 0;
            for (int d : *p) idx = (idx << 1) | d;
            return make_int_answer(task, w.values[idx]);
        }
        case TaskId::ShortestPath: {
            SpView g = decode_sp(ctx);
            const Vocab& v = vocab(task);
            const auto& toks = q.tokens;
            if (toks.size() == 3 && toks[0] == v.token("RN")) {
                int x = v.read_element(toks, 1);
                if (x < 1 || x > g.n) break;
                if (g.out[x].empty()) return unknown_answer(task);
                return make_element_answer(task, g.out[x][rng.next_below(g.out[x].size())]);
            }
            if (toks.size() == 5 && toks[0] == v.token("E")) {
                int x = v.read_element(toks, 1), y = v.read_element(toks, 3);
                if (x < 1 || x > g.n || y < 1 || y > g.n) break;
                return g.edge(x, y) ? make_yes_answer(task) : make_no_answer(task);
            }
            break;
        }
    }
    throw ContractError("malformed primitive question");
}

// ---- Ground truth ---------------------------------------------------------

namespace {

Answer gt_perm_iterate(const Context& ctx, const Question& q) {
    auto p = parse_perm_question(q);
    if (!p || p->x < 1 || p->x > ctx.n) throw ContractError("malformed permutation question");
    PermView view = decode_perm(ctx);
    int v = p->x;
    for (int i = 0; i < p->k; ++i) v = view.sigma[v];
    return make_element_answer(ctx.task, v);
}

Answer gt_perm_binary(const Context& ctx, const Question& q) {
    auto p = parse_perm_question(q);
    if (!p || p->x < 1 || p->x > ctx.n) throw ContractError("malformed permutation question");
    PermView view = decode_perm(ctx);
    // square-and-multiply on the whole permutation
    std::vector<int> acc(ctx.n + 1), base(view.sigma);
    std::iota(acc.begin(), acc.end(), 0);
    int k = p->k;
    while (k > 0) {
        if (k & 1)
            for (int i = 1; i <= ctx.n; ++i) acc[i] = base[acc[i]];
        std::vector<int> sq(ctx.n + 1);
        for (int i = 1; i <= ctx.n; ++i) sq[i] = base[base[i]];
        base = std::move(sq);
        k >>= 1;
    }
    return make_element_answer(ctx.task, acc[p->x]);
}

int seq_eval_iterative(const SeqView& s, int var) {
    // explicit work stack, children first; the step guard catches cyclic
    // definitions in hand-crafted contexts
    std::vector<int> value(s.n + 1, 0);
    std::vector<int> stack = {var};
    std::size_t steps = 0;
    while (!stack.empty()) {
        if (++steps > 64u * (s.n + 1u)) return 0;
        int x = stack.back();
        const Definition& d = s.defs[x];
        if (value[x] != 0) {
            stack.pop_back();
            continue;
        }
        if (d.is_constant) {
            value[x] = d.constant;
            stack.pop_back();
        } else if (value[d.y] != 0 && value[d.z] != 0) {
            value[x] = s.f[value[d.y]][value[d.z]];
            stack.pop_back();
        } else {
            if (value[d.y] == 0) stack.push_back(d.y);
            if (value[d.z] == 0) stack.push_back(d.z);
        }
    }
    return value[var];
}

int seq_eval_memo(const SeqView& s, int var, std::vector<int>& memo) {
    if (memo[var] != 0) return memo[var];
    const Definition& d = s.defs[var];
    int v = d.is_constant ? d.constant
                          : s.f[seq_eval_memo(s, d.y, memo)][seq_eval_memo(s, d.z, memo)];
    return memo[var] = v;
}

Answer gt_seq(const Context& ctx, const Question& q, bool alt) {
    SeqView s = decode_seq(ctx);
    if (auto var = parse_value_question(q)) {
        if (*var < 1 || *var > s.n || !s.defined[*var])
            throw ContractError("undefined variable in question");
        if (!alt) return make_int_answer(ctx.task, seq_eval_iterative(s, *var));
        std::vector<int> memo(s.n + 1, 0);
        return make_int_answer(ctx.task, seq_eval_memo(s, *var, memo));
    }
    // primitive forms fall through to the exact reader
    Rng dummy(0);
    return answer_primitive(ctx.task, ctx, q, dummy);
}

Answer gt_uf(const Context& ctx, const Question& q, bool alt) {
    auto parsed = parse_uf_question(q);
    if (!parsed) {
        Rng dummy(0);
        if (q.kind == QuestionKind::Primitive) return answer_primitive(ctx.task, ctx, q, dummy);
        throw ContractError("malformed union-find question");
    }
    UfView u = decode_uf(ctx);
    int x = parsed->x;
    if (x < 1 || x > u.n) throw ContractError("vertex out of range");
    if (!alt) {
        UfPaths p = uf_paths(u);
        switch (parsed->form) {
            case UfForm::Label: return make_int_answer(ctx.task, uf_component_label(u, x));
            case UfForm::HowFar: return make_int_answer(ctx.task, p.dist[x]);
            case UfForm::PathVertex:
                if (u.label[x]) return unknown_answer(ctx.task);
                return make_element_answer(ctx.task, p.next[x]);
        }
    }
    // independent route: DFS from x
    std::vector<int> parent(u.n + 1, -1);
    std::vector<int> stack = {x};
    parent[x] = 0;
    int target = u.label[x] ? x : 0;
    while (!stack.empty() && target == 0) {
        int v = stack.back();
        stack.pop_back();
        for (int w : u.adj[v])
            if (parent[w] < 0) {
                parent[w] = v;
                if (u.label[w]) {
                    target = w;
                    break;
                }
                stack.push_back(w);
            }
    }
    std::vector<int> path;  // target .. x
    for (int v = target; v != 0; v = parent[v]) path.push_back(v);
    switch (parsed->form) {
        case UfForm::Label: return make_int_answer(ctx.task, u.label[target]);
        case UfForm::HowFar: return make_int_answer(ctx.task, static_cast<int>(path.size()) - 1);
        case UfForm::PathVertex:
            if (u.label[x]) return unknown_answer(ctx.task);
            return make_element_answer(ctx.task, path[path.size() - 2]);
    }
    throw ContractError("unreachable");
}

int wc_sum_enumerate(const WcView& w, const WcPattern& p) {
    int sum = 0;
    for (int idx = 0; idx < 64; ++idx) {
        bool match = true;
        for (int i = 0; i < 6 && match; ++i) {
            int bit = (idx >> (5 - i)) & 1;
            match = p[i] == kWildcard || p[i] == bit;
        }
        if (match) sum += w.values[idx];
    }
    return sum;
}

int wc_sum_recursive(const WcView& w, WcPattern p) {
    for (int i = 0; i < 6; ++i)
        if (p[i] == kWildcard) {
            p[i] = 0;
            int s0 = wc_sum_recursive(w, p);
            p[i] = 1;
            return s0 + wc_sum_recursive(w, p);
        }
    int idx = 0;
    for (int d : p) idx = (idx << 1) | d;
    return w.values[idx];
}

Answer gt_wc(const Context& ctx, const Question& q, bool alt) {
    auto p = parse_wc_question(q);
    if (!p) throw ContractError("malformed wildcard question");
    WcView w = decode_wc(ctx);
    return make_int_answer(ctx.task, alt ? wc_sum_recursive(w, *p) : wc_sum_enumerate(w, *p));
}

// Floyd-Warshall route for the second shortest-path oracle.
struct SpAllPairs {
    std::vector<std::vector<int>> d;
    int question_distance(int x, int y) const {
        if (x != y) return d[x][y];
        int best = kInf;
        for (std::size_t z = 1; z < d.size(); ++z)
            if (d[x][z] == 1 && d[z][x] < kInf) best = std::min(best, 1 + d[z][x]);
        return best;
    }
};

SpAllPairs sp_floyd_warshall(const SpView& g) {
    SpAllPairs ap;
    ap.d.assign(g.n + 1, std::vector<int>(g.n + 1, kInf));
    for (int v = 1; v <= g.n; ++v) {
        ap.d[v][v] = 0;
        for (int w : g.out[v]) ap.d[v][w] = 1;
    }
    for (int k = 1; k <= g.n; ++k)
        for (int i = 1; i <= g.n; ++i) {
            if (ap.d[i][k] >= kInf) continue;
            for (int j = 1; j <= g.n; ++j)
                ap.d[i][j] = std::min(ap.d[i][j], ap.d[i][k] + ap.d[k][j]);
        }
    return ap;
}

Answer gt_sp(const Context& ctx, const Question& q, bool alt) {
    auto parsed = parse_sp_question(q);
    if (!parsed) {
        Rng dummy(0);
        if (q.kind == QuestionKind::Primitive) return answer_primitive(ctx.task, ctx, q, dummy);
        throw ContractError("malformed shortest-path question");
    }
    SpView g = decode_sp(ctx);
    int x = parsed->x, y = parsed->y;
    if (x < 1 || x > g.n || y < 1 || y > g.n) throw ContractError("vertex out of range");
    if (!alt) {
        if (parsed->form == SpForm::Distance) {
            int d = sp_question_distance(g, x, y);
            return d >= kInf ? unknown_answer(ctx.task) : make_int_answer(ctx.task, d);
        }
        int z = sp_canonical_first(g, x, y);
        return z == 0 ? unknown_answer(ctx.task) : make_element_answer(ctx.task, z);
    }
    SpAllPairs ap = sp_floyd_warshall(g);
    if (parsed->form == SpForm::Distance) {
        int d = ap.question_distance(x, y);
        return d >= kInf ? unknown_answer(ctx.task) : make_int_answer(ctx.task, d);
    }
    int best = 0, best_d = kInf;
    for (int z : g.out[x]) {
        int d = ap.question_distance(z, y);
        if (d < best_d) best_d = d, best = z;
    }
    return best == 0 ? unknown_answer(ctx.task) : make_element_answer(ctx.task, best);
}

}  // namespace

Answer ground_truth(TaskId task, const Context& ctx, const Question& q) {
    switch (task) {
        case TaskId::PermutationPowering: return gt_perm_iterate(ctx, q);
        case TaskId::SequentialAssignments: return gt_seq(ctx, q, false);
        case TaskId::UnionFind: return gt_uf(ctx, q, false);
        case TaskId::WildcardSearch: return gt_wc(ctx, q, false);
        case TaskId::ShortestPath: return gt_sp(ctx, q, false);
    }
    throw ContractError("bad task");
}

Answer ground_truth_alt(TaskId task, const Context& ctx, const Question& q) {
    switch (task) {
        case TaskId::PermutationPowering: return gt_perm_binary(ctx, q);
        case TaskId::SequentialAssignments: return gt_seq(ctx, q, true);
        case TaskId::UnionFind: return gt_uf(ctx, q, true);
        case TaskId::WildcardSearch: return gt_wc(ctx, q, true);
        case TaskId::ShortestPath: return gt_sp(ctx, q, true);
    }
    throw ContractError("bad task");
}

// ---- Depth ----------------------------------------------------------------

int question_depth(TaskId task, const Context& ctx, const Question& q) {
    switch (task) {
        case TaskId::PermutationPowering: {
            auto p = parse_perm_question(q);
            if (!p) return 0;
            int d = 0;
            while ((1 << (d + 1)) <= p->k) ++d;
            return d;
        }
        case TaskId::SequentialAssignments: {
            auto var = parse_value_question(q);
            if (!var) return 0;
            SeqView s = decode_seq(ctx);
            std::vector<int> depth(s.n + 1, -1);
            std::vector<int> stack = {*var};
            while (!stack.empty()) {
                int x = stack.back();
                const Definition& d = s.defs[x];
                if (depth[x] >= 0) {
                    stack.pop_back();
                } else if (d.is_constant) {
                    depth[x] = 0;
                    stack.pop_back();
                } else if (depth[d.y] >= 0 && depth[d.z] >= 0) {
                    depth[x] = 1 + std::max(depth[d.y], depth[d.z]);
                    stack.pop_back();
                } else {
                    if (depth[d.y] < 0) stack.push_back(d.y);
                    if (depth[d.z] < 0) stack.push_back(d.z);
                }
            }
            return depth[*var];
        }
        case TaskId::UnionFind: {
            auto parsed = parse_uf_question(q);
            if (!parsed) return 0;
            UfPaths p = uf_paths(decode_uf(ctx));
            return p.dist[parsed->x] >= kInf ? 0 : p.dist[parsed->x];
        }
        case TaskId::WildcardSearch: {
            auto p = parse_wc_question(q);
            return p ? wc_wildcard_count(*p) : 0;
        }
        case TaskId::ShortestPath: {
            auto parsed = parse_sp_question(q);
            if (!parsed) return 0;
            int d = sp_question_distance(decode_sp(ctx), parsed->x, parsed->y);
            return d >= kInf ? 0 : d;
        }
    }
    return 0;
}

// ---- Validation -----------------------------------------------------------

bool validate_context(const Context& ctx, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    try {
        for (const Fact& f : ctx.facts)
            if (f.tokens.size() < 2 || f.tokens.size() > 8) return fail("fact length out of [2,8]");
        switch (ctx.task) {
            case TaskId::PermutationPowering: {
                PermView p = decode_perm(ctx);
                std::vector<bool> hit(ctx.n + 1, false);
                for (int i = 1; i <= ctx.n; ++i) {
                    if (p.sigma[i] < 1 || hit[p.sigma[i]]) return fail("not a bijection");
                    hit[p.sigma[i]] = true;
                }
                return true;
            }
            case TaskId::SequentialAssignments: {
                SeqView s = decode_seq(ctx);
                for (int i = 1; i <= ctx.n; ++i)
                    if (!s.defined[i]) return fail("variable not defined");
                // reference order must be acyclic: evaluate everything
                for (int i = 1; i <= ctx.n; ++i)
                    if (seq_eval_iterative(s, i) == 0) return fail("cyclic definitions");
                return true;
            }
            case TaskId::UnionFind: {
                int c = isqrt_exact(ctx.n);
                if (!c) return fail("size not a perfect square");
                UfView u = decode_uf(ctx);
                int edges = 0;
                for (int v = 1; v <= ctx.n; ++v) edges += static_cast<int>(u.adj[v].size());
                edges /= 2;
                if (edges != ctx.n - c) return fail("wrong edge count for forest");
                UfPaths p = uf_paths(u);
                int labeled = 0;
                for (int v = 1; v <= ctx.n; ++v) {
                    if (u.label[v]) ++labeled;
                    if (p.dist[v] >= kInf) return fail("vertex with no labeled vertex in component");
                }
                if (labeled != c) return fail("wrong labeled-vertex count");
                // acyclic: BFS from labels must reach each vertex exactly once,
                // which combined with the edge count implies a forest
                return true;
            }
            case TaskId::WildcardSearch: {
                WcView w = decode_wc(ctx);
                int nonzero = 0;
                for (int v : w.values) nonzero += v != 0;
                if (nonzero != ctx.n) return fail("wrong nonzero count");
                return true;
            }
            case TaskId::ShortestPath: {
                SpView g = decode_sp(ctx);
                int edges = 0;
                for (int v = 1; v <= ctx.n; ++v) {
                    edges += static_cast<int>(g.out[v].size());
                    if (std::adjacent_find(g.out[v].begin(), g.out[v].end()) != g.out[v].end())
                        return fail("duplicate edge");
                    if (g.edge(v, v)) return fail("self loop");
                }
                if (edges != 2 * ctx.n) return fail("wrong edge count");
                return true;
            }
        }
    } catch (const Error& e) {
        return fail(e.what());
    }
    return fail("bad task");
}

// ---- Answer candidates ----------------------------------------------------

std::vector<Answer> answer_candidates(TaskId task, const Context& ctx, const Question& q) {
    std::vector<Answer> out;
    auto elements = [&] {
        for (int v = 1; v <= ctx.n; ++v) out.push_back(make_element_answer(task, v));
    };
    auto ints = [&](int lo, int hi) {
        for (int v = lo; v <= hi; ++v) out.push_back(make_int_answer(task, v));
    };
    switch (task) {
        case TaskId::PermutationPowering: elements(); break;
        case TaskId::SequentialAssignments: ints(1, 8); break;
        case TaskId::UnionFind: {
            auto p = parse_uf_question(q);
            if (!p) throw ContractError("not a recursive union-find question");
            if (p->form == UfForm::Label) ints(1, 8);
            else if (p->form == UfForm::PathVertex) elements();
            else ints(0, ctx.n - 1);
            break;
        }
        case TaskId::WildcardSearch: {
            auto p = parse_wc_question(q);
            if (!p) throw ContractError("not a wildcard question");
            int w = wc_wildcard_count(*p);
            int span = std::min(64, 1 << w);
            ints(-span, span);
            break;
        }
        case TaskId::ShortestPath: {
            auto p = parse_sp_question(q);
            if (!p) throw ContractError("not a recursive shortest-path question");
            if (p->form == SpForm::Distance) ints(1, ctx.n);
            else elements();
            break;
        }
    }
    return out;
}

// ---- Serialization --------------------------------------------------------

std::string context_to_text(const Context& ctx) {
    const Vocab& v = vocab(ctx.task);
    std::string out = "task=" + std::string(task_name(ctx.task)) + " n=" + std::to_string(ctx.n);
    for (const Fact& f : ctx.facts) {
        out += '\n';
        out += v.to_text(f.tokens);
    }
    out += '\n';
    return out;
}

Context context_from_text(const std::string& text) {
    std::istringstream ss(text);
    std::string header;
    if (!std::getline(ss, header) || header.rfind("task=", 0) != 0)
        throw ContractError("missing context header");
    std::istringstream hs(header);
    std::string task_field, n_field;
    hs >> task_field >> n_field;
    if (n_field.rfind("n=", 0) != 0) throw ContractError("missing size in context header");
    Context ctx;
    ctx.task = task_from_name(task_field.substr(5));
    ctx.n = std::stoi(n_field.substr(2));
    const Vocab& v = vocab(ctx.task);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        ctx.facts.push_back(Fact{v.from_text(line)});
    }
    ctx.id = fnv1a(ctx);
    return ctx;
}

}  // namespace amp::tasks
