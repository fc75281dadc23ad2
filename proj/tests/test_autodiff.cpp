#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "amp/autodiff.hpp"
#include "amp/rng.hpp"

using namespace amp;
using namespace amp::ad;

namespace {

using Store = ParamStore<double>;
using T = Tape<double>;

// Central finite differences with one step of Richardson extrapolation
// against the tape gradient, every coordinate of every entry (the stores
// here are tiny).  The extrapolation cancels the h^2 truncation term, which
// matters for the layer-norm eps regime where third derivatives explode.
void gradcheck(Store& params, const std::function<double(Store&)>& loss_and_backward,
               double rel_tol = 1e-6, double h = 1e-5) {
    params.zero_grad();
    loss_and_backward(params);
    // Snapshot the base-point gradients: the FD probes below rerun backward at
    // perturbed points and clobber e.g.
    std::vector<std::vector<double>> base;
    for (auto& e : params.entries()) base.emplace_back(e.g.begin(), e.g.end());
    std::size_t ei = 0;
    for (auto& e : params.entries()) {
        for (std::size_t i = 0; i < e.v.size(); ++i) {
            double saved = e.v[i];
            auto central = [&](double step) {
                e.v[i] = saved + step;
                double up = loss_and_backward(params);
                e.v[i] = saved - step;
                double dn = loss_and_backward(params);
                return (up - dn) / (2 * step);
            };
            double fd = (4 * central(h / 2) - central(h)) / 3;
            e.v[i] = saved;
            double got = base[ei][i];
            double err = std::abs(fd - got) / std::max(1.0, std::max(std::abs(fd), std::abs(got)));
            CHECK_MESSAGE(err < rel_tol, e.name, "[", i, "]: fd=", fd, " tape=", got);
        }
        ++ei;
    }
}

Store make_store(std::initializer_list<std::tuple<const char*, int, int>> specs,
                 std::uint64_t seed = 42) {
    Store s;
    for (auto& [name, r, c] : specs) s.add(name, r, c, 0.5, &seed);
    return s;
}

}  // namespace

TEST_CASE("pinned forward values") {
    // layer_norm of a constant vector with gain 1, offset 0 -> zeros.
    std::uint64_t seed = 1;
    Store s;
    auto& x = s.add("x", 1, 4, 0, &seed);
    x.v = {3.0, 3.0, 3.0, 3.0};
    auto& g = s.add("g", 1, 4, 0, &seed);
    g.v = {1, 1, 1, 1};
    s.add("b", 1, 4, 0, &seed);
    T t;
    auto y = t.layer_norm(t.param(s.at("x")), t.param(s.at("g")), t.param(s.at("b")));
    for (int j = 0; j < 4; ++j) CHECK(t.val(y)[j] == doctest::Approx(0.0));

    // softmax of uniform logits -> uniform distribution.
    auto sm = t.softmax_rows(t.param(s.at("x")));
    for (int j = 0; j < 4; ++j) CHECK(t.val(sm)[j] == doctest::Approx(0.25));

    // d/dx sum(relu(x)) at (-1, 2) -> (0, 1).
    Store s2;
    auto& x2 = s2.add("x", 1, 2, 0, &seed);
    x2.v = {-1.0, 2.0};
    T t2;
    auto l = t2.sum(t2.relu(t2.param(s2.at("x"))));
    t2.backward(l);
    CHECK(s2.at("x").g[0] == 0.0);
    CHECK(s2.at("x").g[1] == 1.0);
}

TEST_CASE("gradcheck: matmul / add / relu / scale chain") {
    Store s = make_store({{"A", 3, 4}, {"B", 4, 5}, {"C", 3, 5}});
    gradcheck(s, [](Store& st) {
        T t;
        auto out = t.add(t.scale(t.matmul(t.param(st.at("A")), t.param(st.at("B"))), 0.7),
                         t.param(st.at("C")));
        auto l = t.sum(t.relu(out));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: matmul_nt, add_row, concat_cols") {
    Store s = make_store({{"A", 3, 4}, {"B", 5, 4}, {"r", 1, 5}, {"D", 3, 2}});
    gradcheck(s, [](Store& st) {
        T t;
        auto m = t.add_row(t.matmul_nt(t.param(st.at("A")), t.param(st.at("B"))),
                           t.param(st.at("r")));
        auto cc = t.concat_cols(m, t.param(st.at("D")));
        auto l = t.sum(t.relu(cc));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: gather_rows embedding lookup") {
    Store s = make_store({{"E", 6, 4}, {"W", 4, 3}});
    std::vector<int> idx{0, 5, 2, 2, 1};
    gradcheck(s, [idx](Store& st) {
        T t;
        auto e = t.gather_rows(t.param(st.at("E")), idx);
        auto l = t.sum(t.relu(t.matmul(e, t.param(st.at("W")))));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: layer_norm") {
    Store s = make_store({{"x", 4, 6}, {"g", 1, 6}, {"b", 1, 6}});
    gradcheck(s, [](Store& st) {
        T t;
        auto y = t.layer_norm(t.param(st.at("x")), t.param(st.at("g")), t.param(st.at("b")));
        auto l = t.sum(t.mul(y, y));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: batch_norm training mode") {
    Store s = make_store({{"x", 5, 3}, {"g", 1, 3}, {"b", 1, 3}});
    gradcheck(s, [](Store& st) {
        T t;
        BnStats<double> stats;  // fresh stats per call: forward value must not depend on history
        auto y = t.batch_norm(t.param(st.at("x")), t.param(st.at("g")), t.param(st.at("b")),
                              stats, true);
        auto l = t.sum(t.mul(y, y));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("batch_norm inference uses running statistics and is pure") {
    std::uint64_t seed = 9;
    Store s;
    s.add("x", 4, 3, 1.0, &seed);
    s.add("g", 1, 3, 0.5, &seed);
    s.add("b", 1, 3, 0.5, &seed);
    BnStats<double> stats;
    {
        T t;
        t.batch_norm(t.param(s.at("x")), t.param(s.at("g")), t.param(s.at("b")), stats, true);
    }
    CHECK(stats.warm);
    auto run = [&]() {
        T t;
        auto y = t.batch_norm(t.param(s.at("x")), t.param(s.at("g")), t.param(s.at("b")), stats,
                              false);
        return std::vector<double>(t.val(y), t.val(y) + 12);
    };
    auto y1 = run();
    auto y2 = run();
    CHECK(y1 == y2);

    // Inference-mode gradients w.r.t. x treat the statistics as constants.
    Store s2 = make_store({{"x", 4, 3}, {"g", 1, 3}, {"b", 1, 3}});
    gradcheck(s2, [&stats](Store& st) {
        T t;
        BnStats<double> frozen = stats;
        auto y = t.batch_norm(t.param(st.at("x")), t.param(st.at("g")), t.param(st.at("b")),
                              frozen, false);
        auto l = t.sum(t.relu(y));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: softmax_rows") {
    Store s = make_store({{"x", 3, 5}, {"w", 3, 5}});
    gradcheck(s, [](Store& st) {
        T t;
        auto p = t.softmax_rows(t.param(st.at("x")));
        auto l = t.sum(t.relu(t.add(p, t.param(st.at("w")))));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("softmax rows sum to one") {
    std::uint64_t seed = 3;
    Store s;
    s.add("x", 8, 13, 3.0, &seed);
    T t;
    auto p = t.softmax_rows(t.param(s.at("x")));
    for (int i = 0; i < 8; ++i) {
        double z = 0;
        for (int j = 0; j < 13; ++j) z += t.val(p)[i * 13 + j];
        CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gradcheck: multi-head attention") {
    Store s = make_store({{"q", 3, 8}, {"k", 5, 8}, {"v", 5, 8}});
    gradcheck(s, [](Store& st) {
        T t;
        auto o = t.attention(t.param(st.at("q")), t.param(st.at("k")), t.param(st.at("v")), 2);
        auto l = t.sum(t.relu(o));
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("gradcheck: outer_add and marginal cross entropy") {
    Store s = make_store({{"sent", 3, 4}, {"idx", 3, 2}, {"gen", 3, 5}});
    std::vector<std::vector<int>> slots{{0, 7}, {4}, {2, 5, 12}};
    gradcheck(s, [slots](Store& st) {
        T t;
        auto copy = t.outer_add(t.param(st.at("sent")), t.param(st.at("idx")));
        auto logits = t.concat_cols(t.param(st.at("gen")), copy);  // width 5 + 8 = 13
        auto l = t.marginal_cross_entropy(logits, slots);
        st.zero_grad();
        t.backward(l);
        return t.val(l)[0];
    });
}

TEST_CASE("marginal cross entropy: two half-probability paths give zero loss") {
    // Row with two slots in the group; logits equal over them, -inf elsewhere.
    T t;
    std::vector<double> x = {10.0, 10.0, -1e9};
    auto in = t.input(1, 3, x.data());
    auto l = t.marginal_cross_entropy(in, {{0, 1}});
    CHECK(t.val(l)[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gradcheck: randomly composed graphs") {
    Rng rng(777);
    for (int trial = 0; trial < 8; ++trial) {
        std::uint64_t seed = rng.next_u64();
        Store s;
        s.add("a", 4, 6, 0.5, &seed);
        s.add("b", 6, 6, 0.5, &seed);
        s.add("g", 1, 6, 0.5, &seed);
        s.add("o", 1, 6, 0.5, &seed);
        std::uint64_t plan = rng.next_u64();
        gradcheck(s, [plan](Store& st) {
            T t;
            auto x = t.matmul(t.param(st.at("a")), t.param(st.at("b")));
            std::uint64_t p = plan;
            for (int d = 0; d < 5; ++d, p >>= 3) {
                switch (p % 5) {
                    case 0: x = t.relu(x); break;
                    case 1: x = t.layer_norm(x, t.param(st.at("g")), t.param(st.at("o"))); break;
                    case 2: x = t.attention(x, x, x, 2); break;
                    case 3: x = t.add(x, t.matmul(t.param(st.at("a")), t.param(st.at("b")))); break;
                    case 4: x = t.softmax_rows(x); break;
                }
            }
            auto l = t.sum(t.relu(x));
            st.zero_grad();
            t.backward(l);
            return t.val(l)[0];
        }, 1e-3);
    }
}

TEST_CASE("constant loss has zero gradients") {
    Store s = make_store({{"a", 2, 3}});
    T t;
    std::vector<double> c(6, 1.0);
    auto l = t.sum(t.input(1, 1, c.data()));
    t.param(s.at("a"));  // participates in nothing
    s.zero_grad();
    t.backward(l);
    for (double g : s.at("a").g) CHECK(g == 0.0);
}

TEST_CASE("single linear layer + squared error matches the closed form") {
    // loss = sum((x W - y)^2); dW = 2 x^T (x W - y)
    std::uint64_t seed = 11;
    Store s;
    auto& W = s.add("W", 3, 2, 0.5, &seed);
    std::vector<double> x = {0.3, -1.2, 0.7, 0.5, 0.1, -0.4};  // 2x3
    std::vector<double> y = {0.2, -0.1, 0.4, 0.9};             // 2x2
    T t;
    auto xin = t.input(2, 3, x.data());
    auto pred = t.matmul(xin, t.param(W));
    auto neg_y = t.input(2, 2);
    for (int i = 0; i < 4; ++i) t.val(neg_y)[i] = -y[i];
    auto err = t.add(pred, neg_y);
    auto l = t.sum(t.mul(err, err));
    s.zero_grad();
    t.backward(l);
    // closed form
    std::vector<double> e(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double p = 0;
            for (int k2 = 0; k2 < 3; ++k2) p += x[i * 3 + k2] * W.v[k2 * 2 + j];
            e[i * 2 + j] = p - y[i * 2 + j];
        }
    for (int k2 = 0; k2 < 3; ++k2)
        for (int j = 0; j < 2; ++j) {
            double want = 0;
            for (int i = 0; i < 2; ++i) want += 2 * x[i * 3 + k2] * e[i * 2 + j];
            CHECK(W.g[k2 * 2 + j] == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    std::uint64_t seed = 21;
    Store s;
    auto& a = s.add("a", 2, 2, 1.0, &seed);
    auto before = a.v;
    s.zero_grad();
    AdamState<double> st;
    adam_step(s, st, AdamConfig<double>{});
    CHECK(a.v == before);
    CHECK(st.t == 1);
}

TEST_CASE("adam: global-norm clipping scales the effective gradient") {
    // Two runs: gradient g with norm 2*clip, and gradient g/2 unclipped.
    // First-step updates must coincide.
    auto run = [](double gscale, double clip) {
        std::uint64_t seed = 33;
        Store s;
        auto& a = s.add("a", 1, 4, 1.0, &seed);
        auto before = a.v;
        a.g = {0.6 * gscale, -0.8 * gscale, 1.2 * gscale, -0.9 * gscale};
        double norm = std::sqrt(0.36 + 0.64 + 1.44 + 0.81) * gscale;
        AdamConfig<double> cfg;
        cfg.lr = 1e-3;
        cfg.clip = clip;
        AdamState<double> st;
        adam_step(s, st, cfg);
        std::vector<double> delta(4);
        for (int i = 0; i < 4; ++i) delta[i] = a.v[i] - before[i];
        return std::pair(delta, norm);
    };
    double full_norm = std::sqrt(0.36 + 0.64 + 1.44 + 0.81);
    auto [d1, n1] = run(1.0, full_norm / 2);  // gradient norm is 2x the clip
    auto [d2, n2] = run(0.5, 1e9);            // effectively unclipped
    CHECK(n1 == doctest::Approx(2 * n2));
    for (int i = 0; i < 4; ++i) CHECK(d1[i] == doctest::Approx(d2[i]).epsilon(1e-12));
}

TEST_CASE("polyak: horizon 1 copies, otherwise geometric contraction") {
    std::uint64_t seed = 5;
    Store online, target;
    online.add("a", 1, 3, 1.0, &seed);
    std::uint64_t seed2 = 6;
    target.add("a", 1, 3, 1.0, &seed2);

    Store t1;
    std::uint64_t s3 = 6;
    t1.add("a", 1, 3, 1.0, &s3);
    polyak_update(t1, online, 1.0);
    CHECK(t1.at("a").v == online.at("a").v);

    double d0 = param_distance(target, online);
    for (int i = 0; i < 10; ++i) {
        polyak_update(target, online, 1000.0);
        double d = param_distance(target, online);
        CHECK(d == doctest::Approx(d0 * std::pow(1.0 - 1.0 / 1000.0, i + 1)).epsilon(1e-9));
    }
}
