#include "amp/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "amp/kernels.hpp"
#include "amp/rng.hpp"

namespace amp::ad {

namespace k = amp::kernels;

// ---- ParamStore -----------------------------------------------------------

template <class Real>
typename ParamStore<Real>::Entry& ParamStore<Real>::add(const std::string& name, int rows,
                                                        int cols, Real init_scale,
                                                        std::uint64_t* seed) {
    auto it = index_.find(name);
    if (it != index_.end()) {
        Entry& e = entries_[it->second];
        if (e.rows != rows || e.cols != cols)
            throw ShapeError("param " + name + ": shape mismatch on re-registration");
        return e;
    }
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{name, rows, cols, {}, {}});
    Entry& e = entries_.back();
    std::size_t n = static_cast<std::size_t>(rows) * cols;
    e.v.assign(n, Real(0));
    e.g.assign(n, Real(0));
    if (init_scale > Real(0)) {
        Rng r(*seed);
        for (Real& x : e.v) x = static_cast<Real>((r.next_double() * 2.0 - 1.0) * init_scale);
        *seed = r.next_u64();
    }
    return e;
}

template <class Real>
typename ParamStore<Real>::Entry& ParamStore<Real>::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown param: " + name);
    return entries_[it->second];
}

template <class Real>
const typename ParamStore<Real>::Entry& ParamStore<Real>::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown param: " + name);
    return entries_[it->second];
}

template <class Real>
std::size_t ParamStore<Real>::value_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.v.size();
    return n;
}

template <class Real>
void ParamStore<Real>::zero_grad() {
    for (Entry& e : entries_) std::fill(e.g.begin(), e.g.end(), Real(0));
}

// ---- Tape -----------------------------------------------------------------

template <class Real>
typename Tape<Real>::Id Tape<Real>::push(int r, int c) {
    Node n;
    n.r = r;
    n.c = c;
    std::size_t sz = static_cast<std::size_t>(r) * c;
    n.own_v.assign(sz, Real(0));
    n.own_g.assign(sz, Real(0));
    n.v = n.own_v.data();
    n.g = n.own_g.data();
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

template <class Real>
void Tape<Real>::check2(const char* op, Id a, Id b) const {
    if (nodes_[a].r != nodes_[b].r || nodes_[a].c != nodes_[b].c)
        throw ShapeError(std::string(op) + ": [" + std::to_string(nodes_[a].r) + "," +
                         std::to_string(nodes_[a].c) + "] vs [" + std::to_string(nodes_[b].r) +
                         "," + std::to_string(nodes_[b].c) + "]");
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::input(int rows, int cols, const Real* data) {
    Id id = push(rows, cols);
    if (data)
        std::memcpy(nodes_[id].v, data, sizeof(Real) * static_cast<std::size_t>(rows) * cols);
    return id;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::param(typename ParamStore<Real>::Entry& e) {
    Node n;
    n.r = e.rows;
    n.c = e.cols;
    n.v = e.v.data();
    n.g = e.g.data();
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::matmul(Id a, Id b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    if (A.c != B.r) throw ShapeError("matmul: inner dims disagree");
    Id out = push(A.r, B.c);
    Node& O = nodes_[out];
    k::gemm_nn(A.r, B.c, A.c, A.v, A.c, B.v, B.c, O.v, B.c, Real(0));
    O.a = a;
    O.b = b;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& B2 = t.nodes_[o.b];
        // dA += dO * B^T ; dB += A^T * dO
        k::gemm_nt(A2.r, A2.c, o.c, o.g, o.c, B2.v, B2.c, A2.g, A2.c, Real(1));
        k::gemm_tn(B2.r, B2.c, A2.r, A2.v, A2.c, o.g, o.c, B2.g, B2.c, Real(1));
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::matmul_nt(Id a, Id b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    if (A.c != B.c) throw ShapeError("matmul_nt: inner dims disagree");
    Id out = push(A.r, B.r);
    Node& O = nodes_[out];
    k::gemm_nt(A.r, B.r, A.c, A.v, A.c, B.v, B.c, O.v, B.r, Real(0));
    O.a = a;
    O.b = b;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& B2 = t.nodes_[o.b];
        // dA += dO * B ; dB += dO^T * A
        k::gemm_nn(A2.r, A2.c, o.c, o.g, o.c, B2.v, B2.c, A2.g, A2.c, Real(1));
        k::gemm_tn(B2.r, B2.c, A2.r, o.g, o.c, A2.v, A2.c, B2.g, B2.c, Real(1));
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::add(Id a, Id b) {
    check2("add", a, b);
    const Node& A = nodes_[a];
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    std::size_t n = static_cast<std::size_t>(A.r) * A.c;
    k::add(nodes_[a].v, nodes_[b].v, O.v, n);
    O.a = a;
    O.b = b;
    O.back = [n](Tape& t, Node& o) {
        k::axpy(Real(1), o.g, t.nodes_[o.a].g, n);
        k::axpy(Real(1), o.g, t.nodes_[o.b].g, n);
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::mul(Id a, Id b) {
    check2("mul", a, b);
    const Node& A = nodes_[a];
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    std::size_t n = static_cast<std::size_t>(A.r) * A.c;
    k::mul(nodes_[a].v, nodes_[b].v, O.v, n);
    O.a = a;
    O.b = b;
    O.back = [n](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& B2 = t.nodes_[o.b];
        for (std::size_t i = 0; i < n; ++i) {
            A2.g[i] += o.g[i] * B2.v[i];
            B2.g[i] += o.g[i] * A2.v[i];
        }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::add_row(Id a, Id row) {
    const Node& A = nodes_[a];
    const Node& R = nodes_[row];
    if (R.r != 1 || R.c != A.c) throw ShapeError("add_row: row shape mismatch");
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    for (int i = 0; i < A.r; ++i)
        k::add(A.v + static_cast<std::size_t>(i) * A.c, R.v,
               O.v + static_cast<std::size_t>(i) * A.c, A.c);
    O.a = a;
    O.b = row;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& R2 = t.nodes_[o.b];
        std::size_t n = static_cast<std::size_t>(o.r) * o.c;
        k::axpy(Real(1), o.g, A2.g, n);
        for (int i = 0; i < o.r; ++i)
            k::axpy(Real(1), o.g + static_cast<std::size_t>(i) * o.c, R2.g, o.c);
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::scale(Id a, Real c) {
    const Node& A = nodes_[a];
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    std::size_t n = static_cast<std::size_t>(A.r) * A.c;
    std::memcpy(O.v, nodes_[a].v, sizeof(Real) * n);
    k::scale(c, O.v, n);
    O.a = a;
    O.aux = {c};
    O.back = [n](Tape& t, Node& o) { k::axpy(o.aux[0], o.g, t.nodes_[o.a].g, n); };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::relu(Id a) {
    const Node& A = nodes_[a];
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    std::size_t n = static_cast<std::size_t>(A.r) * A.c;
    k::relu(nodes_[a].v, O.v, n);
    O.a = a;
    O.back = [n](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        k::relu_grad(A2.v, o.g, A2.g, n);
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::concat_cols(Id a, Id b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    if (A.r != B.r) throw ShapeError("concat_cols: row count mismatch");
    Id out = push(A.r, A.c + B.c);
    Node& O = nodes_[out];
    for (int i = 0; i < A.r; ++i) {
        std::memcpy(O.v + static_cast<std::size_t>(i) * O.c,
                    A.v + static_cast<std::size_t>(i) * A.c, sizeof(Real) * A.c);
        std::memcpy(O.v + static_cast<std::size_t>(i) * O.c + A.c,
                    B.v + static_cast<std::size_t>(i) * B.c, sizeof(Real) * B.c);
    }
    O.a = a;
    O.b = b;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& B2 = t.nodes_[o.b];
        for (int i = 0; i < o.r; ++i) {
            k::axpy(Real(1), o.g + static_cast<std::size_t>(i) * o.c,
                    A2.g + static_cast<std::size_t>(i) * A2.c, A2.c);
            k::axpy(Real(1), o.g + static_cast<std::size_t>(i) * o.c + A2.c,
                    B2.g + static_cast<std::size_t>(i) * B2.c, B2.c);
        }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::gather_rows(Id table, const std::vector<int>& idx) {
    const Node& T = nodes_[table];
    Id out = push(static_cast<int>(idx.size()), T.c);
    Node& O = nodes_[out];
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= T.r) throw ShapeError("gather_rows: index out of range");
        std::memcpy(O.v + i * T.c, T.v + static_cast<std::size_t>(idx[i]) * T.c,
                    sizeof(Real) * T.c);
    }
    O.a = table;
    O.back = [idx](Tape& t, Node& o) {
        Node& T2 = t.nodes_[o.a];
        for (std::size_t i = 0; i < idx.size(); ++i)
            k::axpy(Real(1), o.g + i * o.c, T2.g + static_cast<std::size_t>(idx[i]) * T2.c, o.c);
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::layer_norm(Id a, Id gamma, Id beta) {
    const Node& A = nodes_[a];
    const Node& G = nodes_[gamma];
    const Node& B = nodes_[beta];
    if (G.r != 1 || G.c != A.c || B.r != 1 || B.c != A.c)
        throw ShapeError("layer_norm: affine shape mismatch");
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    const Real eps = Real(1e-5);
    // aux: per row [xhat..., inv_std] packed as r*(c+1)
    O.aux.assign(static_cast<std::size_t>(A.r) * (A.c + 1), Real(0));
    for (int i = 0; i < A.r; ++i) {
        const Real* x = A.v + static_cast<std::size_t>(i) * A.c;
        Real mu = k::sum(x, A.c) / A.c;
        Real var = Real(0);
        for (int j = 0; j < A.c; ++j) var += (x[j] - mu) * (x[j] - mu);
        var /= A.c;
        Real inv = Real(1) / std::sqrt(var + eps);
        Real* xh = O.aux.data() + static_cast<std::size_t>(i) * (A.c + 1);
        for (int j = 0; j < A.c; ++j) xh[j] = (x[j] - mu) * inv;
        xh[A.c] = inv;
        Real* y = O.v + static_cast<std::size_t>(i) * A.c;
        for (int j = 0; j < A.c; ++j) y[j] = G.v[j] * xh[j] + B.v[j];
    }
    O.a = a;
    O.b = gamma;
    O.c3 = beta;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& G2 = t.nodes_[o.b];
        Node& B2 = t.nodes_[o.c3];
        int c = o.c;
        for (int i = 0; i < o.r; ++i) {
            const Real* dy = o.g + static_cast<std::size_t>(i) * c;
            const Real* xh = o.aux.data() + static_cast<std::size_t>(i) * (c + 1);
            Real inv = xh[c];
            Real m1 = Real(0), m2 = Real(0);
            for (int j = 0; j < c; ++j) {
                Real dxh = dy[j] * G2.v[j];
                m1 += dxh;
                m2 += dxh * xh[j];
                G2.g[j] += dy[j] * xh[j];
                B2.g[j] += dy[j];
            }
            m1 /= c;
            m2 /= c;
            Real* dx = A2.g + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) dx[j] += inv * (dy[j] * G2.v[j] - m1 - xh[j] * m2);
        }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::batch_norm(Id a, Id gamma, Id beta, BnStats<Real>& stats,
                                               bool train, Real momentum) {
    const Node& A = nodes_[a];
    const Node& G = nodes_[gamma];
    const Node& B = nodes_[beta];
    if (G.r != 1 || G.c != A.c || B.r != 1 || B.c != A.c)
        throw ShapeError("batch_norm: affine shape mismatch");
    if (stats.mean.empty()) {
        stats.mean.assign(A.c, Real(0));
        stats.var.assign(A.c, Real(1));
    }
    if (static_cast<int>(stats.mean.size()) != A.c)
        throw ShapeError("batch_norm: running-stat width mismatch");
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    const Real eps = Real(1e-5);
    int c = A.c, r = A.r;
    // aux: [xhat (r*c), inv_std (c)]
    O.aux.assign(static_cast<std::size_t>(r) * c + c + 1, Real(0));
    Real* xh = O.aux.data();
    Real* invs = O.aux.data() + static_cast<std::size_t>(r) * c;
    std::vector<Real> mu(c, Real(0)), var(c, Real(0));
    if (train) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) mu[j] += A.v[static_cast<std::size_t>(i) * c + j];
        for (int j = 0; j < c; ++j) mu[j] /= r;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                Real d = A.v[static_cast<std::size_t>(i) * c + j] - mu[j];
                var[j] += d * d;
            }
        for (int j = 0; j < c; ++j) var[j] /= r;
        if (!stats.warm) {
            stats.mean = mu;
            stats.var = var;
            stats.warm = true;
        } else {
            for (int j = 0; j < c; ++j) {
                stats.mean[j] = momentum * stats.mean[j] + (Real(1) - momentum) * mu[j];
                stats.var[j] = momentum * stats.var[j] + (Real(1) - momentum) * var[j];
            }
        }
    } else {
        mu = stats.mean;
        var = stats.var;
    }
    for (int j = 0; j < c; ++j) invs[j] = Real(1) / std::sqrt(var[j] + eps);
    invs[c] = train ? Real(1) : Real(0);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            std::size_t p = static_cast<std::size_t>(i) * c + j;
            xh[p] = (A.v[p] - mu[j]) * invs[j];
            O.v[p] = G.v[j] * xh[p] + B.v[j];
        }
    O.a = a;
    O.b = gamma;
    O.c3 = beta;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        Node& G2 = t.nodes_[o.b];
        Node& B2 = t.nodes_[o.c3];
        int r2 = o.r, c2 = o.c;
        const Real* xh2 = o.aux.data();
        const Real* invs2 = o.aux.data() + static_cast<std::size_t>(r2) * c2;
        bool trained = invs2[c2] != Real(0);
        std::vector<Real> s1(c2, Real(0)), s2(c2, Real(0));
        for (int i = 0; i < r2; ++i)
            for (int j = 0; j < c2; ++j) {
                std::size_t p = static_cast<std::size_t>(i) * c2 + j;
                G2.g[j] += o.g[p] * xh2[p];
                B2.g[j] += o.g[p];
                s1[j] += o.g[p];
                s2[j] += o.g[p] * xh2[p];
            }
        for (int i = 0; i < r2; ++i)
            for (int j = 0; j < c2; ++j) {
                std::size_t p = static_cast<std::size_t>(i) * c2 + j;
                if (trained) {
                    A2.g[p] += G2.v[j] * invs2[j] *
                               (o.g[p] - s1[j] / r2 - xh2[p] * s2[j] / r2);
                } else {
                    A2.g[p] += G2.v[j] * invs2[j] * o.g[p];
                }
            }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::softmax_rows(Id a) {
    const Node& A = nodes_[a];
    Id out = push(A.r, A.c);
    Node& O = nodes_[out];
    for (int i = 0; i < A.r; ++i) {
        const Real* x = A.v + static_cast<std::size_t>(i) * A.c;
        Real* y = O.v + static_cast<std::size_t>(i) * A.c;
        Real mx = x[0];
        for (int j = 1; j < A.c; ++j) mx = std::max(mx, x[j]);
        Real z = Real(0);
        for (int j = 0; j < A.c; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        k::scale(Real(1) / z, y, A.c);
    }
    O.a = a;
    O.back = [](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        for (int i = 0; i < o.r; ++i) {
            const Real* p = o.v + static_cast<std::size_t>(i) * o.c;
            const Real* dy = o.g + static_cast<std::size_t>(i) * o.c;
            Real dotv = k::dot(p, dy, o.c);
            Real* dx = A2.g + static_cast<std::size_t>(i) * o.c;
            for (int j = 0; j < o.c; ++j) dx[j] += p[j] * (dy[j] - dotv);
        }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::attention(Id q, Id kk, Id v, int heads) {
    const Node& Q = nodes_[q];
    const Node& K = nodes_[kk];
    const Node& V = nodes_[v];
    if (Q.c != K.c || K.c != V.c || K.r != V.r) throw ShapeError("attention: shape mismatch");
    if (Q.c % heads != 0) throw ShapeError("attention: width not divisible by head count");
    int d = Q.c, dh = d / heads, Tq = Q.r, Tk = K.r;
    Id out = push(Tq, d);
    Node& O = nodes_[out];
    Real inv = Real(1) / std::sqrt(Real(dh));
    // aux: per head the softmaxed attention matrix P [Tq x Tk]
    O.aux.assign(static_cast<std::size_t>(heads) * Tq * Tk, Real(0));
    std::vector<Real> S(static_cast<std::size_t>(Tq) * Tk);
    for (int h = 0; h < heads; ++h) {
        const Real* qh = Q.v + static_cast<std::size_t>(h) * dh;
        const Real* kh = K.v + static_cast<std::size_t>(h) * dh;
        const Real* vh = V.v + static_cast<std::size_t>(h) * dh;
        Real* P = O.aux.data() + static_cast<std::size_t>(h) * Tq * Tk;
        k::gemm_nt(Tq, Tk, dh, qh, d, kh, d, S.data(), Tk, Real(0));
        for (int i = 0; i < Tq; ++i) {
            Real* s = S.data() + static_cast<std::size_t>(i) * Tk;
            Real mx = s[0] * inv;
            for (int j = 0; j < Tk; ++j) mx = std::max(mx, s[j] * inv);
            Real z = Real(0);
            Real* p = P + static_cast<std::size_t>(i) * Tk;
            for (int j = 0; j < Tk; ++j) {
                p[j] = std::exp(s[j] * inv - mx);
                z += p[j];
            }
            k::scale(Real(1) / z, p, Tk);
        }
        // O_h = P * V_h  (strided output)
        for (int i = 0; i < Tq; ++i) {
            Real* o = O.v + static_cast<std::size_t>(i) * d + static_cast<std::size_t>(h) * dh;
            std::fill(o, o + dh, Real(0));
            const Real* p = P + static_cast<std::size_t>(i) * Tk;
            for (int j = 0; j < Tk; ++j)
                k::axpy(p[j], vh + static_cast<std::size_t>(j) * d, o, dh);
        }
    }
    O.a = q;
    O.b = kk;
    O.c3 = v;
    O.aux.push_back(static_cast<Real>(heads));
    O.back = [](Tape& t, Node& o) {
        Node& Q2 = t.nodes_[o.a];
        Node& K2 = t.nodes_[o.b];
        Node& V2 = t.nodes_[o.c3];
        int heads2 = static_cast<int>(o.aux.back());
        int d2 = o.c, dh2 = d2 / heads2, Tq2 = o.r, Tk2 = K2.r;
        Real inv2 = Real(1) / std::sqrt(Real(dh2));
        std::vector<Real> dP(static_cast<std::size_t>(Tq2) * Tk2);
        std::vector<Real> dS(static_cast<std::size_t>(Tq2) * Tk2);
        for (int h = 0; h < heads2; ++h) {
            const Real* P = o.aux.data() + static_cast<std::size_t>(h) * Tq2 * Tk2;
            const Real* vh = V2.v + static_cast<std::size_t>(h) * dh2;
            const Real* qh = Q2.v + static_cast<std::size_t>(h) * dh2;
            const Real* kh = K2.v + static_cast<std::size_t>(h) * dh2;
            // dP = dO_h * V_h^T
            k::gemm_nt(Tq2, Tk2, dh2, o.g + static_cast<std::size_t>(h) * dh2, d2, vh, d2,
                       dP.data(), Tk2, Real(0));
            // dV_h += P^T * dO_h (strided accumulate)
            for (int j = 0; j < Tk2; ++j) {
                Real* dv = V2.g + static_cast<std::size_t>(j) * d2 +
                           static_cast<std::size_t>(h) * dh2;
                for (int i = 0; i < Tq2; ++i)
                    k::axpy(P[static_cast<std::size_t>(i) * Tk2 + j],
                            o.g + static_cast<std::size_t>(i) * d2 +
                                static_cast<std::size_t>(h) * dh2,
                            dv, dh2);
            }
            // dS = P o (dP - rowsum(P o dP)), then scaled by 1/sqrt(dh)
            for (int i = 0; i < Tq2; ++i) {
                const Real* p = P + static_cast<std::size_t>(i) * Tk2;
                Real* dp = dP.data() + static_cast<std::size_t>(i) * Tk2;
                Real dotv = k::dot(p, dp, Tk2);
                Real* ds = dS.data() + static_cast<std::size_t>(i) * Tk2;
                for (int j = 0; j < Tk2; ++j) ds[j] = inv2 * p[j] * (dp[j] - dotv);
            }
            // dQ_h += dS * K_h ; dK_h += dS^T * Q_h (strided)
            for (int i = 0; i < Tq2; ++i) {
                Real* dq = Q2.g + static_cast<std::size_t>(i) * d2 +
                           static_cast<std::size_t>(h) * dh2;
                const Real* ds = dS.data() + static_cast<std::size_t>(i) * Tk2;
                for (int j = 0; j < Tk2; ++j)
                    k::axpy(ds[j], kh + static_cast<std::size_t>(j) * d2, dq, dh2);
            }
            for (int j = 0; j < Tk2; ++j) {
                Real* dk = K2.g + static_cast<std::size_t>(j) * d2 +
                           static_cast<std::size_t>(h) * dh2;
                for (int i = 0; i < Tq2; ++i)
                    k::axpy(dS[static_cast<std::size_t>(i) * Tk2 + j],
                            qh + static_cast<std::size_t>(i) * d2, dk, dh2);
            }
        }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::outer_add(Id sent, Id idx) {
    const Node& S = nodes_[sent];
    const Node& I = nodes_[idx];
    if (S.r != I.r) throw ShapeError("outer_add: row count mismatch");
    int w = I.c;
    Id out = push(S.r, S.c * w);
    Node& O = nodes_[out];
    for (int r = 0; r < S.r; ++r)
        for (int f = 0; f < S.c; ++f)
            for (int j = 0; j < w; ++j)
                O.v[static_cast<std::size_t>(r) * O.c + f * w + j] =
                    S.v[static_cast<std::size_t>(r) * S.c + f] +
                    I.v[static_cast<std::size_t>(r) * w + j];
    O.a = sent;
    O.b = idx;
    O.back = [](Tape& t, Node& o) {
        Node& S2 = t.nodes_[o.a];
        Node& I2 = t.nodes_[o.b];
        int w2 = I2.c;
        for (int r = 0; r < o.r; ++r)
            for (int f = 0; f < S2.c; ++f)
                for (int j = 0; j < w2; ++j) {
                    Real g = o.g[static_cast<std::size_t>(r) * o.c + f * w2 + j];
                    S2.g[static_cast<std::size_t>(r) * S2.c + f] += g;
                    I2.g[static_cast<std::size_t>(r) * w2 + j] += g;
                }
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::sum(Id a) {
    const Node& A = nodes_[a];
    Id out = push(1, 1);
    Node& O = nodes_[out];
    std::size_t n = static_cast<std::size_t>(A.r) * A.c;
    O.v[0] = k::sum(nodes_[a].v, n);
    O.a = a;
    O.back = [n](Tape& t, Node& o) {
        Node& A2 = t.nodes_[o.a];
        for (std::size_t i = 0; i < n; ++i) A2.g[i] += o.g[0];
    };
    return out;
}

template <class Real>
typename Tape<Real>::Id Tape<Real>::marginal_cross_entropy(
    Id logits, const std::vector<std::vector<int>>& slots) {
    const Node& L = nodes_[logits];
    if (static_cast<int>(slots.size()) != L.r)
        throw ShapeError("marginal_cross_entropy: one slot group per row required");
    Id out = push(1, 1);
    Node& O = nodes_[out];
    // aux: softmax probabilities (r*c) then per-row group mass (r)
    O.aux.assign(static_cast<std::size_t>(L.r) * L.c + L.r, Real(0));
    Real* P = O.aux.data();
    Real* mass = O.aux.data() + static_cast<std::size_t>(L.r) * L.c;
    Real total = Real(0);
    for (int i = 0; i < L.r; ++i) {
        if (slots[i].empty()) throw ShapeError("marginal_cross_entropy: empty slot group");
        const Real* x = L.v + static_cast<std::size_t>(i) * L.c;
        Real* p = P + static_cast<std::size_t>(i) * L.c;
        Real mx = x[0];
        for (int j = 1; j < L.c; ++j) mx = std::max(mx, x[j]);
        Real z = Real(0);
        for (int j = 0; j < L.c; ++j) {
            p[j] = std::exp(x[j] - mx);
            z += p[j];
        }
        k::scale(Real(1) / z, p, L.c);
        Real m = Real(0);
        for (int s : slots[i]) {
            if (s < 0 || s >= L.c) throw ShapeError("marginal_cross_entropy: slot out of range");
            m += p[s];
        }
        m = std::max(m, Real(1e-30));
        mass[i] = m;
        total -= std::log(m);
    }
    O.v[0] = total / L.r;
    O.a = logits;
    O.back = [slots](Tape& t, Node& o) {
        Node& L2 = t.nodes_[o.a];
        const Real* P2 = o.aux.data();
        const Real* mass2 = o.aux.data() + static_cast<std::size_t>(L2.r) * L2.c;
        Real scale2 = o.g[0] / L2.r;
        for (int i = 0; i < L2.r; ++i) {
            const Real* p = P2 + static_cast<std::size_t>(i) * L2.c;
            Real* dx = L2.g + static_cast<std::size_t>(i) * L2.c;
            k::axpy(scale2, p, dx, L2.c);
            for (int s : slots[i]) dx[s] -= scale2 * p[s] / mass2[i];
        }
    };
    return out;
}

template <class Real>
void Tape<Real>::backward(Id loss_node) {
    Node& L = nodes_[loss_node];
    if (L.r != 1 || L.c != 1) throw ShapeError("backward: loss must be scalar");
    L.g[0] = Real(1);
    for (Id i = loss_node; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this, nodes_[i]);
}

// ---- Optimizer ------------------------------------------------------------

template <class Real>
Real global_grad_norm(const ParamStore<Real>& params) {
    Real acc = Real(0);
    for (const auto& e : params.entries()) acc += k::dot(e.g.data(), e.g.data(), e.g.size());
    return std::sqrt(acc);
}

template <class Real>
void adam_step(ParamStore<Real>& params, AdamState<Real>& state, const AdamConfig<Real>& cfg) {
    auto& entries = params.entries();
    if (state.m.empty()) {
        for (const auto& e : entries) {
            state.m.emplace_back(e.v.size(), Real(0));
            state.v.emplace_back(e.v.size(), Real(0));
        }
    }
    if (state.m.size() != entries.size()) throw ShapeError("adam_step: state layout mismatch");
    Real gscale = Real(1);
    if (cfg.clip > Real(0)) {
        Real norm = global_grad_norm(params);
        if (norm > cfg.clip) gscale = cfg.clip / norm;
    }
    ++state.t;
    Real bc1 = Real(1) - std::pow(cfg.beta1, Real(state.t));
    Real bc2 = Real(1) - std::pow(cfg.beta2, Real(state.t));
    std::size_t ei = 0;
    for (auto& e : entries) {
        Real* m = state.m[ei].data();
        Real* v = state.v[ei].data();
        for (std::size_t i = 0; i < e.v.size(); ++i) {
            Real g = e.g[i] * gscale;
            m[i] = cfg.beta1 * m[i] + (Real(1) - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (Real(1) - cfg.beta2) * g * g;
            e.v[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
        }
        ++ei;
    }
}

template <class Real>
void polyak_update(ParamStore<Real>& target, const ParamStore<Real>& online, double horizon) {
    auto& te = target.entries();
    const auto& oe = online.entries();
    if (te.size() != oe.size()) throw ShapeError("polyak_update: layout mismatch");
    Real a = static_cast<Real>(1.0 / horizon);
    for (std::size_t i = 0; i < te.size(); ++i) {
        if (te[i].v.size() != oe[i].v.size() || te[i].name != oe[i].name)
            throw ShapeError("polyak_update: entry mismatch at " + te[i].name);
        k::scale(Real(1) - a, te[i].v.data(), te[i].v.size());
        k::axpy(a, oe[i].v.data(), te[i].v.data(), te[i].v.size());
    }
}

template <class Real>
Real param_distance(const ParamStore<Real>& a, const ParamStore<Real>& b) {
    const auto& ae = a.entries();
    const auto& be = b.entries();
    if (ae.size() != be.size()) throw ShapeError("param_distance: layout mismatch");
    Real acc = Real(0);
    for (std::size_t i = 0; i < ae.size(); ++i)
        for (std::size_t j = 0; j < ae[i].v.size(); ++j) {
            Real d = ae[i].v[j] - be[i].v[j];
            acc += d * d;
        }
    return std::sqrt(acc);
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Tape<float>;
template class Tape<double>;
template float global_grad_norm<float>(const ParamStore<float>&);
template double global_grad_norm<double>(const ParamStore<double>&);
template void adam_step<float>(ParamStore<float>&, AdamState<float>&, const AdamConfig<float>&);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&,
                                const AdamConfig<double>&);
template void polyak_update<float>(ParamStore<float>&, const ParamStore<float>&, double);
template void polyak_update<double>(ParamStore<double>&, const ParamStore<double>&, double);
template float param_distance<float>(const ParamStore<float>&, const ParamStore<float>&);
template double param_distance<double>(const ParamStore<double>&, const ParamStore<double>&);

}  // namespace amp::ad
