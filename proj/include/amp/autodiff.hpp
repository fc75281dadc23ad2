#pragma once

// Minimal reverse-mode tape over dense row-major 2-D arrays.  Templated on
// the scalar type: training runs in float, the gradient-check suites run the
// same graphs in double.  Composite operations (attention, batch norm, the
// marginalized cross-entropy) are single tape nodes with hand-written
// backward passes; everything routes its inner loops through amp::kernels.

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amp/error.hpp"

namespace amp::ad {

// Named parameter arrays.  The store owns values and gradient buffers; tapes
// alias them so backward() accumulates straight into the store.
template <class Real>
class ParamStore {
  public:
    struct Entry {
        std::string name;
        int rows = 0, cols = 0;
        std::vector<Real> v, g;
    };

    // Registers (or finds) an entry.  init_scale > 0 fills with uniform
    // [-s, s] noise from the given generator state; 0 leaves zeros.
    Entry& add(const std::string& name, int rows, int cols, Real init_scale,
               std::uint64_t* seed);
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::deque<Entry>& entries() { return entries_; }
    const std::deque<Entry>& entries() const { return entries_; }
    std::size_t value_count() const;
    void zero_grad();

  private:
    // deque: Entry addresses stay stable while tapes alias their buffers
    std::deque<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Running statistics for one batch-norm layer.
template <class Real>
struct BnStats {
    std::vector<Real> mean, var;  // per feature
    bool warm = false;
};

template <class Real>
class Tape {
  public:
    using Id = int;

    // Leaves ------------------------------------------------------------
    Id input(int rows, int cols, const Real* data = nullptr);      // no gradient kept
    Id param(typename ParamStore<Real>::Entry& e);                 // aliases the store

    // Shape and data access ---------------------------------------------
    int rows(Id a) const { return nodes_[a].r; }
    int cols(Id a) const { return nodes_[a].c; }
    Real* val(Id a) { return nodes_[a].v; }
    const Real* val(Id a) const { return nodes_[a].v; }
    Real* grad(Id a) { return nodes_[a].g; }

    // Primitives ---------------------------------------------------------
    Id matmul(Id a, Id b);        // [m,k]x[k,n]
    Id matmul_nt(Id a, Id b);     // [m,k]x[n,k]^T -> [m,n]
    Id add(Id a, Id b);           // same shape
    Id mul(Id a, Id b);           // elementwise, same shape
    Id add_row(Id a, Id row);     // broadcast a [1,n] row over every row of a
    Id scale(Id a, Real c);
    Id relu(Id a);
    Id concat_cols(Id a, Id b);
    Id gather_rows(Id table, const std::vector<int>& idx);  // embedding lookup
    Id layer_norm(Id a, Id gamma, Id beta);                 // per row, eps 1e-5
    Id batch_norm(Id a, Id gamma, Id beta, BnStats<Real>& stats, bool train,
                  Real momentum = Real(0.99));
    Id softmax_rows(Id a);
    // Multi-head scaled-dot-product attention; q [Tq,d], k,v [Tk,d].
    Id attention(Id q, Id k, Id v, int heads);
    // copy-slot logit layout helper: out[r, f*w + j] = sent[r, f] + idx[r, j]
    Id outer_add(Id sent, Id idx);
    Id sum(Id a);  // -> [1,1]
    // Mean over rows of -log(sum of softmax(logits[r]) over slots[r]).
    // Each slot group must be nonempty.
    Id marginal_cross_entropy(Id logits, const std::vector<std::vector<int>>& slots);

    void backward(Id loss_node);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        int r = 0, c = 0;
        Real* v = nullptr;
        Real* g = nullptr;
        std::vector<Real> own_v, own_g;
        std::vector<Real> aux;          // op-specific saved forward state
        std::function<void(Tape&, Node&)> back;
        Id a = -1, b = -1, c3 = -1;     // parent ids
    };

    Id push(int r, int c);
    void check2(const char* op, Id a, Id b) const;

    std::deque<Node> nodes_;
};

// Adam with global-norm gradient clipping.  State lives beside the store.
template <class Real>
struct AdamState {
    std::vector<std::vector<Real>> m, v;  // per entry
    std::int64_t t = 0;
};

template <class Real>
struct AdamConfig {
    Real lr = Real(1e-5);    // paper default
    Real beta1 = Real(0.9);
    Real beta2 = Real(0.98); // paper default
    Real eps = Real(1e-8);
    Real clip = Real(1.0);   // global-norm threshold; <= 0 disables
};

template <class Real>
Real global_grad_norm(const ParamStore<Real>& params);

template <class Real>
void adam_step(ParamStore<Real>& params, AdamState<Real>& state, const AdamConfig<Real>& cfg);

// target <- (1 - 1/horizon) * target + (1/horizon) * online
template <class Real>
void polyak_update(ParamStore<Real>& target, const ParamStore<Real>& online, double horizon);

template <class Real>
Real param_distance(const ParamStore<Real>& a, const ParamStore<Real>& b);  // L2

}  // namespace amp::ad
