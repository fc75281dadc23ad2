// Acceptance gate: the eight primary criteria, one pass/fail line each.
// Criteria 1-4 are computed here; criteria 5-8 audit the artifacts of the
// desk training runs (directory given as argv[1]).  Exit 0 iff all pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "amp/amplify.hpp"
#include "amp/autodiff.hpp"
#include "amp/model.hpp"
#include "amp/qformat.hpp"
#include "amp/tasks.hpp"
#include "amp/trainloop.hpp"

using namespace amp;
namespace tk = amp::tasks;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

// ---- criterion 1: Amplify(coded-H, ground-truth-X) is oracle-exact --------

Verdict criterion1() {
    amplify::CodedExpert expert;
    std::uint64_t mismatches = 0, episodes = 0;
    for (tk::TaskId task : tk::kAllTasks) {
        auto x = learners::ground_truth_wrapper(task);
        Rng rng(0x0C1u ^ static_cast<std::uint64_t>(task));
        for (int n : {8, 16, 32, 64}) {
            int size = tk::round_size_for_task(task, n);
            for (int e = 0; e < 1000; ++e) {
                tk::Context ctx = tk::gen_context(task, size, rng);
                tk::Question q = tk::sample_question(task, ctx, rng);
                auto res = amplify::amplify_answer(expert, *x, ctx, q, rng);
                mismatches += res.answer != tk::ground_truth(task, ctx, q);
                ++episodes;
            }
        }
    }
    std::ostringstream d;
    d << mismatches << " mismatches in " << episodes << " episodes";
    return {mismatches == 0, d.str()};
}

// ---- criterion 2: the two oracle implementations agree --------------------

Verdict criterion2() {
    std::uint64_t mismatches = 0, episodes = 0;
    for (tk::TaskId task : tk::kAllTasks) {
        Rng rng(0x0C2u ^ static_cast<std::uint64_t>(task));
        for (int n : {8, 16}) {
            int size = tk::round_size_for_task(task, n);
            for (int e = 0; e < 1000; ++e) {
                tk::Context ctx = tk::gen_context(task, size, rng);
                tk::Question q = tk::sample_question(task, ctx, rng);
                mismatches += tk::ground_truth(task, ctx, q) != tk::ground_truth_alt(task, ctx, q);
                ++episodes;
            }
        }
    }
    std::ostringstream d;
    d << mismatches << " mismatches in " << episodes << " episodes";
    return {mismatches == 0, d.str()};
}

// ---- criterion 3: finite-difference gradient checks -----------------------

// Central differences with one Richardson step at up to `max_coords` random
// coordinates.  Returns the worst relative error.
template <class Real>
double fd_worst(ad::ParamStore<Real>& s, const std::function<double(ad::ParamStore<Real>&)>& f,
                int max_coords, double h, Rng& rng) {
    s.zero_grad();
    f(s);
    std::vector<std::vector<double>> base;
    for (auto& e : s.entries()) base.emplace_back(e.g.begin(), e.g.end());
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    std::size_t ei = 0;
    for (auto& e : s.entries()) {
        for (std::size_t i = 0; i < e.v.size(); ++i) coords.emplace_back(ei, i);
        ++ei;
    }
    for (std::size_t i = coords.size(); i > 1; --i)
        std::swap(coords[i - 1], coords[rng.next_below(i)]);
    if (static_cast<int>(coords.size()) > max_coords) coords.resize(max_coords);
    double worst = 0;
    for (auto [e_idx, i] : coords) {
        auto& e = *std::next(s.entries().begin(), static_cast<long>(e_idx));
        double saved = e.v[i];
        auto central = [&](double step) {
            e.v[i] = static_cast<Real>(saved + step);
            double up = f(s);
            e.v[i] = static_cast<Real>(saved - step);
            double dn = f(s);
            return (up - dn) / (2 * step);
        };
        double fd = (4 * central(h / 2) - central(h)) / 3;
        e.v[i] = static_cast<Real>(saved);
        double got = base[e_idx][i];
        worst = std::max(worst,
                         std::abs(fd - got) / std::max(1.0, std::max(std::abs(fd), std::abs(got))));
    }
    return worst;
}

using DStore = ad::ParamStore<double>;
using DT = ad::Tape<double>;

DStore d_store(std::initializer_list<std::tuple<const char*, int, int>> specs) {
    std::uint64_t seed = 0x0C3u;
    DStore s;
    for (auto& [name, r, c] : specs) s.add(name, r, c, 0.5, &seed);
    return s;
}

Verdict criterion3() {
    Rng rng(0x0C3u);
    double worst_prim = 0;
    auto prim = [&](DStore s, const std::function<DT::Id(DT&, DStore&)>& g) {
        worst_prim = std::max(
            worst_prim, fd_worst<double>(
                            s,
                            [&](DStore& st) {
                                DT t;
                                auto l = t.sum(g(t, st));
                                t.backward(l);
                                return static_cast<double>(t.val(l)[0]);
                            },
                            100, 1e-5, rng));
    };
    auto P = [](DT& t, DStore& s, const char* n) { return t.param(s.at(n)); };
    prim(d_store({{"A", 3, 4}, {"B", 4, 5}}),
         [&](DT& t, DStore& s) { return t.matmul(P(t, s, "A"), P(t, s, "B")); });
    prim(d_store({{"A", 3, 4}, {"B", 5, 4}}),
         [&](DT& t, DStore& s) { return t.matmul_nt(P(t, s, "A"), P(t, s, "B")); });
    prim(d_store({{"A", 3, 4}, {"B", 3, 4}}),
         [&](DT& t, DStore& s) { return t.add(P(t, s, "A"), P(t, s, "B")); });
    prim(d_store({{"A", 3, 4}, {"B", 3, 4}}),
         [&](DT& t, DStore& s) { return t.mul(P(t, s, "A"), P(t, s, "B")); });
    prim(d_store({{"A", 3, 4}, {"r", 1, 4}}),
         [&](DT& t, DStore& s) { return t.add_row(P(t, s, "A"), P(t, s, "r")); });
    prim(d_store({{"A", 3, 4}}), [&](DT& t, DStore& s) { return t.scale(P(t, s, "A"), 1.7); });
    prim(d_store({{"A", 3, 4}}), [&](DT& t, DStore& s) { return t.relu(P(t, s, "A")); });
    prim(d_store({{"A", 3, 2}, {"B", 3, 4}}),
         [&](DT& t, DStore& s) { return t.concat_cols(P(t, s, "A"), P(t, s, "B")); });
    prim(d_store({{"E", 6, 3}}),
         [&](DT& t, DStore& s) { return t.gather_rows(P(t, s, "E"), {4, 0, 4, 2}); });
    prim(d_store({{"A", 3, 5}, {"g", 1, 5}, {"b", 1, 5}}), [&](DT& t, DStore& s) {
        return t.layer_norm(P(t, s, "A"), P(t, s, "g"), P(t, s, "b"));
    });
    prim(d_store({{"A", 4, 5}, {"g", 1, 5}, {"b", 1, 5}}), [&](DT& t, DStore& s) {
        ad::BnStats<double> stats;  // fresh per probe: train-mode grads only
        return t.batch_norm(P(t, s, "A"), P(t, s, "g"), P(t, s, "b"), stats, true, 0.9);
    });
    prim(d_store({{"A", 3, 5}}), [&](DT& t, DStore& s) { return t.softmax_rows(P(t, s, "A")); });
    prim(d_store({{"Q", 3, 6}, {"K", 4, 6}, {"V", 4, 6}}), [&](DT& t, DStore& s) {
        return t.attention(P(t, s, "Q"), P(t, s, "K"), P(t, s, "V"), 2);
    });
    prim(d_store({{"sent", 2, 3}, {"idx", 2, 4}}),
         [&](DT& t, DStore& s) { return t.outer_add(P(t, s, "sent"), P(t, s, "idx")); });
    {
        DStore s = d_store({{"L", 3, 7}});
        worst_prim = std::max(
            worst_prim, fd_worst<double>(
                            s,
                            [](DStore& st) {
                                DT t;
                                auto l = t.marginal_cross_entropy(t.param(st.at("L")),
                                                                  {{0, 3}, {2}, {5, 6, 1}});
                                t.backward(l);
                                return static_cast<double>(t.val(l)[0]);
                            },
                            100, 1e-5, rng));
    }

    // Full desk-scale model graph, standard precision, inference-mode norms
    // (the train-mode batch-norm path is covered above and is stateful).
    model::SeqModel<float> net(tk::TaskId::PermutationPowering, model::ModelConfig::desk(), 0, 8,
                               128, false, 0x0C3u);
    Rng crng(0x0C3Fu);
    tk::Context ctx = tk::gen_context(tk::TaskId::PermutationPowering, 8, crng);
    std::vector<std::vector<tk::Token>> padded;
    for (const auto& f : ctx.facts) padded.push_back(net.pad_tokens(f.tokens, 8));
    std::vector<tk::Question> qs = {tk::make_perm_question(3, 2), tk::make_perm_question(1, 5)};
    std::vector<tk::Answer> as;
    for (const auto& q : qs) as.push_back(tk::ground_truth(tk::TaskId::PermutationPowering, ctx, q));
    auto full_loss = [&](ad::ParamStore<float>&) {
        ad::Tape<float> t;
        auto enc = net.encode(t, net.embed_sentences(t, padded), false);
        std::vector<std::vector<tk::Token>> qpad;
        for (const auto& q : qs) qpad.push_back(net.pad_tokens(q.tokens, 8));
        auto avecs = net.decode(t, net.embed_queries(t, qpad), enc, false);
        std::vector<int> vor, pos;
        std::vector<tk::Token> prev;
        std::vector<std::vector<int>> slots;
        tk::Token stop = net.pad_tokens({}, 1)[0];
        for (std::size_t qi = 0; qi < as.size(); ++qi) {
            std::vector<tk::Token> toks = as[qi].tokens;
            toks.push_back(stop);
            for (std::size_t ti = 0; ti < toks.size(); ++ti) {
                vor.push_back(static_cast<int>(qi));
                pos.push_back(static_cast<int>(ti));
                prev.push_back(ti == 0 ? stop : toks[ti - 1]);
                slots.push_back(net.target_slots(toks[ti], padded));
            }
        }
        auto em = net.emit_states(t, avecs, vor, prev, pos);
        auto l = t.marginal_cross_entropy(net.output_logits(t, em, enc, padded), slots);
        t.backward(l);
        return static_cast<double>(t.val(l)[0]);
    };
    double worst_full = fd_worst<float>(net.params(), full_loss, 100, 3e-2, rng);

    std::ostringstream d;
    d << "primitives worst rel err " << worst_prim << " (tol 1e-6), full graph " << worst_full
      << " (tol 1e-3)";
    return {worst_prim < 1e-6 && worst_full < 1e-3, d.str()};
}

// ---- criterion 4: amplification-gain dynamics -----------------------------

Verdict criterion4() {
    const double p = 0.9, predicted = p * p;  // two fallible subcalls
    auto x = learners::noisy_oracle_learner(tk::TaskId::PermutationPowering, {p});
    amplify::CodedExpert expert;
    Rng rng(0x0C4u);
    int hits = 0, episodes = 10000;
    for (int e = 0; e < episodes; ++e) {
        tk::Context ctx = tk::gen_context(tk::TaskId::PermutationPowering, 64, rng);
        tk::Question q;
        do {
            q = tk::sample_question(tk::TaskId::PermutationPowering, ctx, rng);
        } while (tk::question_depth(tk::TaskId::PermutationPowering, ctx, q) != 2);
        auto res = amplify::amplify_answer(expert, *x, ctx, q, rng);
        hits += res.answer == tk::ground_truth(tk::TaskId::PermutationPowering, ctx, q);
    }
    double acc = static_cast<double>(hits) / episodes;
    std::ostringstream d;
    d << "measured " << acc << " vs predicted " << predicted << " (tol 0.02)";
    return {std::abs(acc - predicted) <= 0.02, d.str()};
}

// ---- run-artifact parsing for criteria 5-8 --------------------------------

struct RunInfo {
    std::string dir;
    std::map<std::string, std::string> manifest;
    std::vector<train::MetricsRow> metrics;

    std::string mode() const { return manifest.count("mode") ? manifest.at("mode") : ""; }
    long seed() const { return manifest.count("seed") ? std::stol(manifest.at("seed")) : -1; }
    long steps_to_threshold() const {
        return manifest.count("steps_to_threshold") ? std::stol(manifest.at("steps_to_threshold"))
                                                    : -1;
    }
    double num(const std::string& key, double fallback) const {
        return manifest.count(key) ? std::stod(manifest.at(key)) : fallback;
    }
};

std::vector<RunInfo> load_runs(const std::string& root) {
    namespace fs = std::filesystem;
    std::vector<RunInfo> runs;
    if (root.empty() || !fs::is_directory(root)) return runs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_directory() || !fs::exists(e.path() / "manifest.txt")) continue;
        RunInfo r;
        r.dir = e.path().filename().string();
        std::ifstream mf(e.path() / "manifest.txt");
        std::string line;
        while (std::getline(mf, line)) {
            auto sep = line.find(" = ");
            if (sep != std::string::npos) r.manifest[line.substr(0, sep)] = line.substr(sep + 3);
        }
        std::ifstream cs(e.path() / "metrics.csv");
        bool header = true;
        while (std::getline(cs, line)) {
            if (header) {
                header = false;
                continue;
            }
            if (!line.empty()) r.metrics.push_back(train::metrics_from_csv(line));
        }
        runs.push_back(std::move(r));
    }
    std::sort(runs.begin(), runs.end(),
              [](const RunInfo& a, const RunInfo& b) { return a.dir < b.dir; });
    return runs;
}

const RunInfo* find_run(const std::vector<RunInfo>& runs, const std::string& mode, long seed) {
    for (const auto& r : runs)
        if (r.mode() == mode && r.seed() == seed) return &r;
    return nullptr;
}

// Seeds where 5(a) and 5(b) both hold; used again by criteria 6 and 7.
std::vector<long> passing_seeds(const std::vector<RunInfo>& runs, std::string* detail) {
    std::ostringstream d;
    std::vector<long> pass;
    for (long seed : {1L, 2L, 3L}) {
        const RunInfo* sup = find_run(runs, "supervised", seed);
        const RunInfo* ia = find_run(runs, "ia", seed);
        d << " s" << seed << "[";
        if (!sup || !ia) {
            d << "missing]";
            continue;
        }
        long ss = sup->steps_to_threshold(), is = ia->steps_to_threshold();
        bool sup_ok = ss > 0 && ss <= 50000;
        bool blind = ia->num("ground_truth_training_calls", 1) == 0;
        bool ia_ok = sup_ok && is > 0 && is <= 2 * ss && blind;
        d << "sup " << ss << (sup_ok ? "" : " fail") << ", ia " << is
          << (blind ? "" : " unblind") << (ia_ok ? "" : " fail") << "]";
        if (sup_ok && ia_ok) pass.push_back(seed);
    }
    if (detail) *detail = d.str();
    return pass;
}

Verdict criterion5(const std::vector<RunInfo>& runs) {
    std::string detail;
    auto pass = passing_seeds(runs, &detail);
    std::ostringstream d;
    d << pass.size() << "/3 seeds pass (need 2):" << detail;
    return {pass.size() >= 2, d.str()};
}

Verdict criterion6(const std::vector<RunInfo>& runs) {
    auto pass = passing_seeds(runs, nullptr);
    if (pass.empty()) return {false, "no run satisfies criterion 5(b)"};
    std::ostringstream d;
    bool ok = true;
    for (long seed : pass) {
        const RunInfo* ia = find_run(runs, "ia", seed);
        long last = -1;
        for (const auto& r : ia->metrics) last = std::max(last, static_cast<long>(r.step));
        double worst = 1.0;
        int depths = 0;
        for (const auto& r : ia->metrics) {
            if (r.step != last || r.depth < 0) continue;
            ++depths;
            worst = std::min(worst, r.accuracy_amplified - r.accuracy_X);
        }
        bool this_ok = depths > 0 && worst >= -0.02;
        ok = ok && this_ok;
        d << " s" << seed << "[" << depths << " depths, min amplified-X gap " << worst << "]";
    }
    return {ok, "final-checkpoint depth ordering:" + d.str()};
}

Verdict criterion7(const std::vector<RunInfo>& runs) {
    auto pass = passing_seeds(runs, nullptr);
    if (pass.empty()) return {false, "no run satisfies criterion 5(b)"};
    std::ostringstream d;
    bool ok = true;
    for (long seed : pass) {
        const RunInfo* ia = find_run(runs, "ia", seed);
        double calls = ia->num("coded_h_calls", -1), pairs = ia->num("pairs_consumed", 0);
        bool this_ok = calls >= 0 && pairs > 0 && calls < 0.10 * pairs;
        ok = ok && this_ok;
        d << " s" << seed << "[" << calls << " coded-H calls / " << pairs << " pairs]";
    }
    return {ok, "coded-H calls < 10% of pairs consumed:" + d.str()};
}

Verdict criterion8(const std::vector<RunInfo>& runs) {
    if (runs.empty()) return {false, "no run artifacts"};
    std::ostringstream d;
    bool ok = true;
    for (const auto& r : runs) {
        double usage = r.num("max_usage_seen", 99);
        double polyak = r.num("min_polyak_distance", -1);
        bool adv_ok = true;
        std::istringstream adv(r.manifest.count("curriculum_advances")
                                   ? r.manifest.at("curriculum_advances")
                                   : "");
        std::string ev;
        while (adv >> ev) {  // step:difficulty:accuracy:considered
            std::replace(ev.begin(), ev.end(), ':', ' ');
            std::istringstream f(ev);
            long step, diff, considered;
            double acc;
            if (!(f >> step >> diff >> acc >> considered) || acc < 0.85 || considered <= 0)
                adv_ok = false;
        }
        bool this_ok = usage <= 10 && polyak > 0 && adv_ok;
        ok = ok && this_ok;
        d << " " << r.dir << "[usage " << usage << ", polyak " << polyak
          << (adv_ok ? "" : ", bad advance") << "]";
    }
    return {ok, "replay/curriculum/Polyak audits:" + d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::string runs_dir = argc > 1 ? argv[1] : "runs/acceptance";
    auto runs = load_runs(runs_dir);

    struct Entry {
        int id;
        const char* name;
        std::function<Verdict()> fn;
    };
    std::vector<Entry> entries = {
        {1, "decomposition oracle-exactness", criterion1},
        {2, "double-implementation oracle agreement", criterion2},
        {3, "gradient correctness", criterion3},
        {4, "amplification-gain dynamics", criterion4},
        {5, "desk-scale learning, supervised and amplified", [&] { return criterion5(runs); }},
        {6, "depth ordering at the final checkpoint", [&] { return criterion6(runs); }},
        {7, "sample-frugality ratio", [&] { return criterion7(runs); }},
        {8, "training-loop audits", [&] { return criterion8(runs); }},
    };

    int failures = 0;
    for (auto& e : entries) {
        Verdict v;
        try {
            v = e.fn();
        } catch (const std::exception& ex) {
            v = {false, std::string("exception: ") + ex.what()};
        }
        failures += !v.pass;
        std::printf("criterion %d (%s): %s — %s\n", e.id, e.name, v.pass ? "pass" : "FAIL",
                    v.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
