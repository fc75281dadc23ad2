#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amp/amplify.hpp"
#include "amp/hprime.hpp"
#include "amp/qformat.hpp"

using namespace amp;
using namespace amp::hprime;
namespace tk = amp::tasks;

namespace {

constexpr tk::TaskId kPerm = tk::TaskId::PermutationPowering;

std::vector<amplify::Transcript> coded_transcripts(int count, std::uint64_t seed, int n = 8) {
    auto X = learners::ground_truth_wrapper(kPerm);
    amplify::CodedExpert H;
    Rng r(seed);
    std::vector<amplify::Transcript> out;
    for (int i = 0; i < count; ++i) {
        Rng cr = r.split(i);
        auto ctx = tk::gen_context(kPerm, n, cr);
        auto q = tk::sample_question(kPerm, ctx, cr);
        out.push_back(amplify::amplify_answer(H, *X, ctx, q, cr).transcript);
    }
    return out;
}

}  // namespace

TEST_CASE("decision encoding round-trips") {
    auto sub = decompose::ExpertDecision{decompose::AskSub{tk::make_perm_question(3, 2)}};
    auto prim = decompose::ExpertDecision{decompose::AskPrimitive{tk::make_perm_question(1, 5)}};
    auto fin = decompose::ExpertDecision{decompose::Final{tk::make_element_answer(kPerm, 7)}};
    for (const auto& d : {sub, prim, fin}) {
        auto toks = encode_decision(kPerm, d);
        auto back = decode_decision(kPerm, toks);
        REQUIRE(back.has_value());
        CHECK(encode_decision(kPerm, *back) == toks);
        CHECK(back->index() == d.index());
    }
    // The markers sit just past the task vocabulary and differ.
    CHECK(primitive_marker(kPerm) == tk::vocab(kPerm).size());
    CHECK(final_marker(kPerm) == tk::vocab(kPerm).size() + 1);
    CHECK(hprime_vocab_size(kPerm) == static_cast<int>(tk::vocab(kPerm).size()) + 2);
}

TEST_CASE("malformed decisions decode to nullopt") {
    CHECK(!decode_decision(kPerm, {}));
    CHECK(!decode_decision(kPerm, {final_marker(kPerm)}));          // marker, no payload
    CHECK(!decode_decision(kPerm, {primitive_marker(kPerm)}));
    CHECK(!decode_decision(kPerm, {0, final_marker(kPerm)}));       // marker inside payload
    CHECK(!decode_decision(kPerm, {final_marker(kPerm), final_marker(kPerm)}));
}

TEST_CASE("transcript items: layout and kind slot") {
    auto root = tk::make_perm_question(6, 1);
    std::vector<decompose::EpisodeStep> steps;
    steps.push_back({tk::make_perm_question(3, 1), tk::make_element_answer(kPerm, 4), false});
    steps.push_back({tk::make_perm_question(1, 4), tk::make_element_answer(kPerm, 2), true});
    auto items = transcript_items(kPerm, root, steps);
    REQUIRE(items.size() == 3);
    tk::Token pad = tk::vocab(kPerm).pad();
    for (const auto& it : items) CHECK(it.size() == 13);
    // Root question then pad fill.
    for (std::size_t j = 0; j < root.tokens.size(); ++j) CHECK(items[0][j] == root.tokens[j]);
    for (std::size_t j = root.tokens.size(); j < 13; ++j) CHECK(items[0][j] == pad);
    // Question at 0..7, answer at 8..11, kind slot at 12.
    CHECK(items[1][12] == pad);
    CHECK(items[2][12] == primitive_marker(kPerm));
    CHECK(items[2][0] == steps[1].q.tokens[0]);
    CHECK(items[2][8] == steps[1].a.tokens[0]);
}

TEST_CASE("first decision depends on the root question only") {
    auto hp = hprime_predictor(kPerm, model::ModelConfig::desk(), 5);
    decompose::EpisodeState s1{kPerm, tk::make_perm_question(6, 1), {}};
    decompose::EpisodeState s2{kPerm, tk::make_perm_question(6, 1), {}};
    Rng r1(1), r2(999);
    // No context input exists, and the rng stream is irrelevant (greedy).
    auto d1 = hp->next(s1, r1);
    auto d2 = hp->next(s2, r2);
    CHECK(encode_decision(kPerm, d1) == encode_decision(kPerm, d2));
}

TEST_CASE("untrained predictor still terminates episodes") {
    auto hp = hprime_predictor(kPerm, model::ModelConfig::desk(), 5);
    auto X = learners::random_learner(kPerm);
    amplify::OracleLedger ledger;
    Rng r(31);
    for (int i = 0; i < 5; ++i) {
        Rng cr = r.split(i);
        auto ctx = tk::gen_context(kPerm, 8, cr);
        auto q = tk::sample_question(kPerm, ctx, cr);
        auto res = amplify::amplify_answer(*hp, *X, ctx, q, cr, &ledger);
        CHECK(tk::in_vocabulary(kPerm, res.answer.tokens));
    }
    CHECK(ledger[kPerm].hprime > 0);
    CHECK(ledger[kPerm].coded_h == 0);
}

TEST_CASE("trained H' reproduces coded-H decisions on held-out transcripts") {
    auto hp = hprime_predictor(kPerm, model::ModelConfig::desk(), 5);
    hp->adam_config().lr = 1e-3f;
    auto held = coded_transcripts(40, 77);
    Rng r(1234);
    double acc = 0.0;
    for (int step = 0; step < 2500; ++step) {
        Rng br = r.split(step);
        hp->train_step(coded_transcripts(8, br.next_u64()));
        if (step >= 500 && step % 100 == 99) {
            acc = hp->decision_accuracy(held);
            if (acc == 1.0) break;
        }
    }
    CHECK(acc == 1.0);

    // Behavioral equivalence episode-by-episode against the coded expert.
    auto X = learners::ground_truth_wrapper(kPerm);
    amplify::CodedExpert coded;
    Rng er(555);
    for (int i = 0; i < 20; ++i) {
        Rng c1 = er.split(i), c2 = er.split(i);
        auto ctx = tk::gen_context(kPerm, 8, c1);
        tk::gen_context(kPerm, 8, c2);
        auto q = tk::sample_question(kPerm, ctx, c1);
        tk::sample_question(kPerm, ctx, c2);
        auto want = amplify::amplify_answer(coded, *X, ctx, q, c1);
        auto got = amplify::amplify_answer(*hp, *X, ctx, q, c2);
        CHECK(got.answer == want.answer);
        REQUIRE(got.transcript.pairs.size() == want.transcript.pairs.size());
        for (std::size_t p = 0; p < want.transcript.pairs.size(); ++p) {
            CHECK(got.transcript.pairs[p].q == want.transcript.pairs[p].q);
            CHECK(got.transcript.pairs[p].primitive == want.transcript.pairs[p].primitive);
        }
    }
}
