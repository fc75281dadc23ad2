#pragma once

// The five task families: context generation, question distributions,
// primitive answering, brute-force ground truth, and depth accounting.

#include <string>

#include "amp/qformat.hpp"
#include "amp/rng.hpp"
#include "amp/tokens.hpp"

namespace amp::tasks {

inline constexpr int kMinSize = 8;
inline constexpr int kMaxSize = 64;

// Union find needs a perfect square (sqrt(N) components); the curriculum
// rounds requested sizes to the nearest member of this set.
int round_size_for_task(TaskId task, int n);
bool valid_size(TaskId task, int n);

// Uniformly random valid context of size n.  Deterministic given rng state.
Context gen_context(TaskId task, int n, Rng& rng);

// Draws a recursive question from the task's distribution D.
Question sample_question(TaskId task, const Context& ctx, Rng& rng);

// Exact answer to a primitive question read from the context.  Random-neighbor
// primitives consume rng; everything else ignores it.
Answer answer_primitive(TaskId task, const Context& ctx, const Question& q, Rng& rng);

// Brute-force oracle (iterate sigma / topological evaluation / forest
// traversal / exhaustive sum / BFS).  Unreachable shortest-path targets
// yield "?".
Answer ground_truth(TaskId task, const Context& ctx, const Question& q);

// Independent second oracle implementation (binary powering, memoized
// recursion, disjoint-set union, recursive pattern split, Floyd-Warshall).
Answer ground_truth_alt(TaskId task, const Context& ctx, const Question& q);

// Recursion depth the question requires under the task's decomposition.
int question_depth(TaskId task, const Context& ctx, const Question& q);

// Structural validator for gen_context output (bijection / single-definition
// DAG / forest component count / nonzero count / edge count).
bool validate_context(const Context& ctx, std::string* why = nullptr);

// Enumerates the shape-valid answers for a recursive question (used by the
// reference learners).  Includes the correct answer; never includes "?".
std::vector<Answer> answer_candidates(TaskId task, const Context& ctx, const Question& q);

// Textual serialization: header line "task=<id> n=<N>", one fact per line,
// tokens space-separated.  Bit-exact across runs.
std::string context_to_text(const Context& ctx);
Context context_from_text(const std::string& text);

}  // namespace amp::tasks
