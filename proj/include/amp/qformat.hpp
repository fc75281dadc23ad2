#pragma once

// Question and answer wire formats for the five tasks.  Both the task
// engines and the decomposition expert build and parse questions through
// these helpers; the expert never needs a Context.

#include <array>
#include <optional>

#include "amp/tokens.hpp"

namespace amp::tasks {

// ---- Permutation powering -------------------------------------------------
// Question: binary digits of k (MSB first, 1 <= k < 64) followed by the
// element x as an identifier pair.  k == 1 is the primitive sigma(x).
Question make_perm_question(int k, int x);
struct PermQuestion {
    int k = 0;
    int x = 0;
};
std::optional<PermQuestion> parse_perm_question(const Question& q);

// ---- Sequential assignments ----------------------------------------------
Question make_value_question(int var);               // recursive: value of x
Question make_def_question(int var);                 // primitive: definition of x
Question make_flookup_question(int a, int b);        // primitive: f(a, b)
std::optional<int> parse_value_question(const Question& q);
std::optional<int> parse_def_question(const Question& q);
std::optional<std::pair<int, int>> parse_flookup_question(const Question& q);
// Definition answers: either a single integer symbol (constant) or the
// identifier pairs of (y, z).
struct Definition {
    bool is_constant = false;
    int constant = 0;
    int y = 0, z = 0;
};
Answer make_def_answer(const Definition& d);
std::optional<Definition> parse_def_answer(const Answer& a);

// ---- Union find -----------------------------------------------------------
enum class UfForm { Label, PathVertex, HowFar };
Question make_uf_question(UfForm form, int x);       // recursive forms
Question make_uf_neighbor_question(int x);           // primitive: random neighbor
Question make_uf_connected_question(int x, int y);   // primitive
Question make_uf_labeled_question(int x);            // primitive: is x labeled
struct UfQuestion {
    UfForm form;
    int x = 0;
};
std::optional<UfQuestion> parse_uf_question(const Question& q);

// ---- Wildcard search ------------------------------------------------------
// Pattern digits: 0, 1, or kWildcard.  Zero wildcards is the primitive f(x).
inline constexpr int kWildcard = 2;
using WcPattern = std::array<int, 6>;
Question make_wc_question(const WcPattern& pattern);
std::optional<WcPattern> parse_wc_question(const Question& q);
int wc_wildcard_count(const WcPattern& p);

// ---- Shortest path --------------------------------------------------------
Question make_sp_dist_question(int x, int y);        // recursive
Question make_sp_first_question(int x, int y);       // recursive
Question make_sp_neighbor_question(int x);           // primitive: random neighbor
Question make_sp_edge_question(int x, int y);        // primitive: edge x -> y?
enum class SpForm { Distance, FirstVertex };
struct SpQuestion {
    SpForm form;
    int x = 0, y = 0;
};
std::optional<SpQuestion> parse_sp_question(const Question& q);

// ---- Answers --------------------------------------------------------------
Answer make_element_answer(TaskId task, int v);      // identifier pair
Answer make_int_answer(TaskId task, int v);          // single integer symbol
Answer make_yes_answer(TaskId task);
Answer make_no_answer(TaskId task);
std::optional<int> parse_element_answer(TaskId task, const Answer& a);
std::optional<int> parse_int_answer(TaskId task, const Answer& a);
std::optional<bool> parse_yes_no_answer(TaskId task, const Answer& a);

// True if every token of the sequence is in the task vocabulary.
bool in_vocabulary(TaskId task, const std::vector<Token>& toks);

}  // namespace amp::tasks
