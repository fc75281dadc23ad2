#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "amp/error.hpp"

namespace amp::tasks {

enum class TaskId {
    PermutationPowering,
    SequentialAssignments,
    UnionFind,
    WildcardSearch,
    ShortestPath,
};

inline constexpr TaskId kAllTasks[] = {
    TaskId::PermutationPowering, TaskId::SequentialAssignments, TaskId::UnionFind,
    TaskId::WildcardSearch,      TaskId::ShortestPath,
};

const char* task_name(TaskId task);
TaskId task_from_name(const std::string& name);

using Token = std::uint16_t;

struct Fact {
    std::vector<Token> tokens;  // length 2..8
    bool operator==(const Fact&) const = default;
};

struct Context {
    TaskId task;
    int n = 0;                 // instance size N
    std::vector<Fact> facts;   // unordered set of facts
    std::uint64_t id = 0;      // stable identifier for transcripts/replay
};

enum class QuestionKind { Primitive, Recursive };

struct Question {
    std::vector<Token> tokens;
    QuestionKind kind = QuestionKind::Recursive;
    bool operator==(const Question&) const = default;
};

struct Answer {
    std::vector<Token> tokens;
    bool operator==(const Answer&) const = default;
};

// Per-task token table.  Domain-element tasks carry the 8 identifiers a..h;
// every task carries "?" and a pad symbol (the pad never appears in facts,
// it exists for the model's fixed-width fact embedding).
class Vocab {
  public:
    Vocab(TaskId task, std::vector<std::string> names);

    TaskId task() const { return task_; }
    std::size_t size() const { return names_.size(); }
    const std::string& name(Token t) const;
    Token token(const std::string& name) const;
    bool contains(Token t) const { return t < names_.size(); }

    Token unknown() const { return unknown_; }  // "?"
    Token pad() const { return pad_; }

    // Domain elements 1..64 as identifier pairs.
    bool has_identifiers() const { return has_ids_; }
    void append_element(int v, std::vector<Token>& out) const;
    // Reads two identifier tokens at `pos`; returns 0 if not a valid pair.
    int read_element(const std::vector<Token>& toks, std::size_t pos) const;

    // Integer symbols ("each integer with a separate symbol").
    bool has_int(int v) const;
    Token int_token(int v) const;
    bool is_int(Token t) const;
    int int_value(Token t) const;

    std::string to_text(const std::vector<Token>& toks) const;
    std::vector<Token> from_text(const std::string& line) const;

  private:
    friend const Vocab& vocab(TaskId);
    TaskId task_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, Token> index_;
    Token unknown_ = 0, pad_ = 0;
    bool has_ids_ = false;
    int int_lo_ = 0, int_hi_ = -1;  // inclusive integer symbol range
    Token int_base_ = 0;
};

const Vocab& vocab(TaskId task);

inline Answer unknown_answer(TaskId task) { return Answer{{vocab(task).unknown()}}; }

inline bool is_unknown(TaskId task, const Answer& a) {
    return a.tokens.size() == 1 && a.tokens[0] == vocab(task).unknown();
}

}  // namespace amp::tasks
