#include <array>
#include <sstream>

#include "amp/qformat.hpp"
#include "amp/tokens.hpp"

namespace amp::tasks {

const char* task_name(TaskId task) {
    switch (task) {
        case TaskId::PermutationPowering: return "permutation";
        case TaskId::SequentialAssignments: return "assignments";
        case TaskId::UnionFind: return "unionfind";
        case TaskId::WildcardSearch: return "wildcard";
        case TaskId::ShortestPath: return "shortestpath";
    }
    throw ContractError("unknown task id");
}

TaskId task_from_name(const std::string& name) {
    for (TaskId t : kAllTasks)
        if (name == task_name(t)) return t;
    throw ContractError("unknown task name: " + name);
}

namespace {

const std::array<const char*, 8> kIdentifiers = {"a", "b", "c", "d", "e", "f", "g", "h"};

std::vector<std::string> build_names(TaskId task) {
    std::vector<std::string> names;
    auto ids = [&] {
        for (const char* s : kIdentifiers) names.emplace_back(s);
    };
    auto ints = [&](int lo, int hi) {
        for (int v = lo; v <= hi; ++v) names.push_back(std::to_string(v));
    };
    switch (task) {
        case TaskId::PermutationPowering:
            ids();
            names.insert(names.end(), {"0", "1"});
            break;
        case TaskId::SequentialAssignments:
            ids();
            ints(1, 8);
            names.emplace_back("def");
            break;
        case TaskId::UnionFind:
            ids();
            ints(0, 63);
            names.insert(names.end(), {"L", "P", "F", "RN", "C", "LBL", "yes", "no"});
            break;
        case TaskId::WildcardSearch:
            names.insert(names.end(), {"0", "1", "*"});
            ints(-64, 64);
            break;
        case TaskId::ShortestPath:
            ids();
            ints(0, 64);  // self-distance (shortest cycle) can reach N = 64
            names.insert(names.end(), {"D", "FV", "RN", "E", "yes", "no"});
            break;
    }
    names.emplace_back("?");
    names.emplace_back("<pad>");
    return names;
}

}  // namespace

Vocab::Vocab(TaskId task, std::vector<std::string> names) : task_(task), names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = static_cast<Token>(i);
    unknown_ = index_.at("?");
    pad_ = index_.at("<pad>");
    has_ids_ = task != TaskId::WildcardSearch;
    switch (task) {
        case TaskId::SequentialAssignments: int_lo_ = 1, int_hi_ = 8; break;
        case TaskId::UnionFind: int_lo_ = 0, int_hi_ = 63; break;
        case TaskId::ShortestPath: int_lo_ = 0, int_hi_ = 64; break;
        case TaskId::WildcardSearch: int_lo_ = -64, int_hi_ = 64; break;
        default: int_lo_ = 0, int_hi_ = -1; break;
    }
    if (int_lo_ <= int_hi_) int_base_ = index_.at(std::to_string(int_lo_));
}

const std::string& Vocab::name(Token t) const {
    if (!contains(t)) throw ContractError("token out of vocabulary");
    return names_[t];
}

Token Vocab::token(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown symbol: " + name);
    return it->second;
}

void Vocab::append_element(int v, std::vector<Token>& out) const {
    if (!has_ids_ || v < 1 || v > 64) throw ContractError("element out of range");
    out.push_back(static_cast<Token>((v - 1) / 8));
    out.push_back(static_cast<Token>((v - 1) % 8));
}

int Vocab::read_element(const std::vector<Token>& toks, std::size_t pos) const {
    if (!has_ids_ || pos + 2 > toks.size()) return 0;
    Token hi = toks[pos], lo = toks[pos + 1];
    if (hi >= 8 || lo >= 8) return 0;
    return hi * 8 + lo + 1;
}

bool Vocab::has_int(int v) const { return v >= int_lo_ && v <= int_hi_; }

Token Vocab::int_token(int v) const {
    if (!has_int(v)) throw ContractError("integer symbol out of range: " + std::to_string(v));
    return static_cast<Token>(int_base_ + (v - int_lo_));
}

bool Vocab::is_int(Token t) const {
    return int_lo_ <= int_hi_ && t >= int_base_ && t < int_base_ + (int_hi_ - int_lo_ + 1);
}

int Vocab::int_value(Token t) const {
    if (!is_int(t)) throw ContractError("not an integer symbol");
    return int_lo_ + (t - int_base_);
}

std::string Vocab::to_text(const std::vector<Token>& toks) const {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += ' ';
        out += name(toks[i]);
    }
    return out;
}

std::vector<Token> Vocab::from_text(const std::string& line) const {
    std::vector<Token> out;
    std::istringstream ss(line);
    std::string word;
    while (ss >> word) out.push_back(token(word));
    return out;
}

const Vocab& vocab(TaskId task) {
    static const Vocab tables[] = {
        Vocab(TaskId::PermutationPowering, build_names(TaskId::PermutationPowering)),
        Vocab(TaskId::SequentialAssignments, build_names(TaskId::SequentialAssignments)),
        Vocab(TaskId::UnionFind, build_names(TaskId::UnionFind)),
        Vocab(TaskId::WildcardSearch, build_names(TaskId::WildcardSearch)),
        Vocab(TaskId::ShortestPath, build_names(TaskId::ShortestPath)),
    };
    return tables[static_cast<int>(task)];
}

bool in_vocabulary(TaskId task, const std::vector<Token>& toks) {
    const Vocab& v = vocab(task);
    for (Token t : toks)
        if (!v.contains(t)) return false;
    return true;
}

}  // namespace amp::tasks
