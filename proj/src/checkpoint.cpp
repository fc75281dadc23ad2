#include "amp/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "amp/error.hpp"

namespace amp::ckpt {
namespace {

constexpr const char* kMagic = "ampckpt";
constexpr int kVersion = 1;

void write_floats(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& is, std::vector<float>& v, std::size_t count) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!is) throw Error("checkpoint: truncated blob");
}

}  // namespace

void save(const std::string& path, const ad::ParamStore<float>& params,
          const ad::AdamState<float>* adam, const std::vector<ad::BnStats<float>>* bn,
          const Meta& meta) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("checkpoint: cannot open " + path + " for writing");
    os << kMagic << ' ' << kVersion << '\n';
    for (const auto& [k, v] : meta) {
        if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
            throw Error("checkpoint: metadata keys take no spaces, values no newlines");
        os << "meta " << k << ' ' << v << '\n';
    }
    for (const auto& e : params.entries())
        os << "entry " << e.name << ' ' << e.rows << ' ' << e.cols << '\n';
    if (adam) os << "adam " << adam->t << '\n';
    if (bn) {
        for (const auto& s : *bn)
            os << "bn " << s.mean.size() << ' ' << (s.warm ? 1 : 0) << '\n';
    }
    os << "blob\n";
    for (const auto& e : params.entries()) write_floats(os, e.v);
    if (adam) {
        // moment vectors are allocated lazily; an untouched state saves zeros
        std::size_t i = 0;
        for (const auto& e : params.entries()) {
            std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
            write_floats(os, i < adam->m.size() && !adam->m[i].empty()
                                 ? adam->m[i]
                                 : std::vector<float>(n, 0.0f));
            ++i;
        }
        i = 0;
        for (const auto& e : params.entries()) {
            std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
            write_floats(os, i < adam->v.size() && !adam->v[i].empty()
                                 ? adam->v[i]
                                 : std::vector<float>(n, 0.0f));
            ++i;
        }
    }
    if (bn) {
        for (const auto& s : *bn) {
            write_floats(os, s.mean);
            write_floats(os, s.var);
        }
    }
    if (!os) throw Error("checkpoint: write failed for " + path);
}

Meta load(const std::string& path, ad::ParamStore<float>& params, ad::AdamState<float>* adam,
          std::vector<ad::BnStats<float>>* bn) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("checkpoint: cannot open " + path);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != kMagic || version != kVersion)
        throw Error("checkpoint: bad header in " + path);
    is.ignore(1);

    Meta meta;
    struct Shape {
        std::string name;
        int rows, cols;
    };
    std::vector<Shape> shapes;
    std::int64_t adam_t = -1;
    std::vector<std::pair<std::size_t, bool>> bn_shapes;
    std::string line;
    while (std::getline(is, line) && line != "blob") {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string k, v;
            ls >> k;
            std::getline(ls, v);
            if (!v.empty() && v.front() == ' ') v.erase(0, 1);
            meta[k] = v;
        } else if (tag == "entry") {
            Shape s;
            ls >> s.name >> s.rows >> s.cols;
            shapes.push_back(s);
        } else if (tag == "adam") {
            ls >> adam_t;
        } else if (tag == "bn") {
            std::size_t size = 0;
            int warm = 0;
            ls >> size >> warm;
            bn_shapes.emplace_back(size, warm != 0);
        } else {
            throw Error("checkpoint: unknown header line: " + line);
        }
        if (!ls) throw Error("checkpoint: malformed header line: " + line);
    }
    if (line != "blob") throw Error("checkpoint: missing blob section");

    if (params.entries().empty()) {
        for (const auto& s : shapes) params.add(s.name, s.rows, s.cols, 0.0f, nullptr);
    } else {
        if (params.entries().size() != shapes.size())
            throw Error("checkpoint: entry count mismatch");
        std::size_t i = 0;
        for (const auto& e : params.entries()) {
            const Shape& s = shapes[i++];
            if (e.name != s.name || e.rows != s.rows || e.cols != s.cols)
                throw Error("checkpoint: shape mismatch at " + s.name);
        }
    }
    for (auto& e : params.entries())
        read_floats(is, e.v, static_cast<std::size_t>(e.rows) * e.cols);
    if (adam) {
        if (adam_t < 0) throw Error("checkpoint: no adam section in " + path);
        adam->t = adam_t;
        adam->m.resize(shapes.size());
        adam->v.resize(shapes.size());
        for (std::size_t i = 0; i < shapes.size(); ++i)
            read_floats(is, adam->m[i],
                        static_cast<std::size_t>(shapes[i].rows) * shapes[i].cols);
        for (std::size_t i = 0; i < shapes.size(); ++i)
            read_floats(is, adam->v[i],
                        static_cast<std::size_t>(shapes[i].rows) * shapes[i].cols);
    }
    if (bn) {
        if (adam_t < 0 && adam) throw Error("checkpoint: inconsistent sections");
        bn->resize(bn_shapes.size());
        for (std::size_t i = 0; i < bn_shapes.size(); ++i) {
            read_floats(is, (*bn)[i].mean, bn_shapes[i].first);
            read_floats(is, (*bn)[i].var, bn_shapes[i].first);
            (*bn)[i].warm = bn_shapes[i].second;
        }
    }
    return meta;
}

}  // namespace amp::ckpt
