#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgmix/errors.hpp"

namespace kgmix {

// One directed labeled edge, entity/relation ids are dense integers.
struct Triple {
    int32_t head = 0;
    int32_t relation = 0;
    int32_t tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
    size_t operator()(const Triple& t) const {
        uint64_t h = 1469598103934665603ULL;
        for (uint64_t v : {static_cast<uint64_t>(t.head), static_cast<uint64_t>(t.relation),
                           static_cast<uint64_t>(t.tail)}) {
            h ^= v;
            h *= 1099511628211ULL;
        }
        return static_cast<size_t>(h);
    }
};

// Name table with dense first-seen ids.
class Vocab {
  public:
    int32_t get_or_add(const std::string& name) {
        auto it = ids_.find(name);
        if (it != ids_.end()) return it->second;
        const int32_t id = static_cast<int32_t>(names_.size());
        ids_.emplace(name, id);
        names_.push_back(name);
        return id;
    }

    // -1 when absent.
    int32_t lookup(const std::string& name) const {
        auto it = ids_.find(name);
        return it == ids_.end() ? -1 : it->second;
    }

    const std::string& name(int32_t id) const { return names_.at(static_cast<size_t>(id)); }
    size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int32_t> ids_;
};

// Immutable after construction: name tables, the three splits, and whether
// inverse triples have been added.
struct KnowledgeGraph {
    Vocab entities;
    Vocab relations;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    bool inverse_augmented = false;
    // Relation count before augmentation (== relations.size() if not augmented).
    int32_t original_relation_count = 0;

    int32_t num_entities() const { return static_cast<int32_t>(entities.size()); }
    int32_t num_relations() const { return static_cast<int32_t>(relations.size()); }
};

// Parse one tab-separated split file into dense-id triples, growing the
// vocabularies in first-seen order. Lines starting with '#' are skipped.
inline std::vector<Triple> ingest_split(const std::filesystem::path& path, Vocab& entities,
                                        Vocab& relations) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triple file: " + path.string());
    std::vector<Triple> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const size_t t1 = line.find('\t');
        const size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 3 tab-separated fields");
        }
        const std::string h = line.substr(0, t1);
        const std::string r = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string t = line.substr(t2 + 1);
        if (h.empty() || r.empty() || t.empty()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty field");
        }
        out.push_back(
            {entities.get_or_add(h), relations.get_or_add(r), entities.get_or_add(t)});
    }
    return out;
}

inline void write_split(const std::filesystem::path& path, const std::vector<Triple>& triples,
                        const KnowledgeGraph& g) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write triple file: " + path.string());
    for (const Triple& t : triples) {
        out << g.entities.name(t.head) << '\t' << g.relations.name(t.relation) << '\t'
            << g.entities.name(t.tail) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline void write_vocab(const std::filesystem::path& path, const Vocab& vocab) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocabulary file: " + path.string());
    for (size_t i = 0; i < vocab.size(); ++i) {
        out << i << '\t' << vocab.name(static_cast<int32_t>(i)) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline Vocab read_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file: " + path.string());
    Vocab vocab;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t t1 = line.find('\t');
        if (t1 == std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected id\\tname");
        const int32_t want = std::stoi(line.substr(0, t1));
        const int32_t got = vocab.get_or_add(line.substr(t1 + 1));
        if (want != got)
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": ids must be dense and in order");
    }
    return vocab;
}

// Add the reversed edge (t, r + R, h) for every triple, doubling the
// relation vocabulary. Reversed relation ids are the original id plus the
// original relation count, so the mapping is a constant offset both ways.
// Valid/test queries are doubled too, turning head prediction into tail
// prediction. Reversed relation names get a "_reverse" suffix.
inline KnowledgeGraph add_inverses(const KnowledgeGraph& g) {
    if (g.inverse_augmented) throw ConfigError("add_inverses: graph already augmented");
    KnowledgeGraph out;
    out.entities = g.entities;
    out.relations = g.relations;
    const int32_t r_count = g.num_relations();
    for (int32_t r = 0; r < r_count; ++r) {
        out.relations.get_or_add(g.relations.name(r) + "_reverse");
    }
    auto augment = [&](const std::vector<Triple>& src) {
        std::vector<Triple> dst;
        dst.reserve(src.size() * 2);
        dst = src;
        for (const Triple& t : src) {
            dst.push_back({t.tail, t.relation + r_count, t.head});
        }
        return dst;
    };
    out.train = augment(g.train);
    out.valid = augment(g.valid);
    out.test = augment(g.test);
    out.inverse_augmented = true;
    out.original_relation_count = r_count;
    return out;
}

}  // namespace kgmix
