#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "kgmix/errors.hpp"
#include "kgmix/kg.hpp"

namespace kgmix {

// Degree statistics over the training split. Built once, queried a lot.
//
// tail_relation(v, r)     count of train triples (·, r, v)
// relation_specific(v, r) count of train triples where v takes part in an
//                         edge labeled r, on either end; a self-loop counts
//                         once
// other_tail_relation(v, r) = in_degree(v) - tail_relation(v, r)
class DegreeIndex {
  public:
    DegreeIndex(const std::vector<Triple>& train, int32_t num_entities, int32_t num_relations)
        : num_entities_(num_entities),
          num_relations_(num_relations),
          in_(static_cast<size_t>(num_entities), 0),
          out_(static_cast<size_t>(num_entities), 0),
          by_tail_(static_cast<size_t>(num_entities)) {
        for (size_t i = 0; i < train.size(); ++i) {
            const Triple& t = train[i];
            check_ids(t);
            out_[static_cast<size_t>(t.head)] += 1;
            in_[static_cast<size_t>(t.tail)] += 1;
            by_tail_[static_cast<size_t>(t.tail)].push_back(static_cast<int32_t>(i));
            tail_rel_[key(t.tail, t.relation)] += 1;
            rel_specific_[key(t.head, t.relation)] += 1;
            if (t.tail != t.head) rel_specific_[key(t.tail, t.relation)] += 1;
        }
    }

    int32_t num_entities() const { return num_entities_; }
    int32_t num_relations() const { return num_relations_; }

    int32_t in_degree(int32_t v) const { return in_.at(static_cast<size_t>(v)); }
    int32_t out_degree(int32_t v) const { return out_.at(static_cast<size_t>(v)); }
    int32_t total_degree(int32_t v) const { return in_degree(v) + out_degree(v); }

    int32_t tail_relation(int32_t v, int32_t r) const { return count(tail_rel_, v, r); }
    int32_t relation_specific(int32_t v, int32_t r) const { return count(rel_specific_, v, r); }
    int32_t other_tail_relation(int32_t v, int32_t r) const {
        return in_degree(v) - tail_relation(v, r);
    }

    // Indices into the train vector of all triples with tail t.
    const std::vector<int32_t>& by_tail(int32_t t) const {
        return by_tail_.at(static_cast<size_t>(t));
    }

    // Mixing partners for train[index]: triples sharing its tail. Strict mode
    // keeps only partners whose head AND relation both differ; lenient mode
    // keeps every other same-tail triple.
    std::vector<int32_t> same_tail_candidates(const std::vector<Triple>& train, int32_t index,
                                              bool strict) const {
        const Triple& e = train.at(static_cast<size_t>(index));
        std::vector<int32_t> out;
        for (int32_t j : by_tail(e.tail)) {
            if (j == index) continue;
            const Triple& c = train[static_cast<size_t>(j)];
            if (strict && (c.head == e.head || c.relation == e.relation)) continue;
            out.push_back(j);
        }
        return out;
    }

  private:
    static uint64_t key(int32_t v, int32_t r) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(v)) << 32) |
               static_cast<uint32_t>(r);
    }

    static int32_t count(const std::unordered_map<uint64_t, int32_t>& m, int32_t v, int32_t r) {
        auto it = m.find(key(v, r));
        return it == m.end() ? 0 : it->second;
    }

    void check_ids(const Triple& t) const {
        if (t.head < 0 || t.head >= num_entities_ || t.tail < 0 || t.tail >= num_entities_)
            throw DataError("triple entity id out of range");
        if (t.relation < 0 || t.relation >= num_relations_)
            throw DataError("triple relation id out of range");
    }

    int32_t num_entities_;
    int32_t num_relations_;
    std::vector<int32_t> in_;
    std::vector<int32_t> out_;
    std::vector<std::vector<int32_t>> by_tail_;
    std::unordered_map<uint64_t, int32_t> tail_rel_;
    std::unordered_map<uint64_t, int32_t> rel_specific_;
};

}  // namespace kgmix
