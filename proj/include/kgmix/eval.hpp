#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgmix/config.hpp"
#include "kgmix/degree.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/kg.hpp"
#include "kgmix/models.hpp"
#include "kgmix/stats.hpp"

namespace kgmix {

enum class TieBreak { Mean, Optimistic, Pessimistic };

inline std::string to_string(TieBreak t) {
    switch (t) {
        case TieBreak::Mean: return "mean";
        case TieBreak::Optimistic: return "optimistic";
        case TieBreak::Pessimistic: return "pessimistic";
    }
    throw ConfigError("unknown tie-break mode");
}

inline TieBreak tie_break_from_string(const std::string& s) {
    if (s == "mean") return TieBreak::Mean;
    if (s == "optimistic") return TieBreak::Optimistic;
    if (s == "pessimistic") return TieBreak::Pessimistic;
    throw ConfigError("unknown tie-break mode: " + s);
}

struct RankResult {
    Triple query;
    double filtered_rank = 0.0;  // half-integers possible under mean ties
    int32_t tail_relation_degree = 0;
    double score_true = 0.0;  // raw logit of the target tail
};

// Known-true tails per (head, relation), for filtered ranking.
class TripleFilter {
  public:
    TripleFilter() = default;

    void add(const std::vector<Triple>& triples) {
        for (const Triple& t : triples) map_[key(t.head, t.relation)].push_back(t.tail);
        for (auto& [k, v] : map_) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    }

    bool contains(int32_t h, int32_t r, int32_t t) const {
        auto it = map_.find(key(h, r));
        if (it == map_.end()) return false;
        return std::binary_search(it->second.begin(), it->second.end(), t);
    }

    const std::vector<int32_t>* tails(int32_t h, int32_t r) const {
        auto it = map_.find(key(h, r));
        return it == map_.end() ? nullptr : &it->second;
    }

  private:
    static uint64_t key(int32_t h, int32_t r) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(h)) << 32) |
               static_cast<uint32_t>(r);
    }
    std::unordered_map<uint64_t, std::vector<int32_t>> map_;
};

// Filter over every split: the standard filtered-ranking protocol.
inline TripleFilter build_filter(const KnowledgeGraph& g) {
    TripleFilter f;
    std::vector<Triple> all;
    all.reserve(g.train.size() + g.valid.size() + g.test.size());
    all.insert(all.end(), g.train.begin(), g.train.end());
    all.insert(all.end(), g.valid.begin(), g.valid.end());
    all.insert(all.end(), g.test.begin(), g.test.end());
    f.add(all);
    return f;
}

// Rank of the true tail among all entities, with candidates known to be true
// (other than the target itself) removed from the competition. Ties resolve
// per `tie`: mean rank by default.
inline RankResult filtered_rank(const ModelParams& params, const Triple& query,
                                const TripleFilter& known_true, const DegreeIndex& idx,
                                TieBreak tie = TieBreak::Mean) {
    const std::vector<double> scores = score_all_tails_ids(params, query.head, query.relation);
    const double s_t = scores[static_cast<size_t>(query.tail)];
    size_t above = 0;
    size_t tied = 0;
    for (int32_t v = 0; v < params.num_entities(); ++v) {
        if (v == query.tail) continue;
        if (known_true.contains(query.head, query.relation, v)) continue;
        const double s_v = scores[static_cast<size_t>(v)];
        if (s_v > s_t) ++above;
        else if (s_v == s_t) ++tied;
    }
    RankResult r;
    r.query = query;
    r.score_true = s_t;
    r.tail_relation_degree = idx.tail_relation(query.tail, query.relation);
    switch (tie) {
        case TieBreak::Mean:
            r.filtered_rank = 1.0 + static_cast<double>(above) + static_cast<double>(tied) / 2.0;
            break;
        case TieBreak::Optimistic: r.filtered_rank = 1.0 + static_cast<double>(above); break;
        case TieBreak::Pessimistic:
            r.filtered_rank = 1.0 + static_cast<double>(above) + static_cast<double>(tied);
            break;
    }
    return r;
}

inline std::vector<RankResult> evaluate_all(const ModelParams& params,
                                            const std::vector<Triple>& queries,
                                            const TripleFilter& known_true, const DegreeIndex& idx,
                                            TieBreak tie = TieBreak::Mean) {
    std::vector<RankResult> out;
    out.reserve(queries.size());
    for (const Triple& q : queries) out.push_back(filtered_rank(params, q, known_true, idx, tie));
    return out;
}

inline std::vector<double> ranks_of(const std::vector<RankResult>& results) {
    std::vector<double> r;
    r.reserve(results.size());
    for (const RankResult& x : results) r.push_back(x.filtered_rank);
    return r;
}

inline std::vector<double> reciprocal_ranks(const std::vector<RankResult>& results) {
    std::vector<double> r;
    r.reserve(results.size());
    for (const RankResult& x : results) r.push_back(1.0 / x.filtered_rank);
    return r;
}

inline double mrr(const std::vector<double>& ranks) {
    if (ranks.empty()) throw ConfigError("mrr: empty rank list");
    double s = 0.0;
    for (double r : ranks) s += 1.0 / r;
    return s / static_cast<double>(ranks.size());
}

inline double hits_at_k(const std::vector<double>& ranks, int32_t k) {
    if (ranks.empty()) throw ConfigError("hits_at_k: empty rank list");
    if (k < 1) throw ConfigError("hits_at_k: k must be >= 1");
    size_t hits = 0;
    for (double r : ranks)
        if (r <= static_cast<double>(k)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

// One CSV report line: metric name, bin label, query count, value.
struct ReportRow {
    std::string metric;
    std::string bin;
    uint64_t count = 0;
    double value = 0.0;
};

inline void write_report_csv(const std::filesystem::path& path,
                             const std::vector<ReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path.string());
    out << "metric,bin,count,value\n";
    for (const ReportRow& r : rows)
        out << r.metric << ',' << r.bin << ',' << r.count << ',' << detail::format_f64(r.value)
            << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

// The four degree bins: zero, low, medium, high.
inline const std::vector<double>& default_degree_bin_edges() {
    static const std::vector<double> edges{0.0, 1.0, 10.0, 50.0,
                                           std::numeric_limits<double>::infinity()};
    return edges;
}

inline std::string bin_label(double lo, double hi) {
    auto fmt = [](double v) {
        if (std::isinf(v)) return std::string("inf");
        std::ostringstream os;
        os << v;
        return os.str();
    };
    return "[" + fmt(lo) + "," + fmt(hi) + ")";
}

inline void check_bin_edges(const std::vector<double>& edges) {
    if (edges.size() < 2) throw ConfigError("need at least two bin edges");
    for (size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i - 1] < edges[i]))
            throw ConfigError("bin edges must be strictly increasing");
}

// Index of the half-open bin [e_i, e_{i+1}) holding v, or -1 if outside.
inline int bin_of(const std::vector<double>& edges, double v) {
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        if (v >= edges[i] && v < edges[i + 1]) return static_cast<int>(i);
    return -1;
}

inline double mrr_overall(const std::vector<RankResult>& results) {
    return mrr(ranks_of(results));
}

inline std::vector<ReportRow> overall_report(const std::vector<RankResult>& results) {
    const std::vector<double> ranks = ranks_of(results);
    const auto n = static_cast<uint64_t>(ranks.size());
    return {{"mrr", "all", n, mrr(ranks)},
            {"hits@1", "all", n, hits_at_k(ranks, 1)},
            {"hits@10", "all", n, hits_at_k(ranks, 10)}};
}

// MRR per tail-relation-degree bin. Empty bins produce no row.
inline std::vector<ReportRow> binned_report(
    const std::vector<RankResult>& results,
    const std::vector<double>& edges = default_degree_bin_edges()) {
    check_bin_edges(edges);
    const size_t n_bins = edges.size() - 1;
    std::vector<uint64_t> counts(n_bins, 0);
    std::vector<double> rr_sums(n_bins, 0.0);
    for (const RankResult& r : results) {
        const int b = bin_of(edges, static_cast<double>(r.tail_relation_degree));
        if (b < 0) throw ConfigError("binned_report: degree outside the bin range");
        counts[static_cast<size_t>(b)] += 1;
        rr_sums[static_cast<size_t>(b)] += 1.0 / r.filtered_rank;
    }
    std::vector<ReportRow> rows;
    for (size_t b = 0; b < n_bins; ++b) {
        if (counts[b] == 0) continue;
        rows.push_back({"mrr", bin_label(edges[b], edges[b + 1]), counts[b],
                        rr_sums[b] / static_cast<double>(counts[b])});
    }
    return rows;
}

// Degree features a query can be grouped by.
enum class DegreeFeature { HeadIn, HeadOut, TailIn, TailOut, TailRelation, OtherTailRelation };

inline std::string to_string(DegreeFeature f) {
    switch (f) {
        case DegreeFeature::HeadIn: return "head_in";
        case DegreeFeature::HeadOut: return "head_out";
        case DegreeFeature::TailIn: return "tail_in";
        case DegreeFeature::TailOut: return "tail_out";
        case DegreeFeature::TailRelation: return "tail_relation";
        case DegreeFeature::OtherTailRelation: return "other_tail_relation";
    }
    throw ConfigError("unknown degree feature");
}

inline DegreeFeature degree_feature_from_string(const std::string& s) {
    if (s == "head_in") return DegreeFeature::HeadIn;
    if (s == "head_out") return DegreeFeature::HeadOut;
    if (s == "tail_in") return DegreeFeature::TailIn;
    if (s == "tail_out") return DegreeFeature::TailOut;
    if (s == "tail_relation") return DegreeFeature::TailRelation;
    if (s == "other_tail_relation") return DegreeFeature::OtherTailRelation;
    throw ConfigError("unknown degree feature: " + s);
}

inline int32_t feature_value(const DegreeIndex& idx, const Triple& q, DegreeFeature f) {
    switch (f) {
        case DegreeFeature::HeadIn: return idx.in_degree(q.head);
        case DegreeFeature::HeadOut: return idx.out_degree(q.head);
        case DegreeFeature::TailIn: return idx.in_degree(q.tail);
        case DegreeFeature::TailOut: return idx.out_degree(q.tail);
        case DegreeFeature::TailRelation: return idx.tail_relation(q.tail, q.relation);
        case DegreeFeature::OtherTailRelation:
            return idx.other_tail_relation(q.tail, q.relation);
    }
    throw ConfigError("unknown degree feature");
}

// MRR per bin of an arbitrary degree feature of the query triples.
inline std::vector<ReportRow> stratified_report(const std::vector<RankResult>& results,
                                                const DegreeIndex& idx, DegreeFeature feature,
                                                const std::vector<double>& edges) {
    check_bin_edges(edges);
    const size_t n_bins = edges.size() - 1;
    std::vector<uint64_t> counts(n_bins, 0);
    std::vector<double> rr_sums(n_bins, 0.0);
    for (const RankResult& r : results) {
        const int b =
            bin_of(edges, static_cast<double>(feature_value(idx, r.query, feature)));
        if (b < 0) throw ConfigError("stratified_report: feature value outside the bin range");
        counts[static_cast<size_t>(b)] += 1;
        rr_sums[static_cast<size_t>(b)] += 1.0 / r.filtered_rank;
    }
    std::vector<ReportRow> rows;
    const std::string name = "mrr/" + to_string(feature);
    for (size_t b = 0; b < n_bins; ++b) {
        if (counts[b] == 0) continue;
        rows.push_back({name, bin_label(edges[b], edges[b + 1]), counts[b],
                        rr_sums[b] / static_cast<double>(counts[b])});
    }
    return rows;
}

// Two-feature cross-tabulation: one row per (primary bin, secondary bin)
// cell with at least one query.
inline std::vector<ReportRow> cross_tab_report(const std::vector<RankResult>& results,
                                               const DegreeIndex& idx, DegreeFeature primary,
                                               const std::vector<double>& primary_edges,
                                               DegreeFeature secondary,
                                               const std::vector<double>& secondary_edges) {
    check_bin_edges(primary_edges);
    check_bin_edges(secondary_edges);
    const size_t np = primary_edges.size() - 1;
    const size_t ns = secondary_edges.size() - 1;
    std::vector<uint64_t> counts(np * ns, 0);
    std::vector<double> rr_sums(np * ns, 0.0);
    for (const RankResult& r : results) {
        const int bp =
            bin_of(primary_edges, static_cast<double>(feature_value(idx, r.query, primary)));
        const int bs =
            bin_of(secondary_edges, static_cast<double>(feature_value(idx, r.query, secondary)));
        if (bp < 0 || bs < 0)
            throw ConfigError("cross_tab_report: feature value outside the bin range");
        const size_t cell = static_cast<size_t>(bp) * ns + static_cast<size_t>(bs);
        counts[cell] += 1;
        rr_sums[cell] += 1.0 / r.filtered_rank;
    }
    std::vector<ReportRow> rows;
    const std::string name = "mrr/" + to_string(primary) + "x" + to_string(secondary);
    for (size_t i = 0; i < np; ++i) {
        for (size_t j = 0; j < ns; ++j) {
            const size_t cell = i * ns + j;
            if (counts[cell] == 0) continue;
            rows.push_back({name,
                            bin_label(primary_edges[i], primary_edges[i + 1]) + "x" +
                                bin_label(secondary_edges[j], secondary_edges[j + 1]),
                            counts[cell], rr_sums[cell] / static_cast<double>(counts[cell])});
        }
    }
    return rows;
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
    bool no_difference = false;  // all paired differences were exactly zero
};

// Paired t-test over aligned per-query values (reciprocal ranks of two
// methods on the same queries). Zero variance with a nonzero mean shift is
// reported as infinitely significant; identical inputs as no difference.
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ConfigError("paired_t_test: length mismatch");
    const size_t n = a.size();
    if (n < 2) throw ConfigError("paired_t_test: need at least 2 pairs");
    std::vector<double> d(n);
    bool all_zero = true;
    for (size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        if (d[i] != 0.0) all_zero = false;
    }
    TTestResult res;
    if (all_zero) {
        res.no_difference = true;
        return res;
    }
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
        res.p = 0.0;
        res.significant = true;
        return res;
    }
    res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    res.p = student_t_two_sided_p(res.t, static_cast<double>(n - 1));
    res.significant = res.p < 0.05;
    return res;
}

}  // namespace kgmix
