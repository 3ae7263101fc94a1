#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kgmix/degree.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/eval.hpp"
#include "kgmix/kg.hpp"
#include "kgmix/models.hpp"
#include "kgmix/rng.hpp"
#include "kgmix/train.hpp"

namespace kgmix {

// One prediction for calibration: whether the target landed in the top 10
// and how confident the model was in it.
struct CalibrationPoint {
    bool hit = false;          // filtered rank <= 10
    double confidence = 0.0;   // sigmoid of the target's logit
    int32_t tail_relation_degree = 0;
};

struct CalibrationBin {
    std::string label;
    uint64_t count = 0;
    double accuracy = 0.0;
    double confidence = 0.0;
    double ece_bin = 0.0;  // |accuracy - confidence|
};

struct CalibrationReport {
    std::vector<CalibrationBin> bins;  // empty bins omitted
    uint64_t total = 0;
    double ece = 0.0;  // sum over bins of (count/total) * |acc - conf|
};

inline std::vector<CalibrationPoint> calibration_points(const std::vector<RankResult>& results) {
    std::vector<CalibrationPoint> pts;
    pts.reserve(results.size());
    for (const RankResult& r : results)
        pts.push_back({r.filtered_rank <= 10.0, sigmoid(r.score_true), r.tail_relation_degree});
    return pts;
}

namespace detail {

inline CalibrationReport ece_from_assignment(const std::vector<CalibrationPoint>& points,
                                             const std::vector<int>& bin_of_point,
                                             const std::vector<std::string>& labels) {
    const size_t n_bins = labels.size();
    std::vector<uint64_t> counts(n_bins, 0);
    std::vector<double> acc_sum(n_bins, 0.0), conf_sum(n_bins, 0.0);
    for (size_t i = 0; i < points.size(); ++i) {
        const auto b = static_cast<size_t>(bin_of_point[i]);
        counts[b] += 1;
        acc_sum[b] += points[i].hit ? 1.0 : 0.0;
        conf_sum[b] += points[i].confidence;
    }
    CalibrationReport rep;
    rep.total = points.size();
    for (size_t b = 0; b < n_bins; ++b) {
        if (counts[b] == 0) continue;
        CalibrationBin bin;
        bin.label = labels[b];
        bin.count = counts[b];
        bin.accuracy = acc_sum[b] / static_cast<double>(counts[b]);
        bin.confidence = conf_sum[b] / static_cast<double>(counts[b]);
        bin.ece_bin = std::fabs(bin.accuracy - bin.confidence);
        rep.ece += (static_cast<double>(counts[b]) / static_cast<double>(rep.total)) * bin.ece_bin;
        rep.bins.push_back(std::move(bin));
    }
    return rep;
}

}  // namespace detail

// Expected calibration error with points grouped by tail-relation degree.
inline CalibrationReport ece(const std::vector<CalibrationPoint>& points,
                             const std::vector<double>& edges = default_degree_bin_edges()) {
    check_bin_edges(edges);
    if (points.empty()) throw ConfigError("ece: no calibration points");
    std::vector<int> assign(points.size());
    std::vector<std::string> labels;
    for (size_t b = 0; b + 1 < edges.size(); ++b) labels.push_back(bin_label(edges[b], edges[b + 1]));
    for (size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].confidence >= 0.0 && points[i].confidence <= 1.0))
            throw ConfigError("ece: confidence outside [0, 1]");
        const int b = bin_of(edges, static_cast<double>(points[i].tail_relation_degree));
        if (b < 0) throw ConfigError("ece: degree outside the bin range");
        assign[i] = b;
    }
    return detail::ece_from_assignment(points, assign, labels);
}

// Alternative grouping: m bins of (near-)equal size by confidence quantile.
inline CalibrationReport ece_by_confidence(const std::vector<CalibrationPoint>& points,
                                           int32_t m_bins) {
    if (m_bins < 1) throw ConfigError("ece_by_confidence: need at least one bin");
    if (points.empty()) throw ConfigError("ece_by_confidence: no calibration points");
    std::vector<size_t> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (points[a].confidence != points[b].confidence)
            return points[a].confidence < points[b].confidence;
        return a < b;
    });
    const auto m = static_cast<size_t>(m_bins);
    std::vector<int> assign(points.size());
    std::vector<std::string> labels(m);
    for (size_t b = 0; b < m; ++b) labels[b] = "q" + std::to_string(b + 1);
    for (size_t pos = 0; pos < order.size(); ++pos) {
        const size_t b = std::min(m - 1, pos * m / order.size());
        assign[order[pos]] = static_cast<int>(b);
    }
    return detail::ece_from_assignment(points, assign, labels);
}

inline std::vector<ReportRow> calibration_rows(const CalibrationReport& rep) {
    std::vector<ReportRow> rows;
    rows.push_back({"ece", "all", rep.total, rep.ece});
    for (const CalibrationBin& b : rep.bins) {
        rows.push_back({"accuracy", b.label, b.count, b.accuracy});
        rows.push_back({"confidence", b.label, b.count, b.confidence});
        rows.push_back({"ece_bin", b.label, b.count, b.ece_bin});
    }
    return rows;
}

// Mean pairwise embedding distances around low-degree triples: for each
// training triple under the degree threshold, the mean Euclidean distance
// from its head to every head sharing its tail, and likewise for relations.
// The triple's own head/relation belong to those sets and contribute
// zero-distance terms.
struct DistanceReport {
    double d_head = 0.0;
    double d_rel = 0.0;
    uint64_t n_thresh = 0;
    bool nothing_to_analyze = false;
};

inline DistanceReport embedding_distances(const ModelParams& params,
                                          const std::vector<Triple>& train,
                                          const DegreeIndex& idx, int32_t eta) {
    if (params.num_entities() != idx.num_entities() ||
        params.num_relations() != idx.num_relations())
        throw ConfigError("embedding_distances: model does not match the index");
    auto euclid = [](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    };
    DistanceReport rep;
    double head_sum = 0.0, rel_sum = 0.0;
    for (size_t i = 0; i < train.size(); ++i) {
        const Triple& e = train[i];
        if (idx.tail_relation(e.tail, e.relation) >= eta) continue;
        const auto& mates = idx.by_tail(e.tail);
        double h_dist = 0.0, r_dist = 0.0;
        for (int32_t j : mates) {
            const Triple& o = train[static_cast<size_t>(j)];
            h_dist += euclid(params.entities.row(static_cast<size_t>(e.head)),
                             params.entities.row(static_cast<size_t>(o.head)));
            r_dist += euclid(params.relations.row(static_cast<size_t>(e.relation)),
                             params.relations.row(static_cast<size_t>(o.relation)));
        }
        head_sum += h_dist / static_cast<double>(mates.size());
        rel_sum += r_dist / static_cast<double>(mates.size());
        rep.n_thresh += 1;
    }
    if (rep.n_thresh == 0) {
        rep.nothing_to_analyze = true;
        return rep;
    }
    rep.d_head = head_sum / static_cast<double>(rep.n_thresh);
    rep.d_rel = rel_sum / static_cast<double>(rep.n_thresh);
    return rep;
}

// First-order expansion check for one same-tail pair. The loss along the
// mixing path is l(tau) = -log sigmoid(f) of the blend that moves a fraction
// tau from e_i toward e_j. Its analytic derivative at tau = 0 is
//   l'(0) = -(1 - sigmoid(f(e_i))) * (grad_h f . dh + grad_r f . dr)
// with dh/dr the embedding differences; the positively-signed variant is
// reported alongside. residual(tau) = |l(tau) - l(0) - tau*l'(0)| must decay
// quadratically.
struct TaylorCheckReport {
    std::vector<double> taus;
    std::vector<double> residuals;
    double f0 = 0.0;        // score of e_i
    double l0 = 0.0;        // loss at tau = 0
    double lprime0 = 0.0;   // analytic derivative, negative-log-likelihood sign
    double lprime0_alt = 0.0;  // opposite sign convention
    double r1_term = 0.0;   // (1 - sigmoid(f0)) * grad_h f . dh
    double r2_term = 0.0;   // (1 - sigmoid(f0)) * grad_r f . dr
    double dh_norm = 0.0;
    double dr_norm = 0.0;
    double fd_lprime0 = 0.0;  // central finite difference of l at tau = 0
    bool pass = false;        // analytic vs finite difference within 1e-4 relative
};

inline TaylorCheckReport taylor_check(const ModelParams& params, const Triple& e_i,
                                      const Triple& e_j, const std::vector<double>& tau_list) {
    if (e_i.tail != e_j.tail) throw ConfigError("taylor_check: triples must share a tail");
    const size_t dv = params.entity_dim();
    const size_t dr = params.relation_dim();
    const auto hi = params.entities.row(static_cast<size_t>(e_i.head));
    const auto hj = params.entities.row(static_cast<size_t>(e_j.head));
    const auto ri = params.relations.row(static_cast<size_t>(e_i.relation));
    const auto rj = params.relations.row(static_cast<size_t>(e_j.relation));
    const auto t = params.entities.row(static_cast<size_t>(e_i.tail));

    std::vector<double> dh(dv), drv(dr);
    for (size_t x = 0; x < dv; ++x) dh[x] = hj[x] - hi[x];
    for (size_t x = 0; x < dr; ++x) drv[x] = rj[x] - ri[x];

    TaylorCheckReport rep;
    rep.taus = tau_list;
    const ScoreGrad sg = score_grad(params, hi, ri, t);
    rep.f0 = sg.f;
    rep.l0 = softplus(-sg.f);
    double gh = 0.0, gr = 0.0;
    for (size_t x = 0; x < dv; ++x) gh += sg.dh[x] * dh[x];
    for (size_t x = 0; x < dr; ++x) gr += sg.dr[x] * drv[x];
    const double one_minus_sig = 1.0 - sigmoid(sg.f);
    rep.r1_term = one_minus_sig * gh;
    rep.r2_term = one_minus_sig * gr;
    rep.lprime0 = -(rep.r1_term + rep.r2_term);
    rep.lprime0_alt = -rep.lprime0;
    for (size_t x = 0; x < dv; ++x) rep.dh_norm += dh[x] * dh[x];
    for (size_t x = 0; x < dr; ++x) rep.dr_norm += drv[x] * drv[x];
    rep.dh_norm = std::sqrt(rep.dh_norm);
    rep.dr_norm = std::sqrt(rep.dr_norm);

    auto loss_at = [&](double tau) {
        std::vector<double> h(dv), r(dr);
        for (size_t x = 0; x < dv; ++x) h[x] = hi[x] + tau * dh[x];
        for (size_t x = 0; x < dr; ++x) r[x] = ri[x] + tau * drv[x];
        return softplus(-score(params, h, r, t));
    };
    rep.residuals.reserve(tau_list.size());
    for (double tau : tau_list) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("taylor_check: tau must be in [0, 1]");
        rep.residuals.push_back(std::fabs(loss_at(tau) - rep.l0 - tau * rep.lprime0));
    }

    const double h_step = 1e-6;
    rep.fd_lprime0 = (loss_at(h_step) - loss_at(-h_step)) / (2.0 * h_step);
    const double denom = std::max(std::fabs(rep.lprime0), 1e-12);
    rep.pass = std::fabs(rep.fd_lprime0 - rep.lprime0) / denom <= 1e-4;
    return rep;
}

// Monte-Carlo estimate of the two first-order regularization strengths over
// a set S of low-degree triples: for each element, k same-tail partners are
// drawn (the triple itself included in the pool) and
//   R1 = (tau_hat/|S|) sum_i sum_j (1 - sigmoid(f(e_i))) grad_h f(e_i) . dh_ij
// and likewise R2 with the relation difference. tau_hat is the Monte-Carlo
// mean of (1 - lambda) under the folded Beta(alpha, alpha) on [1/2, 1].
struct RegularizerEstimate {
    double r1 = 0.0;
    double r2 = 0.0;
    double tau_hat = 0.0;
    uint64_t pairs = 0;
    bool empty_set = false;
};

inline RegularizerEstimate regularizer_terms(const ModelParams& params,
                                             const std::vector<Triple>& train,
                                             const DegreeIndex& idx,
                                             const std::vector<int32_t>& low_degree_indices,
                                             int32_t k, double alpha, RngStream& stream,
                                             uint64_t tau_draws = 100000) {
    if (k < 1) throw ConfigError("regularizer_terms: k must be >= 1");
    if (tau_draws < 100000)
        throw ConfigError("regularizer_terms: tau estimation needs at least 1e5 draws");
    RegularizerEstimate est;
    double tau_sum = 0.0;
    for (uint64_t i = 0; i < tau_draws; ++i)
        tau_sum += 1.0 - beta_sample(stream, alpha, true);
    est.tau_hat = tau_sum / static_cast<double>(tau_draws);
    if (low_degree_indices.empty()) {
        est.empty_set = true;
        return est;
    }
    double r1_sum = 0.0, r2_sum = 0.0;
    const size_t dv = params.entity_dim();
    const size_t dr = params.relation_dim();
    for (int32_t ei : low_degree_indices) {
        const Triple& e = train.at(static_cast<size_t>(ei));
        const auto hi = params.entities.row(static_cast<size_t>(e.head));
        const auto ri = params.relations.row(static_cast<size_t>(e.relation));
        const auto t = params.entities.row(static_cast<size_t>(e.tail));
        const ScoreGrad sg = score_grad(params, hi, ri, t);
        const double one_minus_sig = 1.0 - sigmoid(sg.f);
        const auto& pool = idx.by_tail(e.tail);
        if (pool.empty()) continue;
        for (int32_t j = 0; j < k; ++j) {
            const int32_t pick = pool[stream.uniform_int(pool.size())];
            const Triple& o = train[static_cast<size_t>(pick)];
            const auto hj = params.entities.row(static_cast<size_t>(o.head));
            const auto rj = params.relations.row(static_cast<size_t>(o.relation));
            double gh = 0.0, gr = 0.0;
            for (size_t x = 0; x < dv; ++x) gh += sg.dh[x] * (hj[x] - hi[x]);
            for (size_t x = 0; x < dr; ++x) gr += sg.dr[x] * (rj[x] - ri[x]);
            r1_sum += one_minus_sig * gh;
            r2_sum += one_minus_sig * gr;
            est.pairs += 1;
        }
    }
    const double scale = est.tau_hat / static_cast<double>(low_degree_indices.size());
    est.r1 = scale * r1_sum;
    est.r2 = scale * r2_sum;
    return est;
}

// Aggregate residual-decay statistics over randomly sampled same-tail pairs:
// the mean of residual(tau)/residual(tau/2) should sit near 4 (quadratic
// remainder), and the analytic derivative must match finite differences.
// Pairs whose residuals sit at the floating-point noise floor are skipped
// for the ratio average.
struct TaylorAggregate {
    size_t instances = 0;
    size_t ratio_samples = 0;
    double mean_ratio = 0.0;
    double max_fd_rel_err = 0.0;
    bool pass_ratio = false;  // mean ratio in [3, 5]
    bool pass_fd = false;     // every pair within 1e-4 relative
};

inline TaylorAggregate taylor_aggregate(const ModelParams& params,
                                        const std::vector<Triple>& train, const DegreeIndex& idx,
                                        size_t instances, double tau, RngStream& stream,
                                        std::vector<TaylorCheckReport>* details = nullptr) {
    if (instances == 0) throw ConfigError("taylor_aggregate: need at least one instance");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("taylor_aggregate: tau must be in (0, 1]");
    TaylorAggregate agg;
    double ratio_sum = 0.0;
    size_t attempts = 0;
    const size_t max_attempts = instances * 100;
    while (agg.instances < instances) {
        if (++attempts > max_attempts)
            throw ComputeError("taylor_aggregate: could not find enough same-tail pairs");
        const auto ei = static_cast<int32_t>(stream.uniform_int(train.size()));
        const auto& pool = idx.by_tail(train[static_cast<size_t>(ei)].tail);
        if (pool.size() < 2) continue;
        const int32_t ej = pool[stream.uniform_int(pool.size())];
        if (ej == ei) continue;
        const TaylorCheckReport rep = taylor_check(params, train[static_cast<size_t>(ei)],
                                                   train[static_cast<size_t>(ej)], {tau, tau / 2});
        if (details != nullptr) details->push_back(rep);
        agg.instances += 1;
        const double denom = std::max(std::fabs(rep.lprime0), 1e-12);
        agg.max_fd_rel_err =
            std::max(agg.max_fd_rel_err, std::fabs(rep.fd_lprime0 - rep.lprime0) / denom);
        if (rep.residuals[1] > 1e-13) {
            ratio_sum += rep.residuals[0] / rep.residuals[1];
            agg.ratio_samples += 1;
        }
    }
    if (agg.ratio_samples > 0) agg.mean_ratio = ratio_sum / static_cast<double>(agg.ratio_samples);
    agg.pass_ratio = agg.ratio_samples > 0 && agg.mean_ratio >= 3.0 && agg.mean_ratio <= 5.0;
    agg.pass_fd = agg.max_fd_rel_err <= 1e-4;
    return agg;
}

inline void write_taylor_summary(const std::filesystem::path& path, const TaylorAggregate& agg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write summary: " + path.string());
    out << "instances: " << agg.instances << '\n'
        << "ratio_samples: " << agg.ratio_samples << '\n'
        << "mean_residual_ratio: " << detail::format_f64(agg.mean_ratio) << '\n'
        << "max_fd_relative_error: " << detail::format_f64(agg.max_fd_rel_err) << '\n'
        << "quadratic_decay [3,5]: " << (agg.pass_ratio ? "PASS" : "FAIL") << '\n'
        << "derivative_matches_finite_difference <=1e-4: " << (agg.pass_fd ? "PASS" : "FAIL")
        << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace kgmix
