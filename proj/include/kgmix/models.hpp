#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgmix/errors.hpp"
#include "kgmix/rng.hpp"
#include "kgmix/tensor.hpp"

namespace kgmix {

enum class ModelKind : uint32_t { DistMult = 1, TuckER = 2 };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::DistMult: return "distmult";
        case ModelKind::TuckER: return "tucker";
    }
    throw ConfigError("unknown model kind");
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "distmult") return ModelKind::DistMult;
    if (s == "tucker") return ModelKind::TuckER;
    throw ConfigError("unknown model kind: " + s);
}

// Dropout rates for the three sites along the scoring path:
//   d1  entity vector after gathering
//   d2  middle product (relation-mapped matrix for TuckER, relation vector
//       for DistMult)
//   d3  the vector that is dotted with the candidate tail
struct DropoutRates {
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;

    void validate() const {
        for (double p : {d1, d2, d3})
            if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
    }
};

struct LossConfig {
    double label_smoothing = 0.0;
    bool focal = false;
    double focal_gamma = 2.0;

    void validate() const {
        if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
            throw ConfigError("label_smoothing must be in [0, 1)");
        if (focal && !(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be >= 0");
    }
};

// Embedding tables plus, for TuckER, the interaction core.
// entities: (num_entities, entity_dim); relations: (num_relations,
// relation_dim); core: (entity_dim, relation_dim, entity_dim).
struct ModelParams {
    ModelKind kind = ModelKind::DistMult;
    Tensor entities;
    Tensor relations;
    Tensor core;

    bool has_core() const { return core.rank() == 3; }
    int32_t num_entities() const { return static_cast<int32_t>(entities.dim(0)); }
    int32_t num_relations() const { return static_cast<int32_t>(relations.dim(0)); }
    size_t entity_dim() const { return entities.dim(1); }
    size_t relation_dim() const { return relations.dim(1); }
};

// Fresh model with embeddings drawn N(0, 0.1) and, for TuckER, a core drawn
// uniform on [-1, 1].
inline ModelParams init_model(ModelKind kind, int32_t num_entities, int32_t num_relations,
                              size_t entity_dim, size_t relation_dim, RngStream& rng) {
    if (num_entities <= 0 || num_relations <= 0)
        throw ConfigError("init_model: entity and relation counts must be positive");
    if (entity_dim == 0 || relation_dim == 0)
        throw ConfigError("init_model: embedding dims must be positive");
    if (kind == ModelKind::DistMult && entity_dim != relation_dim)
        throw ConfigError("init_model: this model needs equal entity and relation dims");
    ModelParams p;
    p.kind = kind;
    p.entities = Tensor({static_cast<size_t>(num_entities), entity_dim});
    p.relations = Tensor({static_cast<size_t>(num_relations), relation_dim});
    for (double& v : p.entities.data()) v = rng.normal() * 0.1;
    for (double& v : p.relations.data()) v = rng.normal() * 0.1;
    if (kind == ModelKind::TuckER) {
        p.core = Tensor({entity_dim, relation_dim, entity_dim});
        for (double& v : p.core.data()) v = 2.0 * rng.uniform() - 1.0;
    }
    return p;
}

// Redraw the interaction weights, keeping the embeddings. No-op for models
// without a core.
inline void reinit_interaction(ModelParams& p, RngStream& rng) {
    if (!p.has_core()) return;
    for (double& v : p.core.data()) v = 2.0 * rng.uniform() - 1.0;
}

// Dense gradient buffers matching a model's parameter shapes.
struct Gradients {
    Tensor entities;
    Tensor relations;
    Tensor core;

    explicit Gradients(const ModelParams& p)
        : entities(p.entities.shape()),
          relations(p.relations.shape()),
          core(p.has_core() ? Tensor(p.core.shape()) : Tensor()) {}

    void clear() {
        entities.fill(0.0);
        relations.fill(0.0);
        if (core.rank() == 3) core.fill(0.0);
    }
};

// Rows into an embedding table with mixing weights. A plain lookup is one
// row with weight 1; a two-way blend is two rows with weights that sum to 1.
using WeightedRows = std::vector<std::pair<int32_t, double>>;

// One scoring task: blended head, blended relation, concrete tail, binary
// target, and a per-query loss weight.
struct Query {
    WeightedRows head;
    WeightedRows rel;
    int32_t tail = 0;
    double target = 1.0;
    double weight = 1.0;
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct LossGrad {
    double loss = 0.0;
    double dlogit = 0.0;
};

// Binary cross entropy on a raw logit, computed in log space. With focal
// weighting the cross entropy is scaled by (1 - p_correct)^gamma where
// p_correct uses the hard label; the derivative carries both factors.
inline LossGrad loss_with_logit(double f, double y, const LossConfig& cfg) {
    const double eps = cfg.label_smoothing;
    const double ys = (1.0 - eps) * y + 0.5 * eps;
    const double s = sigmoid(f);
    const double ce = softplus(-f) + (1.0 - ys) * f;
    const double dce = s - ys;
    if (!cfg.focal) return {ce, dce};
    double factor, dfactor;
    if (y > 0.5) {
        factor = std::pow(1.0 - s, cfg.focal_gamma);
        dfactor = -cfg.focal_gamma * s * factor;
    } else {
        factor = std::pow(s, cfg.focal_gamma);
        dfactor = cfg.focal_gamma * (1.0 - s) * factor;
    }
    return {factor * ce, dfactor * ce + factor * dce};
}

// Inverted dropout mask: each entry is 0 with probability `rate`, else
// 1/(1-rate). Rate 0 consumes no draws.
inline void draw_mask(RngStream& rng, double rate, std::span<double> out) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("draw_mask: rate must be in [0, 1)");
    if (rate == 0.0) {
        for (double& m : out) m = 1.0;
        return;
    }
    const double keep = 1.0 / (1.0 - rate);
    for (double& m : out) m = rng.uniform() < rate ? 0.0 : keep;
}

namespace detail {

inline void gather_rows(const Tensor& table, const WeightedRows& rows, std::vector<double>& out) {
    if (rows.empty()) throw ConfigError("query has no rows for an embedding lookup");
    out.assign(table.dim(1), 0.0);
    for (const auto& [id, w] : rows) {
        if (id < 0 || static_cast<size_t>(id) >= table.dim(0))
            throw ConfigError("embedding row out of range");
        const auto row = table.row(static_cast<size_t>(id));
        for (size_t i = 0; i < out.size(); ++i) out[i] += w * row[i];
    }
}

inline void scatter_rows(Tensor& table, const WeightedRows& rows, std::span<const double> grad,
                         double scale) {
    for (const auto& [id, w] : rows) {
        auto row = table.row(static_cast<size_t>(id));
        for (size_t i = 0; i < grad.size(); ++i) row[i] += scale * w * grad[i];
    }
}

}  // namespace detail

// Plain score of gathered vectors, no dropout. DistMult is the three-way
// elementwise product; the cored model contracts the core with the relation
// and sandwiches it between head and tail.
inline double score(const ModelParams& p, std::span<const double> h, std::span<const double> r,
                    std::span<const double> t) {
    if (h.size() != p.entity_dim() || t.size() != p.entity_dim() || r.size() != p.relation_dim())
        throw ConfigError("score: vector length mismatch");
    if (p.kind == ModelKind::DistMult) {
        double f = 0.0;
        for (size_t i = 0; i < h.size(); ++i) f += h[i] * r[i] * t[i];
        return f;
    }
    const Tensor m = tensor_ops::contract_mode(p.core, r, 1);
    double f = 0.0;
    for (size_t i = 0; i < h.size(); ++i) {
        double acc = 0.0;
        for (size_t k = 0; k < t.size(); ++k) acc += m(i, k) * t[k];
        f += h[i] * acc;
    }
    return f;
}

inline double score_ids(const ModelParams& p, int32_t h, int32_t r, int32_t t) {
    return score(p, p.entities.row(static_cast<size_t>(h)),
                 p.relations.row(static_cast<size_t>(r)),
                 p.entities.row(static_cast<size_t>(t)));
}

// Scores of (h, r, every entity as tail), no dropout.
inline std::vector<double> score_all_tails(const ModelParams& p, std::span<const double> h,
                                           std::span<const double> r) {
    if (h.size() != p.entity_dim() || r.size() != p.relation_dim())
        throw ConfigError("score_all_tails: vector length mismatch");
    std::vector<double> q(p.entity_dim(), 0.0);
    if (p.kind == ModelKind::DistMult) {
        for (size_t i = 0; i < q.size(); ++i) q[i] = h[i] * r[i];
    } else {
        const Tensor m = tensor_ops::contract_mode(p.core, r, 1);
        for (size_t k = 0; k < q.size(); ++k) {
            double acc = 0.0;
            for (size_t i = 0; i < h.size(); ++i) acc += h[i] * m(i, k);
            q[k] = acc;
        }
    }
    const size_t n = static_cast<size_t>(p.num_entities());
    std::vector<double> out(n, 0.0);
    for (size_t v = 0; v < n; ++v) {
        out[v] = tensor_ops::dot(std::span<const double>(q), p.entities.row(v));
    }
    return out;
}

inline std::vector<double> score_all_tails_ids(const ModelParams& p, int32_t h, int32_t r) {
    return score_all_tails(p, p.entities.row(static_cast<size_t>(h)),
                           p.relations.row(static_cast<size_t>(r)));
}

// Score plus gradients with respect to the gathered head, relation, and tail
// vectors. No dropout; used by diagnostics.
struct ScoreGrad {
    double f = 0.0;
    std::vector<double> dh;
    std::vector<double> dr;
    std::vector<double> dt;
};

inline ScoreGrad score_grad(const ModelParams& p, std::span<const double> h,
                            std::span<const double> r, std::span<const double> t) {
    if (h.size() != p.entity_dim() || t.size() != p.entity_dim() || r.size() != p.relation_dim())
        throw ConfigError("score_grad: vector length mismatch");
    ScoreGrad g;
    g.dh.assign(h.size(), 0.0);
    g.dr.assign(r.size(), 0.0);
    g.dt.assign(t.size(), 0.0);
    if (p.kind == ModelKind::DistMult) {
        for (size_t i = 0; i < h.size(); ++i) {
            g.f += h[i] * r[i] * t[i];
            g.dh[i] = r[i] * t[i];
            g.dr[i] = h[i] * t[i];
            g.dt[i] = h[i] * r[i];
        }
        return g;
    }
    const Tensor m = tensor_ops::contract_mode(p.core, r, 1);
    for (size_t i = 0; i < h.size(); ++i) {
        for (size_t k = 0; k < t.size(); ++k) {
            const double mik = m(i, k);
            g.f += h[i] * mik * t[k];
            g.dh[i] += mik * t[k];
            g.dt[k] += h[i] * mik;
        }
    }
    for (size_t j = 0; j < r.size(); ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < h.size(); ++i)
            for (size_t k = 0; k < t.size(); ++k) acc += h[i] * p.core(i, j, k) * t[k];
        g.dr[j] = acc;
    }
    return g;
}

struct BatchStats {
    double loss = 0.0;    // weighted mean loss over the batch
    double weight = 0.0;  // total weight
    size_t queries = 0;
};

// Forward and backward over one batch. Adds grad_scale times the gradient of
// the weighted mean loss into `grads`. Dropout masks are drawn from
// `dropout_rng` per query in site order (d1, d2, d3); zero rates consume no
// draws.
inline BatchStats forward_backward(const ModelParams& p, const std::vector<Query>& batch,
                                   const LossConfig& loss_cfg, const DropoutRates& rates,
                                   RngStream& dropout_rng, Gradients& grads, double grad_scale) {
    rates.validate();
    loss_cfg.validate();
    BatchStats stats;
    stats.queries = batch.size();
    if (batch.empty()) return stats;
    double total_weight = 0.0;
    for (const Query& q : batch) {
        if (!(q.weight > 0.0)) throw ConfigError("query weight must be positive");
        total_weight += q.weight;
    }
    stats.weight = total_weight;

    const size_t dv = p.entity_dim();
    const size_t dr = p.relation_dim();
    std::vector<double> h, r, mask1(dv), mask3(dv);
    std::vector<double> buf_a(dv), buf_b(dv), buf_c(dv);

    for (const Query& q : batch) {
        if (q.tail < 0 || q.tail >= p.num_entities())
            throw ConfigError("query tail out of range");
        detail::gather_rows(p.entities, q.head, h);
        detail::gather_rows(p.relations, q.rel, r);
        const auto t = p.entities.row(static_cast<size_t>(q.tail));

        draw_mask(dropout_rng, rates.d1, mask1);
        std::vector<double>& hp = buf_a;  // masked head
        for (size_t i = 0; i < dv; ++i) hp[i] = mask1[i] * h[i];

        double f = 0.0;
        std::vector<double> mask2;
        std::vector<double> rp;          // DistMult: masked relation
        Tensor m, mp;                    // cored model: relation map, masked
        std::vector<double>& pre = buf_b;  // vector dotted with the tail, pre-mask
        if (p.kind == ModelKind::DistMult) {
            mask2.resize(dr);
            draw_mask(dropout_rng, rates.d2, mask2);
            rp.resize(dr);
            for (size_t i = 0; i < dr; ++i) rp[i] = mask2[i] * r[i];
            for (size_t i = 0; i < dv; ++i) pre[i] = hp[i] * rp[i];
        } else {
            m = tensor_ops::contract_mode(p.core, r, 1);
            mask2.resize(dv * dv);
            draw_mask(dropout_rng, rates.d2, mask2);
            mp = m;
            for (size_t i = 0; i < mp.size(); ++i) mp[i] = mask2[i] * m[i];
            for (size_t k = 0; k < dv; ++k) {
                double acc = 0.0;
                for (size_t i = 0; i < dv; ++i) acc += hp[i] * mp(i, k);
                pre[k] = acc;
            }
        }
        draw_mask(dropout_rng, rates.d3, mask3);
        for (size_t i = 0; i < dv; ++i) f += mask3[i] * pre[i] * t[i];

        if (!std::isfinite(f)) throw ComputeError("non-finite score in training batch");
        const LossGrad lg = loss_with_logit(f, q.target, loss_cfg);
        stats.loss += (q.weight / total_weight) * lg.loss;
        const double g = grad_scale * (q.weight / total_weight) * lg.dlogit;
        if (g == 0.0) continue;

        // d f / d pre-mask vector and tail
        std::vector<double>& dpre = buf_c;
        for (size_t i = 0; i < dv; ++i) dpre[i] = mask3[i] * t[i];
        {
            auto trow = grads.entities.row(static_cast<size_t>(q.tail));
            for (size_t i = 0; i < dv; ++i) trow[i] += g * mask3[i] * pre[i];
        }
        if (p.kind == ModelKind::DistMult) {
            std::vector<double> dh(dv), drv(dr);
            for (size_t i = 0; i < dv; ++i) {
                dh[i] = mask1[i] * rp[i] * dpre[i];
                drv[i] = mask2[i] * hp[i] * dpre[i];
            }
            detail::scatter_rows(grads.entities, q.head, dh, g);
            detail::scatter_rows(grads.relations, q.rel, drv, g);
        } else {
            std::vector<double> dh(dv, 0.0), drv(dr, 0.0);
            for (size_t i = 0; i < dv; ++i) {
                double acc = 0.0;
                for (size_t k = 0; k < dv; ++k) acc += mp(i, k) * dpre[k];
                dh[i] = mask1[i] * acc;
            }
            // gradient through the masked relation map into core and relation
            for (size_t i = 0; i < dv; ++i) {
                const double hpi = hp[i];
                for (size_t k = 0; k < dv; ++k) {
                    const double dm = mask2[i * dv + k] * hpi * dpre[k];
                    if (dm == 0.0) continue;
                    for (size_t j = 0; j < dr; ++j) {
                        grads.core(i, j, k) += g * dm * r[j];
                        drv[j] += dm * p.core(i, j, k);
                    }
                }
            }
            detail::scatter_rows(grads.entities, q.head, dh, g);
            detail::scatter_rows(grads.relations, q.rel, drv, g);
        }
    }
    return stats;
}

}  // namespace kgmix
