#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgmix/adam.hpp"
#include "kgmix/config.hpp"
#include "kgmix/degree.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/kg.hpp"
#include "kgmix/models.hpp"
#include "kgmix/rng.hpp"

namespace kgmix {

// A synthetic sample: convex blend of two same-tail triples in embedding
// space, labeled positive.
struct MixedTriple {
    std::vector<double> mixed_head;
    std::vector<double> mixed_rel;
    int32_t tail = 0;
    double lambda = 1.0;
    Triple source_e1;
    Triple source_e2;
};

// Blend e1 and e2: head and relation vectors are lambda*e1 + (1-lambda)*e2,
// the tail stays e1's (== e2's) tail.
inline MixedTriple mix(const Triple& e1, const Triple& e2, double lambda, const ModelParams& p) {
    if (e1.tail != e2.tail) throw ConfigError("mix: triples must share a tail");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mix: lambda must be in [0, 1]");
    MixedTriple m;
    m.tail = e1.tail;
    m.lambda = lambda;
    m.source_e1 = e1;
    m.source_e2 = e2;
    auto blend = [lambda](std::span<const double> a, std::span<const double> b) {
        std::vector<double> out(a.size());
        for (size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
        return out;
    };
    m.mixed_head = blend(p.entities.row(static_cast<size_t>(e1.head)),
                         p.entities.row(static_cast<size_t>(e2.head)));
    m.mixed_rel = blend(p.relations.row(static_cast<size_t>(e1.relation)),
                        p.relations.row(static_cast<size_t>(e2.relation)));
    return m;
}

// n tail-corrupted copies of a positive: the tail is replaced by a uniform
// draw over all entities except the true tail. Heads and relations are kept.
inline std::vector<Triple> sample_negatives(RngStream& stream, const Triple& pos, int32_t n,
                                            int32_t num_entities) {
    if (n < 1) throw ConfigError("sample_negatives: n must be >= 1");
    if (num_entities < 2) throw DataError("sample_negatives: need at least 2 entities");
    std::vector<Triple> out;
    out.reserve(static_cast<size_t>(n));
    for (int32_t i = 0; i < n; ++i) {
        auto v = static_cast<int32_t>(stream.uniform_int(static_cast<uint64_t>(num_entities - 1)));
        if (v >= pos.tail) ++v;
        out.push_back({pos.head, pos.relation, v});
    }
    return out;
}

// k mixing partners for train[e_index] with one lambda each. Partners come
// from the strict same-tail candidate set, falling back to the lenient set
// when strict is empty; an empty lenient set yields an empty result. With at
// least k candidates the picks are distinct; with fewer they are drawn with
// replacement. Draw order: k candidate picks, then k lambdas.
inline std::vector<std::pair<int32_t, double>> synth_partners(int32_t e_index,
                                                              const std::vector<Triple>& train,
                                                              const DegreeIndex& idx, int32_t k,
                                                              double alpha, RngStream& stream) {
    if (k < 1) throw ConfigError("synth_partners: k must be >= 1");
    std::vector<int32_t> candidates = idx.same_tail_candidates(train, e_index, true);
    if (candidates.empty()) candidates = idx.same_tail_candidates(train, e_index, false);
    if (candidates.empty()) return {};
    std::vector<int32_t> picks(static_cast<size_t>(k));
    const auto n = static_cast<uint64_t>(candidates.size());
    if (n >= static_cast<uint64_t>(k)) {
        for (int32_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<int64_t>(stream.uniform_int(n - static_cast<uint64_t>(i)));
            std::swap(candidates[static_cast<size_t>(i)], candidates[static_cast<size_t>(j)]);
            picks[static_cast<size_t>(i)] = candidates[static_cast<size_t>(i)];
        }
    } else {
        for (int32_t i = 0; i < k; ++i)
            picks[static_cast<size_t>(i)] = candidates[stream.uniform_int(n)];
    }
    std::vector<std::pair<int32_t, double>> out;
    out.reserve(static_cast<size_t>(k));
    for (int32_t i = 0; i < k; ++i)
        out.emplace_back(picks[static_cast<size_t>(i)], beta_sample(stream, alpha, false));
    return out;
}

// Synthetic samples for one training triple: empty unless its tail-relation
// degree is under the threshold, else k blends with sampled partners.
inline std::vector<MixedTriple> synth_batch(int32_t e_index, const std::vector<Triple>& train,
                                            const DegreeIndex& idx, const TrainConfig& cfg,
                                            RngStream& stream, const ModelParams& params) {
    const Triple& e = train.at(static_cast<size_t>(e_index));
    if (idx.tail_relation(e.tail, e.relation) >= cfg.degree_threshold) return {};
    std::vector<MixedTriple> out;
    for (const auto& [cand, lambda] :
         synth_partners(e_index, train, idx, cfg.synth_per_triple, cfg.mix_alpha, stream)) {
        out.push_back(mix(e, train[static_cast<size_t>(cand)], lambda, params));
    }
    return out;
}

struct EpochRow {
    int32_t epoch = 0;
    double train_loss = 0.0;
    uint64_t synth_count = 0;
    double lr = 0.0;
};

struct RunReport {
    std::vector<EpochRow> rows;
    uint64_t scored_positives = 0;
    uint64_t scored_negatives = 0;
    uint64_t scored_synthetic = 0;
    // under-threshold triples whose candidate set was empty even after the
    // lenient fallback, summed over epochs
    uint64_t synth_skipped = 0;
};

struct TrainResult {
    ModelParams params;
    std::optional<ModelParams> swa_params;
    RunReport report;
};

// Called after every epoch with the epoch number (1-based, counting both
// phases) and the current parameters.
using EpochHook = std::function<void(int32_t, const ModelParams&)>;

namespace detail {

inline std::vector<Tensor*> param_ptrs(ModelParams& p) {
    std::vector<Tensor*> v{&p.entities, &p.relations};
    if (p.has_core()) v.push_back(&p.core);
    return v;
}

inline std::vector<const Tensor*> grad_ptrs(const ModelParams& p, const Gradients& g) {
    std::vector<const Tensor*> v{&g.entities, &g.relations};
    if (p.has_core()) v.push_back(&g.core);
    return v;
}

}  // namespace detail

// Full training loop. Methods:
//   standard    BCE over positives and sampled negatives
//   oversample  under-threshold triples appear (eta - d) extra times per epoch
//   reweight    under-threshold positives weighted min(eta/max(1,d), 10)
//   focal       focal-weighted BCE
//   kg_mixup    pretrain phase, interaction re-init (embeddings kept), then
//               standard loss plus beta times the mean loss over synthetic
//               blends of under-threshold triples
// SWA, when enabled, switches to a constant swa_lr from epoch
// ceil(swa_start_fraction * epochs) of the main phase and averages the
// parameters after each of those epochs.
//
// `initial` warm-starts the parameters instead of random init; shapes must
// match the config.
inline TrainResult train(const KnowledgeGraph& g, const DegreeIndex& idx, const TrainConfig& cfg,
                         const EpochHook& hook = {},
                         std::optional<ModelParams> initial = std::nullopt) {
    cfg.validate();
    if (!g.inverse_augmented) throw ConfigError("train: graph must be inverse-augmented first");
    if (g.train.empty()) throw DataError("train: training split is empty");
    if (idx.num_entities() != g.num_entities() || idx.num_relations() != g.num_relations())
        throw ConfigError("train: degree index does not match the graph");

    RngStream init_rng(cfg.seed, StreamPurpose::Init);
    RngStream neg_rng(cfg.seed, StreamPurpose::Negatives);
    RngStream mix_rng(cfg.seed, StreamPurpose::Mixup);
    RngStream drop_rng(cfg.seed, StreamPurpose::Dropout);
    RngStream order_rng(cfg.seed, StreamPurpose::DataOrder);

    ModelParams params;
    if (initial.has_value()) {
        params = std::move(*initial);
        if (params.kind != cfg.model_kind || params.num_entities() != g.num_entities() ||
            params.num_relations() != g.num_relations() ||
            params.entity_dim() != static_cast<size_t>(cfg.n_v) ||
            params.relation_dim() != static_cast<size_t>(cfg.n_r))
            throw ConfigError("train: initial parameters do not match config/graph shapes");
    } else {
        params = init_model(cfg.model_kind, g.num_entities(), g.num_relations(),
                            static_cast<size_t>(cfg.n_v), static_cast<size_t>(cfg.n_r), init_rng);
    }

    const size_t n_train = g.train.size();
    std::vector<int32_t> tail_deg(n_train);
    std::vector<char> under(n_train, 0);
    for (size_t i = 0; i < n_train; ++i) {
        const Triple& e = g.train[i];
        tail_deg[i] = idx.tail_relation(e.tail, e.relation);
        under[i] = tail_deg[i] < cfg.degree_threshold ? 1 : 0;
    }

    const LossConfig loss_cfg{cfg.label_smoothing, cfg.method == TrainMethod::Focal,
                              cfg.focal_gamma};
    const DropoutRates rates{cfg.dropout1, cfg.dropout2, cfg.dropout3};
    const double beta = cfg.synth_loss_weight;

    auto fresh_adam = [&]() {
        std::vector<const Tensor*> ptrs{&params.entities, &params.relations};
        if (params.has_core()) ptrs.push_back(&params.core);
        return AdamState(ptrs, AdamConfig{cfg.lr});
    };
    AdamState adam = fresh_adam();

    TrainResult result;
    RunReport& report = result.report;
    Gradients grads(params);

    // one epoch; returns its mean per-batch loss
    auto run_epoch = [&](int32_t global_epoch, double lr_epoch, bool mixup_active,
                         bool oversample_active, bool reweight_active) {
        adam.set_lr(lr_epoch);
        std::vector<int32_t> order;
        order.reserve(n_train);
        for (size_t i = 0; i < n_train; ++i) order.push_back(static_cast<int32_t>(i));
        if (oversample_active) {
            for (size_t i = 0; i < n_train; ++i) {
                if (!under[i]) continue;
                const int32_t extra = cfg.degree_threshold - tail_deg[i];
                for (int32_t c = 0; c < extra; ++c) order.push_back(static_cast<int32_t>(i));
            }
        }
        order_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        size_t batches = 0;
        uint64_t synth_epoch = 0;
        std::vector<Query> real, synth;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            real.clear();
            synth.clear();
            for (size_t b = start; b < stop; ++b) {
                const int32_t ti = order[b];
                const Triple& e = g.train[static_cast<size_t>(ti)];
                double w = 1.0;
                if (reweight_active && under[static_cast<size_t>(ti)]) {
                    w = std::min(
                        static_cast<double>(cfg.degree_threshold) /
                            std::max(1, tail_deg[static_cast<size_t>(ti)]),
                        10.0);
                }
                real.push_back({{{e.head, 1.0}}, {{e.relation, 1.0}}, e.tail, 1.0, w});
                for (const Triple& neg :
                     sample_negatives(neg_rng, e, cfg.negatives, g.num_entities())) {
                    real.push_back({{{neg.head, 1.0}}, {{neg.relation, 1.0}}, neg.tail, 0.0, 1.0});
                }
            }
            if (mixup_active) {
                for (size_t b = start; b < stop; ++b) {
                    const int32_t ti = order[b];
                    if (!under[static_cast<size_t>(ti)]) continue;
                    const Triple& e = g.train[static_cast<size_t>(ti)];
                    const auto partners = synth_partners(ti, g.train, idx, cfg.synth_per_triple,
                                                         cfg.mix_alpha, mix_rng);
                    if (partners.empty()) {
                        report.synth_skipped += 1;
                        continue;
                    }
                    for (const auto& [cand, lambda] : partners) {
                        const Triple& c = g.train[static_cast<size_t>(cand)];
                        synth.push_back({{{e.head, lambda}, {c.head, 1.0 - lambda}},
                                         {{e.relation, lambda}, {c.relation, 1.0 - lambda}},
                                         e.tail,
                                         1.0,
                                         1.0});
                    }
                }
            }
            grads.clear();
            double batch_loss = 0.0;
            try {
                const BatchStats s_kg =
                    forward_backward(params, real, loss_cfg, rates, drop_rng, grads, 1.0);
                batch_loss = s_kg.loss;
                if (!synth.empty()) {
                    const BatchStats s_mix =
                        forward_backward(params, synth, loss_cfg, rates, drop_rng, grads, beta);
                    batch_loss += beta * s_mix.loss;
                }
            } catch (const ComputeError& ex) {
                throw ComputeError(std::string(ex.what()) + " (epoch " +
                                   std::to_string(global_epoch) + ", batch " +
                                   std::to_string(batches) + ")");
            }
            if (!std::isfinite(batch_loss))
                throw ComputeError("training diverged: non-finite loss (epoch " +
                                   std::to_string(global_epoch) + ", batch " +
                                   std::to_string(batches) + ")");
            report.scored_positives += stop - start;
            report.scored_negatives += (stop - start) * static_cast<uint64_t>(cfg.negatives);
            report.scored_synthetic += synth.size();
            synth_epoch += synth.size();
            adam.step(detail::param_ptrs(params), detail::grad_ptrs(params, grads));
            loss_sum += batch_loss;
            batches += 1;
        }
        const double epoch_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
        report.rows.push_back({global_epoch, epoch_loss, synth_epoch, lr_epoch});
        if (hook) hook(global_epoch, params);
        return epoch_loss;
    };

    int32_t global_epoch = 0;

    // Pretrain phase: plain training to settle the embeddings before blending.
    if (cfg.method == TrainMethod::KgMixup) {
        double cur_lr = cfg.lr;
        for (int32_t e = 1; e <= cfg.effective_pretrain_epochs(); ++e) {
            run_epoch(++global_epoch, cur_lr, false, false, false);
            cur_lr *= cfg.lr_decay;
        }
        RngStream reinit_rng(cfg.seed, StreamPurpose::Init, 1);
        reinit_interaction(params, reinit_rng);
        adam = fresh_adam();
    }

    // Main phase.
    const int32_t swa_start =
        cfg.swa_enabled
            ? std::max<int32_t>(1, static_cast<int32_t>(std::ceil(
                                       cfg.swa_start_fraction * cfg.epochs - 1e-9)))
            : cfg.epochs + 1;
    Tensor swa_ent, swa_rel, swa_core;
    int64_t swa_n = 0;
    double cur_lr = cfg.lr;
    for (int32_t e = 1; e <= cfg.epochs; ++e) {
        const bool swa_now = cfg.swa_enabled && e >= swa_start;
        const double lr_epoch = swa_now ? cfg.swa_lr : cur_lr;
        run_epoch(++global_epoch, lr_epoch,
                  cfg.method == TrainMethod::KgMixup && beta != 0.0,
                  cfg.method == TrainMethod::Oversample, cfg.method == TrainMethod::Reweight);
        cur_lr *= cfg.lr_decay;
        if (swa_now) {
            if (swa_n == 0) {
                swa_ent = params.entities;
                swa_rel = params.relations;
                if (params.has_core()) swa_core = params.core;
            } else {
                tensor_ops::axpy(1.0, params.entities, swa_ent);
                tensor_ops::axpy(1.0, params.relations, swa_rel);
                if (params.has_core()) tensor_ops::axpy(1.0, params.core, swa_core);
            }
            swa_n += 1;
        }
    }

    if (swa_n > 0) {
        ModelParams swa;
        swa.kind = params.kind;
        swa.entities = tensor_ops::scale(swa_ent, 1.0 / static_cast<double>(swa_n));
        swa.relations = tensor_ops::scale(swa_rel, 1.0 / static_cast<double>(swa_n));
        if (params.has_core())
            swa.core = tensor_ops::scale(swa_core, 1.0 / static_cast<double>(swa_n));
        result.swa_params = std::move(swa);
    }
    result.params = std::move(params);
    return result;
}

inline void write_run_report(const std::string& path, const RunReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open run report for writing: " + path);
    out << "epoch,train_loss,synth_count,lr\n";
    for (const EpochRow& row : report.rows) {
        out << row.epoch << ',' << detail::format_f64(row.train_loss) << ','
            << row.synth_count << ',' << detail::format_f64(row.lr) << '\n';
    }
    if (!out) throw DataError("failed while writing run report: " + path);
}

}  // namespace kgmix
