#include <catch2/catch_amalgamated.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgmix/checkpoint.hpp"
#include "kgmix/degree.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/kg.hpp"
#include "kgmix/models.hpp"
#include "kgmix/rng.hpp"
#include "kgmix/train.hpp"

using namespace kgmix;

namespace {

KnowledgeGraph random_graph(uint64_t seed, int32_t nv, int32_t nr, int n_triples) {
    KnowledgeGraph g;
    for (int32_t i = 0; i < nv; ++i) g.entities.get_or_add("e" + std::to_string(i));
    for (int32_t i = 0; i < nr; ++i) g.relations.get_or_add("r" + std::to_string(i));
    RngStream rng(seed, StreamPurpose::Bench);
    std::unordered_set<Triple, TripleHash> seen;
    while (static_cast<int>(g.train.size()) < n_triples) {
        Triple t{static_cast<int32_t>(rng.uniform_int(static_cast<uint64_t>(nv))),
                 static_cast<int32_t>(rng.uniform_int(static_cast<uint64_t>(nr))),
                 static_cast<int32_t>(rng.uniform_int(static_cast<uint64_t>(nv)))};
        if (t.head == t.tail) continue;
        if (!seen.insert(t).second) continue;
        g.train.push_back(t);
    }
    return add_inverses(g);
}

TrainConfig base_config(const KnowledgeGraph& g) {
    TrainConfig cfg;
    cfg.model_kind = ModelKind::DistMult;
    cfg.n_v = 8;
    cfg.n_r = 8;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.negatives = 4;
    cfg.lr = 0.02;
    cfg.seed = 7;
    (void)g;
    return cfg;
}

std::vector<char> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// tail 4 collects four triples with varied heads/relations, tail 5 is lonely
std::vector<Triple> partner_fixture() {
    return {{0, 0, 4}, {1, 1, 4}, {0, 2, 4}, {2, 0, 4}, {3, 3, 5}};
}

}  // namespace

TEST_CASE("negative sampling corrupts only the tail and covers entities uniformly") {
    RngStream rng(11, StreamPurpose::Negatives);
    const Triple pos{3, 1, 7};
    const int32_t nv = 10;
    const int n = 90000;
    const auto negs = sample_negatives(rng, pos, n, nv);
    REQUIRE(negs.size() == static_cast<size_t>(n));
    std::vector<int> counts(static_cast<size_t>(nv), 0);
    for (const Triple& t : negs) {
        REQUIRE(t.head == pos.head);
        REQUIRE(t.relation == pos.relation);
        REQUIRE(t.tail != pos.tail);
        REQUIRE((t.tail >= 0 && t.tail < nv));
        counts[static_cast<size_t>(t.tail)] += 1;
    }
    CHECK(counts[7] == 0);
    const double expect = static_cast<double>(n) / (nv - 1);
    double chi2 = 0.0;
    for (int32_t v = 0; v < nv; ++v) {
        if (v == pos.tail) continue;
        const double d = counts[static_cast<size_t>(v)] - expect;
        chi2 += d * d / expect;
    }
    CHECK(chi2 < 26.124);  // df 8 at the 0.1% level

    CHECK_THROWS_AS(sample_negatives(rng, pos, 0, nv), ConfigError);
    CHECK_THROWS_AS(sample_negatives(rng, pos, 1, 1), DataError);
}

TEST_CASE("mixing blends endpoints exactly and rejects bad inputs") {
    RngStream rng(13, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::DistMult, 5, 4, 3, 3, rng);
    const Triple a{0, 1, 2}, b{3, 2, 2}, c{1, 1, 3};

    const MixedTriple at = mix(a, b, 1.0, p);
    CHECK(at.tail == 2);
    CHECK(at.lambda == 1.0);
    CHECK(at.source_e1 == a);
    CHECK(at.source_e2 == b);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(at.mixed_head[i] == p.entities(0, i));
        REQUIRE(at.mixed_rel[i] == p.relations(1, i));
    }
    const MixedTriple bt = mix(a, b, 0.0, p);
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(bt.mixed_head[i] == p.entities(3, i));
        REQUIRE(bt.mixed_rel[i] == p.relations(2, i));
    }
    const MixedTriple mid = mix(a, b, 0.5, p);
    for (size_t i = 0; i < 3; ++i)
        REQUIRE(mid.mixed_head[i] ==
                Catch::Approx(0.5 * (p.entities(0, i) + p.entities(3, i))).margin(1e-15));

    for (int round = 0; round < 1000; ++round) {
        const double lam = rng.uniform();
        const MixedTriple m = mix(a, b, lam, p);
        for (size_t i = 0; i < 3; ++i) {
            const double lo = std::min(p.entities(0, i), p.entities(3, i));
            const double hi = std::max(p.entities(0, i), p.entities(3, i));
            REQUIRE(m.mixed_head[i] >= lo - 1e-12);
            REQUIRE(m.mixed_head[i] <= hi + 1e-12);
        }
    }

    CHECK_THROWS_AS(mix(a, c, 0.5, p), ConfigError);
    CHECK_THROWS_AS(mix(a, b, 1.5, p), ConfigError);
    CHECK_THROWS_AS(mix(a, b, -0.1, p), ConfigError);
}

TEST_CASE("mixing partners respect strictness, fall back, and handle small pools") {
    const std::vector<Triple> train = partner_fixture();
    const DegreeIndex idx(train, 6, 4);

    // strict partners of train[0] = {1}: index 2 shares the head, 3 the relation
    RngStream s1(17, StreamPurpose::Mixup);
    const auto lone = synth_partners(0, train, idx, 1, 1.0, s1);
    REQUIRE(lone.size() == 1);
    CHECK(lone[0].first == 1);

    // with k above the pool size every pick is the single strict candidate
    const auto rep = synth_partners(0, train, idx, 4, 1.0, s1);
    REQUIRE(rep.size() == 4);
    for (const auto& [cand, lam] : rep) {
        CHECK(cand == 1);
        CHECK((lam >= 0.0 && lam <= 1.0));
    }

    // train[1] has the full strict pool {0, 2, 3}; k == pool gives a permutation
    const auto all3 = synth_partners(1, train, idx, 3, 1.0, s1);
    REQUIRE(all3.size() == 3);
    std::vector<int32_t> got;
    for (const auto& pr : all3) got.push_back(pr.first);
    std::sort(got.begin(), got.end());
    CHECK(got == std::vector<int32_t>{0, 2, 3});

    // lonely tail: no candidates at all
    CHECK(synth_partners(4, train, idx, 3, 1.0, s1).empty());

    // same head everywhere: strict is empty, the lenient fallback still mixes
    const std::vector<Triple> shared = {{0, 0, 4}, {0, 1, 4}};
    const DegreeIndex idx2(shared, 5, 2);
    const auto fb = synth_partners(0, shared, idx2, 2, 1.0, s1);
    REQUIRE(fb.size() == 2);
    for (const auto& pr : fb) CHECK(pr.first == 1);

    CHECK_THROWS_AS(synth_partners(0, train, idx, 0, 1.0, s1), ConfigError);

    RngStream t1(19, StreamPurpose::Mixup), t2(19, StreamPurpose::Mixup);
    const auto r1 = synth_partners(1, train, idx, 3, 0.7, t1);
    const auto r2 = synth_partners(1, train, idx, 3, 0.7, t2);
    CHECK(r1 == r2);
}

TEST_CASE("synthetic batches appear only under the degree threshold") {
    const std::vector<Triple> train = partner_fixture();
    const DegreeIndex idx(train, 6, 4);
    RngStream rng(23, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::DistMult, 6, 4, 3, 3, rng);

    TrainConfig cfg;
    cfg.degree_threshold = 2;
    cfg.synth_per_triple = 2;
    RngStream mix_rng(23, StreamPurpose::Mixup);
    // train[0] sits at tail-relation degree 2, exactly at the threshold
    CHECK(synth_batch(0, train, idx, cfg, mix_rng, p).empty());
    // train[1] is under it
    const auto made = synth_batch(1, train, idx, cfg, mix_rng, p);
    REQUIRE(made.size() == 2);
    for (const MixedTriple& m : made) {
        CHECK(m.tail == 4);
        CHECK((m.lambda >= 0.0 && m.lambda <= 1.0));
        CHECK(m.mixed_head.size() == 3);
        CHECK(m.mixed_rel.size() == 3);
    }
    cfg.degree_threshold = 0;
    CHECK(synth_batch(1, train, idx, cfg, mix_rng, p).empty());
}

TEST_CASE("training is deterministic and the report tracks the schedule") {
    const KnowledgeGraph g = random_graph(31, 12, 3, 40);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.epochs = 5;
    cfg.lr_decay = 0.5;

    const TrainResult a = train(g, idx, cfg);
    const TrainResult b = train(g, idx, cfg);
    CHECK(tensor_ops::max_abs_diff(a.params.entities, b.params.entities) == 0.0);
    CHECK(tensor_ops::max_abs_diff(a.params.relations, b.params.relations) == 0.0);
    CHECK_FALSE(a.swa_params.has_value());

    REQUIRE(a.report.rows.size() == 5);
    double want_lr = cfg.lr;
    for (size_t i = 0; i < 5; ++i) {
        const EpochRow& row = a.report.rows[i];
        CHECK(row.epoch == static_cast<int32_t>(i) + 1);
        CHECK(row.lr == want_lr);
        CHECK(row.synth_count == 0);
        CHECK(row.train_loss == b.report.rows[i].train_loss);
        CHECK(std::isfinite(row.train_loss));
        want_lr *= cfg.lr_decay;
    }
    CHECK(a.report.rows.back().train_loss < a.report.rows.front().train_loss);

    const uint64_t n_train = g.train.size();
    CHECK(a.report.scored_positives == 5 * n_train);
    CHECK(a.report.scored_negatives == 5 * n_train * static_cast<uint64_t>(cfg.negatives));
    CHECK(a.report.scored_synthetic == 0);
    CHECK(a.report.synth_skipped == 0);
}

TEST_CASE("mixup with zero synthetic weight reproduces plain training exactly") {
    const KnowledgeGraph g = random_graph(37, 10, 3, 30);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig std_cfg = base_config(g);
    TrainConfig mix_cfg = std_cfg;
    mix_cfg.method = TrainMethod::KgMixup;
    mix_cfg.synth_loss_weight = 0.0;
    mix_cfg.pretrain_epochs = 0;

    const TrainResult a = train(g, idx, std_cfg);
    const TrainResult b = train(g, idx, mix_cfg);
    CHECK(tensor_ops::max_abs_diff(a.params.entities, b.params.entities) == 0.0);
    CHECK(tensor_ops::max_abs_diff(a.params.relations, b.params.relations) == 0.0);
    REQUIRE(a.report.rows.size() == b.report.rows.size());
    for (size_t i = 0; i < a.report.rows.size(); ++i)
        CHECK(a.report.rows[i].train_loss == b.report.rows[i].train_loss);
    CHECK(b.report.scored_synthetic == 0);
}

TEST_CASE("oversampling extends each epoch by the missing degree mass") {
    const KnowledgeGraph g = random_graph(41, 10, 3, 30);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.method = TrainMethod::Oversample;
    cfg.degree_threshold = 3;
    cfg.epochs = 2;

    uint64_t extras = 0;
    for (const Triple& e : g.train) {
        const int32_t d = idx.tail_relation(e.tail, e.relation);
        if (d < cfg.degree_threshold) extras += static_cast<uint64_t>(cfg.degree_threshold - d);
    }
    REQUIRE(extras > 0);

    const TrainResult r = train(g, idx, cfg);
    const uint64_t per_epoch = g.train.size() + extras;
    CHECK(r.report.scored_positives == 2 * per_epoch);
    CHECK(r.report.scored_negatives == 2 * per_epoch * static_cast<uint64_t>(cfg.negatives));
}

TEST_CASE("reweighting matches a hand-assembled first epoch") {
    const KnowledgeGraph g = random_graph(43, 9, 2, 10);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.model_kind = ModelKind::DistMult;
    cfg.n_v = cfg.n_r = 6;
    cfg.method = TrainMethod::Reweight;
    cfg.degree_threshold = 3;
    cfg.epochs = 1;
    cfg.batch_size = static_cast<int32_t>(g.train.size());  // one batch per epoch
    cfg.negatives = 3;
    cfg.seed = 67;

    const TrainResult r = train(g, idx, cfg);
    REQUIRE(r.report.rows.size() == 1);

    // replay the first epoch: same init, same shuffle, same negatives
    RngStream init_rng(cfg.seed, StreamPurpose::Init);
    const ModelParams p0 = init_model(cfg.model_kind, g.num_entities(), g.num_relations(),
                                      static_cast<size_t>(cfg.n_v),
                                      static_cast<size_t>(cfg.n_r), init_rng);
    RngStream order_rng(cfg.seed, StreamPurpose::DataOrder);
    std::vector<int32_t> order(g.train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int32_t>(i);
    order_rng.shuffle(order.begin(), order.end());

    RngStream neg_rng(cfg.seed, StreamPurpose::Negatives);
    std::vector<Query> batch;
    bool saw_weighted = false;
    for (const int32_t ti : order) {
        const Triple& e = g.train[static_cast<size_t>(ti)];
        const int32_t d = idx.tail_relation(e.tail, e.relation);
        double w = 1.0;
        if (d < cfg.degree_threshold) {
            w = std::min(static_cast<double>(cfg.degree_threshold) / std::max(1, d), 10.0);
            saw_weighted = true;
        }
        batch.push_back({{{e.head, 1.0}}, {{e.relation, 1.0}}, e.tail, 1.0, w});
        for (const Triple& neg : sample_negatives(neg_rng, e, cfg.negatives, g.num_entities()))
            batch.push_back({{{neg.head, 1.0}}, {{neg.relation, 1.0}}, neg.tail, 0.0, 1.0});
    }
    REQUIRE(saw_weighted);

    const LossConfig loss_cfg{cfg.label_smoothing, false, cfg.focal_gamma};
    const DropoutRates rates;
    RngStream drop_rng(cfg.seed, StreamPurpose::Dropout);
    Gradients scratch(p0);
    const BatchStats stats = forward_backward(p0, batch, loss_cfg, rates, drop_rng, scratch, 1.0);
    CHECK(stats.loss == r.report.rows[0].train_loss);
}

TEST_CASE("synthetic sample accounting matches the under-threshold census") {
    KnowledgeGraph g;
    for (int32_t i = 0; i < 10; ++i) g.entities.get_or_add("e" + std::to_string(i));
    for (int32_t i = 0; i < 3; ++i) g.relations.get_or_add("r" + std::to_string(i));
    g.train = {{0, 0, 4}, {1, 1, 4}, {2, 0, 4}, {3, 2, 5}, {6, 1, 5}, {8, 0, 9}};
    g = add_inverses(g);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());

    TrainConfig cfg = base_config(g);
    cfg.method = TrainMethod::KgMixup;
    cfg.degree_threshold = 2;
    cfg.synth_per_triple = 3;
    cfg.synth_loss_weight = 0.5;
    cfg.epochs = 2;
    cfg.pretrain_epochs = 1;
    cfg.batch_size = 4;

    uint64_t with = 0, without = 0;
    for (const Triple& e : g.train) {
        if (idx.tail_relation(e.tail, e.relation) >= cfg.degree_threshold) continue;
        if (idx.by_tail(e.tail).size() >= 2)
            with += 1;
        else
            without += 1;
    }
    REQUIRE(with > 0);
    REQUIRE(without > 0);

    const TrainResult r = train(g, idx, cfg);
    REQUIRE(r.report.rows.size() == 3);
    CHECK(r.report.rows[0].synth_count == 0);  // pretrain epoch blends nothing
    const uint64_t per_epoch = with * static_cast<uint64_t>(cfg.synth_per_triple);
    CHECK(r.report.rows[1].synth_count == per_epoch);
    CHECK(r.report.rows[2].synth_count == per_epoch);
    CHECK(r.report.scored_synthetic == 2 * per_epoch);
    CHECK(r.report.synth_skipped == 2 * without);
}

TEST_CASE("checkpoints round-trip through 32-bit storage and reject corruption") {
    RngStream rng(47, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::TuckER, 12, 6, 5, 4, rng);
    const std::string echo = "epochs = 3\nlr = 0.02\n";
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "kgmix_test_ckpt.kgmx";
    save_checkpoint(path, p, echo, 7);

    const CheckpointData back = load_checkpoint(path);
    CHECK(back.params.kind == ModelKind::TuckER);
    CHECK(back.epoch == 7);
    CHECK(back.config_echo == echo);
    REQUIRE(back.params.entities.shape() == p.entities.shape());
    REQUIRE(back.params.core.shape() == p.core.shape());
    CHECK(tensor_ops::max_abs_diff(back.params.entities, p.entities) < 1e-6);
    CHECK(tensor_ops::max_abs_diff(back.params.relations, p.relations) < 1e-6);
    CHECK(tensor_ops::max_abs_diff(back.params.core, p.core) < 1e-6);
    const double before = score_ids(p, 1, 2, 3);
    const double after = score_ids(back.params, 1, 2, 3);
    CHECK(after == Catch::Approx(before).margin(1e-5));

    const auto path2 = dir / "kgmix_test_ckpt2.kgmx";
    save_checkpoint(path2, p, echo, 7);
    CHECK(read_all(path) == read_all(path2));

    const std::vector<char> good = read_all(path);
    const auto bad = dir / "kgmix_test_ckpt_bad.kgmx";

    std::vector<char> magic = good;
    magic[0] = 'X';
    write_all(bad, magic);
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);
    CHECK_THROWS_WITH(load_checkpoint(bad), Catch::Matchers::ContainsSubstring("magic"));

    std::vector<char> version = good;
    version[4] = static_cast<char>(version[4] + 1);
    write_all(bad, version);
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);

    std::vector<char> cut = good;
    cut.resize(cut.size() - 5);
    write_all(bad, cut);
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);

    std::vector<char> extra = good;
    extra.push_back('\0');
    write_all(bad, extra);
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);

    CHECK_THROWS_AS(load_checkpoint(dir / "kgmix_no_such.kgmx"), DataError);
}

TEST_CASE("parameter averaging equals the mean of the tail epochs") {
    const KnowledgeGraph g = random_graph(53, 10, 3, 30);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.epochs = 4;
    cfg.swa_enabled = true;
    cfg.swa_start_fraction = 0.5;
    cfg.swa_lr = 0.004;

    std::map<int32_t, ModelParams> snaps;
    const TrainResult r = train(g, idx, cfg,
                                [&](int32_t epoch, const ModelParams& p) { snaps[epoch] = p; });
    REQUIRE(r.swa_params.has_value());
    REQUIRE(snaps.size() == 4);

    // constant averaging-phase lr from epoch 2 onwards
    CHECK(r.report.rows[0].lr == cfg.lr);
    CHECK(r.report.rows[1].lr == cfg.swa_lr);
    CHECK(r.report.rows[3].lr == cfg.swa_lr);

    Tensor mean(snaps.at(2).entities.shape());
    for (int32_t e = 2; e <= 4; ++e) tensor_ops::axpy(1.0, snaps.at(e).entities, mean);
    for (size_t i = 0; i < mean.size(); ++i)
        REQUIRE(r.swa_params->entities[i] ==
                Catch::Approx(mean[i] / 3.0).margin(1e-15));
}

TEST_CASE("training aborts on divergence and rejects malformed setups") {
    const KnowledgeGraph g = random_graph(59, 8, 2, 20);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.epochs = 1;

    ModelParams huge;
    {
        RngStream rng(1, StreamPurpose::Init);
        huge = init_model(cfg.model_kind, g.num_entities(), g.num_relations(),
                          static_cast<size_t>(cfg.n_v), static_cast<size_t>(cfg.n_r), rng);
        huge.entities.fill(1e154);
        huge.relations.fill(1e154);
    }
    CHECK_THROWS_AS(train(g, idx, cfg, {}, huge), ComputeError);
    CHECK_THROWS_WITH(train(g, idx, cfg, {}, huge),
                      Catch::Matchers::ContainsSubstring("(epoch 1, batch 0)"));

    KnowledgeGraph raw = g;
    raw.inverse_augmented = false;
    CHECK_THROWS_AS(train(raw, idx, cfg), ConfigError);

    KnowledgeGraph empty = g;
    empty.train.clear();
    CHECK_THROWS_AS(train(empty, idx, cfg), DataError);

    const DegreeIndex wrong(g.train, g.num_entities() + 1, g.num_relations());
    CHECK_THROWS_AS(train(g, wrong, cfg), ConfigError);

    RngStream rng(2, StreamPurpose::Init);
    const ModelParams thin = init_model(cfg.model_kind, g.num_entities(), g.num_relations(),
                                        4, 4, rng);
    CHECK_THROWS_AS(train(g, idx, cfg, {}, thin), ConfigError);
}

TEST_CASE("pretraining runs its own schedule before the interaction reset") {
    const KnowledgeGraph g = random_graph(61, 10, 3, 30);
    const DegreeIndex idx(g.train, g.num_entities(), g.num_relations());
    TrainConfig cfg = base_config(g);
    cfg.model_kind = ModelKind::TuckER;
    cfg.n_v = 8;
    cfg.n_r = 6;
    cfg.method = TrainMethod::KgMixup;
    cfg.epochs = 4;
    cfg.pretrain_epochs = 2;
    cfg.lr_decay = 0.5;
    cfg.degree_threshold = 3;
    cfg.synth_per_triple = 2;

    const TrainResult r = train(g, idx, cfg);
    REQUIRE(r.report.rows.size() == 6);
    const std::vector<double> want_lr = {0.02, 0.01, 0.02, 0.01, 0.005, 0.0025};
    for (size_t i = 0; i < 6; ++i) {
        CHECK(r.report.rows[i].epoch == static_cast<int32_t>(i) + 1);
        CHECK(r.report.rows[i].lr == want_lr[i]);
    }
    CHECK(r.report.rows[0].synth_count == 0);
    CHECK(r.report.rows[1].synth_count == 0);
    CHECK(r.report.rows[2].synth_count > 0);

    // the default pretrain budget is a quarter of the main epochs
    TrainConfig dflt = cfg;
    dflt.pretrain_epochs = -1;
    dflt.epochs = 8;
    CHECK(dflt.effective_pretrain_epochs() == 2);
    const TrainResult r2 = train(g, idx, dflt);
    CHECK(r2.report.rows.size() == 10);
}

TEST_CASE("run report serialization writes one row per epoch") {
    RunReport rep;
    rep.rows.push_back({1, 0.5, 0, 0.01});
    rep.rows.push_back({2, 0.25, 12, 0.005});
    const auto path = std::filesystem::temp_directory_path() / "kgmix_test_report.csv";
    write_run_report(path.string(), rep);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,train_loss,synth_count,lr");
    REQUIRE(std::getline(in, line));
    CHECK(line == "1,0.5,0,0.01");
    REQUIRE(std::getline(in, line));
    CHECK(line.substr(0, 2) == "2,");
    CHECK(line.find(",12,") != std::string::npos);
    CHECK_FALSE(std::getline(in, line));

    CHECK_THROWS_AS(write_run_report("/nonexistent-dir/x.csv", rep), DataError);
}
