#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "kgmix/errors.hpp"
#include "kgmix/finite_diff.hpp"
#include "kgmix/models.hpp"
#include "kgmix/rng.hpp"

using namespace kgmix;

namespace {

ModelParams small_model(ModelKind kind, RngStream& rng, int32_t nv = 5, int32_t nr = 4,
                        size_t dv = 3, size_t dr = 3) {
    return init_model(kind, nv, nr, dv, kind == ModelKind::DistMult ? dv : dr, rng);
}

std::vector<Query> mixed_batch() {
    return {
        {{{0, 1.0}}, {{1, 1.0}}, 2, 1.0, 1.0},
        {{{1, 1.0}}, {{0, 1.0}}, 4, 0.0, 1.0},
        {{{0, 0.3}, {3, 0.7}}, {{1, 0.3}, {2, 0.7}}, 1, 1.0, 0.5},
        {{{2, 1.0}}, {{3, 1.0}}, 0, 0.0, 2.0},
    };
}

}  // namespace

TEST_CASE("trilinear product scores the hand example") {
    ModelParams p;
    p.kind = ModelKind::DistMult;
    p.entities = Tensor({3, 2});
    p.relations = Tensor({1, 2});
    p.entities.row(0)[0] = 1.0;
    p.entities.row(0)[1] = 2.0;
    p.entities.row(2)[0] = 5.0;
    p.entities.row(2)[1] = 0.5;
    p.relations.row(0)[0] = 3.0;
    p.relations.row(0)[1] = 4.0;
    CHECK(score_ids(p, 0, 0, 2) == Catch::Approx(19.0).margin(1e-15));

    const auto all = score_all_tails_ids(p, 0, 0);
    REQUIRE(all.size() == 3);
    CHECK(all[2] == Catch::Approx(19.0).margin(1e-15));
    CHECK(all[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("core with unit superdiagonal reduces to the plain trilinear model") {
    RngStream rng(31, StreamPurpose::Init);
    ModelParams dm = small_model(ModelKind::DistMult, rng, 6, 5, 4);
    ModelParams tk = dm;
    tk.kind = ModelKind::TuckER;
    tk.core = Tensor({4, 4, 4});
    for (size_t i = 0; i < 4; ++i) tk.core(i, i, i) = 1.0;

    for (int32_t h = 0; h < 6; ++h)
        for (int32_t r = 0; r < 5; ++r) {
            const auto a = score_all_tails_ids(dm, h, r);
            const auto b = score_all_tails_ids(tk, h, r);
            for (int32_t t = 0; t < 6; ++t) {
                REQUIRE(std::fabs(a[static_cast<size_t>(t)] - b[static_cast<size_t>(t)]) <=
                        1e-12);
                REQUIRE(std::fabs(score_ids(dm, h, r, t) - a[static_cast<size_t>(t)]) <= 1e-12);
                REQUIRE(std::fabs(score_ids(tk, h, r, t) - b[static_cast<size_t>(t)]) <= 1e-12);
            }
        }
}

TEST_CASE("core scoring matches the naive triple loop") {
    RngStream rng(37, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::TuckER, 5, 4, 3, 2, rng);
    for (int32_t h = 0; h < 5; ++h)
        for (int32_t r = 0; r < 4; ++r)
            for (int32_t t = 0; t < 5; ++t) {
                double ref = 0.0;
                for (size_t i = 0; i < 3; ++i)
                    for (size_t j = 0; j < 2; ++j)
                        for (size_t k = 0; k < 3; ++k)
                            ref += p.entities(static_cast<size_t>(h), i) *
                                   p.relations(static_cast<size_t>(r), j) * p.core(i, j, k) *
                                   p.entities(static_cast<size_t>(t), k);
                REQUIRE(score_ids(p, h, r, t) == Catch::Approx(ref).margin(1e-12));
            }
}

TEST_CASE("score gradients match central differences for both models") {
    RngStream rng(41, StreamPurpose::Init);
    for (ModelKind kind : {ModelKind::DistMult, ModelKind::TuckER}) {
        const ModelParams p = kind == ModelKind::DistMult
                                  ? init_model(kind, 4, 3, 3, 3, rng)
                                  : init_model(kind, 4, 3, 3, 2, rng);
        for (int round = 0; round < 10; ++round) {
            Tensor h({p.entity_dim()}), r({p.relation_dim()}), t({p.entity_dim()});
            for (size_t i = 0; i < h.size(); ++i) h[i] = rng.normal();
            for (size_t i = 0; i < r.size(); ++i) r[i] = rng.normal();
            for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
            const ScoreGrad g = score_grad(p, h.data(), r.data(), t.data());
            CHECK(g.f == Catch::Approx(score(p, h.data(), r.data(), t.data())).margin(1e-12));
            const auto fd = finite_diff_grad(
                [&](const std::vector<Tensor>& ps) {
                    return score(p, ps[0].data(), ps[1].data(), ps[2].data());
                },
                {h, r, t}, 1e-5);
            for (size_t i = 0; i < h.size(); ++i)
                CHECK(g.dh[i] == Catch::Approx(fd[0][i]).margin(1e-6));
            for (size_t i = 0; i < r.size(); ++i)
                CHECK(g.dr[i] == Catch::Approx(fd[1][i]).margin(1e-6));
            for (size_t i = 0; i < t.size(); ++i)
                CHECK(g.dt[i] == Catch::Approx(fd[2][i]).margin(1e-6));
        }
    }
}

TEST_CASE("logit loss matches frozen reference values") {
    LossConfig plain;
    auto lg = loss_with_logit(0.3, 1.0, plain);
    CHECK(lg.loss == Catch::Approx(0.55435524446852712).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(-0.42555748318834101).epsilon(1e-14));
    lg = loss_with_logit(-1.2, 0.0, plain);
    CHECK(lg.loss == Catch::Approx(0.26328246733803119).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(0.23147521650098236).epsilon(1e-14));

    LossConfig smooth;
    smooth.label_smoothing = 0.1;
    lg = loss_with_logit(2.0, 1.0, smooth);
    CHECK(lg.loss == Catch::Approx(0.2269280110429725).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(-0.069202922022117556).epsilon(1e-14));
    lg = loss_with_logit(-0.7, 0.0, smooth);
    CHECK(lg.loss == Catch::Approx(0.43818604888545789).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(0.28181222783183389).epsilon(1e-14));

    LossConfig focal;
    focal.focal = true;
    lg = loss_with_logit(0.5, 1.0, focal);
    CHECK(lg.loss == Catch::Approx(0.067573490517503636).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(-0.13793699735091442).epsilon(1e-14));
    lg = loss_with_logit(0.5, 0.0, focal);
    CHECK(lg.loss == Catch::Approx(0.37741160085940978).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(0.52615182187458303).epsilon(1e-14));
    lg = loss_with_logit(-1.5, 1.0, focal);
    CHECK(lg.loss == Catch::Approx(1.1372723156191765).epsilon(1e-14));
    CHECK(lg.dlogit == Catch::Approx(-0.96142468747036022).epsilon(1e-14));
}

TEST_CASE("logit-loss derivative agrees with finite differences everywhere") {
    const double h = 1e-6;
    for (bool focal : {false, true}) {
        for (double eps : {0.0, 0.1}) {
            if (focal && eps != 0.0) continue;
            LossConfig cfg;
            cfg.focal = focal;
            cfg.label_smoothing = eps;
            for (double y : {0.0, 1.0}) {
                for (double f : {-3.0, -0.9, -0.1, 0.0, 0.4, 1.7, 5.0}) {
                    const double fp = loss_with_logit(f + h, y, cfg).loss;
                    const double fm = loss_with_logit(f - h, y, cfg).loss;
                    const double want = (fp - fm) / (2.0 * h);
                    CHECK(loss_with_logit(f, y, cfg).dlogit ==
                          Catch::Approx(want).margin(1e-7));
                }
            }
        }
    }
    // extreme logits stay finite
    LossConfig cfg;
    const auto big = loss_with_logit(800.0, 0.0, cfg);
    CHECK(std::isfinite(big.loss));
    const auto small = loss_with_logit(-800.0, 1.0, cfg);
    CHECK(std::isfinite(small.loss));
}

TEST_CASE("batch backward matches finite differences of the batch loss") {
    RngStream rng(43, StreamPurpose::Init);
    for (ModelKind kind : {ModelKind::DistMult, ModelKind::TuckER}) {
        const ModelParams p = kind == ModelKind::DistMult
                                  ? init_model(kind, 5, 4, 3, 3, rng)
                                  : init_model(kind, 5, 4, 3, 2, rng);
        LossConfig cfg;
        cfg.label_smoothing = 0.1;
        const DropoutRates off;
        const std::vector<Query> batch = mixed_batch();

        RngStream drop(1, StreamPurpose::Dropout);
        Gradients grads(p);
        const BatchStats stats = forward_backward(p, batch, cfg, off, drop, grads, 1.0);
        CHECK(drop.draws() == 0);
        CHECK(stats.queries == batch.size());
        CHECK(stats.weight == Catch::Approx(4.5).margin(1e-12));

        auto loss_of = [&](const std::vector<Tensor>& ps) {
            ModelParams q;
            q.kind = kind;
            q.entities = ps[0];
            q.relations = ps[1];
            if (kind == ModelKind::TuckER) q.core = ps[2];
            Gradients scratch(q);
            RngStream d(1, StreamPurpose::Dropout);
            return forward_backward(q, batch, cfg, off, d, scratch, 1.0).loss;
        };
        std::vector<Tensor> params = {p.entities, p.relations};
        if (kind == ModelKind::TuckER) params.push_back(p.core);
        const auto fd = finite_diff_grad(loss_of, params, 1e-5);
        for (size_t i = 0; i < p.entities.size(); ++i)
            CHECK(grads.entities[i] == Catch::Approx(fd[0][i]).margin(1e-6));
        for (size_t i = 0; i < p.relations.size(); ++i)
            CHECK(grads.relations[i] == Catch::Approx(fd[1][i]).margin(1e-6));
        if (kind == ModelKind::TuckER)
            for (size_t i = 0; i < p.core.size(); ++i)
                CHECK(grads.core[i] == Catch::Approx(fd[2][i]).margin(1e-6));

        // grad_scale multiplies and accumulates on top of existing content
        Gradients doubled(p);
        RngStream d2(1, StreamPurpose::Dropout);
        forward_backward(p, batch, cfg, off, d2, doubled, 2.0);
        for (size_t i = 0; i < p.entities.size(); ++i)
            CHECK(doubled.entities[i] == Catch::Approx(2.0 * grads.entities[i]).margin(1e-12));
    }
}

TEST_CASE("blended rows score as the blended vectors") {
    RngStream rng(47, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::DistMult, 5, 4, 3, 3, rng);
    const double lam = 0.3;
    std::vector<double> h(3), r(3);
    for (size_t i = 0; i < 3; ++i) {
        h[i] = lam * p.entities(0, i) + (1 - lam) * p.entities(3, i);
        r[i] = lam * p.relations(1, i) + (1 - lam) * p.relations(2, i);
    }
    const double want = score(p, h, r, p.entities.row(1));
    const LossConfig cfg;
    const DropoutRates off;
    RngStream drop(1, StreamPurpose::Dropout);
    Gradients grads(p);
    const std::vector<Query> one = {{{{0, lam}, {3, 1 - lam}}, {{1, lam}, {2, 1 - lam}}, 1, 1.0,
                                     1.0}};
    const BatchStats stats = forward_backward(p, one, cfg, off, drop, grads, 1.0);
    CHECK(stats.loss == Catch::Approx(softplus(-want)).margin(1e-12));
}

TEST_CASE("dropout masks are inverted, sized by rate, and free when off") {
    RngStream rng(53, StreamPurpose::Dropout);
    std::vector<double> mask(100000);
    draw_mask(rng, 0.0, mask);
    CHECK(rng.draws() == 0);
    for (double v : mask) REQUIRE(v == 1.0);

    const double rate = 0.3;
    draw_mask(rng, rate, mask);
    CHECK(rng.draws() == mask.size());
    size_t zeros = 0;
    double sum = 0.0;
    for (double v : mask) {
        REQUIRE((v == 0.0 || v == Catch::Approx(1.0 / (1.0 - rate)).margin(1e-15)));
        zeros += v == 0.0;
        sum += v;
    }
    CHECK(static_cast<double>(zeros) / static_cast<double>(mask.size()) ==
          Catch::Approx(rate).margin(0.01));
    CHECK(sum / static_cast<double>(mask.size()) == Catch::Approx(1.0).margin(0.01));
    CHECK_THROWS_AS(draw_mask(rng, 1.0, mask), ConfigError);
    CHECK_THROWS_AS(draw_mask(rng, -0.1, mask), ConfigError);
}

TEST_CASE("dropout keeps the batch deterministic given the stream position") {
    RngStream rng(59, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::TuckER, 5, 4, 3, 2, rng);
    const LossConfig cfg;
    DropoutRates rates;
    rates.d1 = 0.2;
    rates.d2 = 0.3;
    rates.d3 = 0.1;
    const std::vector<Query> batch = mixed_batch();
    Gradients g1(p), g2(p);
    RngStream d1(7, StreamPurpose::Dropout), d2(7, StreamPurpose::Dropout);
    const BatchStats s1 = forward_backward(p, batch, cfg, rates, d1, g1, 1.0);
    const BatchStats s2 = forward_backward(p, batch, cfg, rates, d2, g2, 1.0);
    CHECK(s1.loss == s2.loss);
    CHECK(d1.draws() == d2.draws());
    CHECK(tensor_ops::max_abs_diff(g1.entities, g2.entities) == 0.0);
    CHECK(tensor_ops::max_abs_diff(g1.core, g2.core) == 0.0);
}

TEST_CASE("model construction validates shapes and reinit touches only the core") {
    RngStream rng(61, StreamPurpose::Init);
    CHECK_THROWS_AS(init_model(ModelKind::DistMult, 4, 3, 3, 2, rng), ConfigError);
    CHECK_THROWS_AS(init_model(ModelKind::DistMult, 0, 3, 3, 3, rng), ConfigError);

    ModelParams tk = init_model(ModelKind::TuckER, 6, 4, 3, 2, rng);
    REQUIRE(tk.has_core());
    REQUIRE(tk.core.shape() == std::vector<size_t>{3, 2, 3});
    const Tensor ents = tk.entities, rels = tk.relations, core = tk.core;
    RngStream rng2(61, StreamPurpose::Init, 1);
    reinit_interaction(tk, rng2);
    CHECK(tensor_ops::max_abs_diff(tk.entities, ents) == 0.0);
    CHECK(tensor_ops::max_abs_diff(tk.relations, rels) == 0.0);
    CHECK(tensor_ops::max_abs_diff(tk.core, core) > 0.0);

    ModelParams dm = init_model(ModelKind::DistMult, 6, 4, 3, 3, rng);
    const Tensor de = dm.entities;
    reinit_interaction(dm, rng2);
    CHECK_FALSE(dm.has_core());
    CHECK(tensor_ops::max_abs_diff(dm.entities, de) == 0.0);
}

TEST_CASE("initialization scales match their documented distributions") {
    RngStream rng(67, StreamPurpose::Init);
    const ModelParams p = init_model(ModelKind::TuckER, 400, 100, 16, 8, rng);
    double s = 0.0, s2 = 0.0;
    for (double v : p.entities.data()) {
        s += v;
        s2 += v * v;
    }
    const auto n = static_cast<double>(p.entities.size());
    CHECK(s / n == Catch::Approx(0.0).margin(0.005));
    CHECK(s2 / n == Catch::Approx(0.01).margin(0.002));
    double clo = 1.0, chi = -1.0, cs = 0.0;
    for (double v : p.core.data()) {
        clo = std::min(clo, v);
        chi = std::max(chi, v);
        cs += v;
    }
    CHECK(clo >= -1.0);
    CHECK(chi <= 1.0);
    CHECK(cs / static_cast<double>(p.core.size()) == Catch::Approx(0.0).margin(0.1));
}

TEST_CASE("invalid queries and corrupt parameters are rejected") {
    RngStream rng(71, StreamPurpose::Init);
    ModelParams p = init_model(ModelKind::DistMult, 4, 3, 3, 3, rng);
    const LossConfig cfg;
    const DropoutRates off;
    RngStream drop(1, StreamPurpose::Dropout);
    Gradients grads(p);
    std::vector<Query> bad = {{{{0, 1.0}}, {{0, 1.0}}, 1, 1.0, 0.0}};
    CHECK_THROWS_AS(forward_backward(p, bad, cfg, off, drop, grads, 1.0), ConfigError);

    p.entities(0, 0) = std::numeric_limits<double>::quiet_NaN();
    std::vector<Query> q = {{{{0, 1.0}}, {{0, 1.0}}, 1, 1.0, 1.0}};
    CHECK_THROWS_AS(forward_backward(p, q, cfg, off, drop, grads, 1.0), ComputeError);
}
