#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "kgmix/adam.hpp"
#include "kgmix/errors.hpp"
#include "kgmix/finite_diff.hpp"
#include "kgmix/rng.hpp"
#include "kgmix/tensor.hpp"

using namespace kgmix;

namespace {

Tensor random_tensor(std::vector<size_t> shape, RngStream& rng) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
    return t;
}

}  // namespace

TEST_CASE("layout is row-major and indexing agrees with flat order") {
    Tensor t({2, 3});
    t(1, 2) = 7.0;
    CHECK(t[1 * 3 + 2] == 7.0);
    Tensor u({2, 3, 4});
    u(1, 2, 3) = -2.5;
    CHECK(u[(1 * 3 + 2) * 4 + 3] == -2.5);
    CHECK(u.rank() == 3);
    CHECK(u.size() == 24);
    CHECK(u.dim(2) == 4);
    CHECK_THROWS_AS(Tensor(std::vector<size_t>{}), ConfigError);
}

TEST_CASE("row views alias the underlying storage") {
    Tensor t({3, 2}, 1.0);
    auto r = t.row(1);
    REQUIRE(r.size() == 2);
    r[0] = 9.0;
    CHECK(t(1, 0) == 9.0);
    t.fill(0.5);
    CHECK(t.row(2)[1] == 0.5);
}

TEST_CASE("elementwise ops match naive loops exactly") {
    RngStream rng(3, StreamPurpose::Init);
    const Tensor a = random_tensor({4, 5}, rng);
    const Tensor b = random_tensor({4, 5}, rng);

    const Tensor s = tensor_ops::add(a, b);
    const Tensor d = tensor_ops::sub(a, b);
    const Tensor h = tensor_ops::hadamard(a, b);
    const Tensor c = tensor_ops::scale(a, -1.75);
    Tensor y = b;
    tensor_ops::axpy(0.3, a, y);
    double dot_ref = 0.0, sum_ref = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(s[i] == a[i] + b[i]);
        CHECK(d[i] == a[i] - b[i]);
        CHECK(h[i] == a[i] * b[i]);
        CHECK(c[i] == a[i] * -1.75);
        CHECK(y[i] == b[i] + 0.3 * a[i]);
        dot_ref += a[i] * b[i];
        sum_ref += a[i];
    }
    CHECK(tensor_ops::dot(a, b) == Catch::Approx(dot_ref).margin(1e-12));
    CHECK(tensor_ops::sum(a) == Catch::Approx(sum_ref).margin(1e-12));
    CHECK(tensor_ops::max_abs_diff(a, a) == 0.0);
    CHECK(tensor_ops::max_abs_diff(a, s) > 0.0);

    const Tensor wrong({5, 4});
    CHECK_THROWS_AS(tensor_ops::add(a, wrong), ConfigError);
    CHECK_THROWS_AS(tensor_ops::dot(a, wrong), ConfigError);
}

TEST_CASE("mode contraction matches the triple loop on every mode") {
    RngStream rng(5, StreamPurpose::Init);
    const Tensor core = random_tensor({2, 3, 4}, rng);
    const Tensor v0 = random_tensor({2}, rng);
    const Tensor v1 = random_tensor({3}, rng);
    const Tensor v2 = random_tensor({4}, rng);

    const Tensor m0 = tensor_ops::contract_mode(core, v0.data(), 0);
    const Tensor m1 = tensor_ops::contract_mode(core, v1.data(), 1);
    const Tensor m2 = tensor_ops::contract_mode(core, v2.data(), 2);
    REQUIRE(m0.shape() == std::vector<size_t>{3, 4});
    REQUIRE(m1.shape() == std::vector<size_t>{2, 4});
    REQUIRE(m2.shape() == std::vector<size_t>{2, 3});
    for (size_t j = 0; j < 3; ++j)
        for (size_t k = 0; k < 4; ++k) {
            double ref = 0.0;
            for (size_t i = 0; i < 2; ++i) ref += core(i, j, k) * v0[i];
            CHECK(m0(j, k) == Catch::Approx(ref).margin(1e-12));
        }
    for (size_t i = 0; i < 2; ++i)
        for (size_t k = 0; k < 4; ++k) {
            double ref = 0.0;
            for (size_t j = 0; j < 3; ++j) ref += core(i, j, k) * v1[j];
            CHECK(m1(i, k) == Catch::Approx(ref).margin(1e-12));
        }
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 3; ++j) {
            double ref = 0.0;
            for (size_t k = 0; k < 4; ++k) ref += core(i, j, k) * v2[k];
            CHECK(m2(i, j) == Catch::Approx(ref).margin(1e-12));
        }
    CHECK_THROWS_AS(tensor_ops::contract_mode(core, v1.data(), 3), ConfigError);
    CHECK_THROWS_AS(tensor_ops::contract_mode(core, v1.data(), 0), ConfigError);
}

TEST_CASE("all_finite flags NaN and infinity") {
    Tensor t({2, 2}, 1.0);
    CHECK(t.all_finite());
    t[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t[3] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("central differences recover simple analytic gradients") {
    // f(x) = sum of squares, gradient 2x; the doc example: d/dx x^2 at 3 is 6
    auto f = [](const std::vector<Tensor>& ps) {
        double s = 0.0;
        for (const Tensor& p : ps)
            for (size_t i = 0; i < p.size(); ++i) s += p[i] * p[i];
        return s;
    };
    Tensor x({1});
    x[0] = 3.0;
    const auto g = finite_diff_grad(f, {x}, 1e-5);
    CHECK(g[0][0] == Catch::Approx(6.0).margin(1e-6));

    RngStream rng(7, StreamPurpose::Init);
    const Tensor a = random_tensor({2, 3}, rng);
    const Tensor b = random_tensor({2, 3}, rng);
    auto fdot = [](const std::vector<Tensor>& ps) { return tensor_ops::dot(ps[0], ps[1]); };
    const auto gd = finite_diff_grad(fdot, {a, b}, 1e-6);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(gd[0][i] == Catch::Approx(b[i]).margin(1e-7));
        CHECK(gd[1][i] == Catch::Approx(a[i]).margin(1e-7));
    }
    CHECK_THROWS_AS(finite_diff_grad(fdot, {a, b}, 0.0), ConfigError);
}

TEST_CASE("first Adam step matches the closed form") {
    Tensor p({1});
    Tensor g({1});
    g[0] = 1.0;
    AdamConfig cfg;
    cfg.lr = 0.1;
    AdamState adam({&p}, cfg);
    adam.step({&p}, {&g});
    // bias correction makes the first step lr * g / (|g| + eps)
    CHECK(p[0] == Catch::Approx(-0.1 / (1.0 + 1e-8)).margin(1e-15));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("Adam trajectory matches an independent reimplementation") {
    RngStream rng(11, StreamPurpose::Init);
    Tensor p = random_tensor({3, 2}, rng);
    std::vector<double> ref(p.data());
    std::vector<double> m(p.size(), 0.0), v(p.size(), 0.0);
    AdamConfig cfg;
    cfg.lr = 0.02;
    AdamState adam({&p}, cfg);
    for (int t = 1; t <= 20; ++t) {
        const Tensor g = random_tensor({3, 2}, rng);
        adam.step({&p}, {&g});
        if (t == 10) {
            adam.set_lr(0.005);
            CHECK(adam.lr() == 0.005);
        }
        const double lr = t < 10 ? 0.02 : (t == 10 ? 0.02 : 0.005);
        for (size_t i = 0; i < ref.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mhat = m[i] / (1.0 - std::pow(0.9, t));
            const double vhat = v[i] / (1.0 - std::pow(0.999, t));
            ref[i] -= lr * mhat / (std::sqrt(vhat) + 1e-8);
        }
    }
    for (size_t i = 0; i < ref.size(); ++i) CHECK(p[i] == Catch::Approx(ref[i]).margin(1e-14));

    Tensor wrong({2, 2});
    CHECK_THROWS_AS(adam.step({&wrong}, {&wrong}), ConfigError);
}
