#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "physiopref/numerics.hpp"

using namespace physio;

TEST_CASE("seeded rng determinism") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.u64() == b.u64());

    // different seeds diverge within the first draws
    Rng c(42), d(43);
    bool differs = false;
    for (int i = 0; i < 100 && !differs; ++i) differs = c.u64() != d.u64();
    CHECK(differs);

    // child streams are distinct from each other and the parent
    Rng parent(7);
    Rng c0 = parent.child(0);
    Rng c1 = parent.child(1);
    CHECK(c0.u64() != c1.u64());
    CHECK(parent.child(0).u64() == parent.child(0).u64());  // derivation is pure
}

TEST_CASE("rng uniform and categorical") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    // categorical respects weights on a seeded long run
    Rng r2(6);
    const double w[3] = {1.0, 2.0, 1.0};
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 40000; ++i) counts[r2.categorical(std::span(w, 3))]++;
    CHECK(counts[1] > counts[0]);
    CHECK(counts[1] > counts[2]);
    CHECK(std::abs(counts[1] - 20000) < 600);  // ~3 sigma
    CHECK_THROWS_AS(r2.categorical(std::span<const double>{}), NumericError);
}

TEST_CASE("log_softmax") {
    SUBCASE("uniform") {
        const double z[4] = {0, 0, 0, 0};
        const auto out = log_softmax(std::span(z, 4));
        for (double v : out) CHECK(v == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    }
    SUBCASE("shift invariance") {
        const double z[3] = {0.3, -1.2, 2.0};
        const double zs[3] = {0.3 + 7.5, -1.2 + 7.5, 2.0 + 7.5};
        const auto a = log_softmax(std::span(z, 3));
        const auto b = log_softmax(std::span(zs, 3));
        for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    SUBCASE("closed form (0, ln 3)") {
        const double z[2] = {0.0, std::log(3.0)};
        const auto out = log_softmax(std::span(z, 2));
        CHECK(out[0] == doctest::Approx(std::log(0.25)).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(std::log(0.75)).epsilon(1e-12));
    }
    SUBCASE("stability at large magnitudes") {
        const double z[2] = {1000.0, 0.0};
        const auto out = log_softmax(std::span(z, 2));
        CHECK(std::isfinite(out[0]));
        CHECK(std::isfinite(out[1]));
        CHECK(std::exp(out[0]) + std::exp(out[1]) == doctest::Approx(1.0));
    }
    const double bad[2] = {1.0, std::nan("")};
    CHECK_THROWS_AS(log_softmax(std::span(bad, 2)), NumericError);
}

TEST_CASE("adam step") {
    ParameterSet params;
    params.add("w", {1}).data[0] = 0.5;
    AdamState state = AdamState::init(params);

    SUBCASE("zero gradient leaves parameters unchanged") {
        ParameterSet grads = params.zeros_like();
        adam_step(params, grads, state);
        CHECK(params.get("w").data[0] == 0.5);
    }

    SUBCASE("first step matches the hand recurrence") {
        ParameterSet grads = params.zeros_like();
        grads.get("w").data[0] = 1.0;
        adam_step(params, grads, state);
        // m-hat = v-hat = 1 after bias correction; update = -lr / (1 + eps)
        const double expected = 0.5 - 1e-3 * 1.0 / (1.0 + 1e-8);
        CHECK(params.get("w").data[0] == doctest::Approx(expected).epsilon(1e-14));

        // second identical gradient: the hand recurrence again, step sizes equal
        const double before = params.get("w").data[0];
        adam_step(params, grads, state);
        const double step2 = before - params.get("w").data[0];
        const double step1 = 0.5 - before;
        CHECK(step2 == doctest::Approx(step1).epsilon(1e-9));
        CHECK(std::abs(step2) <= std::abs(step1) * (1.0 + 1e-9));
    }

    SUBCASE("shape mismatch is rejected") {
        ParameterSet other;
        other.add("w", {2});
        CHECK_THROWS_AS(adam_step(params, other, state), UsageError);
    }
}

TEST_CASE("adam agrees with an independent two-step recurrence") {
    // hand recurrence, written separately from the implementation
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double g = 0.37;
    double theta = 1.25, m = 0, v = 0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        theta -= lr * mh / (std::sqrt(vh) + eps);
    }

    ParameterSet params;
    params.add("w", {1}).data[0] = 1.25;
    ParameterSet grads = params.zeros_like();
    grads.get("w").data[0] = g;
    AdamState state = AdamState::init(params);
    adam_step(params, grads, state);
    adam_step(params, grads, state);
    CHECK(params.get("w").data[0] == doctest::Approx(theta).epsilon(1e-15));
}

TEST_CASE("grad_check on closed-form functions") {
    ParameterSet theta;
    Rng rng(17);
    auto& t = theta.add("x", {8});
    for (auto& v : t.data) v = rng.normal();

    SUBCASE("quadratic") {
        auto f = [](const ParameterSet& p) {
            double s = 0;
            for (std::size_t i = 0; i < p.total_params(); ++i) s += p.get_flat(i) * p.get_flat(i);
            return 0.5 * s;
        };
        auto g = [](const ParameterSet& p) {
            ParameterSet out = p.zeros_like();
            for (std::size_t i = 0; i < p.total_params(); ++i) out.set_flat(i, p.get_flat(i));
            return out;
        };
        CHECK(grad_check(f, g, theta) < 1e-9);
    }

    SUBCASE("constant") {
        auto f = [](const ParameterSet&) { return 3.25; };
        auto g = [](const ParameterSet& p) { return p.zeros_like(); };
        CHECK(grad_check(f, g, theta) < 1e-9);
    }

    SUBCASE("wrong gradient is caught") {
        auto f = [](const ParameterSet& p) { return p.get_flat(0); };
        auto g = [](const ParameterSet& p) {
            ParameterSet out = p.zeros_like();
            out.set_flat(0, 2.0);  // should be 1
            return out;
        };
        CHECK(grad_check(f, g, theta) > 0.4);
    }
}

TEST_CASE("sigmoid helpers") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(5.0) == doctest::Approx(0.993307).epsilon(1e-6));
    CHECK(sigmoid(-5.0) == doctest::Approx(0.006693).epsilon(1e-4));
    CHECK(log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(std::isfinite(log_sigmoid(-800.0)));
    CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0).epsilon(1e-12));
}

TEST_CASE("parameter set layout") {
    ParameterSet p;
    p.add("a", {2, 3});
    p.add("b", {4});
    CHECK(p.total_params() == 10);
    CHECK_THROWS_AS(p.add("a", {1}), UsageError);
    CHECK_THROWS_AS(p.get("zzz"), UsageError);

    ParameterSet z = p.zeros_like();
    CHECK(z.same_layout(p));
    z.get("a").fill(2.0);
    p.axpy(0.5, z);
    CHECK(p.get("a").data[0] == 1.0);
    CHECK(p.get("b").data[0] == 0.0);
}
