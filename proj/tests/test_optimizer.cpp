#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "esgmix/adamw.hpp"
#include "esgmix/error.hpp"

using namespace esgmix;

namespace {

// Straight transcription of Adam with decoupled decay, kept separate from the library.
struct ReferenceAdam {
    double lr, b1, b2, eps, wd;
    std::vector<double> m, v;
    int t = 0;

    void step(std::vector<double>& p, const std::vector<double>& g) {
        if (m.empty()) {
            m.assign(p.size(), 0.0);
            v.assign(p.size(), 0.0);
        }
        ++t;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            p[i] = p[i] - lr * mh / (std::sqrt(vh) + eps) - lr * wd * p[i];
        }
    }
};

} // namespace

TEST_SUITE("optimizer") {
    TEST_CASE("first step on a single weight") {
        std::vector<double> p{1.0};
        const std::vector<double> g{0.5};
        AdamWState state(1);
        adamw_update(p, g, state, AdamWConfig{3e-4, 0.9, 0.999, 1e-8, 0.01});
        CHECK(p[0] == doctest::Approx(0.999697).epsilon(1e-6));
        CHECK(std::abs(p[0] - 0.999697) < 1e-6);
        CHECK(state.step == 1);
    }

    TEST_CASE("zero gradient without decay leaves parameters alone") {
        std::vector<double> p{0.3, -2.0, 7.5};
        const std::vector<double> g(3, 0.0);
        AdamWState state(3);
        AdamWConfig cfg;
        cfg.weight_decay = 0.0;
        for (int i = 0; i < 5; ++i) adamw_update(p, g, state, cfg);
        CHECK(p == std::vector<double>{0.3, -2.0, 7.5});
    }

    TEST_CASE("zero gradient with decay shrinks geometrically") {
        std::vector<double> p{2.0, -4.0};
        const std::vector<double> g(2, 0.0);
        AdamWState state(2);
        const AdamWConfig cfg{0.1, 0.9, 0.999, 1e-8, 0.5};
        adamw_update(p, g, state, cfg);
        CHECK(p[0] == doctest::Approx(2.0 * (1 - 0.1 * 0.5)));
        CHECK(p[1] == doctest::Approx(-4.0 * (1 - 0.1 * 0.5)));
    }

    TEST_CASE("matches a direct implementation over many steps") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + trial % 17;
            std::vector<double> p(n);
            for (auto& x : p) x = normal(rng);
            auto q = p;
            const AdamWConfig cfg{1e-2, 0.9, 0.999, 1e-8, trial % 2 ? 0.0 : 0.01};
            AdamWState state(n);
            ReferenceAdam ref{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay, {}, {}};
            for (int s = 0; s < 10; ++s) {
                std::vector<double> g(n);
                for (auto& x : g) x = normal(rng);
                adamw_update(p, g, state, cfg);
                ref.step(q, g);
            }
            for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(p[i] - q[i]) < 1e-10);
        }
    }

    TEST_CASE("bad gradients are rejected without mutation") {
        std::vector<double> p{1.0, 2.0};
        AdamWState state(2);
        const AdamWConfig cfg;
        adamw_update(p, std::vector<double>{0.1, 0.2}, state, cfg);
        const auto p0 = p;
        const auto m0 = state.m;
        const auto v0 = state.v;

        const std::vector<double> nan{0.1, std::numeric_limits<double>::quiet_NaN()};
        CHECK_THROWS_AS(adamw_update(p, nan, state, cfg), DataError);
        const std::vector<double> inf{std::numeric_limits<double>::infinity(), 0.0};
        CHECK_THROWS_AS(adamw_update(p, inf, state, cfg), DataError);
        const std::vector<double> short_grad{0.1};
        CHECK_THROWS_AS(adamw_update(p, short_grad, state, cfg), PreconditionError);

        CHECK(p == p0);
        CHECK(state.m == m0);
        CHECK(state.v == v0);
        CHECK(state.step == 1);
    }
}
