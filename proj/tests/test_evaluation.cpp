#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crowdlabel/evaluation.hpp"
#include "crowdlabel/random.hpp"

using namespace crowdlabel;

TEST_CASE("majority vote scores") {
    const AnnotationTensor t(Dims{3, 3, 1}, {{0, 0, 0, 1}, {0, 1, 0, 1}, {0, 2, 0, 0}, {1, 0, 0, 1}, {1, 2, 0, 1}});
    const auto mv = majority_vote(t);
    CHECK(mv[0] == doctest::Approx(2.0 / 3.0));
    CHECK(mv[1] == 1.0);
    CHECK(mv[2] == 0.0);
}

TEST_CASE("ROC and AUC") {
    using V = std::vector<double>;
    using L = std::vector<std::uint8_t>;
    CHECK(roc_auc(V{0.9, 0.8, 0.2}, L{1, 1, 0}).auc == 1.0);
    CHECK(roc_auc(V{0.3, 0.3, 0.3, 0.3}, L{1, 0, 1, 0}).auc == 0.5);
    // Positives 0.35 and 0.8 against negatives 0.1 and 0.4: three of four pairs concordant.
    CHECK(roc_auc(V{0.1, 0.4, 0.35, 0.8}, L{0, 0, 1, 1}).auc == doctest::Approx(0.75));
    CHECK(roc_auc(V{0.1, 0.4, 0.4, 0.8}, L{0, 0, 1, 1}).auc == doctest::Approx(0.875));
    CHECK_THROWS_AS(roc_auc(V{0.1, 0.2}, L{1, 1}), std::invalid_argument);

    SUBCASE("monotone transforms and label flips") {
        RngStream rng(3, 0);
        V s(500);
        L y(500);
        for (std::size_t i = 0; i < s.size(); ++i) {
            y[i] = rng.uniform() < 0.3 ? 1 : 0;
            s[i] = std::round((rng.uniform() + 0.3 * y[i]) * 20.0) / 20.0;
        }
        V t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(4.0 * s[i]) - 7.0;
        L flipped(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = 1 - y[i];
        const auto a = roc_auc(s, y);
        const auto b = roc_auc(t, y);
        CHECK(a.auc == b.auc);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t p = 0; p < a.points.size(); ++p) {
            CHECK(a.points[p].fpr == b.points[p].fpr);
            CHECK(a.points[p].tpr == b.points[p].tpr);
        }
        CHECK(roc_auc(s, flipped).auc == doctest::Approx(1.0 - a.auc).epsilon(1e-12));
    }
}

TEST_CASE("WAIC") {
    SUBCASE("zero variance") {
        const std::vector<double> ll(10, std::log(0.5));
        const auto w = waic(ll, 10, 1);
        CHECK(w.lppd == doctest::Approx(std::log(0.5)));
        CHECK(w.p_waic == 0.0);
        CHECK(w.waic == doctest::Approx(2.0 * std::log(2.0)));
        std::vector<double> two;
        for (double v : ll) {
            two.push_back(v);
            two.push_back(v);
        }
        CHECK(waic(two, 10, 2).waic == doctest::Approx(2.0 * w.waic));
    }
    SUBCASE("two draws") {
        const std::vector<double> ll{std::log(0.25), std::log(0.75)};
        const auto w = waic(ll, 2, 1);
        CHECK(w.lppd == doctest::Approx(std::log(0.5)));
        CHECK(w.p_waic == doctest::Approx(0.6035).epsilon(1e-3));
        CHECK(w.waic == doctest::Approx(2.593).epsilon(1e-3));
        CHECK(w.waic == -2.0 * (w.lppd - w.p_waic));
    }
    SUBCASE("streaming accumulator agrees with the matrix form") {
        RngStream rng(4, 0);
        const std::size_t draws = 50, obs = 7;
        std::vector<double> ll(draws * obs);
        for (auto& v : ll) v = -5.0 * rng.uniform();
        WaicAccumulator first(obs), second(obs);
        for (std::size_t d = 0; d < draws; ++d) {
            auto& acc = d < 20 ? first : second;
            acc.begin_draw();
            for (std::size_t o = 0; o < obs; ++o) acc.add(o, ll[d * obs + o]);
        }
        first.merge(second);
        const auto a = first.result();
        const auto b = waic(ll, draws, obs);
        CHECK(a.lppd == doctest::Approx(b.lppd).epsilon(1e-12));
        CHECK(a.p_waic == doctest::Approx(b.p_waic).epsilon(1e-12));
        CHECK(a.waic == -2.0 * (a.lppd - a.p_waic));
    }
    SUBCASE("empty input") { CHECK_THROWS(waic({}, 0, 0)); }
}

TEST_CASE("Brier score") {
    using V = std::vector<double>;
    using L = std::vector<std::uint8_t>;
    CHECK(brier(V{1.0, 0.0}, L{1, 0}) == 0.0);
    CHECK(brier(V{0.5, 0.5, 0.5}, L{1, 0, 1}) == 0.25);
    CHECK(brier(V{0.8, 0.1}, L{1, 0}) == doctest::Approx(0.025));
    CHECK_THROWS_AS(brier(V{0.5}, L{1, 0}), std::invalid_argument);

    SUBCASE("the base rate is the best constant") {
        RngStream rng(5, 0);
        L y(300);
        double rate = 0.0;
        for (auto& v : y) rate += v = rng.uniform() < 0.37 ? 1 : 0;
        rate /= static_cast<double>(y.size());
        const double at_rate = brier(V(y.size(), rate), y);
        for (int g = 0; g <= 100; ++g) CHECK(brier(V(y.size(), g / 100.0), y) >= at_rate);
    }
}

TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("expertise coverage and squared error") {
    SUBCASE("truth at every posterior median") {
        const std::vector<std::vector<double>> draws{{0.1, 0.2, 0.3}, {0.7, 0.8, 0.9}};
        const std::vector<double> truth{0.2, 0.8};
        const auto r = expertise_coverage_mse(draws, truth);
        CHECK(r.coverage == 1.0);
        CHECK(r.mse == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("point masses at the truth") {
        const std::vector<std::vector<double>> draws{std::vector<double>(5, 0.6)};
        const std::vector<double> truth{0.6};
        CHECK(expertise_coverage_mse(draws, truth).mse == 0.0);
    }
    SUBCASE("calibrated construction") {
        RngStream rng(6, 0);
        const std::size_t n = 400;
        std::vector<std::vector<double>> draws(n);
        std::vector<double> truth(n);
        for (std::size_t j = 0; j < n; ++j) {
            truth[j] = 0.5 + 0.3 * rng.uniform();
            const double center = truth[j] + 0.01 * rng.standard_normal();
            draws[j].resize(4000);
            for (auto& d : draws[j]) d = center + 0.01 * rng.standard_normal();
        }
        const auto r = expertise_coverage_mse(draws, truth);
        CHECK(std::abs(r.coverage - 0.95) < 3.0 * std::sqrt(0.95 * 0.05 / n));
        CHECK(r.mse == doctest::Approx(1e-4).epsilon(0.2));
    }
}
