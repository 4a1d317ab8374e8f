#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crowdlabel/evaluation.hpp"
#include "crowdlabel/math.hpp"
#include "crowdlabel/random.hpp"
#include "oracles.hpp"

using namespace crowdlabel;

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<double> draws(std::size_t n, auto&& f) {
    std::vector<double> out(n);
    for (auto& x : out) x = f();
    return out;
}

}  // namespace

TEST_CASE("identical seed and stream reproduce the sequence") {
    RngStream a(42, 3);
    RngStream b(42, 3);
    RngStream c(42, 4);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs = differs || x != c.next_u64();
    }
    CHECK(differs);
    RngStream d(7, 0);
    RngStream e(7, 0);
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_polya_gamma(d, 1.5) == sample_polya_gamma(e, 1.5));
        CHECK(sample_beta(d, 2.0, 3.0) == sample_beta(e, 2.0, 3.0));
    }
}

TEST_CASE("uniform stays inside the open interval") {
    RngStream rng(1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("beta draws") {
    RngStream rng(11, 0);
    SUBCASE("Beta(1,1) mean") {
        const auto v = draws(100000, [&] { return sample_beta(rng, 1.0, 1.0); });
        CHECK(std::abs(mean_of(v) - 0.5) < 0.005);
    }
    SUBCASE("Beta(45,5) equal-tailed interval") {
        const auto v = draws(100000, [&] { return sample_beta(rng, 45.0, 5.0); });
        CHECK(std::abs(quantile(v, 0.025) - 0.804) < 0.005);
        CHECK(std::abs(quantile(v, 0.975) - 0.966) < 0.005);
    }
    SUBCASE("Beta(2,98) mean") {
        const auto v = draws(100000, [&] { return sample_beta(rng, 2.0, 98.0); });
        CHECK(std::abs(mean_of(v) - 0.02) < 0.001);
    }
    SUBCASE("small shapes stay inside (0, 1)") {
        for (int i = 0; i < 10000; ++i) {
            const double x = sample_beta(rng, 0.05, 0.05);
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
        }
    }
    CHECK_THROWS_AS(sample_beta(rng, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(sample_beta(rng, 1.0, -2.0), std::domain_error);
}

TEST_CASE("gamma, normal and bernoulli kernels") {
    RngStream rng(5, 1);
    const auto g = draws(100000, [&] { return sample_gamma(rng, 0.5, 0.5); });
    CHECK(std::abs(mean_of(g) - 1.0) < 4.0 * sd_of(g) / std::sqrt(1e5));
    const auto g3 = draws(100000, [&] { return sample_gamma(rng, 3.0, 2.0); });
    CHECK(std::abs(mean_of(g3) - 1.5) < 4.0 * sd_of(g3) / std::sqrt(1e5));
    const auto n = draws(100000, [&] { return sample_normal(rng, 2.0, 3.0); });
    CHECK(std::abs(mean_of(n) - 2.0) < 4.0 * 3.0 / std::sqrt(1e5));
    CHECK(std::abs(sd_of(n) - 3.0) < 0.03);
    for (int i = 0; i < 1000; ++i) {
        CHECK_FALSE(sample_bernoulli(rng, 0.0));
        CHECK(sample_bernoulli(rng, 1.0));
    }
    CHECK_THROWS_AS(sample_gamma(rng, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(sample_normal(rng, 0.0, -1.0), std::domain_error);
}

TEST_CASE("dirichlet draws sum to one with the right means") {
    RngStream rng(9, 0);
    const std::vector<double> alpha = {1.0, 2.0, 7.0};
    std::vector<double> sums(3, 0.0);
    for (int i = 0; i < 20000; ++i) {
        const auto d = sample_dirichlet(rng, alpha);
        CHECK(d[0] + d[1] + d[2] == doctest::Approx(1.0).epsilon(1e-12));
        for (int r = 0; r < 3; ++r) sums[r] += d[r];
    }
    CHECK(std::abs(sums[0] / 20000 - 0.1) < 0.005);
    CHECK(std::abs(sums[2] / 20000 - 0.7) < 0.005);
    CHECK_THROWS_AS(sample_dirichlet(rng, std::vector<double>{}), std::domain_error);
}

TEST_CASE("categorical from log weights") {
    RngStream rng(3, 0);
    SUBCASE("uniform") {
        std::vector<double> counts(3, 0.0);
        const std::vector<double> w = {0.0, 0.0, 0.0};
        for (int i = 0; i < 100000; ++i) counts[sample_categorical_log(rng, w)] += 1.0;
        for (double c : counts) CHECK(std::abs(c / 1e5 - 1.0 / 3.0) < 0.01);
    }
    SUBCASE("degenerate") {
        const std::vector<double> w = {0.0, -INFINITY};
        for (int i = 0; i < 1000; ++i) CHECK(sample_categorical_log(rng, w) == 0);
    }
    SUBCASE("normalization arithmetic") {
        const std::vector<double> w = {std::log(1.0), std::log(3.0)};
        double ones = 0.0;
        for (int i = 0; i < 100000; ++i) ones += sample_categorical_log(rng, w) == 1 ? 1.0 : 0.0;
        CHECK(std::abs(ones / 1e5 - 0.75) < 0.01);
    }
    SUBCASE("shift invariance") {
        const std::vector<double> w = {0.0, 1.0, -0.5, 2.0};
        std::vector<double> shifted = w;
        for (auto& x : shifted) x += 800.0;
        std::vector<double> a(4, 0.0);
        std::vector<double> b(4, 0.0);
        for (int i = 0; i < 50000; ++i) {
            a[sample_categorical_log(rng, w)] += 1.0;
            b[sample_categorical_log(rng, shifted)] += 1.0;
        }
        const auto [stat, df] = oracle::chi_square_homogeneity(a, b);
        CHECK(stat < oracle::chi_square_critical(df, 0.01));
    }
    CHECK_THROWS_AS(sample_categorical_log(rng, std::vector<double>{-INFINITY}), std::domain_error);
}

TEST_CASE("Polya-Gamma moments") {
    RngStream rng(2024, 0);
    for (double c : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        CAPTURE(c);
        const auto v = draws(100000, [&] { return sample_polya_gamma(rng, c); });
        const double expected = c == 0.0 ? 0.25 : std::tanh(c / 2.0) / (2.0 * c);
        const double se = sd_of(v) / std::sqrt(static_cast<double>(v.size()));
        CHECK(std::abs(mean_of(v) - expected) < 4.0 * se);
        for (double x : v) REQUIRE(x > 0.0);
    }
    SUBCASE("examples at c = 0 and c = 2") {
        const auto v0 = draws(100000, [&] { return sample_polya_gamma(rng, 0.0); });
        CHECK(std::abs(mean_of(v0) - 0.25) < 0.003);
        const auto v2 = draws(100000, [&] { return sample_polya_gamma(rng, 2.0); });
        CHECK(std::abs(mean_of(v2) - std::tanh(1.0) / 4.0) < 0.003);
    }
    SUBCASE("symmetric in c") {
        const auto a = draws(10000, [&] { return sample_polya_gamma(rng, 2.0); });
        const auto b = draws(10000, [&] { return sample_polya_gamma(rng, -2.0); });
        CHECK(oracle::ks_two_sample(a, b) < oracle::ks_two_sample_critical_1pct(a.size(), b.size()));
    }
    SUBCASE("sums match the sum of single draws") {
        const auto s = draws(20000, [&] { return sample_polya_gamma_sum(rng, 5, 1.3); });
        const auto single = draws(20000, [&] {
            double t = 0.0;
            for (int i = 0; i < 5; ++i) t += sample_polya_gamma(rng, 1.3);
            return t;
        });
        CHECK(oracle::ks_two_sample(s, single) < oracle::ks_two_sample_critical_1pct(s.size(), single.size()));
        CHECK(sample_polya_gamma_sum(rng, 0, 1.0) == 0.0);
    }
    CHECK_THROWS(sample_polya_gamma(rng, INFINITY));
    CHECK_THROWS(sample_polya_gamma(rng, NAN));
}

TEST_CASE("special functions") {
    CHECK(log_beta_fn(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(log_beta_fn(2.0, 98.0) == doctest::Approx(std::log(1.0 / (98.0 * 99.0))).epsilon(1e-12));
    CHECK(std::abs(log_beta_fn(2.0, 98.0) + 9.18009) < 1e-5);
    CHECK(log_beta_fn(3.0, 1.0) - log_beta_fn(2.0, 1.0) == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(log_beta_fn(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(log_beta_fn(1.0, -1.0), std::domain_error);

    RngStream rng(17, 0);
    for (int i = 0; i < 200; ++i) {
        const double a = 0.1 + 50.0 * rng.uniform();
        const double b = 0.1 + 50.0 * rng.uniform();
        CHECK(std::abs(log_beta_fn(a + 1.0, b) - log_beta_fn(a, b) - std::log(a / (a + b))) < 1e-10);
    }

    CHECK(logistic(0.0) == 0.5);
    CHECK(std::abs(logistic(logit(0.81)) - 0.81) < 1e-12);
    // σ(40) = 1 − 4.2e-18 rounds to 1 in double precision; the log form keeps it.
    CHECK(logistic(40.0) <= 1.0);
    CHECK(logistic(40.0) > 1.0 - 1e-15);
    CHECK(log_logistic(40.0) < 0.0);
    CHECK(log_logistic(40.0) == doctest::Approx(-std::exp(-40.0)).epsilon(1e-6));
    CHECK(std::isfinite(logistic(-800.0)));
    CHECK(log_logistic(-800.0) == doctest::Approx(-800.0));
    CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
    CHECK(log_add_exp(-INFINITY, 1.5) == 1.5);
    CHECK(log_normal_cdf(0.0) == doctest::Approx(std::log(0.5)));
    CHECK(std::isfinite(log_normal_cdf(-40.0)));
}
