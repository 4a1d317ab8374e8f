#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crowdlabel/diagnostics.hpp"
#include "crowdlabel/random.hpp"

using namespace crowdlabel;

namespace {

std::vector<double> ar1(RngStream& rng, std::size_t n, double rho, double center = 0.0) {
    std::vector<double> x(n);
    double v = rng.standard_normal() / std::sqrt(1.0 - rho * rho);
    for (auto& e : x) {
        v = rho * v + rng.standard_normal();
        e = center + v;
    }
    return x;
}

}  // namespace

TEST_CASE("effective sample size") {
    RngStream rng(1, 0);
    SUBCASE("white noise") {
        const auto x = ar1(rng, 4000, 0.0);
        CHECK(std::abs(ess(x) / 4000.0 - 1.0) < 0.10);
    }
    SUBCASE("AR(1) with coefficient 0.5") {
        const auto x = ar1(rng, 10000, 0.5);
        CHECK(std::abs(ess(x) / (10000.0 / 3.0) - 1.0) < 0.15);
    }
    SUBCASE("constant series") {
        const std::vector<double> x(100, 2.5);
        CHECK(ess(x) == 0.0);
    }
    SUBCASE("never above n") {
        std::vector<double> x(1000);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 == 0 ? 1.0 : -1.0;
        CHECK(ess(x) <= 1000.0);
    }
    SUBCASE("too short") {
        const std::vector<double> x{1.0, 2.0, 3.0};
        CHECK_THROWS_AS(ess(x), std::invalid_argument);
    }
}

TEST_CASE("split potential scale reduction") {
    RngStream rng(2, 0);
    SUBCASE("same stationary sampler") {
        const std::vector<std::vector<double>> chains{ar1(rng, 5000, 0.3), ar1(rng, 5000, 0.3)};
        CHECK(gelman_rubin(chains) < 1.02);
    }
    SUBCASE("separated means") {
        const std::vector<std::vector<double>> chains{ar1(rng, 1000, 0.0, 0.0), ar1(rng, 1000, 0.0, 10.0)};
        CHECK(gelman_rubin(chains) > 2.0);
    }
    SUBCASE("a drifting chain is caught by splitting") {
        std::vector<double> drift(2000);
        for (std::size_t i = 0; i < drift.size(); ++i) drift[i] = 5.0 * i / 2000.0 + rng.standard_normal();
        const std::vector<std::vector<double>> chains{drift, drift};
        CHECK(gelman_rubin(chains) > 1.1);
    }
    SUBCASE("degenerate input") {
        const std::vector<std::vector<double>> constant{std::vector<double>(10, 1.0), std::vector<double>(10, 1.0)};
        CHECK_THROWS_AS(gelman_rubin(constant), std::domain_error);
        CHECK_THROWS_AS(gelman_rubin({std::vector<double>(10, 1.0)}), std::invalid_argument);
        CHECK_THROWS_AS(gelman_rubin({ar1(rng, 10, 0.0), ar1(rng, 12, 0.0)}), std::invalid_argument);
    }
}
