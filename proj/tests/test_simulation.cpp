#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crowdlabel/errors.hpp"
#include "crowdlabel/math.hpp"
#include "crowdlabel/simulation.hpp"

using namespace crowdlabel;

TEST_CASE("annotator type counts") {
    CHECK(annotator_type_counts(20) == std::array<std::size_t, 3>{2, 14, 4});
    ScenarioConfig config;
    RngStream rng(1, 0);
    SimTruth truth;
    gen_truth(rng, config, truth);
    gen_annotators(rng, config, truth);
    std::array<std::size_t, 3> counts{};
    for (auto t : truth.types) ++counts[static_cast<int>(t)];
    CHECK(counts == std::array<std::size_t, 3>{2, 14, 4});
    for (std::size_t j = 0; j < truth.n_annotators; ++j) {
        CHECK(truth.avg_fpr[j] >= 0.001);
        CHECK(truth.avg_fpr[j] <= 0.01);
        const double lo = truth.types[j] == AnnotatorType::Random ? 0.60
                          : truth.types[j] == AnnotatorType::Normal ? 0.75 : 0.90;
        const double hi = truth.types[j] == AnnotatorType::Random ? 0.70
                          : truth.types[j] == AnnotatorType::Normal ? 0.85 : 0.95;
        CHECK(truth.avg_tpr[j] >= lo);
        CHECK(truth.avg_tpr[j] <= hi);
        for (std::size_t k = 0; k < truth.n_species; ++k) {
            CHECK(truth.tpr[j * truth.n_species + k] == truth.avg_tpr[j]);
        }
    }
}

TEST_CASE("species-level rates in varying scenarios") {
    ScenarioConfig config;
    config.scenario = 3;
    config.n_annotators = 200;
    config.n_species = 50;
    config.density = 1.0;
    RngStream rng(2, 0);
    SimTruth truth;
    gen_truth(rng, config, truth);
    gen_annotators(rng, config, truth);
    double sl = 0.0, sp = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < config.n_annotators; ++j) {
        for (std::size_t k = 0; k < config.n_species; ++k) {
            const double dl = logit(truth.tpr[j * config.n_species + k]) - logit(truth.avg_tpr[j]);
            const double dp = logit(truth.fpr[j * config.n_species + k]) - logit(truth.avg_fpr[j]);
            sl += dl * dl;
            sp += dp * dp;
            ++n;
        }
    }
    CHECK(std::sqrt(sl / n) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(sp / n) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("labels") {
    SUBCASE("correlated scenarios copy the first ten species") {
        for (int scenario : {2, 4}) {
            ScenarioConfig config;
            config.scenario = scenario;
            RngStream rng(3, 0);
            SimTruth truth;
            gen_truth(rng, config, truth);
            for (std::size_t i = 0; i < config.n_recordings; ++i) {
                for (std::size_t k = 0; k < 10; ++k) {
                    REQUIRE(truth.y[i * 25 + k + 15] == truth.y[i * 25 + k]);
                }
            }
        }
    }
    SUBCASE("independent prevalence") {
        ScenarioConfig config;
        config.n_recordings = 20000;
        RngStream rng(4, 0);
        SimTruth truth;
        gen_truth(rng, config, truth);
        double total = 0.0;
        for (auto v : truth.y) total += v;
        CHECK(std::abs(total / truth.y.size() - 0.02) < 0.005);
    }
}

TEST_CASE("annotation density") {
    ScenarioConfig config;
    config.density = 4.0;
    const auto data = simulate(config);
    CHECK(std::abs(static_cast<double>(data.tensor.size()) / (1000.0 * 25.0) - 4.0) < 0.1);
    ScenarioConfig bad = config;
    bad.density = 30.0;
    CHECK_THROWS_AS(simulate(bad), ConfigError);
    bad.density = 0.0;
    CHECK_THROWS_AS(simulate(bad), ConfigError);
    bad = config;
    bad.scenario = 5;
    CHECK_THROWS_AS(simulate(bad), ConfigError);
}

TEST_CASE("a noiseless annotator reproduces the truth") {
    ScenarioConfig config;
    config.n_recordings = 200;
    config.n_annotators = 2;
    config.n_species = 5;
    config.density = 1.5;
    RngStream rng(5, 0);
    SimTruth truth;
    gen_truth(rng, config, truth);
    gen_annotators(rng, config, truth);
    for (std::size_t k = 0; k < 5; ++k) {
        truth.tpr[k] = 1.0;
        truth.fpr[k] = 0.0;
    }
    const auto t = gen_annotations(rng, config, truth);
    std::size_t seen = 0;
    for (const auto& c : t.cells_of(0)) {
        CHECK(c.label == truth.y[c.recording * 5 + c.species]);
        ++seen;
    }
    CHECK(seen > 0);
}

TEST_CASE("empirical rates approach the configured ones") {
    ScenarioConfig config;
    config.n_recordings = 20000;
    config.density = 4.0;
    const auto data = simulate(config);
    for (std::size_t j = 0; j < config.n_annotators; ++j) {
        double tp = 0.0, present = 0.0;
        for (const auto& c : data.tensor.cells_of(j)) {
            if (data.truth.y[c.recording * 25 + c.species]) {
                present += 1.0;
                tp += c.label;
            }
        }
        CAPTURE(j);
        CHECK(std::abs(tp / present - data.truth.avg_tpr[j]) < 0.05);
    }
}

TEST_CASE("simulation is deterministic and truth round-trips") {
    ScenarioConfig config;
    config.scenario = 4;
    config.density = 0.8;
    const auto a = simulate(config);
    const auto b = simulate(config);
    CHECK(std::equal(a.tensor.entries().begin(), a.tensor.entries().end(), b.tensor.entries().begin(),
                     b.tensor.entries().end()));
    CHECK(a.truth.tpr == b.truth.tpr);
    config.seed = 2;
    const auto c = simulate(config);
    CHECK(c.truth.y != a.truth.y);

    std::ostringstream out;
    write_truth(out, config, a.truth);
    std::istringstream in(out.str());
    const auto back = read_truth(in);
    CHECK(back.y.empty());
    CHECK(back.occurrence == a.truth.occurrence);
    CHECK(back.tpr == a.truth.tpr);
    CHECK(back.types == a.truth.types);
}
