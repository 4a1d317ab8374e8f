#include <doctest.h>

#include <cmath>
#include <vector>

#include "crowdlabel/dp_mixture.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/math.hpp"
#include "oracles.hpp"

using namespace crowdlabel;

namespace {

std::span<const std::uint8_t> row(const std::vector<std::uint8_t>& y, std::size_t n_species,
                                  std::size_t i) {
    return std::span<const std::uint8_t>(y).subspan(i * n_species, n_species);
}

// State with the given partition and counts recomputed from scratch.
DpState with_partition(const std::vector<std::uint8_t>& y, std::size_t n_species,
                       const std::vector<std::uint32_t>& z, const BetaLogTable* table) {
    DpState s = initial_dp_state(y, z.size(), n_species, table, 1.0);
    std::uint32_t max_z = 0;
    for (auto v : z) max_z = std::max(max_z, v);
    s.z = z;
    s.stats = MixtureStats::recount(z, y, n_species, max_z + 1, table);
    return s;
}

std::vector<double> softmax(const std::vector<double>& w) {
    double m = -INFINITY;
    for (double v : w) m = std::max(m, v);
    std::vector<double> p(w.size());
    double total = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r) total += p[r] = std::exp(w[r] - m);
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace

TEST_CASE("assignment weights: worked example") {
    const BetaPrior prior{1.0, 1.0};
    const BetaLogTable table(prior, 2);
    MixtureStats stats(1, &table);
    const std::vector<std::uint8_t> one{1};
    stats.add(stats.add_component(), one);
    const auto w = assignment_log_weights(stats, table, 1.0, 2, one);
    REQUIRE(w.size() == 2);
    CHECK(std::exp(w[0]) == doctest::Approx(0.5 * 2.0 / 3.0).epsilon(1e-12));
    CHECK(std::exp(w[1]) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("assignment weights: symmetric under a positive/negative swap") {
    const BetaPrior prior{2.5, 2.5};
    const BetaLogTable table(prior, 10);
    const std::size_t n3 = 3;
    const std::vector<std::uint8_t> y{1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0};
    std::vector<std::uint8_t> flipped(y.size());
    for (std::size_t c = 0; c < y.size(); ++c) flipped[c] = 1 - y[c];
    const std::vector<std::uint32_t> z{0, 1, 0, 1};
    DpState a = with_partition(y, n3, z, &table);
    DpState b = with_partition(flipped, n3, z, &table);
    remove_recording(a, 3, row(y, n3, 3));
    remove_recording(b, 3, row(flipped, n3, 3));
    const auto wa = assignment_log_weights(a.stats, table, 0.7, 4, row(y, n3, 3));
    const auto wb = assignment_log_weights(b.stats, table, 0.7, 4, row(flipped, n3, 3));
    REQUIRE(wa.size() == wb.size());
    for (std::size_t r = 0; r < wa.size(); ++r) CHECK(wa[r] == doctest::Approx(wb[r]).epsilon(1e-12));
}

TEST_CASE("assignment probabilities match integration over the component occurrences") {
    const BetaPrior prior{2.0, 3.0};
    const BetaLogTable table(prior, 4);
    const std::size_t n3 = 2;
    const std::vector<std::uint8_t> y{1, 0, 1, 1, 0, 0, 1, 0};
    const double gamma = 0.8;
    for (const auto& z : std::vector<std::vector<std::uint32_t>>{{0, 0, 1, 2}, {0, 1, 1, 1}, {0, 0, 0, 0}}) {
        for (std::size_t i = 0; i < 4; ++i) {
            DpState s = with_partition(y, n3, z, &table);
            remove_recording(s, i, row(y, n3, i));
            const auto p = softmax(assignment_log_weights(s.stats, table, gamma, 4, row(y, n3, i)));
            std::vector<double> w(s.stats.n_components() + 1);
            for (std::size_t r = 0; r <= s.stats.n_components(); ++r) {
                const bool fresh = r == s.stats.n_components();
                double v = fresh ? gamma : static_cast<double>(s.stats.size(r));
                for (std::size_t k = 0; k < n3; ++k) {
                    const double pos = fresh ? 0.0 : s.stats.pos(r, k);
                    const double neg = fresh ? 0.0 : s.stats.neg(r, k);
                    const double yk = y[i * n3 + k];
                    v *= oracle::beta_moment(prior.a, prior.b, pos + yk, neg + 1.0 - yk) /
                         oracle::beta_moment(prior.a, prior.b, pos, neg);
                }
                w[r] = v;
            }
            double total = 0.0;
            for (double v : w) total += v;
            for (std::size_t r = 0; r < w.size(); ++r) {
                CAPTURE(i);
                CAPTURE(r);
                CHECK(std::abs(p[r] - w[r] / total) < 1e-3);
            }
        }
    }
}

TEST_CASE("incremental statistics") {
    const BetaPrior prior{2.0, 98.0};
    const std::size_t n1 = 12, n3 = 3;
    const BetaLogTable table(prior, n1);
    RngStream rng(5, 0);
    std::vector<std::uint8_t> y(n1 * n3);
    for (auto& v : y) v = rng.uniform() < 0.4 ? 1 : 0;

    SUBCASE("recount agrees after random moves") {
        DpState s = initial_dp_state(y, n1, n3, &table, 1.0);
        for (int m = 0; m < 1000; ++m) {
            const std::size_t i = rng.uniform_index(n1);
            remove_recording(s, i, row(y, n3, i));
            add_recording(s, i, rng.uniform_index(s.stats.n_components() + 1), row(y, n3, i));
        }
        const auto fresh = MixtureStats::recount(s.z, y, n3, s.stats.n_components(), &table);
        CHECK(fresh.same_counts(s.stats));
        std::size_t total = 0;
        for (std::size_t r = 0; r < s.stats.n_components(); ++r) {
            CHECK(s.stats.size(r) > 0);
            total += s.stats.size(r);
        }
        CHECK(total == n1);
    }
    SUBCASE("remove then re-add restores the statistics") {
        DpState s = with_partition(y, n3, {0, 1, 0, 1, 2, 0, 1, 2, 2, 0, 0, 1}, &table);
        const auto before = s.stats;
        remove_recording(s, 4, row(y, n3, 4));
        add_recording(s, 4, 2, row(y, n3, 4));
        CHECK(s.stats.same_counts(before));
        CHECK(s.z[4] == 2);
    }
    SUBCASE("removing a singleton drops a component") {
        DpState s = with_partition(y, n3, {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 2}, &table);
        CHECK(s.stats.n_components() == 3);
        remove_recording(s, 5, row(y, n3, 5));
        CHECK(s.stats.n_components() == 2);
        CHECK(s.z[11] == 1);
        CHECK_THROWS_AS(remove_recording(s, 5, row(y, n3, 5)), InvariantError);
    }
}

TEST_CASE("degenerate assignment has one option") {
    const BetaLogTable table(BetaPrior{1.0, 1.0}, 1);
    const std::vector<std::uint8_t> y{1};
    DpState s = initial_dp_state(y, 1, 1, &table, 1.0);
    RngStream rng(1, 0);
    for (int t = 0; t < 100; ++t) {
        sample_assignment(rng, s, table, y, 0);
        CHECK(s.z[0] == 0);
        CHECK(s.stats.n_components() == 1);
    }
}

TEST_CASE("marginalized label update without annotations") {
    const AnnotationTensor empty_one(Dims{1, 1, 1}, {});
    EmissionTable emission(1, 1);
    emission.set_flat(std::vector<double>{0.9}, std::vector<double>{0.01});
    RngStream rng(8, 0);

    SUBCASE("lone recording uses the base measure mean") {
        const BetaPrior prior{2.0, 98.0};
        const BetaLogTable table(prior, 1);
        std::vector<std::uint8_t> y{0};
        DpState s = initial_dp_state(y, 1, 1, &table, 1.0);
        double freq = 0.0;
        const int n = 200000;
        for (int t = 0; t < n; ++t) {
            update_labels_dp(rng, s, y, empty_one, emission, table);
            freq += y[0];
        }
        CHECK(std::abs(freq / n - 0.02) < 0.002);
        CHECK(s.stats.pos(0, 0) == y[0]);
    }
    SUBCASE("balanced component with a flat base measure") {
        const BetaPrior prior{1.0, 1.0};
        const BetaLogTable table(prior, 11);
        const AnnotationTensor empty(Dims{11, 1, 1}, {});
        std::vector<std::uint8_t> y0(11, 0);
        for (std::size_t i = 1; i <= 5; ++i) y0[i] = 1;
        const DpState s0 = initial_dp_state(y0, 11, 1, &table, 1.0);
        double freq = 0.0;
        const int n = 40000;
        for (int t = 0; t < n; ++t) {
            DpState s = s0;
            std::vector<std::uint8_t> y = y0;
            update_labels_dp(rng, s, y, empty, emission, table);
            freq += y[0];
        }
        CHECK(std::abs(freq / n - 0.5) < 0.01);
    }
}

TEST_CASE("statistics stay consistent through full sweeps") {
    const std::size_t n1 = 30, n2 = 3, n3 = 4;
    RngStream rng(21, 0);
    std::vector<Annotation> entries;
    for (std::uint32_t i = 0; i < n1; ++i) {
        for (std::uint32_t j = 0; j < n2; ++j) {
            for (std::uint32_t k = 0; k < n3; ++k) {
                if (rng.uniform() < 0.5) entries.push_back({i, j, k, static_cast<std::uint8_t>(rng.uniform() < 0.3)});
            }
        }
    }
    const AnnotationTensor tensor(Dims{n1, n2, n3}, entries);
    EmissionTable emission(n2, n3);
    emission.set_flat(std::vector<double>(n2, 0.8), std::vector<double>(n2, 0.05));
    const BetaLogTable table(BetaPrior{2.0, 10.0}, n1);
    std::vector<std::uint8_t> y(n1 * n3, 0);
    DpState s = initial_dp_state(y, n1, n3, &table, 1.0);
    for (std::size_t t = 1; t <= 200; ++t) {
        update_gamma(rng, s, GammaPrior{}, n1, t, true);
        sample_assignments(rng, s, table, y);
        update_labels_dp(rng, s, y, tensor, emission, table);
        const auto fresh = MixtureStats::recount(s.z, y, n3, s.stats.n_components(), &table);
        REQUIRE(fresh.same_counts(s.stats));
    }
    CHECK(s.gamma > 0.0);
}

TEST_CASE("concentration acceptance ratio") {
    const GammaPrior prior{0.5, 0.5};
    CHECK(gamma_log_acceptance(1.0, 1.0, 3, 2, prior) == 0.0);
    CHECK(std::exp(gamma_log_acceptance(1.0, 2.0, 3, 2, prior)) ==
          doctest::Approx(std::pow(2.0, 2.5) * std::exp(-0.5) / 3.0).epsilon(1e-12));
    CHECK(std::exp(gamma_log_acceptance(1.0, 2.0, 3, 2, prior)) == doctest::Approx(1.1435).epsilon(1e-4));
    CHECK(std::isinf(gamma_log_acceptance(1.0, 0.0, 3, 2, prior)));
}

TEST_CASE("proposal scale adaptation") {
    SUBCASE("batch above the target") {
        ScaleAdapter a(0.5);
        for (std::size_t t = 1; t <= 50; ++t) a.record(t % 2 == 0, t, true);
        CHECK(a.log_scale() == doctest::Approx(std::log(0.5) + 0.01).epsilon(1e-14));
    }
    SUBCASE("batch at the target lowers the scale by 1/sqrt(t)") {
        ScaleAdapter a(0.5);
        const std::size_t t0 = 40000;
        for (std::size_t t = t0 - 49; t <= t0; ++t) a.record(t - (t0 - 49) < 22, t, true);
        CHECK(a.log_scale() == doctest::Approx(std::log(0.5) - 1.0 / 200.0).epsilon(1e-14));
    }
    SUBCASE("no change mid-batch or when frozen") {
        ScaleAdapter a(0.5);
        for (std::size_t t = 1; t <= 49; ++t) a.record(true, t, true);
        CHECK(a.log_scale() == std::log(0.5));
        ScaleAdapter b(0.5);
        for (std::size_t t = 1; t <= 100; ++t) b.record(true, t, false);
        CHECK(b.log_scale() == std::log(0.5));
        CHECK(b.accepted() == 100);
    }
}
