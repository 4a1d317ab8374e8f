#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "crowdlabel/chain.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/simulation.hpp"
#include "oracles.hpp"

using namespace crowdlabel;

namespace {

SimulatedDataset small(int scenario) {
    ScenarioConfig c;
    c.scenario = scenario;
    c.n_recordings = 60;
    c.n_annotators = 6;
    c.n_species = 5;
    c.density = 2.0;
    c.occurrence = {2.0, 8.0};
    return simulate(c);
}

McmcConfig quick(ModelKind kind) {
    McmcConfig c;
    c.model = kind;
    c.n_chains = 2;
    c.n_iterations = 10;
    c.burn_in = 5;
    c.seed = 7;
    return c;
}

bool same_draws(const DrawStore& a, const DrawStore& b) {
    if (a.chains.size() != b.chains.size()) return false;
    for (std::size_t c = 0; c < a.chains.size(); ++c) {
        if (a.chains[c].names != b.chains[c].names) return false;
        if (a.chains[c].values != b.chains[c].values) return false;
        if (a.chains[c].y_mean != b.chains[c].y_mean) return false;
    }
    return true;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("model names") {
    for (auto k : {ModelKind::Base, ModelKind::BaseHier, ModelKind::DpBmm, ModelKind::DpBmmHier}) {
        CHECK(parse_model(model_name(k)) == k);
    }
    CHECK_THROWS_AS(parse_model("dp"), ConfigError);
}

TEST_CASE("retained draw arithmetic") {
    const auto data = small(1);
    for (auto k : {ModelKind::Base, ModelKind::BaseHier, ModelKind::DpBmm, ModelKind::DpBmmHier}) {
        CAPTURE(model_name(k));
        const auto store = run(data.tensor, data.expertise, default_hypers(k), quick(k));
        REQUIRE(store.chains.size() == 2);
        for (const auto& chain : store.chains) {
            CHECK(chain.iterations.size() == 5);
            for (const auto& v : chain.values) CHECK(v.size() == 5);
            CHECK(chain.y_draws == 5);
        }
    }
    McmcConfig thinned = quick(ModelKind::Base);
    thinned.n_iterations = 27;
    thinned.thin = 4;
    const auto store = run(data.tensor, data.expertise, default_hypers(ModelKind::Base), thinned);
    CHECK(store.n_retained() == 5);
}

TEST_CASE("configuration errors") {
    const auto data = small(1);
    auto c = quick(ModelKind::Base);
    c.burn_in = 10;
    CHECK_THROWS_AS(run(data.tensor, data.expertise, default_hypers(ModelKind::Base), c), ConfigError);
    c = quick(ModelKind::Base);
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = quick(ModelKind::DpBmm);
    c.assignment_sweeps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = quick(ModelKind::Base);
    c.tracked = {"nonsense"};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(run(data.tensor, data.expertise, default_hypers(ModelKind::BaseHier), quick(ModelKind::Base)),
                    ConfigError);
    CHECK_THROWS_AS(validate_hypers(ModelKind::DpBmm, default_hypers(ModelKind::Base)), ConfigError);
}

TEST_CASE("identical seeds give identical stores") {
    const auto data = small(4);
    for (auto k : {ModelKind::Base, ModelKind::DpBmmHier}) {
        auto c = quick(k);
        c.n_iterations = 40;
        c.burn_in = 20;
        const auto a = run(data.tensor, data.expertise, default_hypers(k), c);
        c.parallel_chains = false;
        const auto b = run(data.tensor, data.expertise, default_hypers(k), c);
        CHECK(same_draws(a, b));
        c.seed = 8;
        const auto other = run(data.tensor, data.expertise, default_hypers(k), c);
        CHECK_FALSE(same_draws(a, other));
    }
}

TEST_CASE("draw stores round-trip through files") {
    const auto data = small(2);
    auto c = quick(ModelKind::DpBmm);
    c.n_iterations = 30;
    c.burn_in = 10;
    c.label_snapshot_every = 5;
    const auto store = run(data.tensor, data.expertise, default_hypers(ModelKind::DpBmm), c);
    const auto dir = std::filesystem::temp_directory_path() / "crowdlabel_test_store";
    std::filesystem::remove_all(dir);
    write_draw_store(dir, store);
    const auto back = read_draw_store(dir);
    CHECK(back.model == store.model);
    CHECK(back.data_hash == store.data_hash);
    CHECK(back.config.seed == store.config.seed);
    CHECK(same_draws(store, back));
    CHECK(back.chains[0].label_snapshots == store.chains[0].label_snapshots);
    CHECK(pooled_waic(back).waic == doctest::Approx(pooled_waic(store).waic).epsilon(1e-12));

    const auto dir2 = dir.string() + "_again";
    std::filesystem::remove_all(dir2);
    write_draw_store(dir2, back);
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        CAPTURE(f.path().filename().string());
        CHECK(read_file(f.path()) == read_file(std::filesystem::path(dir2) / f.path().filename()));
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("pooled label probabilities") {
    DrawStore store;
    store.dims = Dims{1, 1, 2};
    store.chains.resize(2);
    store.chains[0].y_mean = {0.2, 1.0};
    store.chains[0].y_draws = 10;
    store.chains[1].y_mean = {0.4, 1.0};
    store.chains[1].y_draws = 10;
    const auto p = posterior_label_probabilities(store);
    CHECK(p[0] == doctest::Approx(0.3));
    CHECK(p[1] == 1.0);
}

TEST_CASE("diagnostics cover every tracked parameter") {
    const auto data = small(3);
    auto c = quick(ModelKind::BaseHier);
    c.n_chains = 3;
    c.n_iterations = 200;
    c.burn_in = 100;
    const auto store = run(data.tensor, data.expertise, default_hypers(ModelKind::BaseHier), c);
    const auto report = diagnose(store);
    std::size_t expected = 5 + 2 * 6 + 2 * 6 * 5;
    CHECK(report.parameters.size() == expected);
    for (const auto& p : report.parameters) {
        CHECK(p.ess > 0.0);
        CHECK(p.ess <= 300.0);
    }
    const auto tpr = annotator_rate_draws(store, true);
    CHECK(tpr.size() == 6);
    CHECK(tpr[0].size() == 300);
    for (double v : tpr[0]) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("frozen blocks stay at their initial values") {
    const auto data = small(2);
    auto c = quick(ModelKind::DpBmm);
    c.frozen.concentration = true;
    c.initial.gamma = 2.5;
    const auto store = run(data.tensor, data.expertise, default_hypers(ModelKind::DpBmm), c);
    for (double g : store.pooled("gamma")) CHECK(g == 2.5);
}

TEST_CASE("empirical-Bayes scales freeze after burn-in") {
    const auto data = small(4);
    auto c = quick(ModelKind::BaseHier);
    Hypers h = default_hypers(ModelKind::BaseHier);
    const auto run_with = [&](bool freeze) {
        h.hier->eb_freeze = freeze;
        const auto store = run(data.tensor, data.expertise, h, c);
        const auto* trace = store.chains.front().find("phi_star_psi");
        REQUIRE(trace != nullptr);
        return std::set<double>(trace->begin(), trace->end()).size();
    };
    CHECK(run_with(true) == 1);
    CHECK(run_with(false) == 5);
}

TEST_CASE("tiny fixture oracle through the chain runner") {
    const oracle::TinyFixture f;
    const auto exact = oracle::base_enumeration(f);
    const auto p = oracle::gibbs_label_probabilities(f, ModelKind::Base, 30000, 3);
    CHECK(std::abs(p[0] - exact[0]) < 0.01);
    CHECK(std::abs(p[1] - exact[1]) < 0.01);
}
