#include "crowdlabel/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "crowdlabel/errors.hpp"
#include "crowdlabel/math.hpp"

namespace crowdlabel {

void ScenarioConfig::validate() const {
    if (scenario < 1 || scenario > 4) {
        throw ConfigError("scenario must be 1, 2, 3 or 4 (got " + std::to_string(scenario) + ")");
    }
    if (!(density > 0.0)) throw ConfigError("density must be positive");
    if (density > static_cast<double>(n_annotators)) {
        throw ConfigError("density " + std::to_string(density) + " exceeds the " +
                          std::to_string(n_annotators) + " available annotators");
    }
    if (n_recordings == 0 || n_annotators == 0 || n_species == 0) {
        throw ConfigError("simulation dimensions must be positive");
    }
    if (!(phi_lambda_star >= 0.0) || !(phi_psi_star >= 0.0)) {
        throw ConfigError("species-level expertise scales must be non-negative");
    }
}

namespace {

std::size_t copied_species(std::size_t n_species) { return 2 * n_species / 5; }

}  // namespace

void gen_truth(RngStream& rng, const ScenarioConfig& config, SimTruth& truth) {
    const std::size_t n1 = config.n_recordings;
    const std::size_t n3 = config.n_species;
    truth.n_recordings = n1;
    truth.n_species = n3;
    const std::size_t copies = config.correlated() ? copied_species(n3) : 0;
    const std::size_t drawn = n3 - copies;
    truth.occurrence.assign(n3, 0.0);
    for (std::size_t k = 0; k < drawn; ++k) {
        truth.occurrence[k] = sample_beta(rng, config.occurrence.a, config.occurrence.b);
    }
    for (std::size_t k = drawn; k < n3; ++k) truth.occurrence[k] = truth.occurrence[k - drawn];
    truth.y.assign(n1 * n3, 0);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t k = 0; k < drawn; ++k) {
            truth.y[i * n3 + k] = sample_bernoulli(rng, truth.occurrence[k]) ? 1 : 0;
        }
        for (std::size_t k = drawn; k < n3; ++k) truth.y[i * n3 + k] = truth.y[i * n3 + k - drawn];
    }
}

std::array<std::size_t, 3> annotator_type_counts(std::size_t n) {
    const auto random = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n)));
    const auto excellent = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
    return {random, n - random - excellent, excellent};
}

void gen_annotators(RngStream& rng, const ScenarioConfig& config, SimTruth& truth) {
    const std::size_t n2 = config.n_annotators;
    const std::size_t n3 = config.n_species;
    truth.n_annotators = n2;
    truth.n_species = n3;
    const auto counts = annotator_type_counts(n2);
    truth.types.clear();
    for (std::size_t t = 0; t < 3; ++t) {
        truth.types.insert(truth.types.end(), counts[t], static_cast<AnnotatorType>(t));
    }
    constexpr double kTprLow[3] = {0.60, 0.75, 0.90};
    constexpr double kTprHigh[3] = {0.70, 0.85, 0.95};
    truth.avg_tpr.assign(n2, 0.0);
    truth.avg_fpr.assign(n2, 0.0);
    for (std::size_t j = 0; j < n2; ++j) {
        const auto t = static_cast<std::size_t>(truth.types[j]);
        truth.avg_tpr[j] = kTprLow[t] + (kTprHigh[t] - kTprLow[t]) * rng.uniform();
        truth.avg_fpr[j] = 0.001 + (0.01 - 0.001) * rng.uniform();
    }
    truth.tpr.assign(n2 * n3, 0.0);
    truth.fpr.assign(n2 * n3, 0.0);
    for (std::size_t j = 0; j < n2; ++j) {
        const double lambda_j = logit(truth.avg_tpr[j]);
        const double psi_j = logit(truth.avg_fpr[j]);
        for (std::size_t k = 0; k < n3; ++k) {
            if (config.varying()) {
                truth.tpr[j * n3 + k] = logistic(sample_normal(rng, lambda_j, config.phi_lambda_star));
                truth.fpr[j * n3 + k] = logistic(sample_normal(rng, psi_j, config.phi_psi_star));
            } else {
                truth.tpr[j * n3 + k] = truth.avg_tpr[j];
                truth.fpr[j * n3 + k] = truth.avg_fpr[j];
            }
        }
    }
}

AnnotationTensor gen_annotations(RngStream& rng, const ScenarioConfig& config,
                                 const SimTruth& truth) {
    config.validate();
    const std::size_t n1 = config.n_recordings;
    const std::size_t n2 = config.n_annotators;
    const std::size_t n3 = config.n_species;
    const double p = config.density / static_cast<double>(n2);
    std::vector<Annotation> entries;
    std::vector<std::uint32_t> pool(n2);
    for (std::size_t i = 0; i < n1; ++i) {
        const std::uint32_t count = sample_binomial(rng, static_cast<std::uint32_t>(n2), p);
        std::iota(pool.begin(), pool.end(), 0u);
        // Partial Fisher-Yates: the first `count` slots are a uniform subset.
        for (std::uint32_t a = 0; a < count; ++a) {
            const auto pick = a + rng.uniform_index(n2 - a);
            std::swap(pool[a], pool[pick]);
        }
        std::sort(pool.begin(), pool.begin() + count);
        for (std::uint32_t a = 0; a < count; ++a) {
            const std::uint32_t j = pool[a];
            for (std::size_t k = 0; k < n3; ++k) {
                const bool present = truth.y[i * n3 + k] != 0;
                const double rate = present ? truth.tpr[j * n3 + k] : truth.fpr[j * n3 + k];
                entries.push_back(Annotation{static_cast<std::uint32_t>(i), j,
                                             static_cast<std::uint32_t>(k),
                                             static_cast<std::uint8_t>(sample_bernoulli(rng, rate))});
            }
        }
    }
    return AnnotationTensor(Dims{n1, n2, n3}, std::move(entries));
}

SimulatedDataset simulate(const ScenarioConfig& config) {
    config.validate();
    RngStream rng(config.seed, config.stream);
    SimulatedDataset data;
    gen_truth(rng, config, data.truth);
    gen_annotators(rng, config, data.truth);
    data.tensor = gen_annotations(rng, config, data.truth);
    data.expertise = ExpertiseSets::full(config.n_annotators, config.n_species);
    for (std::size_t i = 0; i < config.n_recordings; ++i) {
        for (std::size_t k = 0; k < config.n_species; ++k) {
            data.gold.labels.push_back(GoldLabel{static_cast<std::uint32_t>(i),
                                                 static_cast<std::uint32_t>(k),
                                                 data.truth.y[i * config.n_species + k]});
        }
    }
    return data;
}

void write_truth(std::ostream& out, const ScenarioConfig& config, const SimTruth& truth) {
    nlohmann::ordered_json j;
    j["scenario"] = config.scenario;
    j["density"] = config.density;
    j["seed"] = config.seed;
    j["stream"] = config.stream;
    j["n_recordings"] = truth.n_recordings;
    j["n_annotators"] = truth.n_annotators;
    j["n_species"] = truth.n_species;
    j["phi_lambda_star"] = config.phi_lambda_star;
    j["phi_psi_star"] = config.phi_psi_star;
    j["occurrence"] = truth.occurrence;
    std::vector<int> types;
    for (auto t : truth.types) types.push_back(static_cast<int>(t));
    j["annotator_type"] = types;
    j["avg_tpr"] = truth.avg_tpr;
    j["avg_fpr"] = truth.avg_fpr;
    j["tpr"] = truth.tpr;
    j["fpr"] = truth.fpr;
    out << j.dump(1) << '\n';
}

SimTruth read_truth(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        SimTruth t;
        t.n_recordings = j.at("n_recordings").get<std::size_t>();
        t.n_annotators = j.at("n_annotators").get<std::size_t>();
        t.n_species = j.at("n_species").get<std::size_t>();
        t.occurrence = j.at("occurrence").get<std::vector<double>>();
        for (int v : j.at("annotator_type").get<std::vector<int>>()) {
            if (v < 0 || v > 2) throw DataError("truth file: unknown annotator type");
            t.types.push_back(static_cast<AnnotatorType>(v));
        }
        t.avg_tpr = j.at("avg_tpr").get<std::vector<double>>();
        t.avg_fpr = j.at("avg_fpr").get<std::vector<double>>();
        t.tpr = j.at("tpr").get<std::vector<double>>();
        t.fpr = j.at("fpr").get<std::vector<double>>();
        if (t.avg_tpr.size() != t.n_annotators || t.tpr.size() != t.n_annotators * t.n_species) {
            throw DataError("truth file: array sizes do not match dimensions");
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("truth file: ") + e.what());
    }
}

}  // namespace crowdlabel
