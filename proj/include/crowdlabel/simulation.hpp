#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "crowdlabel/base_model.hpp"
#include "crowdlabel/data.hpp"
#include "crowdlabel/random.hpp"

namespace crowdlabel {

/// Scenario 1: independent species, flat expertise. 2: correlated, flat.
/// 3: independent, varying. 4: correlated, varying.
struct ScenarioConfig {
    int scenario = 1;
    std::size_t n_recordings = 1000;
    std::size_t n_annotators = 20;
    std::size_t n_species = 25;
    double density = 4.0;  // expected distinct annotators per recording
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    BetaPrior occurrence{2.0, 98.0};
    double phi_lambda_star = 2.0;
    double phi_psi_star = 1.0;

    bool correlated() const { return scenario == 2 || scenario == 4; }
    bool varying() const { return scenario == 3 || scenario == 4; }
    /// Throws ConfigError for an unknown scenario, a non-positive density or
    /// a density above the annotator count.
    void validate() const;
};

enum class AnnotatorType : std::uint8_t { Random = 0, Normal = 1, Excellent = 2 };

struct SimTruth {
    std::size_t n_recordings = 0;
    std::size_t n_annotators = 0;
    std::size_t n_species = 0;
    std::vector<std::uint8_t> y;           // N1 × N3
    std::vector<double> occurrence;        // o_k
    std::vector<AnnotatorType> types;
    std::vector<double> avg_tpr;           // probability scale
    std::vector<double> avg_fpr;
    std::vector<double> tpr;               // N2 × N3 probability scale
    std::vector<double> fpr;
};

/// Species occurrences and labels. Correlated scenarios draw the first
/// N3 − ⌊2·N3/5⌋ species and copy species k into that offset + k for the
/// rest: with N3 = 25, species k + 15 copies species k for k = 0..9.
void gen_truth(RngStream& rng, const ScenarioConfig& config, SimTruth& truth);

/// Type counts by deterministic rounding of 10/70/20 %, average rates, and
/// species-level rates (logit-normal around the average when varying).
void gen_annotators(RngStream& rng, const ScenarioConfig& config, SimTruth& truth);

/// For each recording, A ~ Binomial(N2, density / N2) distinct annotators,
/// each labeling every species.
AnnotationTensor gen_annotations(RngStream& rng, const ScenarioConfig& config,
                                 const SimTruth& truth);

/// Counts of (random, normal, excellent) annotators for a pool of size n.
std::array<std::size_t, 3> annotator_type_counts(std::size_t n);

struct SimulatedDataset {
    AnnotationTensor tensor;
    ExpertiseSets expertise;
    GoldStandard gold;  // every cell of y_true
    SimTruth truth;
};

/// Whole pipeline from one RNG stream (config.seed, config.stream).
SimulatedDataset simulate(const ScenarioConfig& config);

/// JSON with the scenario echo and the occurrence and expertise arrays. The
/// labels are written separately as the gold standard.
void write_truth(std::ostream& out, const ScenarioConfig& config, const SimTruth& truth);
/// Reads the file written by write_truth; `y` is left empty.
SimTruth read_truth(std::istream& in);

}  // namespace crowdlabel
