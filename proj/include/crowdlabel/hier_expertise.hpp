#pragma once

#include <span>
#include <utility>
#include <vector>

#include "crowdlabel/base_model.hpp"
#include "crowdlabel/data.hpp"
#include "crowdlabel/math.hpp"
#include "crowdlabel/random.hpp"

namespace crowdlabel {

/// Normal prior on an overall logit-scale expertise parameter.
struct NormalPrior {
    double mean = 0.0;
    double sd = 1.0;
};

struct HierHypers {
    NormalPrior lambda{logit(0.81), 0.58};
    NormalPrior psi{logit(0.005), 0.41};
    bool empirical_bayes = true;
    std::size_t eb_every = 1;  // iterations between φ* updates
    /// Step size of update n (0-based) is (n + 1)^−eb_decay; 0 replaces φ*
    /// by each new estimate.
    double eb_decay = 0.7;
    /// Stop updating φ* after burn-in.
    bool eb_freeze = true;
    double phi_floor = 1e-3;
    double phi_lambda_star_init = 1.0;
    double phi_psi_star_init = 1.0;
};

/// Logit-scale expertise. Species-level arrays are N2 × N3 row-major; entries
/// outside an annotator's expertise set are NaN and never read.
struct HierExpertiseState {
    std::size_t n_species = 0;
    std::vector<double> lambda_overall;
    std::vector<double> psi_overall;
    std::vector<double> lambda_species;
    std::vector<double> psi_species;
    double phi_lambda_star = 1.0;
    double phi_psi_star = 1.0;
};

/// Overall values at the prior means, species values equal to their
/// annotator's overall value.
HierExpertiseState initial_hier_state(const ExpertiseSets& sets, const HierHypers& hypers);

/// Conjugate normal draw for one overall parameter given K species values.
/// Exposed for tests: returns (posterior mean, posterior variance).
std::pair<double, double> overall_posterior(const NormalPrior& prior, double phi_star,
                                            std::span<const double> species_values);

/// λ_j and ψ_j for all j from their normal full conditionals.
void update_overall(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                    const HierHypers& hypers);

/// Two-step Pólya-Gamma update of one logit parameter x with normal prior
/// N(center, phi_star²) and `successes` / `failures` Bernoulli outcomes of
/// probability σ(x): draws ω ~ PG(successes + failures, x) as a sum of PG(1, x)
/// variables, then x from its Gaussian conditional.
double sample_logit_pg(RngStream& rng, double x, double center, double phi_star,
                       std::uint32_t successes, std::uint32_t failures);

/// Gaussian conditional of x given the summed PG auxiliaries ω.
std::pair<double, double> logit_conditional(double center, double phi_star,
                                            std::uint32_t successes, std::uint32_t failures,
                                            double omega_sum);

/// λ_{j,k} for every k ∈ l_j: successes are (y=1, T=1), failures (y=1, T=0).
void update_species_tpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        std::span<const Confusion> counts);
/// ψ_{j,k} for every k ∈ l_j: successes are (y=0, T=1), failures (y=0, T=0).
void update_species_fpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        std::span<const Confusion> counts);

/// Same updates with the (j, k) counts tallied from the tensor and y.
void update_species_tpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        const AnnotationTensor& tensor, std::span<const std::uint8_t> y);
void update_species_fpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        const AnnotationTensor& tensor, std::span<const std::uint8_t> y);

/// Blocked alternative to update_overall followed by the species updates.
/// Per annotator and rate: ω_k ~ PG(n_k, x_k) for every k ∈ l_j given the
/// current species values, then the overall value from its Gaussian
/// conditional given ω with the species values integrated out, then each
/// species value given the overall value and ω_k. Each step is an exact
/// conditional of the augmented posterior.
void update_expertise_blocked(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                              const HierHypers& hypers, std::span<const Confusion> counts);

/// Gaussian conditional of an overall value given per-species PG sums with
/// the species values integrated out: each species with n_k > 0 contributes
/// κ_k/ω_k ~ N(overall, φ*² + 1/ω_k). Returns (mean, variance).
std::pair<double, double> overall_collapsed_posterior(const NormalPrior& prior, double phi_star,
                                                      std::span<const double> kappa,
                                                      std::span<const double> omega_sum);

/// (φ*)² = mean squared deviation of species values from their annotator's
/// overall value across all memberships; φ* floored at `floor`. Throws
/// DataError when every expertise set is empty.
double empirical_bayes_scale(std::span<const double> overall, std::span<const double> species,
                             const ExpertiseSets& sets, double floor);

/// Moves both (φ*)² values toward their empirical-Bayes estimates:
/// (φ*)² ← (1 − step)(φ*)² + step·estimate². step = 1 replaces them.
void empirical_bayes_phi(HierExpertiseState& state, const ExpertiseSets& sets, double floor,
                         double step = 1.0);

/// (σ(λ_{j,k}), σ(ψ_{j,k})). Throws std::out_of_range when k ∉ l_j.
std::pair<double, double> cell_probabilities(const HierExpertiseState& state,
                                             const ExpertiseSets& sets, std::size_t annotator,
                                             std::size_t species);

}  // namespace crowdlabel
