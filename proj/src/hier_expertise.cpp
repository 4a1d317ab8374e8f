#include "crowdlabel/hier_expertise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crowdlabel/errors.hpp"

namespace crowdlabel {

HierExpertiseState initial_hier_state(const ExpertiseSets& sets, const HierHypers& hypers) {
    HierExpertiseState s;
    const std::size_t n_annotators = sets.n_annotators();
    s.n_species = sets.n_species();
    s.lambda_overall.assign(n_annotators, hypers.lambda.mean);
    s.psi_overall.assign(n_annotators, hypers.psi.mean);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.lambda_species.assign(n_annotators * s.n_species, nan);
    s.psi_species.assign(n_annotators * s.n_species, nan);
    for (std::size_t j = 0; j < n_annotators; ++j) {
        for (auto k : sets.species_of(j)) {
            s.lambda_species[j * s.n_species + k] = hypers.lambda.mean;
            s.psi_species[j * s.n_species + k] = hypers.psi.mean;
        }
    }
    s.phi_lambda_star = hypers.phi_lambda_star_init;
    s.phi_psi_star = hypers.phi_psi_star_init;
    return s;
}

std::pair<double, double> overall_posterior(const NormalPrior& prior, double phi_star,
                                            std::span<const double> species_values) {
    const double prior_prec = 1.0 / (prior.sd * prior.sd);
    const double data_prec = 1.0 / (phi_star * phi_star);
    double sum = 0.0;
    for (double v : species_values) sum += v;
    const double precision = prior_prec + static_cast<double>(species_values.size()) * data_prec;
    return {(prior.mean * prior_prec + sum * data_prec) / precision, 1.0 / precision};
}

namespace {

void update_overall_one(RngStream& rng, std::vector<double>& overall,
                        const std::vector<double>& species, std::size_t n_species,
                        const ExpertiseSets& sets, const NormalPrior& prior, double phi_star) {
    std::vector<double> values;
    for (std::size_t j = 0; j < overall.size(); ++j) {
        values.clear();
        for (auto k : sets.species_of(j)) values.push_back(species[j * n_species + k]);
        const auto [mean, var] = overall_posterior(prior, phi_star, values);
        overall[j] = sample_normal(rng, mean, std::sqrt(var));
    }
}

}  // namespace

void update_overall(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                    const HierHypers& hypers) {
    update_overall_one(rng, state.lambda_overall, state.lambda_species, state.n_species, sets,
                       hypers.lambda, state.phi_lambda_star);
    update_overall_one(rng, state.psi_overall, state.psi_species, state.n_species, sets,
                       hypers.psi, state.phi_psi_star);
}

std::pair<double, double> logit_conditional(double center, double phi_star,
                                            std::uint32_t successes, std::uint32_t failures,
                                            double omega_sum) {
    const double prior_prec = 1.0 / (phi_star * phi_star);
    const double precision = prior_prec + omega_sum;
    const double kappa = 0.5 * (static_cast<double>(successes) - static_cast<double>(failures));
    return {(center * prior_prec + kappa) / precision, 1.0 / precision};
}

double sample_logit_pg(RngStream& rng, double x, double center, double phi_star,
                       std::uint32_t successes, std::uint32_t failures) {
    const std::uint64_t n = static_cast<std::uint64_t>(successes) + failures;
    const double omega_sum = n > 0 ? sample_polya_gamma_sum(rng, n, x) : 0.0;
    const auto [mean, var] = logit_conditional(center, phi_star, successes, failures, omega_sum);
    return sample_normal(rng, mean, std::sqrt(var));
}

void update_species_tpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        std::span<const Confusion> counts) {
    const std::size_t n_species = state.n_species;
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        for (auto k : sets.species_of(j)) {
            const std::size_t idx = j * n_species + k;
            state.lambda_species[idx] =
                sample_logit_pg(rng, state.lambda_species[idx], state.lambda_overall[j],
                                state.phi_lambda_star, counts[idx].tp, counts[idx].fn);
        }
    }
}

void update_species_fpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        std::span<const Confusion> counts) {
    const std::size_t n_species = state.n_species;
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        for (auto k : sets.species_of(j)) {
            const std::size_t idx = j * n_species + k;
            state.psi_species[idx] =
                sample_logit_pg(rng, state.psi_species[idx], state.psi_overall[j],
                                state.phi_psi_star, counts[idx].fp, counts[idx].tn);
        }
    }
}

void update_species_tpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        const AnnotationTensor& tensor, std::span<const std::uint8_t> y) {
    update_species_tpr(rng, state, sets, tally_species_confusion(tensor, y));
}

void update_species_fpr(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                        const AnnotationTensor& tensor, std::span<const std::uint8_t> y) {
    update_species_fpr(rng, state, sets, tally_species_confusion(tensor, y));
}

std::pair<double, double> overall_collapsed_posterior(const NormalPrior& prior, double phi_star,
                                                      std::span<const double> kappa,
                                                      std::span<const double> omega_sum) {
    double precision = 1.0 / (prior.sd * prior.sd);
    double weighted = prior.mean * precision;
    const double phi2 = phi_star * phi_star;
    for (std::size_t k = 0; k < kappa.size(); ++k) {
        if (!(omega_sum[k] > 0.0)) continue;
        const double w = omega_sum[k] / (1.0 + phi2 * omega_sum[k]);  // 1 / (φ*² + 1/ω)
        precision += w;
        weighted += w * kappa[k] / omega_sum[k];
    }
    return {weighted / precision, 1.0 / precision};
}

namespace {

void update_block_one(RngStream& rng, std::vector<double>& overall, std::vector<double>& species,
                      std::size_t n_species, const ExpertiseSets& sets, const NormalPrior& prior,
                      double phi_star, std::span<const Confusion> counts, bool tpr) {
    std::vector<double> kappa;
    std::vector<double> omega;
    for (std::size_t j = 0; j < overall.size(); ++j) {
        const auto& list = sets.species_of(j);
        kappa.assign(list.size(), 0.0);
        omega.assign(list.size(), 0.0);
        for (std::size_t s = 0; s < list.size(); ++s) {
            const std::size_t idx = j * n_species + list[s];
            const Confusion& c = counts[idx];
            const std::uint32_t succ = tpr ? c.tp : c.fp;
            const std::uint32_t fail = tpr ? c.fn : c.tn;
            const std::uint64_t n = static_cast<std::uint64_t>(succ) + fail;
            kappa[s] = 0.5 * (static_cast<double>(succ) - static_cast<double>(fail));
            if (n > 0) omega[s] = sample_polya_gamma_sum(rng, n, species[idx]);
        }
        const auto [mean, var] = overall_collapsed_posterior(prior, phi_star, kappa, omega);
        overall[j] = sample_normal(rng, mean, std::sqrt(var));
        const double prior_prec = 1.0 / (phi_star * phi_star);
        for (std::size_t s = 0; s < list.size(); ++s) {
            const double precision = prior_prec + omega[s];
            const double m = (overall[j] * prior_prec + kappa[s]) / precision;
            species[j * n_species + list[s]] = sample_normal(rng, m, std::sqrt(1.0 / precision));
        }
    }
}

}  // namespace

void update_expertise_blocked(RngStream& rng, HierExpertiseState& state, const ExpertiseSets& sets,
                              const HierHypers& hypers, std::span<const Confusion> counts) {
    update_block_one(rng, state.lambda_overall, state.lambda_species, state.n_species, sets,
                     hypers.lambda, state.phi_lambda_star, counts, true);
    update_block_one(rng, state.psi_overall, state.psi_species, state.n_species, sets, hypers.psi,
                     state.phi_psi_star, counts, false);
}

double empirical_bayes_scale(std::span<const double> overall, std::span<const double> species,
                             const ExpertiseSets& sets, double floor) {
    const std::size_t n_species = sets.n_species();
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        for (auto k : sets.species_of(j)) {
            const double d = species[j * n_species + k] - overall[j];
            total += d * d;
            ++count;
        }
    }
    if (count == 0) throw DataError("empirical Bayes scale needs at least one expertise membership");
    return std::max(floor, std::sqrt(total / static_cast<double>(count)));
}

void empirical_bayes_phi(HierExpertiseState& state, const ExpertiseSets& sets, double floor,
                         double step) {
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("empirical-Bayes step must be in (0, 1]");
    const auto blend = [&](double current, double estimate) {
        if (step == 1.0) return estimate;
        return std::max(floor, std::sqrt((1.0 - step) * current * current + step * estimate * estimate));
    };
    state.phi_lambda_star = blend(
        state.phi_lambda_star, empirical_bayes_scale(state.lambda_overall, state.lambda_species, sets, floor));
    state.phi_psi_star =
        blend(state.phi_psi_star, empirical_bayes_scale(state.psi_overall, state.psi_species, sets, floor));
}

std::pair<double, double> cell_probabilities(const HierExpertiseState& state,
                                             const ExpertiseSets& sets, std::size_t annotator,
                                             std::size_t species) {
    if (!sets.contains(annotator, species)) {
        throw std::out_of_range("species " + std::to_string(species) +
                                " is outside the expertise set of annotator " +
                                std::to_string(annotator));
    }
    const std::size_t idx = annotator * state.n_species + species;
    return {logistic(state.lambda_species[idx]), logistic(state.psi_species[idx])};
}

}  // namespace crowdlabel
