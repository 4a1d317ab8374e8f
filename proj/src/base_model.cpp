#include "crowdlabel/base_model.hpp"

#include <cmath>

#include "crowdlabel/math.hpp"

namespace crowdlabel {

std::vector<Confusion> tally_confusion(const AnnotationTensor& tensor,
                                       std::span<const std::uint8_t> y) {
    std::vector<Confusion> counts(tensor.n_annotators());
    const std::size_t n_species = tensor.n_species();
    for (const auto& e : tensor.entries()) {
        Confusion& c = counts[e.annotator];
        if (y[e.recording * n_species + e.species]) {
            ++(e.label ? c.tp : c.fn);
        } else {
            ++(e.label ? c.fp : c.tn);
        }
    }
    return counts;
}

std::vector<Confusion> tally_species_confusion(const AnnotationTensor& tensor,
                                               std::span<const std::uint8_t> y) {
    const std::size_t n_species = tensor.n_species();
    std::vector<Confusion> counts(tensor.n_annotators() * n_species);
    for (const auto& e : tensor.entries()) {
        Confusion& c = counts[e.annotator * n_species + e.species];
        if (y[e.recording * n_species + e.species]) {
            ++(e.label ? c.tp : c.fn);
        } else {
            ++(e.label ? c.fp : c.tn);
        }
    }
    return counts;
}

EmissionTable::EmissionTable(std::size_t n_annotators, std::size_t n_species)
    : n_species_(n_species), entries_(n_annotators * n_species) {}

void EmissionTable::set_flat(std::span<const double> tpr, std::span<const double> fpr) {
    for (std::size_t j = 0; j < tpr.size(); ++j) {
        const Entry e{std::log(tpr[j]), std::log1p(-tpr[j]), std::log(fpr[j]), std::log1p(-fpr[j])};
        for (std::size_t k = 0; k < n_species_; ++k) entries_[j * n_species_ + k] = e;
    }
}

void EmissionTable::set_logit(std::span<const double> lambda_species,
                              std::span<const double> psi_species, const ExpertiseSets& sets) {
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        for (std::size_t k = 0; k < n_species_; ++k) {
            const std::size_t idx = j * n_species_ + k;
            if (!sets.contains(j, k)) {
                entries_[idx] = Entry{};
                continue;
            }
            const double l = lambda_species[idx];
            const double p = psi_species[idx];
            entries_[idx] = Entry{log_logistic(l), log_logistic(-l), log_logistic(p), log_logistic(-p)};
        }
    }
}

std::vector<std::uint8_t> majority_labels(const AnnotationTensor& tensor) {
    const std::size_t n_species = tensor.n_species();
    std::vector<std::uint8_t> y(tensor.n_recordings() * n_species, 0);
    for (std::size_t i = 0; i < tensor.n_recordings(); ++i) {
        for (std::size_t k = 0; k < n_species; ++k) {
            const auto votes = tensor.votes(i, k);
            std::size_t positive = 0;
            for (const auto& v : votes) positive += v.label;
            y[i * n_species + k] = 2 * positive > votes.size() ? 1 : 0;
        }
    }
    return y;
}

void sample_occurrence(RngStream& rng, std::span<double> o, std::span<const std::uint8_t> y,
                       std::size_t n_recordings, const BetaPrior& prior) {
    const std::size_t n_species = o.size();
    std::vector<std::size_t> positives(n_species, 0);
    for (std::size_t i = 0; i < n_recordings; ++i) {
        for (std::size_t k = 0; k < n_species; ++k) positives[k] += y[i * n_species + k];
    }
    for (std::size_t k = 0; k < n_species; ++k) {
        const double pos = static_cast<double>(positives[k]);
        o[k] = sample_beta(rng, prior.a + pos, prior.b + static_cast<double>(n_recordings) - pos);
    }
}

double label_probability(double o_k, std::span<const Annotation> votes,
                         const EmissionTable& emission) {
    double ll1 = 0.0;
    double ll0 = 0.0;
    emission.cell_log_likelihood(votes, ll1, ll0);
    return logistic(std::log(o_k) + ll1 - std::log1p(-o_k) - ll0);
}

void sample_labels_independent(RngStream& rng, std::span<std::uint8_t> y,
                               std::span<const double> o, const AnnotationTensor& tensor,
                               const EmissionTable& emission) {
    const std::size_t n_species = tensor.n_species();
    std::vector<double> prior_logit(n_species);
    for (std::size_t k = 0; k < n_species; ++k) prior_logit[k] = logit(o[k]);
    double ll1 = 0.0;
    double ll0 = 0.0;
    for (std::size_t i = 0; i < tensor.n_recordings(); ++i) {
        for (std::size_t k = 0; k < n_species; ++k) {
            emission.cell_log_likelihood(tensor.votes(i, k), ll1, ll0);
            const double p = logistic(prior_logit[k] + ll1 - ll0);
            y[i * n_species + k] = rng.uniform() < p ? 1 : 0;
        }
    }
}

void update_occurrence(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                       const BaseHypers& hypers) {
    sample_occurrence(rng, state.o, state.y, tensor.n_recordings(), hypers.occurrence);
}

void update_tpr(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers) {
    const auto counts = tally_confusion(tensor, state.y);
    for (std::size_t j = 0; j < counts.size(); ++j) {
        state.lambda[j] = sample_beta(rng, hypers.tpr.a + counts[j].tp, hypers.tpr.b + counts[j].fn);
    }
}

void update_fpr(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers) {
    const auto counts = tally_confusion(tensor, state.y);
    for (std::size_t j = 0; j < counts.size(); ++j) {
        state.psi[j] = sample_beta(rng, hypers.fpr.a + counts[j].fp, hypers.fpr.b + counts[j].tn);
    }
}

void update_labels(RngStream& rng, BaseState& state, const AnnotationTensor& tensor) {
    EmissionTable emission(tensor.n_annotators(), tensor.n_species());
    emission.set_flat(state.lambda, state.psi);
    sample_labels_independent(rng, state.y, state.o, tensor, emission);
}

void base_sweep(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers) {
    update_occurrence(rng, state, tensor, hypers);
    // λ and ψ both condition on the same y, so one tally serves both.
    const auto counts = tally_confusion(tensor, state.y);
    for (std::size_t j = 0; j < counts.size(); ++j) {
        state.lambda[j] = sample_beta(rng, hypers.tpr.a + counts[j].tp, hypers.tpr.b + counts[j].fn);
    }
    for (std::size_t j = 0; j < counts.size(); ++j) {
        state.psi[j] = sample_beta(rng, hypers.fpr.a + counts[j].fp, hypers.fpr.b + counts[j].tn);
    }
    update_labels(rng, state, tensor);
}

double label_posterior_probability(const BaseState& state, const AnnotationTensor& tensor,
                                   std::size_t recording, std::size_t species) {
    EmissionTable emission(tensor.n_annotators(), tensor.n_species());
    emission.set_flat(state.lambda, state.psi);
    return label_probability(state.o[species], tensor.votes(recording, species), emission);
}

BaseState initial_base_state(const AnnotationTensor& tensor, const BaseHypers& hypers) {
    BaseState s;
    s.o.assign(tensor.n_species(), hypers.occurrence.mean());
    s.lambda.assign(tensor.n_annotators(), hypers.tpr.mean());
    s.psi.assign(tensor.n_annotators(), hypers.fpr.mean());
    s.y = majority_labels(tensor);
    return s;
}

}  // namespace crowdlabel
