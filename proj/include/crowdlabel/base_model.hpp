#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crowdlabel/data.hpp"
#include "crowdlabel/random.hpp"

namespace crowdlabel {

/// Beta(a, b) prior constants.
struct BetaPrior {
    double a = 1.0;
    double b = 1.0;

    double mean() const { return a / (a + b); }
    /// Builds (a, b) from a prior mean and a pseudo-count a + b.
    static BetaPrior from_mean(double mean, double strength) {
        return BetaPrior{mean * strength, (1.0 - mean) * strength};
    }
};

struct BaseHypers {
    BetaPrior occurrence{2.0, 98.0};
    BetaPrior tpr{16.2, 3.8};
    BetaPrior fpr{6.0, 1194.0};
};

/// Latent state of the Base model. `y` is row-major N1 × N3.
struct BaseState {
    std::vector<double> o;
    std::vector<double> lambda;
    std::vector<double> psi;
    std::vector<std::uint8_t> y;
};

/// Per-annotator confusion tallies against the current labels, over observed
/// entries only.
struct Confusion {
    std::uint32_t tp = 0;  // y = 1, T = 1
    std::uint32_t fn = 0;  // y = 1, T = 0
    std::uint32_t fp = 0;  // y = 0, T = 1
    std::uint32_t tn = 0;  // y = 0, T = 0
};

std::vector<Confusion> tally_confusion(const AnnotationTensor& tensor,
                                       std::span<const std::uint8_t> y);

/// The same tallies split by species: index annotator * N3 + species.
std::vector<Confusion> tally_species_confusion(const AnnotationTensor& tensor,
                                               std::span<const std::uint8_t> y);

/// Log emission probabilities per (annotator, species), consumed by every
/// label update. Pairs outside an annotator's expertise set carry zeros, so
/// their votes drop out of both label hypotheses.
class EmissionTable {
public:
    struct Entry {
        double log_tp = 0.0;  // ln p(T=1 | y=1)
        double log_fn = 0.0;  // ln p(T=0 | y=1)
        double log_fp = 0.0;  // ln p(T=1 | y=0)
        double log_tn = 0.0;  // ln p(T=0 | y=0)
    };

    EmissionTable() = default;
    EmissionTable(std::size_t n_annotators, std::size_t n_species);

    /// Flat expertise: every species of annotator j uses (tpr[j], fpr[j]).
    void set_flat(std::span<const double> tpr, std::span<const double> fpr);
    /// Species-level logits; pairs outside `sets` are zeroed.
    void set_logit(std::span<const double> lambda_species, std::span<const double> psi_species,
                   const ExpertiseSets& sets);

    const Entry& at(std::size_t annotator, std::size_t species) const {
        return entries_[annotator * n_species_ + species];
    }

    /// Log likelihood of one entry given its label hypothesis.
    double log_likelihood(const Annotation& a, bool y) const {
        const Entry& e = at(a.annotator, a.species);
        if (y) return a.label ? e.log_tp : e.log_fn;
        return a.label ? e.log_fp : e.log_tn;
    }

    /// Sums over the votes of one cell: (ln p(votes | y=1), ln p(votes | y=0)).
    void cell_log_likelihood(std::span<const Annotation> votes, double& ll1, double& ll0) const {
        ll1 = 0.0;
        ll0 = 0.0;
        for (const auto& v : votes) {
            const Entry& e = at(v.annotator, v.species);
            if (v.label) {
                ll1 += e.log_tp;
                ll0 += e.log_fp;
            } else {
                ll1 += e.log_fn;
                ll0 += e.log_tn;
            }
        }
    }

private:
    std::size_t n_species_ = 0;
    std::vector<Entry> entries_;
};

/// Per-cell majority vote with ties going to 0. Cells without votes get 0.
std::vector<std::uint8_t> majority_labels(const AnnotationTensor& tensor);

/// o_k ~ Beta(a_o + Σ_i y_ik, b_o + N1 − Σ_i y_ik) for every k.
void sample_occurrence(RngStream& rng, std::span<double> o, std::span<const std::uint8_t> y,
                       std::size_t n_recordings, const BetaPrior& prior);

/// y_ik ~ Bernoulli(ô_ik) for every cell, with independent occurrence o_k.
void sample_labels_independent(RngStream& rng, std::span<std::uint8_t> y,
                               std::span<const double> o, const AnnotationTensor& tensor,
                               const EmissionTable& emission);

/// ô_ik for one cell, evaluated in log space.
double label_probability(double o_k, std::span<const Annotation> votes,
                         const EmissionTable& emission);

/// Base-model conditional updates. Each draws from the exact full
/// conditional given the rest of `state`.
void update_occurrence(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                       const BaseHypers& hypers);
void update_tpr(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers);
void update_fpr(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers);
void update_labels(RngStream& rng, BaseState& state, const AnnotationTensor& tensor);

/// One systematic sweep o → λ → ψ → y.
void base_sweep(RngStream& rng, BaseState& state, const AnnotationTensor& tensor,
                const BaseHypers& hypers);

/// ô_ik under the state's current parameters.
double label_posterior_probability(const BaseState& state, const AnnotationTensor& tensor,
                                   std::size_t recording, std::size_t species);

/// Majority-vote labels, prior-mean parameters.
BaseState initial_base_state(const AnnotationTensor& tensor, const BaseHypers& hypers);

}  // namespace crowdlabel
