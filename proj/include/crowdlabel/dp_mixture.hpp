#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "crowdlabel/base_model.hpp"
#include "crowdlabel/data.hpp"
#include "crowdlabel/random.hpp"

namespace crowdlabel {

struct GammaPrior {
    double shape = 0.5;  // u1
    double rate = 0.5;   // u2
};

struct DpHypers {
    GammaPrior concentration;
    BetaPrior occurrence{2.0, 98.0};
};

/// ln(a_o + n), ln(b_o + n) and ln(a_o + b_o + n) for n = 0..N1. With counts
/// n⁺ + n⁻ = n_r, the Beta-function ratio of the collapsed occurrence
/// probabilities reduces to differences of these entries.
class BetaLogTable {
public:
    BetaLogTable() = default;
    BetaLogTable(const BetaPrior& prior, std::size_t max_count);

    double a(std::size_t n) const { return la_[n]; }
    double b(std::size_t n) const { return lb_[n]; }
    double ab(std::size_t n) const { return lab_[n]; }

private:
    std::vector<double> la_, lb_, lab_;
};

/// Occupied mixture components with per-species positive counts. Components
/// are dense: removing the last member of a component moves the final
/// component into its slot.
class MixtureStats {
public:
    MixtureStats() = default;
    /// `table` must be non-null and outlive the stats; it feeds the cached
    /// Σ_k ln(b_o + n⁻) per component.
    MixtureStats(std::size_t n_species, const BetaLogTable* table);

    std::size_t n_components() const noexcept { return sizes_.size(); }
    std::size_t n_species() const noexcept { return n_species_; }
    std::uint32_t size(std::size_t r) const { return sizes_[r]; }
    std::uint32_t pos(std::size_t r, std::size_t k) const { return pos_[r * n_species_ + k]; }
    std::uint32_t neg(std::size_t r, std::size_t k) const { return sizes_[r] - pos(r, k); }
    std::span<const std::uint32_t> pos_row(std::size_t r) const {
        return std::span<const std::uint32_t>(pos_).subspan(r * n_species_, n_species_);
    }
    /// Σ_k ln(b_o + n⁻_{r,k}).
    double neg_log_sum(std::size_t r) const { return neg_log_sum_[r]; }

    std::size_t add_component();
    void add(std::size_t r, std::span<const std::uint8_t> y_row);
    /// Returns true if the component emptied and was deleted. When that
    /// happens, the component previously at index n_components() (before
    /// deletion) now lives at index r.
    bool remove(std::size_t r, std::span<const std::uint8_t> y_row);
    /// One member of r changes its label at species k to new_value.
    void flip(std::size_t r, std::size_t k, bool new_value);

    /// Recomputes every count from (z, y); used by consistency checks.
    static MixtureStats recount(std::span<const std::uint32_t> z, std::span<const std::uint8_t> y,
                                std::size_t n_species, std::size_t n_components,
                                const BetaLogTable* table);

    /// True when counts (not the cache) agree.
    bool same_counts(const MixtureStats& other) const;

private:
    void refresh_cache(std::size_t r);

    std::size_t n_species_ = 0;
    const BetaLogTable* table_ = nullptr;
    std::vector<std::uint32_t> sizes_;
    std::vector<std::uint32_t> pos_;
    std::vector<double> neg_log_sum_;
};

/// Tunes ln s by ±min(0.01, 1/√t) after each batch of proposals, raising the
/// scale when the batch acceptance rate exceeds the target and lowering it
/// otherwise.
class ScaleAdapter {
public:
    explicit ScaleAdapter(double initial_scale = 0.5, std::size_t batch = 50, double target = 0.44)
        : log_scale_(std::log(initial_scale)), batch_(batch), target_(target) {}

    double scale() const { return std::exp(log_scale_); }
    double log_scale() const { return log_scale_; }
    std::size_t accepted() const { return accepted_total_; }
    std::size_t proposed() const { return proposed_total_; }

    /// Records one proposal outcome at chain iteration t (1-based). Adapts at
    /// the end of each batch unless `adapt` is false.
    void record(bool accepted, std::size_t t, bool adapt);

private:
    double log_scale_;
    std::size_t batch_;
    double target_;
    std::size_t batch_accepted_ = 0;
    std::size_t batch_count_ = 0;
    std::size_t accepted_total_ = 0;
    std::size_t proposed_total_ = 0;
};

inline constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

struct DpState {
    std::vector<std::uint32_t> z;
    double gamma = 1.0;
    MixtureStats stats;
    ScaleAdapter adapter;
};

/// Builds a state with every recording in one component.
DpState initial_dp_state(std::span<const std::uint8_t> y, std::size_t n_recordings,
                         std::size_t n_species, const BetaLogTable* table, double gamma,
                         double initial_scale = 0.5);

/// Takes recording i out of its component and marks it unassigned.
void remove_recording(DpState& state, std::size_t i, std::span<const std::uint8_t> y_row);
/// Assigns recording i to component r (r == n_components() opens a new one).
void add_recording(DpState& state, std::size_t i, std::size_t r,
                   std::span<const std::uint8_t> y_row);

/// Log weights of z_i over the R existing components and one new component,
/// for a recording already removed from `stats`. `n_recordings` is N1.
std::vector<double> assignment_log_weights(const MixtureStats& stats, const BetaLogTable& table,
                                           double gamma, std::size_t n_recordings,
                                           std::span<const std::uint8_t> y_row);

/// Gibbs update of z_i.
void sample_assignment(RngStream& rng, DpState& state, const BetaLogTable& table,
                       std::span<const std::uint8_t> y, std::size_t i);

/// Sweep over all recordings in index order.
void sample_assignments(RngStream& rng, DpState& state, const BetaLogTable& table,
                        std::span<const std::uint8_t> y);

/// ln of the uncapped Metropolis ratio for γ → γ* given R occupied components;
/// -inf for γ* <= 0. The acceptance probability is min(1, exp(result)).
double gamma_log_acceptance(double gamma, double proposal, std::size_t n_components,
                            std::size_t n_recordings, const GammaPrior& prior);

/// Adaptive random-walk Metropolis step for γ. `t` is the 1-based chain
/// iteration; `adapt` false freezes the proposal scale. Returns acceptance.
bool update_gamma(RngStream& rng, DpState& state, const GammaPrior& prior,
                  std::size_t n_recordings, std::size_t t, bool adapt);

/// Label update with the component occurrence probabilities integrated out.
void update_labels_dp(RngStream& rng, DpState& state, std::span<std::uint8_t> y,
                      const AnnotationTensor& tensor, const EmissionTable& emission,
                      const BetaLogTable& table);

/// Posterior draw of o_{r,k} ~ Beta(a_o + n⁺, b_o + n⁻) for reporting only.
std::vector<double> sample_component_occurrence(RngStream& rng, const MixtureStats& stats,
                                                const BetaPrior& prior);

}  // namespace crowdlabel
