#include "crowdlabel/dp_mixture.hpp"

#include <algorithm>
#include <cmath>

#include "crowdlabel/errors.hpp"
#include "crowdlabel/math.hpp"

namespace crowdlabel {

BetaLogTable::BetaLogTable(const BetaPrior& prior, std::size_t max_count)
    : la_(max_count + 1), lb_(max_count + 1), lab_(max_count + 1) {
    for (std::size_t n = 0; n <= max_count; ++n) {
        const double x = static_cast<double>(n);
        la_[n] = std::log(prior.a + x);
        lb_[n] = std::log(prior.b + x);
        lab_[n] = std::log(prior.a + prior.b + x);
    }
}

MixtureStats::MixtureStats(std::size_t n_species, const BetaLogTable* table)
    : n_species_(n_species), table_(table) {
    if (table_ == nullptr) throw InvariantError("MixtureStats requires a log table");
}

std::size_t MixtureStats::add_component() {
    sizes_.push_back(0);
    pos_.resize(pos_.size() + n_species_, 0);
    neg_log_sum_.push_back(static_cast<double>(n_species_) * table_->b(0));
    return sizes_.size() - 1;
}

void MixtureStats::refresh_cache(std::size_t r) {
    double total = 0.0;
    const std::uint32_t n = sizes_[r];
    const std::uint32_t* row = pos_.data() + r * n_species_;
    for (std::size_t k = 0; k < n_species_; ++k) total += table_->b(n - row[k]);
    neg_log_sum_[r] = total;
}

void MixtureStats::add(std::size_t r, std::span<const std::uint8_t> y_row) {
    ++sizes_[r];
    std::uint32_t* row = pos_.data() + r * n_species_;
    for (std::size_t k = 0; k < n_species_; ++k) row[k] += y_row[k];
    refresh_cache(r);
}

bool MixtureStats::remove(std::size_t r, std::span<const std::uint8_t> y_row) {
    if (sizes_[r] == 0) throw InvariantError("remove from an empty mixture component");
    std::uint32_t* row = pos_.data() + r * n_species_;
    for (std::size_t k = 0; k < n_species_; ++k) {
        if (y_row[k]) {
            if (row[k] == 0) throw InvariantError("positive count would drop below zero");
            --row[k];
        }
    }
    --sizes_[r];
    if (sizes_[r] > 0) {
        for (std::size_t k = 0; k < n_species_; ++k) {
            if (row[k] > sizes_[r]) throw InvariantError("negative count would drop below zero");
        }
        refresh_cache(r);
        return false;
    }
    const std::size_t last = sizes_.size() - 1;
    if (r != last) {
        sizes_[r] = sizes_[last];
        std::copy_n(pos_.begin() + static_cast<std::ptrdiff_t>(last * n_species_), n_species_,
                    pos_.begin() + static_cast<std::ptrdiff_t>(r * n_species_));
        neg_log_sum_[r] = neg_log_sum_[last];
    }
    sizes_.pop_back();
    pos_.resize(pos_.size() - n_species_);
    neg_log_sum_.pop_back();
    return true;
}

void MixtureStats::flip(std::size_t r, std::size_t k, bool new_value) {
    std::uint32_t& p = pos_[r * n_species_ + k];
    if (new_value) {
        if (p >= sizes_[r]) throw InvariantError("positive count exceeds component size");
        ++p;
    } else {
        if (p == 0) throw InvariantError("positive count would drop below zero");
        --p;
    }
    refresh_cache(r);
}

MixtureStats MixtureStats::recount(std::span<const std::uint32_t> z,
                                   std::span<const std::uint8_t> y, std::size_t n_species,
                                   std::size_t n_components, const BetaLogTable* table) {
    MixtureStats stats(n_species, table);
    for (std::size_t r = 0; r < n_components; ++r) stats.add_component();
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] >= n_components) throw InvariantError("assignment outside component range");
        stats.add(z[i], y.subspan(i * n_species, n_species));
    }
    return stats;
}

bool MixtureStats::same_counts(const MixtureStats& other) const {
    return n_species_ == other.n_species_ && sizes_ == other.sizes_ && pos_ == other.pos_;
}

void ScaleAdapter::record(bool accepted, std::size_t t, bool adapt) {
    ++proposed_total_;
    ++batch_count_;
    if (accepted) {
        ++accepted_total_;
        ++batch_accepted_;
    }
    if (batch_count_ < batch_) return;
    if (adapt) {
        const double rate = static_cast<double>(batch_accepted_) / static_cast<double>(batch_count_);
        const double step = std::min(0.01, 1.0 / std::sqrt(static_cast<double>(t)));
        log_scale_ += rate > target_ ? step : -step;
    }
    batch_count_ = 0;
    batch_accepted_ = 0;
}

DpState initial_dp_state(std::span<const std::uint8_t> y, std::size_t n_recordings,
                         std::size_t n_species, const BetaLogTable* table, double gamma,
                         double initial_scale) {
    DpState state;
    state.gamma = gamma;
    state.adapter = ScaleAdapter(initial_scale);
    state.z.assign(n_recordings, 0);
    state.stats = MixtureStats::recount(state.z, y, n_species, n_recordings > 0 ? 1 : 0, table);
    return state;
}

void remove_recording(DpState& state, std::size_t i, std::span<const std::uint8_t> y_row) {
    const std::uint32_t r = state.z[i];
    if (r == kUnassigned) throw InvariantError("recording is not assigned");
    const std::size_t last = state.stats.n_components() - 1;
    const bool deleted = state.stats.remove(r, y_row);
    state.z[i] = kUnassigned;
    if (deleted && r != last) {
        for (auto& zi : state.z) {
            if (zi == last) zi = r;
        }
    }
}

void add_recording(DpState& state, std::size_t i, std::size_t r,
                   std::span<const std::uint8_t> y_row) {
    if (r == state.stats.n_components()) state.stats.add_component();
    if (r > state.stats.n_components()) throw InvariantError("component index out of range");
    state.stats.add(r, y_row);
    state.z[i] = static_cast<std::uint32_t>(r);
}

namespace {

void positive_species(std::span<const std::uint8_t> y_row, std::vector<std::uint32_t>& out) {
    out.clear();
    for (std::size_t k = 0; k < y_row.size(); ++k) {
        if (y_row[k]) out.push_back(static_cast<std::uint32_t>(k));
    }
}

void fill_log_weights(const MixtureStats& stats, const BetaLogTable& table, double gamma,
                      std::size_t n_recordings, std::span<const std::uint32_t> positives,
                      std::vector<double>& weights) {
    const std::size_t n_comp = stats.n_components();
    const double n_species = static_cast<double>(stats.n_species());
    const double log_norm = std::log(gamma + static_cast<double>(n_recordings) - 1.0);
    weights.resize(n_comp + 1);
    for (std::size_t r = 0; r < n_comp; ++r) {
        const std::uint32_t n = stats.size(r);
        double w = std::log(static_cast<double>(n)) - log_norm + stats.neg_log_sum(r) -
                   n_species * table.ab(n);
        const auto row = stats.pos_row(r);
        for (auto k : positives) w += table.a(row[k]) - table.b(n - row[k]);
        weights[r] = w;
    }
    const double n_pos = static_cast<double>(positives.size());
    weights[n_comp] = std::log(gamma) - log_norm + n_pos * table.a(0) +
                      (n_species - n_pos) * table.b(0) - n_species * table.ab(0);
}

}  // namespace

std::vector<double> assignment_log_weights(const MixtureStats& stats, const BetaLogTable& table,
                                           double gamma, std::size_t n_recordings,
                                           std::span<const std::uint8_t> y_row) {
    std::vector<std::uint32_t> positives;
    positive_species(y_row, positives);
    std::vector<double> weights;
    fill_log_weights(stats, table, gamma, n_recordings, positives, weights);
    return weights;
}

void sample_assignment(RngStream& rng, DpState& state, const BetaLogTable& table,
                       std::span<const std::uint8_t> y, std::size_t i) {
    const std::size_t n_species = state.stats.n_species();
    const auto y_row = y.subspan(i * n_species, n_species);
    remove_recording(state, i, y_row);
    const auto weights =
        assignment_log_weights(state.stats, table, state.gamma, state.z.size(), y_row);
    add_recording(state, i, sample_categorical_log(rng, weights), y_row);
}

void sample_assignments(RngStream& rng, DpState& state, const BetaLogTable& table,
                        std::span<const std::uint8_t> y) {
    const std::size_t n_species = state.stats.n_species();
    std::vector<std::uint32_t> positives;
    std::vector<double> weights;
    for (std::size_t i = 0; i < state.z.size(); ++i) {
        const auto y_row = y.subspan(i * n_species, n_species);
        remove_recording(state, i, y_row);
        positive_species(y_row, positives);
        fill_log_weights(state.stats, table, state.gamma, state.z.size(), positives, weights);
        add_recording(state, i, sample_categorical_log(rng, weights), y_row);
    }
}

double gamma_log_acceptance(double gamma, double proposal, std::size_t n_components,
                            std::size_t n_recordings, const GammaPrior& prior) {
    if (!(proposal > 0.0)) return -INFINITY;
    double log_ratio = (static_cast<double>(n_components) + prior.shape - 1.0) *
                           (std::log(proposal) - std::log(gamma)) -
                       prior.rate * (proposal - gamma);
    for (std::size_t i = 1; i <= n_recordings; ++i) {
        const double base = static_cast<double>(i - 1);
        log_ratio += std::log(base + gamma) - std::log(base + proposal);
    }
    return log_ratio;
}

bool update_gamma(RngStream& rng, DpState& state, const GammaPrior& prior,
                  std::size_t n_recordings, std::size_t t, bool adapt) {
    const double proposal = state.gamma + state.adapter.scale() * rng.standard_normal();
    bool accepted = false;
    if (proposal > 0.0) {
        const double log_alpha = gamma_log_acceptance(state.gamma, proposal,
                                                      state.stats.n_components(), n_recordings, prior);
        accepted = std::log(rng.uniform()) < log_alpha;
        if (accepted) state.gamma = proposal;
    }
    state.adapter.record(accepted, t, adapt);
    return accepted;
}

void update_labels_dp(RngStream& rng, DpState& state, std::span<std::uint8_t> y,
                      const AnnotationTensor& tensor, const EmissionTable& emission,
                      const BetaLogTable& table) {
    const std::size_t n_species = tensor.n_species();
    double ll1 = 0.0;
    double ll0 = 0.0;
    for (std::size_t i = 0; i < tensor.n_recordings(); ++i) {
        const std::uint32_t r = state.z[i];
        const std::uint32_t n_others = state.stats.size(r) - 1;
        for (std::size_t k = 0; k < n_species; ++k) {
            std::uint8_t& cell = y[i * n_species + k];
            const std::uint32_t pos_others = state.stats.pos(r, k) - cell;
            emission.cell_log_likelihood(tensor.votes(i, k), ll1, ll0);
            const double log1 = table.a(pos_others) + ll1;
            const double log0 = table.b(n_others - pos_others) + ll0;
            const std::uint8_t next = rng.uniform() < logistic(log1 - log0) ? 1 : 0;
            if (next != cell) {
                cell = next;
                state.stats.flip(r, k, next != 0);
            }
        }
    }
}

std::vector<double> sample_component_occurrence(RngStream& rng, const MixtureStats& stats,
                                                const BetaPrior& prior) {
    std::vector<double> o(stats.n_components() * stats.n_species());
    for (std::size_t r = 0; r < stats.n_components(); ++r) {
        for (std::size_t k = 0; k < stats.n_species(); ++k) {
            o[r * stats.n_species() + k] =
                sample_beta(rng, prior.a + stats.pos(r, k), prior.b + stats.neg(r, k));
        }
    }
    return o;
}

}  // namespace crowdlabel
