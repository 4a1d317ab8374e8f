#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdlabel/base_model.hpp"
#include "crowdlabel/data.hpp"
#include "crowdlabel/diagnostics.hpp"
#include "crowdlabel/dp_mixture.hpp"
#include "crowdlabel/evaluation.hpp"
#include "crowdlabel/hier_expertise.hpp"

namespace crowdlabel {

enum class ModelKind { Base, BaseHier, DpBmm, DpBmmHier };

std::string_view model_name(ModelKind kind);
/// Accepts base, base-hier, dp-bmm, dp-bmm-hier. Throws ConfigError otherwise.
ModelKind parse_model(std::string_view name);
inline bool is_dp(ModelKind k) { return k == ModelKind::DpBmm || k == ModelKind::DpBmmHier; }
inline bool is_hier(ModelKind k) { return k == ModelKind::BaseHier || k == ModelKind::DpBmmHier; }

struct FlatExpertisePrior {
    BetaPrior tpr{16.2, 3.8};
    BetaPrior fpr{6.0, 1194.0};
};

/// Every prior constant. A model reads exactly one expertise block, and the
/// concentration block only for DP variants; blocks that do not belong to
/// the chosen model are rejected.
struct Hypers {
    BetaPrior occurrence{2.0, 98.0};
    std::optional<FlatExpertisePrior> flat;
    std::optional<HierHypers> hier;
    std::optional<GammaPrior> concentration;
};

/// Simulation-study defaults for `kind`.
Hypers default_hypers(ModelKind kind);

/// Throws ConfigError naming the missing or unexpected block.
void validate_hypers(ModelKind kind, const Hypers& hypers);

enum class InitStrategy { MajorityVote, Overdispersed };
enum class WaicUnit { Entry, Cell };

/// Blocks held fixed at their initial values (used by oracle tests).
struct FrozenBlocks {
    bool labels = false;
    bool occurrence = false;
    bool expertise = false;
    bool assignments = false;
    bool concentration = false;
};

/// Optional starting values overriding the init strategy.
struct InitialValues {
    std::optional<std::vector<std::uint8_t>> y;
    std::optional<std::vector<double>> o;
    std::optional<std::vector<double>> tpr;
    std::optional<std::vector<double>> fpr;
    std::optional<double> gamma;
    std::optional<std::vector<std::uint32_t>> z;
    std::optional<std::vector<double>> lambda_overall;
    std::optional<std::vector<double>> psi_overall;
    std::optional<std::vector<double>> lambda_species;
    std::optional<std::vector<double>> psi_species;
};

struct McmcConfig {
    ModelKind model = ModelKind::Base;
    std::size_t n_chains = 3;
    std::size_t n_iterations = 2000;
    std::size_t burn_in = 1000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    InitStrategy init = InitStrategy::MajorityVote;
    std::optional<std::size_t> adaptation_freeze_at;  // default: burn_in
    double gamma_initial_scale = 0.5;
    /// Parameter groups with full traces that enter the diagnostics: any of
    /// gamma, o, lambda, psi, lambda_species, psi_species. R and the φ*
    /// values are always traced but not diagnosed.
    std::vector<std::string> tracked = {"gamma", "o", "lambda", "psi", "lambda_species",
                                        "psi_species"};
    bool record_waic = true;
    WaicUnit waic_unit = WaicUnit::Entry;
    std::size_t label_snapshot_every = 0;  // 0 keeps no label snapshots
    bool parallel_chains = true;
    /// Hierarchical models: draw each overall value jointly with its species
    /// values (update_expertise_blocked) instead of the sequential
    /// overall-then-species scan.
    bool blocked_expertise = true;
    /// DP models: (γ, z) update pairs per iteration before the label update.
    /// γ and the partition are strongly coupled; repeating the pair lets the
    /// number of components settle for each γ.
    std::size_t assignment_sweeps = 10;
    FrozenBlocks frozen;
    InitialValues initial;

    std::size_t retained() const { return (n_iterations - burn_in) / thin; }
    std::size_t freeze_at() const { return adaptation_freeze_at.value_or(burn_in); }
    /// Throws ConfigError on burn_in >= n_iterations, thin == 0, no chains,
    /// assignment_sweeps == 0 or an unknown tracked group.
    void validate() const;
};

struct ChainDraws {
    std::uint64_t stream_id = 0;
    std::vector<std::size_t> iterations;
    std::vector<std::string> names;
    std::vector<std::uint8_t> tracked;
    std::vector<std::vector<double>> values;  // [parameter][draw]
    std::vector<double> y_mean;               // N1 × N3 over retained draws
    std::size_t y_draws = 0;
    WaicAccumulator waic;
    std::vector<std::size_t> snapshot_iterations;
    std::vector<std::vector<std::uint8_t>> label_snapshots;
    double gamma_acceptance = 0.0;

    /// Null when the parameter was not recorded.
    const std::vector<double>* find(std::string_view name) const;
};

struct DrawStore {
    ModelKind model = ModelKind::Base;
    Dims dims;
    McmcConfig config;
    Hypers hypers;
    std::string data_hash;
    std::vector<ChainDraws> chains;

    std::size_t n_retained() const { return chains.empty() ? 0 : chains.front().iterations.size(); }
    /// Draws of one parameter concatenated over chains.
    std::vector<double> pooled(std::string_view name) const;
};

/// Stable 64-bit digest (hex) of the entries and expertise sets.
std::string dataset_hash(const AnnotationTensor& tensor, const ExpertiseSets& sets);

/// Runs config.n_chains independent chains; chain c draws from stream c of
/// config.seed. Throws ConfigError for config/hyper mismatches and DataError
/// for inconsistent inputs.
DrawStore run(const AnnotationTensor& tensor, const ExpertiseSets& expertise, const Hypers& hypers,
              const McmcConfig& config);

/// Pooled posterior mean of y over chains, weighted by retained draws.
std::vector<double> posterior_label_probabilities(const DrawStore& store);

/// ESS (summed over chains) and split-R̂ for every tracked parameter.
DiagnosticsReport diagnose(const DrawStore& store);

/// Posterior WAIC pooled over chains. Throws std::invalid_argument when the
/// chains recorded none.
WaicResult pooled_waic(const DrawStore& store);

/// Probability-scale TPR (or FPR) draws per annotator, pooled over chains:
/// λ_j for flat models, σ(λ_j) for hierarchical ones.
std::vector<std::vector<double>> annotator_rate_draws(const DrawStore& store, bool tpr);

/// Directory layout: manifest.json, chain_<c>_draws.jsonl,
/// chain_<c>_y_mean.csv, chain_<c>_waic.csv, chain_<c>_labels.csv.
void write_draw_store(const std::filesystem::path& dir, const DrawStore& store);
DrawStore read_draw_store(const std::filesystem::path& dir);

/// `parameter,ess,rhat` rows.
void write_diagnostics(std::ostream& out, const DiagnosticsReport& report);

/// JSON echo of the effective settings; consumed by read_draw_store.
std::string config_json(const McmcConfig& config, const Hypers& hypers, int indent = 1);

}  // namespace crowdlabel
