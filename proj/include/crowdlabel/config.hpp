#pragma once

#include <string_view>

#include <json.hpp>

#include "crowdlabel/chain.hpp"
#include "crowdlabel/simulation.hpp"

namespace crowdlabel {

/// Prior constants as one flat JSON object, e.g. {"a_o": 2, "b_o": 98, ...}.
/// Layers are merged key by key: built-in profile < config file < flags.
///
/// Keys: a_o b_o a_lambda b_lambda a_psi b_psi mu_lambda phi_lambda mu_psi
/// phi_psi u1 u2 empirical_bayes eb_every eb_decay eb_freeze phi_floor phi_lambda_star_init
/// phi_psi_star_init psi_location psi_location_prob. Beta priors may instead
/// be given as <name>_mean / <name>_strength with name ∈ {o, lambda, psi};
/// psi_location "literal" sets mu_psi = p / (1 − p) for p = psi_location_prob
/// instead of logit(p).
using HyperDoc = nlohmann::json;

/// "simulation", "field" or "none" (empty). Throws ConfigError otherwise.
HyperDoc profile_hypers(std::string_view profile);

/// Merges `layer` into `doc`, converting mean/strength pairs to (a, b) first
/// so later layers win regardless of which form they use. Unknown keys throw
/// ConfigError.
void merge_hypers(HyperDoc& doc, const HyperDoc& layer);

/// Builds the blocks `kind` needs. Throws ConfigError naming the first
/// missing key. Keys for other models are ignored.
Hypers hypers_from_doc(ModelKind kind, const HyperDoc& doc);

/// Flat echo of the blocks present in `hypers`.
nlohmann::ordered_json hypers_to_json(const Hypers& hypers);

/// MCMC settings echo; `mcmc_from_json` overrides only keys present and
/// rejects unknown keys.
nlohmann::ordered_json mcmc_to_json(const McmcConfig& config);
void mcmc_from_json(const nlohmann::json& j, McmcConfig& config);

/// Default iteration budget for a model under a profile (simulation: 2000/1000
/// flat, 5000/2000 hierarchical; field: 3000/1500 and 7000/2000).
void apply_default_budget(std::string_view profile, ModelKind kind, McmcConfig& config);

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config);
void scenario_from_json(const nlohmann::json& j, ScenarioConfig& config);

}  // namespace crowdlabel
