#include "crowdlabel/config.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "crowdlabel/errors.hpp"
#include "crowdlabel/math.hpp"

namespace crowdlabel {
namespace {

constexpr std::array<std::string_view, 21> kHyperKeys = {
    "a_o",        "b_o",        "a_lambda",        "b_lambda",
    "a_psi",      "b_psi",      "mu_lambda",       "phi_lambda",
    "mu_psi",     "phi_psi",    "u1",              "u2",
    "empirical_bayes", "eb_every", "eb_decay", "eb_freeze", "phi_floor",    "phi_lambda_star_init",
    "phi_psi_star_init", "psi_location", "psi_location_prob"};

constexpr std::array<std::string_view, 3> kBetaNames = {"o", "lambda", "psi"};

bool is_hyper_key(std::string_view key) {
    if (std::find(kHyperKeys.begin(), kHyperKeys.end(), key) != kHyperKeys.end()) return true;
    for (auto name : kBetaNames) {
        if (key == std::string(name) + "_mean" || key == std::string(name) + "_strength") return true;
    }
    return false;
}

double number(const nlohmann::json& j, std::string_view key) {
    const auto& v = j.at(std::string(key));
    if (!v.is_number()) throw ConfigError("hyperparameter '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

double required(const HyperDoc& doc, std::string_view key, ModelKind kind) {
    if (!doc.contains(std::string(key))) {
        throw ConfigError("missing hyperparameter '" + std::string(key) + "' required by model " +
                          std::string(model_name(kind)));
    }
    return number(doc, key);
}

BetaPrior beta_prior(const HyperDoc& doc, std::string_view a_key, std::string_view b_key,
                     ModelKind kind) {
    BetaPrior p{required(doc, a_key, kind), required(doc, b_key, kind)};
    if (!(p.a > 0.0) || !(p.b > 0.0)) {
        throw ConfigError("hyperparameters '" + std::string(a_key) + "' and '" + std::string(b_key) +
                          "' must be positive");
    }
    return p;
}

template <class T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("setting '") + key + "' has the wrong type");
    }
}

}  // namespace

HyperDoc profile_hypers(std::string_view profile) {
    HyperDoc doc = HyperDoc::object();
    if (profile == "none" || profile.empty()) return doc;
    if (profile == "simulation") {
        doc["a_o"] = 2.0;
        doc["b_o"] = 98.0;
        doc["a_lambda"] = 0.81 * 20.0;
        doc["b_lambda"] = (1.0 - 0.81) * 20.0;
        doc["a_psi"] = 0.005 * 1200.0;
        doc["b_psi"] = (1.0 - 0.005) * 1200.0;
        doc["mu_lambda"] = logit(0.81);
        doc["phi_lambda"] = 0.58;
        doc["phi_psi"] = 0.41;
    } else if (profile == "field") {
        doc["a_o"] = 2.0;
        doc["b_o"] = 98.0;
        doc["a_lambda"] = 45.0;
        doc["b_lambda"] = 5.0;
        doc["a_psi"] = 5.0;
        doc["b_psi"] = 995.0;
        doc["mu_lambda"] = logit(0.9);
        doc["phi_lambda"] = 0.48;
        doc["phi_psi"] = 0.45;
    } else {
        throw ConfigError("unknown profile '" + std::string(profile) +
                          "' (expected simulation, field or none)");
    }
    doc["mu_psi"] = logit(0.005);
    doc["psi_location"] = "logit";
    doc["psi_location_prob"] = 0.005;
    doc["u1"] = 0.5;
    doc["u2"] = 0.5;
    doc["empirical_bayes"] = true;
    doc["eb_every"] = 1;
    doc["eb_decay"] = 0.7;
    doc["eb_freeze"] = true;
    doc["phi_floor"] = 1e-3;
    doc["phi_lambda_star_init"] = 1.0;
    doc["phi_psi_star_init"] = 1.0;
    return doc;
}

void merge_hypers(HyperDoc& doc, const HyperDoc& layer) {
    if (layer.is_null()) return;
    if (!layer.is_object()) throw ConfigError("hyperparameters must be a JSON object");
    for (const auto& [key, value] : layer.items()) {
        if (!is_hyper_key(key)) throw ConfigError("unknown hyperparameter '" + key + "'");
    }
    for (const auto& [key, value] : layer.items()) {
        if (key.ends_with("_mean") || key.ends_with("_strength")) continue;
        doc[key] = value;
    }
    for (auto name : kBetaNames) {
        const std::string mean_key = std::string(name) + "_mean";
        const std::string strength_key = std::string(name) + "_strength";
        const bool has_mean = layer.contains(mean_key);
        const bool has_strength = layer.contains(strength_key);
        if (!has_mean && !has_strength) continue;
        const std::string a_key = "a_" + std::string(name);
        const std::string b_key = "b_" + std::string(name);
        const bool has_ab = doc.contains(a_key) && doc.contains(b_key);
        double mean = 0.0;
        double strength = 0.0;
        if (has_mean) {
            mean = number(layer, mean_key);
        } else if (has_ab) {
            mean = number(doc, a_key) / (number(doc, a_key) + number(doc, b_key));
        } else {
            throw ConfigError("'" + strength_key + "' needs '" + mean_key + "' or existing '" + a_key +
                              "'/'" + b_key + "'");
        }
        if (has_strength) {
            strength = number(layer, strength_key);
        } else if (has_ab) {
            strength = number(doc, a_key) + number(doc, b_key);
        } else {
            throw ConfigError("'" + mean_key + "' needs '" + strength_key + "' or existing '" + a_key +
                              "'/'" + b_key + "'");
        }
        if (!(mean > 0.0 && mean < 1.0) || !(strength > 0.0)) {
            throw ConfigError("'" + mean_key + "' must lie in (0, 1) and '" + strength_key +
                              "' must be positive");
        }
        const BetaPrior p = BetaPrior::from_mean(mean, strength);
        doc[a_key] = p.a;
        doc[b_key] = p.b;
    }
}

Hypers hypers_from_doc(ModelKind kind, const HyperDoc& doc) {
    Hypers h;
    h.occurrence = beta_prior(doc, "a_o", "b_o", kind);
    if (is_hier(kind)) {
        HierHypers hh;
        hh.lambda = NormalPrior{required(doc, "mu_lambda", kind), required(doc, "phi_lambda", kind)};
        hh.psi = NormalPrior{required(doc, "mu_psi", kind), required(doc, "phi_psi", kind)};
        if (doc.contains("psi_location")) {
            const auto loc = doc.at("psi_location").get<std::string>();
            if (loc == "literal") {
                const double p = required(doc, "psi_location_prob", kind);
                hh.psi.mean = p / (1.0 - p);
            } else if (loc != "logit") {
                throw ConfigError("psi_location must be 'logit' or 'literal'");
            }
        }
        if (!(hh.lambda.sd > 0.0) || !(hh.psi.sd > 0.0)) {
            throw ConfigError("phi_lambda and phi_psi must be positive");
        }
        if (doc.contains("empirical_bayes")) hh.empirical_bayes = doc.at("empirical_bayes").get<bool>();
        if (doc.contains("eb_every")) hh.eb_every = doc.at("eb_every").get<std::size_t>();
        if (doc.contains("eb_decay")) hh.eb_decay = number(doc, "eb_decay");
        if (doc.contains("eb_freeze")) hh.eb_freeze = doc.at("eb_freeze").get<bool>();
        if (!(hh.eb_decay >= 0.0 && hh.eb_decay <= 1.0)) throw ConfigError("eb_decay must be in [0, 1]");
        if (doc.contains("phi_floor")) hh.phi_floor = number(doc, "phi_floor");
        if (doc.contains("phi_lambda_star_init")) hh.phi_lambda_star_init = number(doc, "phi_lambda_star_init");
        if (doc.contains("phi_psi_star_init")) hh.phi_psi_star_init = number(doc, "phi_psi_star_init");
        if (hh.eb_every == 0) throw ConfigError("eb_every must be at least 1");
        if (!(hh.phi_floor > 0.0) || !(hh.phi_lambda_star_init > 0.0) || !(hh.phi_psi_star_init > 0.0)) {
            throw ConfigError("phi_floor and initial phi* values must be positive");
        }
        h.hier = hh;
    } else {
        h.flat = FlatExpertisePrior{beta_prior(doc, "a_lambda", "b_lambda", kind),
                                    beta_prior(doc, "a_psi", "b_psi", kind)};
    }
    if (is_dp(kind)) {
        GammaPrior g{required(doc, "u1", kind), required(doc, "u2", kind)};
        if (!(g.shape > 0.0) || !(g.rate > 0.0)) throw ConfigError("u1 and u2 must be positive");
        h.concentration = g;
    }
    return h;
}

nlohmann::ordered_json hypers_to_json(const Hypers& h) {
    nlohmann::ordered_json j;
    j["a_o"] = h.occurrence.a;
    j["b_o"] = h.occurrence.b;
    if (h.flat) {
        j["a_lambda"] = h.flat->tpr.a;
        j["b_lambda"] = h.flat->tpr.b;
        j["a_psi"] = h.flat->fpr.a;
        j["b_psi"] = h.flat->fpr.b;
    }
    if (h.hier) {
        j["mu_lambda"] = h.hier->lambda.mean;
        j["phi_lambda"] = h.hier->lambda.sd;
        j["mu_psi"] = h.hier->psi.mean;
        j["phi_psi"] = h.hier->psi.sd;
        j["empirical_bayes"] = h.hier->empirical_bayes;
        j["eb_every"] = h.hier->eb_every;
        j["eb_decay"] = h.hier->eb_decay;
        j["eb_freeze"] = h.hier->eb_freeze;
        j["phi_floor"] = h.hier->phi_floor;
        j["phi_lambda_star_init"] = h.hier->phi_lambda_star_init;
        j["phi_psi_star_init"] = h.hier->phi_psi_star_init;
    }
    if (h.concentration) {
        j["u1"] = h.concentration->shape;
        j["u2"] = h.concentration->rate;
    }
    return j;
}

nlohmann::ordered_json mcmc_to_json(const McmcConfig& c) {
    nlohmann::ordered_json j;
    j["model"] = std::string(model_name(c.model));
    j["chains"] = c.n_chains;
    j["iterations"] = c.n_iterations;
    j["burn_in"] = c.burn_in;
    j["thin"] = c.thin;
    j["seed"] = c.seed;
    j["init"] = c.init == InitStrategy::MajorityVote ? "majority" : "overdispersed";
    j["adaptation_freeze_at"] = c.freeze_at();
    j["gamma_initial_scale"] = c.gamma_initial_scale;
    j["tracked"] = c.tracked;
    j["record_waic"] = c.record_waic;
    j["waic_unit"] = c.waic_unit == WaicUnit::Entry ? "entry" : "cell";
    j["label_snapshot_every"] = c.label_snapshot_every;
    j["parallel_chains"] = c.parallel_chains;
    j["blocked_expertise"] = c.blocked_expertise;
    j["assignment_sweeps"] = c.assignment_sweeps;
    return j;
}

void mcmc_from_json(const nlohmann::json& j, McmcConfig& c) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError("mcmc settings must be a JSON object");
    static const std::array<std::string_view, 16> keys = {
        "model",          "chains",      "iterations",          "burn_in",
        "thin",           "seed",        "init",                "adaptation_freeze_at",
        "gamma_initial_scale", "tracked", "record_waic",        "waic_unit",
        "label_snapshot_every", "parallel_chains", "blocked_expertise",
        "assignment_sweeps"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("unknown mcmc setting '" + key + "'");
        }
    }
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    read_into(j, "chains", c.n_chains);
    read_into(j, "iterations", c.n_iterations);
    read_into(j, "burn_in", c.burn_in);
    read_into(j, "thin", c.thin);
    read_into(j, "seed", c.seed);
    if (j.contains("init")) {
        const auto s = j.at("init").get<std::string>();
        if (s == "majority") c.init = InitStrategy::MajorityVote;
        else if (s == "overdispersed") c.init = InitStrategy::Overdispersed;
        else throw ConfigError("init must be 'majority' or 'overdispersed'");
    }
    if (j.contains("adaptation_freeze_at")) {
        c.adaptation_freeze_at = j.at("adaptation_freeze_at").get<std::size_t>();
    }
    read_into(j, "gamma_initial_scale", c.gamma_initial_scale);
    read_into(j, "tracked", c.tracked);
    read_into(j, "record_waic", c.record_waic);
    if (j.contains("waic_unit")) {
        const auto s = j.at("waic_unit").get<std::string>();
        if (s == "entry") c.waic_unit = WaicUnit::Entry;
        else if (s == "cell") c.waic_unit = WaicUnit::Cell;
        else throw ConfigError("waic_unit must be 'entry' or 'cell'");
    }
    read_into(j, "label_snapshot_every", c.label_snapshot_every);
    read_into(j, "parallel_chains", c.parallel_chains);
    read_into(j, "blocked_expertise", c.blocked_expertise);
    read_into(j, "assignment_sweeps", c.assignment_sweeps);
}

void apply_default_budget(std::string_view profile, ModelKind kind, McmcConfig& c) {
    const bool hier = is_hier(kind);
    if (profile == "field") {
        c.n_iterations = hier ? 7000 : 3000;
        c.burn_in = hier ? 2000 : 1500;
    } else {
        c.n_iterations = hier ? 5000 : 2000;
        c.burn_in = hier ? 2000 : 1000;
    }
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& s) {
    nlohmann::ordered_json j;
    j["scenario"] = s.scenario;
    j["recordings"] = s.n_recordings;
    j["annotators"] = s.n_annotators;
    j["species"] = s.n_species;
    j["density"] = s.density;
    j["seed"] = s.seed;
    j["stream"] = s.stream;
    j["a_occurrence"] = s.occurrence.a;
    j["b_occurrence"] = s.occurrence.b;
    j["phi_lambda_star"] = s.phi_lambda_star;
    j["phi_psi_star"] = s.phi_psi_star;
    return j;
}

void scenario_from_json(const nlohmann::json& j, ScenarioConfig& s) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError("scenario settings must be a JSON object");
    static const std::array<std::string_view, 11> keys = {
        "scenario", "recordings", "annotators", "species", "density", "seed",
        "stream", "a_occurrence", "b_occurrence", "phi_lambda_star", "phi_psi_star"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("unknown scenario setting '" + key + "'");
        }
    }
    read_into(j, "scenario", s.scenario);
    read_into(j, "recordings", s.n_recordings);
    read_into(j, "annotators", s.n_annotators);
    read_into(j, "species", s.n_species);
    read_into(j, "density", s.density);
    read_into(j, "seed", s.seed);
    read_into(j, "stream", s.stream);
    read_into(j, "a_occurrence", s.occurrence.a);
    read_into(j, "b_occurrence", s.occurrence.b);
    read_into(j, "phi_lambda_star", s.phi_lambda_star);
    read_into(j, "phi_psi_star", s.phi_psi_star);
}

}  // namespace crowdlabel
