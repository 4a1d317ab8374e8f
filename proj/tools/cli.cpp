#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "crowdlabel/errors.hpp"

namespace crowdlabel::cli {

void HyperFlags::add_to(CLI::App& app) {
    const char* group = "Priors";
    app.add_option("--a-o", a_o, "Occurrence prior a_o")->group(group);
    app.add_option("--b-o", b_o, "Occurrence prior b_o")->group(group);
    app.add_option("--o-mean", o_mean, "Occurrence prior mean (with --o-strength)")->group(group);
    app.add_option("--o-strength", o_strength, "Occurrence prior pseudo-count a_o + b_o")->group(group);
    app.add_option("--a-lambda", a_lambda, "TPR prior a_lambda (flat models)")->group(group);
    app.add_option("--b-lambda", b_lambda, "TPR prior b_lambda (flat models)")->group(group);
    app.add_option("--lambda-mean", lambda_mean, "TPR prior mean (flat models)")->group(group);
    app.add_option("--lambda-strength", lambda_strength, "TPR prior pseudo-count")->group(group);
    app.add_option("--a-psi", a_psi, "FPR prior a_psi (flat models)")->group(group);
    app.add_option("--b-psi", b_psi, "FPR prior b_psi (flat models)")->group(group);
    app.add_option("--psi-mean", psi_mean, "FPR prior mean (flat models)")->group(group);
    app.add_option("--psi-strength", psi_strength, "FPR prior pseudo-count")->group(group);
    app.add_option("--mu-lambda", mu_lambda, "Overall TPR logit prior mean")->group(group);
    app.add_option("--phi-lambda", phi_lambda, "Overall TPR logit prior sd")->group(group);
    app.add_option("--mu-psi", mu_psi, "Overall FPR logit prior mean")->group(group);
    app.add_option("--phi-psi", phi_psi, "Overall FPR logit prior sd")->group(group);
    app.add_option("--psi-location", psi_location,
                   "literal: mu_psi = p/(1-p) for p = 0.005 instead of logit(p)")
        ->check(CLI::IsMember({"logit", "literal"}))
        ->group(group);
    app.add_option("--u1", u1, "Concentration prior shape")->group(group);
    app.add_option("--u2", u2, "Concentration prior rate")->group(group);
    app.add_flag("--no-empirical-bayes", no_empirical_bayes, "Keep phi* at its initial values")
        ->group(group);
    app.add_option("--eb-every", eb_every, "Iterations between empirical-Bayes phi* updates")
        ->group(group);
    app.add_option("--eb-decay", eb_decay, "phi* step-size exponent; 0 replaces phi* at every update")
        ->group(group);
    app.add_flag("--eb-no-freeze", eb_no_freeze, "Keep updating phi* after burn-in")->group(group);
    app.add_option("--phi-floor", phi_floor, "Lower bound on phi*")->group(group);
    app.add_option("--phi-lambda-star", phi_lambda_star_init, "Initial phi*_lambda")->group(group);
    app.add_option("--phi-psi-star", phi_psi_star_init, "Initial phi*_psi")->group(group);
}

HyperDoc HyperFlags::layer() const {
    HyperDoc doc = HyperDoc::object();
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) doc[key] = *v;
    };
    put("a_o", a_o);
    put("b_o", b_o);
    put("o_mean", o_mean);
    put("o_strength", o_strength);
    put("a_lambda", a_lambda);
    put("b_lambda", b_lambda);
    put("lambda_mean", lambda_mean);
    put("lambda_strength", lambda_strength);
    put("a_psi", a_psi);
    put("b_psi", b_psi);
    put("psi_mean", psi_mean);
    put("psi_strength", psi_strength);
    put("mu_lambda", mu_lambda);
    put("phi_lambda", phi_lambda);
    put("mu_psi", mu_psi);
    put("phi_psi", phi_psi);
    put("u1", u1);
    put("u2", u2);
    put("phi_floor", phi_floor);
    put("phi_lambda_star_init", phi_lambda_star_init);
    put("phi_psi_star_init", phi_psi_star_init);
    if (eb_every) doc["eb_every"] = *eb_every;
    if (eb_decay) doc["eb_decay"] = *eb_decay;
    if (eb_no_freeze) doc["eb_freeze"] = false;
    if (psi_location) doc["psi_location"] = *psi_location;
    if (no_empirical_bayes) doc["empirical_bayes"] = false;
    return doc;
}

void McmcFlags::add_to(CLI::App& app) {
    const char* group = "MCMC";
    app.add_option("--chains", chains, "Number of chains")->group(group);
    app.add_option("--iters", iters, "Iterations per chain")->group(group);
    app.add_option("--burn", burn, "Burn-in iterations")->group(group);
    app.add_option("--thin", thin, "Keep every thin-th post-burn-in draw")->group(group);
    app.add_option("--seed", seed, "Base seed; chain c uses stream c")->group(group);
    app.add_option("--init", init, "Initial values")
        ->check(CLI::IsMember({"majority", "overdispersed"}))
        ->group(group);
    app.add_option("--freeze-at", freeze_at, "Iteration after which the gamma proposal is fixed")
        ->group(group);
    app.add_option("--track", track,
                   "Traced groups: gamma o lambda psi lambda_species psi_species")
        ->group(group);
    app.add_option("--waic-unit", waic_unit, "WAIC observation unit")
        ->check(CLI::IsMember({"entry", "cell"}))
        ->group(group);
    app.add_flag("--no-waic", no_waic, "Skip WAIC terms")->group(group);
    app.add_option("--snapshot-every", snapshot_every, "Keep full label matrices every n iterations")
        ->group(group);
    app.add_option("--assignment-sweeps", assignment_sweeps,
                   "DP models: (gamma, assignment) updates per iteration")
        ->group(group);
    app.add_flag("--sequential", sequential, "Run chains one after another")->group(group);
    app.add_flag("--unblocked", unblocked,
                 "Hierarchical models: update overall and species expertise separately")
        ->group(group);
}

void McmcFlags::apply(McmcConfig& c) const {
    if (chains) c.n_chains = *chains;
    if (iters) c.n_iterations = *iters;
    if (burn) c.burn_in = *burn;
    if (thin) c.thin = *thin;
    if (seed) c.seed = *seed;
    if (init) c.init = *init == "overdispersed" ? InitStrategy::Overdispersed : InitStrategy::MajorityVote;
    if (freeze_at) c.adaptation_freeze_at = *freeze_at;
    if (!track.empty()) c.tracked = track;
    if (waic_unit) c.waic_unit = *waic_unit == "cell" ? WaicUnit::Cell : WaicUnit::Entry;
    if (no_waic) c.record_waic = false;
    if (snapshot_every) c.label_snapshot_every = *snapshot_every;
    if (sequential) c.parallel_chains = false;
    if (unblocked) c.blocked_expertise = false;
    if (assignment_sweeps) c.assignment_sweeps = *assignment_sweeps;
}

ConfigFile ConfigFile::load(const std::optional<std::string>& path) {
    ConfigFile f;
    if (!path) return f;
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + *path);
    try {
        in >> f.doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + *path + ": " + e.what());
    }
    if (!f.doc.is_object()) throw ConfigError("config file " + *path + " must hold a JSON object");
    static const std::vector<std::string> keys = {"model",  "profile",  "data", "hypers",
                                                  "mcmc",   "scenario", "sweep", "out"};
    for (const auto& [key, value] : f.doc.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("config file " + *path + ": unknown section '" + key + "'");
        }
    }
    f.base = std::filesystem::path(*path).parent_path();
    return f;
}

const nlohmann::json* ConfigFile::section(const char* key) const {
    const auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
}

std::optional<std::string> ConfigFile::string(const char* key) const {
    const auto* v = section(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v->get<std::string>();
}

std::optional<std::filesystem::path> ConfigFile::data_path(const char* key) const {
    const auto* data = section("data");
    if (!data) return std::nullopt;
    if (!data->is_object()) throw ConfigError("config section 'data' must be an object");
    for (const auto& [k, v] : data->items()) {
        if (k != "annotations" && k != "expertise" && k != "gold" && k != "truth" && k != "dims") {
            throw ConfigError("config section 'data': unknown key '" + k + "'");
        }
    }
    const auto it = data->find(key);
    if (it == data->end()) return std::nullopt;
    if (!it->is_string()) throw ConfigError(std::string("data.") + key + " must be a path string");
    std::filesystem::path p = it->get<std::string>();
    return p.is_relative() ? base / p : p;
}

std::optional<Dims> ConfigFile::data_dims() const {
    const auto* data = section("data");
    if (!data || !data->is_object()) return std::nullopt;
    const auto it = data->find("dims");
    if (it == data->end()) return std::nullopt;
    if (!it->is_array() || it->size() != 3) {
        throw ConfigError("data.dims must be [recordings, annotators, species]");
    }
    std::size_t v[3];
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& e = (*it)[i];
        if (!e.is_number_unsigned() || e.get<std::size_t>() == 0) {
            throw ConfigError("data.dims entries must be positive integers");
        }
        v[i] = e.get<std::size_t>();
    }
    return Dims{v[0], v[1], v[2]};
}

Dims parse_dims(const std::string& text) {
    std::size_t v[3];
    std::istringstream in(text);
    std::string part;
    std::size_t n = 0;
    while (std::getline(in, part, ',')) {
        std::size_t used = 0;
        unsigned long long x = 0;
        try {
            x = std::stoull(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (n == 3 || used != part.size() || part.empty() || part[0] == '-' || x == 0) {
            throw ConfigError("--dims must be R,A,S with positive integers, got '" + text + "'");
        }
        v[n++] = static_cast<std::size_t>(x);
    }
    if (n != 3) throw ConfigError("--dims must be R,A,S with positive integers, got '" + text + "'");
    return Dims{v[0], v[1], v[2]};
}

FitSettings resolve_fit(const std::optional<std::string>& model_flag,
                        const std::optional<std::string>& profile_flag, const ConfigFile& file,
                        const HyperFlags& hypers, const McmcFlags& mcmc) {
    FitSettings s;
    const auto model = model_flag ? model_flag : file.string("model");
    s.model = parse_model(model.value_or("base"));
    s.profile = profile_flag ? *profile_flag : file.string("profile").value_or("simulation");
    s.hyper_doc = profile_hypers(s.profile);
    if (const auto* h = file.section("hypers")) merge_hypers(s.hyper_doc, *h);
    merge_hypers(s.hyper_doc, hypers.layer());
    s.hypers = hypers_from_doc(s.model, s.hyper_doc);

    s.mcmc.model = s.model;
    apply_default_budget(s.profile, s.model, s.mcmc);
    if (const auto* m = file.section("mcmc")) {
        if (m->is_object() && m->contains("model")) {
            throw ConfigError("set the model at the top level of the config file, not in 'mcmc'");
        }
        mcmc_from_json(*m, s.mcmc);
    }
    mcmc.apply(s.mcmc);
    s.mcmc.model = s.model;
    s.mcmc.validate();
    return s;
}

std::filesystem::path output_dir(const std::optional<std::string>& flag, const ConfigFile& file,
                                 const std::string& command) {
    if (flag) return *flag;
    if (const auto out = file.string("out")) {
        std::filesystem::path p = *out;
        return p.is_relative() ? file.base / p : p;
    }
    const char* root = std::getenv("CROWDLABEL_OUTPUT_ROOT");
    const std::filesystem::path base = (root && *root) ? root : "crowdlabel_out";
    return base / command;
}

std::optional<std::filesystem::path> input_path(const std::optional<std::string>& flag,
                                                const ConfigFile& file, const char* key) {
    if (flag) return std::filesystem::path(*flag);
    return file.data_path(key);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace crowdlabel::cli
