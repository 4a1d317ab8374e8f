#include "crowdlabel/chain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crowdlabel/config.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/format.hpp"
#include "crowdlabel/math.hpp"
#include "csv.hpp"

namespace crowdlabel {

std::string_view model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Base: return "base";
        case ModelKind::BaseHier: return "base-hier";
        case ModelKind::DpBmm: return "dp-bmm";
        case ModelKind::DpBmmHier: return "dp-bmm-hier";
    }
    return "base";
}

ModelKind parse_model(std::string_view name) {
    if (name == "base") return ModelKind::Base;
    if (name == "base-hier") return ModelKind::BaseHier;
    if (name == "dp-bmm") return ModelKind::DpBmm;
    if (name == "dp-bmm-hier") return ModelKind::DpBmmHier;
    throw ConfigError("unknown model '" + std::string(name) +
                      "' (expected base, base-hier, dp-bmm or dp-bmm-hier)");
}

Hypers default_hypers(ModelKind kind) {
    Hypers h;
    if (is_hier(kind)) {
        h.hier = HierHypers{};
    } else {
        h.flat = FlatExpertisePrior{};
    }
    if (is_dp(kind)) h.concentration = GammaPrior{};
    return h;
}

void validate_hypers(ModelKind kind, const Hypers& h) {
    const std::string model(model_name(kind));
    if (is_hier(kind)) {
        if (!h.hier) throw ConfigError("model " + model + " needs the hierarchical expertise block");
        if (h.flat) throw ConfigError("model " + model + " does not use the flat expertise block");
    } else {
        if (!h.flat) throw ConfigError("model " + model + " needs the flat expertise block");
        if (h.hier) throw ConfigError("model " + model + " does not use the hierarchical expertise block");
    }
    if (is_dp(kind) && !h.concentration) {
        throw ConfigError("model " + model + " needs the concentration block (u1, u2)");
    }
    if (!is_dp(kind) && h.concentration) {
        throw ConfigError("model " + model + " does not use the concentration block");
    }
    auto positive = [](const BetaPrior& p) { return p.a > 0.0 && p.b > 0.0; };
    if (!positive(h.occurrence)) throw ConfigError("occurrence prior constants must be positive");
    if (h.flat && (!positive(h.flat->tpr) || !positive(h.flat->fpr))) {
        throw ConfigError("expertise prior constants must be positive");
    }
    if (h.hier && (!(h.hier->lambda.sd > 0.0) || !(h.hier->psi.sd > 0.0) || h.hier->eb_every == 0 ||
                   !(h.hier->phi_floor > 0.0))) {
        throw ConfigError("hierarchical prior scales, eb_every and phi_floor must be positive");
    }
    if (h.concentration && (!(h.concentration->shape > 0.0) || !(h.concentration->rate > 0.0))) {
        throw ConfigError("u1 and u2 must be positive");
    }
}

namespace {

constexpr std::array<std::string_view, 6> kGroups = {"gamma", "o", "lambda", "psi",
                                                     "lambda_species", "psi_species"};

}  // namespace

void McmcConfig::validate() const {
    if (n_chains == 0) throw ConfigError("at least one chain is required");
    if (thin == 0) throw ConfigError("thin must be at least 1");
    if (burn_in >= n_iterations) {
        throw ConfigError("burn_in (" + std::to_string(burn_in) + ") must be below iterations (" +
                          std::to_string(n_iterations) + ")");
    }
    if (!(gamma_initial_scale > 0.0)) throw ConfigError("gamma_initial_scale must be positive");
    if (assignment_sweeps == 0) throw ConfigError("assignment_sweeps must be at least 1");
    for (const auto& g : tracked) {
        if (std::find(kGroups.begin(), kGroups.end(), g) == kGroups.end()) {
            throw ConfigError("unknown tracked parameter group '" + g + "'");
        }
    }
}

const std::vector<double>* ChainDraws::find(std::string_view name) const {
    for (std::size_t p = 0; p < names.size(); ++p) {
        if (names[p] == name) return &values[p];
    }
    return nullptr;
}

std::vector<double> DrawStore::pooled(std::string_view name) const {
    std::vector<double> out;
    for (const auto& c : chains) {
        const auto* v = c.find(name);
        if (!v) throw std::invalid_argument("parameter '" + std::string(name) + "' was not recorded");
        out.insert(out.end(), v->begin(), v->end());
    }
    return out;
}

std::string dataset_hash(const AnnotationTensor& tensor, const ExpertiseSets& sets) {
    Fnv1a h;
    h.add(tensor.n_recordings());
    h.add(tensor.n_annotators());
    h.add(tensor.n_species());
    for (const auto& e : tensor.entries()) {
        h.add((static_cast<std::uint64_t>(e.recording) << 32) | e.annotator);
        h.add((static_cast<std::uint64_t>(e.species) << 8) | e.label);
    }
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        h.add(sets.species_of(j).size());
        for (auto k : sets.species_of(j)) h.add(k);
    }
    return h.hex();
}

namespace {

template <class T>
void check_size(const std::optional<std::vector<T>>& v, std::size_t expected, const char* name) {
    if (v && v->size() != expected) {
        throw ConfigError(std::string("initial ") + name + " has " + std::to_string(v->size()) +
                          " values, expected " + std::to_string(expected));
    }
}

class ChainWorker {
public:
    ChainWorker(const AnnotationTensor& tensor, const ExpertiseSets& sets, const Hypers& hypers,
                const McmcConfig& config, std::size_t chain)
        : tensor_(tensor),
          sets_(sets),
          hypers_(hypers),
          config_(config),
          kind_(config.model),
          n1_(tensor.n_recordings()),
          n2_(tensor.n_annotators()),
          n3_(tensor.n_species()),
          rng_(config.seed, chain),
          table_(hypers.occurrence, n1_ + 1),
          emission_(n2_, n3_) {
        draws_.stream_id = chain;
        for (const auto& g : config.tracked) tracked_groups_.push_back(g);
        initialize();
    }

    ChainWorker(const ChainWorker&) = delete;
    ChainWorker& operator=(const ChainWorker&) = delete;

    ChainDraws run() {
        register_parameters();
        draws_.values.assign(draws_.names.size(), {});
        for (auto& v : draws_.values) v.reserve(config_.retained());
        y_count_.assign(n1_ * n3_, 0);
        if (config_.record_waic) draws_.waic = WaicAccumulator(n_observations());
        std::size_t accepted_after = 0;
        std::size_t proposed_after = 0;
        for (std::size_t t = 1; t <= config_.n_iterations; ++t) {
            const std::size_t accepted = sweep(t);
            if (is_dp(kind_) && !config_.frozen.concentration && t > config_.burn_in) {
                proposed_after += config_.assignment_sweeps;
                accepted_after += accepted;
            }
            if (t > config_.burn_in && (t - config_.burn_in) % config_.thin == 0) record(t);
        }
        draws_.y_mean.assign(n1_ * n3_, 0.0);
        if (draws_.y_draws > 0) {
            const double n = static_cast<double>(draws_.y_draws);
            for (std::size_t c = 0; c < y_count_.size(); ++c) draws_.y_mean[c] = y_count_[c] / n;
        }
        draws_.gamma_acceptance =
            proposed_after > 0 ? static_cast<double>(accepted_after) / proposed_after : 0.0;
        return std::move(draws_);
    }

private:
    bool tracked(std::string_view group) const {
        return std::find(tracked_groups_.begin(), tracked_groups_.end(), group) !=
               tracked_groups_.end();
    }

    // Calls f(name, value, tracked) for every recorded parameter in a fixed
    // order. Names are built only when `with_names` is true.
    template <class F>
    void visit(bool with_names, F&& f) const {
        auto name = [&](auto&&... parts) {
            if (!with_names) return std::string();
            std::string s;
            ((s += parts), ...);
            return s;
        };
        if (is_dp(kind_)) {
            if (tracked("gamma")) f(name("gamma"), dp_.gamma, true);
            f(name("R"), static_cast<double>(dp_.stats.n_components()), false);
        } else if (tracked("o")) {
            for (std::size_t k = 0; k < n3_; ++k) f(name("o/", std::to_string(k)), o_[k], true);
        }
        const bool hier = is_hier(kind_);
        if (tracked("lambda")) {
            for (std::size_t j = 0; j < n2_; ++j) {
                f(name("lambda/", std::to_string(j)), hier ? hier_.lambda_overall[j] : tpr_[j], true);
            }
        }
        if (tracked("psi")) {
            for (std::size_t j = 0; j < n2_; ++j) {
                f(name("psi/", std::to_string(j)), hier ? hier_.psi_overall[j] : fpr_[j], true);
            }
        }
        if (!hier) return;
        if (tracked("lambda_species")) {
            for (std::size_t j = 0; j < n2_; ++j) {
                for (auto k : sets_.species_of(j)) {
                    f(name("lambda/", std::to_string(j), "/", std::to_string(k)),
                      hier_.lambda_species[j * n3_ + k], true);
                }
            }
        }
        if (tracked("psi_species")) {
            for (std::size_t j = 0; j < n2_; ++j) {
                for (auto k : sets_.species_of(j)) {
                    f(name("psi/", std::to_string(j), "/", std::to_string(k)),
                      hier_.psi_species[j * n3_ + k], true);
                }
            }
        }
        f(name("phi_star_lambda"), hier_.phi_lambda_star, false);
        f(name("phi_star_psi"), hier_.phi_psi_star, false);
    }

    void register_parameters() {
        visit(true, [&](std::string n, double, bool t) {
            draws_.names.push_back(std::move(n));
            draws_.tracked.push_back(t ? 1 : 0);
        });
    }

    std::size_t n_observations() {
        if (config_.waic_unit == WaicUnit::Entry) return tensor_.size();
        waic_cells_.clear();
        for (std::size_t i = 0; i < n1_; ++i) {
            for (std::size_t k = 0; k < n3_; ++k) {
                if (!tensor_.votes(i, k).empty()) waic_cells_.push_back(i * n3_ + k);
            }
        }
        return waic_cells_.size();
    }

    void initialize() {
        const bool over = config_.init == InitStrategy::Overdispersed;
        const auto& init = config_.initial;
        check_size(init.y, n1_ * n3_, "y");
        y_ = init.y ? *init.y : majority_labels(tensor_);
        for (auto v : y_) {
            if (v > 1) throw ConfigError("initial y must be binary");
        }

        if (!is_dp(kind_)) {
            check_size(init.o, n3_, "o");
            if (init.o) {
                o_ = *init.o;
            } else {
                o_.assign(n3_, hypers_.occurrence.mean());
                if (over) {
                    for (auto& v : o_) v = sample_beta(rng_, hypers_.occurrence.a, hypers_.occurrence.b);
                }
            }
        }

        if (is_hier(kind_)) {
            const HierHypers& h = *hypers_.hier;
            hier_ = initial_hier_state(sets_, h);
            check_size(init.lambda_overall, n2_, "lambda_overall");
            check_size(init.psi_overall, n2_, "psi_overall");
            check_size(init.lambda_species, n2_ * n3_, "lambda_species");
            check_size(init.psi_species, n2_ * n3_, "psi_species");
            if (over) {
                for (std::size_t j = 0; j < n2_; ++j) {
                    hier_.lambda_overall[j] = sample_normal(rng_, h.lambda.mean, h.lambda.sd);
                    hier_.psi_overall[j] = sample_normal(rng_, h.psi.mean, h.psi.sd);
                }
            }
            if (init.lambda_overall) hier_.lambda_overall = *init.lambda_overall;
            if (init.psi_overall) hier_.psi_overall = *init.psi_overall;
            for (std::size_t j = 0; j < n2_; ++j) {
                for (auto k : sets_.species_of(j)) {
                    const std::size_t idx = j * n3_ + k;
                    hier_.lambda_species[idx] = hier_.lambda_overall[j];
                    hier_.psi_species[idx] = hier_.psi_overall[j];
                    if (over) {
                        hier_.lambda_species[idx] += sample_normal(rng_, 0.0, hier_.phi_lambda_star);
                        hier_.psi_species[idx] += sample_normal(rng_, 0.0, hier_.phi_psi_star);
                    }
                    if (init.lambda_species) hier_.lambda_species[idx] = (*init.lambda_species)[idx];
                    if (init.psi_species) hier_.psi_species[idx] = (*init.psi_species)[idx];
                }
            }
        } else {
            const FlatExpertisePrior& f = *hypers_.flat;
            check_size(init.tpr, n2_, "tpr");
            check_size(init.fpr, n2_, "fpr");
            tpr_.assign(n2_, f.tpr.mean());
            fpr_.assign(n2_, f.fpr.mean());
            if (over) {
                for (std::size_t j = 0; j < n2_; ++j) {
                    tpr_[j] = sample_beta(rng_, f.tpr.a, f.tpr.b);
                    fpr_[j] = sample_beta(rng_, f.fpr.a, f.fpr.b);
                }
            }
            if (init.tpr) tpr_ = *init.tpr;
            if (init.fpr) fpr_ = *init.fpr;
            for (std::size_t j = 0; j < n2_; ++j) {
                if (!(tpr_[j] > 0.0 && tpr_[j] < 1.0) || !(fpr_[j] > 0.0 && fpr_[j] < 1.0)) {
                    throw ConfigError("initial tpr/fpr values must lie in (0, 1)");
                }
            }
        }

        if (is_dp(kind_)) {
            const GammaPrior& g = *hypers_.concentration;
            double gamma = g.shape / g.rate;
            if (over) gamma = sample_gamma(rng_, g.shape, g.rate);
            if (init.gamma) gamma = *init.gamma;
            if (!(gamma > 0.0)) throw ConfigError("initial gamma must be positive");
            dp_ = initial_dp_state(y_, n1_, n3_, &table_, gamma, config_.gamma_initial_scale);
            if (init.z) {
                check_size(init.z, n1_, "z");
                // Relabel densely in order of first appearance.
                std::map<std::uint32_t, std::uint32_t> relabel;
                std::vector<std::uint32_t> z(n1_);
                for (std::size_t i = 0; i < n1_; ++i) {
                    auto [it, inserted] =
                        relabel.emplace((*init.z)[i], static_cast<std::uint32_t>(relabel.size()));
                    z[i] = it->second;
                }
                dp_.z = z;
                dp_.stats = MixtureStats::recount(z, y_, n3_, relabel.size(), &table_);
            }
        }
        refresh_emission();
    }

    void refresh_emission() {
        if (is_hier(kind_)) {
            emission_.set_logit(hier_.lambda_species, hier_.psi_species, sets_);
        } else {
            emission_.set_flat(tpr_, fpr_);
        }
    }

    void update_expertise(std::size_t t) {
        if (config_.frozen.expertise) return;
        if (is_hier(kind_)) {
            const HierHypers& h = *hypers_.hier;
            const auto counts = tally_species_confusion(tensor_, y_);
            if (config_.blocked_expertise) {
                update_expertise_blocked(rng_, hier_, sets_, h, counts);
            } else {
                update_overall(rng_, hier_, sets_, h);
                update_species_tpr(rng_, hier_, sets_, counts);
                update_species_fpr(rng_, hier_, sets_, counts);
            }
            if (h.empirical_bayes && t % h.eb_every == 0 && !(h.eb_freeze && t > config_.burn_in)) {
                const double step = std::pow(static_cast<double>(eb_updates_++) + 1.0, -h.eb_decay);
                empirical_bayes_phi(hier_, sets_, h.phi_floor, step);
            }
        } else {
            const FlatExpertisePrior& f = *hypers_.flat;
            // λ and ψ condition on the same y, so one tally serves both.
            const auto counts = tally_confusion(tensor_, y_);
            for (std::size_t j = 0; j < n2_; ++j) {
                tpr_[j] = sample_beta(rng_, f.tpr.a + counts[j].tp, f.tpr.b + counts[j].fn);
            }
            for (std::size_t j = 0; j < n2_; ++j) {
                fpr_[j] = sample_beta(rng_, f.fpr.a + counts[j].fp, f.fpr.b + counts[j].tn);
            }
        }
        refresh_emission();
    }

    // One systematic sweep; returns the number of accepted γ proposals.
    std::size_t sweep(std::size_t t) {
        std::size_t accepted = 0;
        if (is_dp(kind_)) {
            for (std::size_t m = 0; m < config_.assignment_sweeps; ++m) {
                if (!config_.frozen.concentration) {
                    accepted += update_gamma(rng_, dp_, *hypers_.concentration, n1_, t,
                                             t <= config_.freeze_at()) ? 1 : 0;
                }
                if (!config_.frozen.assignments) sample_assignments(rng_, dp_, table_, y_);
            }
            if (!config_.frozen.labels) update_labels_dp(rng_, dp_, y_, tensor_, emission_, table_);
            update_expertise(t);
        } else {
            if (!config_.frozen.occurrence) sample_occurrence(rng_, o_, y_, n1_, hypers_.occurrence);
            update_expertise(t);
            if (!config_.frozen.labels) sample_labels_independent(rng_, y_, o_, tensor_, emission_);
        }
        return accepted;
    }

    void record(std::size_t t) {
        draws_.iterations.push_back(t);
        std::size_t p = 0;
        visit(false, [&](const std::string&, double v, bool) { draws_.values[p++].push_back(v); });
        for (std::size_t c = 0; c < y_.size(); ++c) y_count_[c] += y_[c];
        ++draws_.y_draws;
        if (config_.label_snapshot_every > 0 && t % config_.label_snapshot_every == 0) {
            draws_.snapshot_iterations.push_back(t);
            draws_.label_snapshots.push_back(y_);
        }
        if (config_.record_waic) record_waic();
    }

    void record_waic() {
        WaicAccumulator& acc = draws_.waic;
        acc.begin_draw();
        const auto entries = tensor_.entries();
        if (config_.waic_unit == WaicUnit::Entry) {
            for (std::size_t e = 0; e < entries.size(); ++e) {
                const Annotation& a = entries[e];
                acc.add(e, emission_.log_likelihood(a, y_[a.recording * n3_ + a.species] != 0));
            }
            return;
        }
        for (std::size_t c = 0; c < waic_cells_.size(); ++c) {
            const std::size_t cell = waic_cells_[c];
            const bool y = y_[cell] != 0;
            double ll = 0.0;
            for (const auto& a : tensor_.votes(cell / n3_, cell % n3_)) ll += emission_.log_likelihood(a, y);
            acc.add(c, ll);
        }
    }

    const AnnotationTensor& tensor_;
    const ExpertiseSets& sets_;
    const Hypers& hypers_;
    const McmcConfig& config_;
    ModelKind kind_;
    std::size_t n1_, n2_, n3_;
    std::vector<std::string> tracked_groups_;
    RngStream rng_;
    BetaLogTable table_;  // must precede dp_, whose stats point at it
    EmissionTable emission_;
    std::vector<std::uint8_t> y_;
    std::vector<double> o_;
    std::vector<double> tpr_;
    std::vector<double> fpr_;
    HierExpertiseState hier_;
    std::size_t eb_updates_ = 0;
    DpState dp_;
    std::vector<std::uint32_t> y_count_;
    std::vector<std::size_t> waic_cells_;
    ChainDraws draws_;
};

}  // namespace

DrawStore run(const AnnotationTensor& tensor, const ExpertiseSets& expertise, const Hypers& hypers,
              const McmcConfig& config) {
    config.validate();
    validate_hypers(config.model, hypers);
    if (expertise.n_annotators() != tensor.n_annotators() ||
        expertise.n_species() != tensor.n_species()) {
        throw DataError("expertise sets do not match the tensor dimensions");
    }
    check_expertise_consistency(expertise, tensor);
    if (is_hier(config.model) && expertise.total_memberships() == 0) {
        throw DataError("hierarchical models need at least one expertise membership");
    }

    DrawStore store;
    store.model = config.model;
    store.dims = tensor.dims();
    store.config = config;
    store.hypers = hypers;
    store.data_hash = dataset_hash(tensor, expertise);
    store.chains.resize(config.n_chains);

    auto run_chain = [&](std::size_t c) {
        ChainWorker worker(tensor, expertise, hypers, config, c);
        store.chains[c] = worker.run();
    };
    if (config.parallel_chains && config.n_chains > 1) {
        std::vector<std::exception_ptr> errors(config.n_chains);
        std::vector<std::thread> threads;
        for (std::size_t c = 0; c < config.n_chains; ++c) {
            threads.emplace_back([&, c] {
                try {
                    run_chain(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t c = 0; c < config.n_chains; ++c) run_chain(c);
    }
    return store;
}

std::vector<double> posterior_label_probabilities(const DrawStore& store) {
    std::vector<double> out(store.dims.recordings * store.dims.species, 0.0);
    std::size_t total = 0;
    for (const auto& c : store.chains) {
        if (c.y_mean.size() != out.size()) {
            throw InvariantError("label accumulator size does not match the store dimensions");
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c.y_mean[i] * c.y_draws;
        total += c.y_draws;
    }
    if (total > 0) {
        for (auto& v : out) v /= static_cast<double>(total);
    }
    return out;
}

DiagnosticsReport diagnose(const DrawStore& store) {
    DiagnosticsReport report;
    if (store.chains.empty()) return report;
    const ChainDraws& first = store.chains.front();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.min_ess = std::numeric_limits<double>::infinity();
    report.max_rhat = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < first.names.size(); ++p) {
        if (!first.tracked[p]) continue;
        std::vector<std::vector<double>> series;
        for (const auto& c : store.chains) series.push_back(c.values[p]);
        ParameterDiagnostics d{first.names[p], 0.0, nan};
        try {
            for (const auto& s : series) d.ess += ess(s);
        } catch (const std::invalid_argument&) {
            d.ess = nan;
        }
        try {
            d.rhat = gelman_rubin(series);
        } catch (const std::exception&) {
            d.rhat = nan;
        }
        if (std::isnan(d.ess) || d.ess < report.min_ess) {
            if (!std::isnan(report.min_ess)) {
                report.min_ess = d.ess;
                report.min_ess_parameter = d.name;
            }
        }
        if (std::isnan(d.rhat) || d.rhat > report.max_rhat) {
            if (!std::isnan(report.max_rhat)) {
                report.max_rhat = d.rhat;
                report.max_rhat_parameter = d.name;
            }
        }
        report.parameters.push_back(std::move(d));
    }
    if (report.parameters.empty()) {
        report.min_ess = nan;
        report.max_rhat = nan;
    }
    return report;
}

WaicResult pooled_waic(const DrawStore& store) {
    WaicAccumulator acc;
    bool any = false;
    for (const auto& c : store.chains) {
        if (c.waic.n_draws() == 0) continue;
        if (!any) {
            acc = c.waic;
            any = true;
        } else {
            acc.merge(c.waic);
        }
    }
    if (!any) throw std::invalid_argument("no WAIC terms were recorded");
    return acc.result();
}

std::vector<std::vector<double>> annotator_rate_draws(const DrawStore& store, bool tpr) {
    const bool hier = is_hier(store.model);
    std::vector<std::vector<double>> out(store.dims.annotators);
    for (std::size_t j = 0; j < store.dims.annotators; ++j) {
        out[j] = store.pooled((tpr ? "lambda/" : "psi/") + std::to_string(j));
        if (hier) {
            for (auto& v : out[j]) v = logistic(v);
        }
    }
    return out;
}

void write_diagnostics(std::ostream& out, const DiagnosticsReport& report) {
    out << "parameter,ess,rhat\n";
    for (const auto& p : report.parameters) {
        out << p.name << ',' << format_double(p.ess) << ',' << format_double(p.rhat) << '\n';
    }
}

std::string config_json(const McmcConfig& config, const Hypers& hypers, int indent) {
    nlohmann::ordered_json j;
    j["mcmc"] = mcmc_to_json(config);
    j["hypers"] = hypers_to_json(hypers);
    return j.dump(indent);
}

namespace {

std::filesystem::path chain_file(const std::filesystem::path& dir, std::size_t c,
                                 std::string_view suffix) {
    return dir / ("chain_" + std::to_string(c) + "_" + std::string(suffix));
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    return in;
}

}  // namespace

void write_draw_store(const std::filesystem::path& dir, const DrawStore& store) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json m;
    m["model"] = std::string(model_name(store.model));
    m["recordings"] = store.dims.recordings;
    m["annotators"] = store.dims.annotators;
    m["species"] = store.dims.species;
    m["data_hash"] = store.data_hash;
    m["mcmc"] = mcmc_to_json(store.config);
    m["hypers"] = hypers_to_json(store.hypers);
    nlohmann::ordered_json chains = nlohmann::ordered_json::array();
    for (const auto& c : store.chains) {
        nlohmann::ordered_json cj;
        cj["stream_id"] = c.stream_id;
        cj["draws"] = c.iterations.size();
        cj["y_draws"] = c.y_draws;
        cj["gamma_acceptance"] = c.gamma_acceptance;
        cj["parameters"] = c.names;
        cj["tracked"] = c.tracked;
        chains.push_back(cj);
    }
    m["chains"] = chains;
    {
        auto out = open_out(dir / "manifest.json");
        out << m.dump(1) << '\n';
    }

    for (std::size_t c = 0; c < store.chains.size(); ++c) {
        const ChainDraws& ch = store.chains[c];
        {
            auto out = open_out(chain_file(dir, c, "draws.jsonl"));
            std::string line;
            for (std::size_t d = 0; d < ch.iterations.size(); ++d) {
                const std::string it = std::to_string(ch.iterations[d]);
                for (std::size_t p = 0; p < ch.names.size(); ++p) {
                    line.clear();
                    line += "{\"iteration\":";
                    line += it;
                    line += ",\"param\":\"";
                    line += ch.names[p];
                    line += "\",\"value\":";
                    const double v = ch.values[p][d];
                    line += std::isfinite(v) ? format_double(v) : "null";
                    line += "}\n";
                    out << line;
                }
            }
        }
        {
            auto out = open_out(chain_file(dir, c, "y_mean.csv"));
            out << "recording,species,mean\n";
            const std::size_t n3 = store.dims.species;
            for (std::size_t i = 0; i < store.dims.recordings; ++i) {
                for (std::size_t k = 0; k < n3; ++k) {
                    out << i << ',' << k << ',' << format_double(ch.y_mean[i * n3 + k]) << '\n';
                }
            }
        }
        if (ch.waic.n_observations() > 0) {
            auto out = open_out(chain_file(dir, c, "waic.csv"));
            ch.waic.write(out);
        }
        if (!ch.label_snapshots.empty()) {
            auto out = open_out(chain_file(dir, c, "labels.csv"));
            out << "iteration,labels\n";
            for (std::size_t s = 0; s < ch.label_snapshots.size(); ++s) {
                out << ch.snapshot_iterations[s] << ',';
                for (auto v : ch.label_snapshots[s]) out << (v ? '1' : '0');
                out << '\n';
            }
        }
    }
}

DrawStore read_draw_store(const std::filesystem::path& dir) {
    DrawStore store;
    nlohmann::json m;
    try {
        auto in = open_in(dir / "manifest.json");
        in >> m;
        store.model = parse_model(m.at("model").get<std::string>());
        store.dims = Dims{m.at("recordings").get<std::size_t>(), m.at("annotators").get<std::size_t>(),
                          m.at("species").get<std::size_t>()};
        store.data_hash = m.at("data_hash").get<std::string>();
        store.config.model = store.model;
        mcmc_from_json(m.at("mcmc"), store.config);
        HyperDoc doc = m.at("hypers");
        store.hypers = hypers_from_doc(store.model, doc);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + (dir / "manifest.json").string() + ": " + e.what());
    }

    const auto& chains = m.at("chains");
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& cj = chains[c];
        ChainDraws ch;
        std::size_t n_draws = 0;
        try {
            ch.stream_id = cj.at("stream_id").get<std::uint64_t>();
            n_draws = cj.at("draws").get<std::size_t>();
            ch.y_draws = cj.at("y_draws").get<std::size_t>();
            ch.gamma_acceptance = cj.at("gamma_acceptance").get<double>();
            ch.names = cj.at("parameters").get<std::vector<std::string>>();
            ch.tracked = cj.at("tracked").get<std::vector<std::uint8_t>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest chain " + std::to_string(c) + ": " + e.what());
        }
        if (ch.tracked.size() != ch.names.size()) throw DataError("manifest: tracked flags mismatch");
        std::map<std::string, std::size_t> index;
        for (std::size_t p = 0; p < ch.names.size(); ++p) index[ch.names[p]] = p;
        ch.values.assign(ch.names.size(), {});

        const auto draws_path = chain_file(dir, c, "draws.jsonl");
        auto in = open_in(draws_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                const auto rec = nlohmann::json::parse(line);
                const auto it = rec.at("iteration").get<std::size_t>();
                const auto& name = rec.at("param").get_ref<const std::string&>();
                const auto found = index.find(name);
                if (found == index.end()) throw DataError("unknown parameter '" + name + "'");
                if (ch.iterations.empty() || ch.iterations.back() != it) {
                    if (!ch.iterations.empty() && it < ch.iterations.back()) {
                        throw DataError("iterations out of order");
                    }
                    ch.iterations.push_back(it);
                }
                const auto& v = rec.at("value");
                auto& dst = ch.values[found->second];
                if (dst.size() + 1 != ch.iterations.size()) throw DataError("missing or repeated draw");
                dst.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
            } catch (const nlohmann::json::exception& e) {
                throw DataError(draws_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            } catch (const DataError& e) {
                throw DataError(draws_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (ch.iterations.size() != n_draws) throw DataError(draws_path.string() + ": draw count mismatch");
        for (const auto& v : ch.values) {
            if (v.size() != n_draws) throw DataError(draws_path.string() + ": truncated draws");
        }

        {
            const auto path = chain_file(dir, c, "y_mean.csv");
            auto yin = open_in(path);
            csv::Reader reader(yin, path.string());
            reader.expect_header({"recording", "species", "mean"});
            ch.y_mean.assign(store.dims.recordings * store.dims.species, 0.0);
            std::vector<std::string> f;
            std::size_t rows = 0;
            while (reader.next(f)) {
                if (f.size() != 3) reader.fail("expected 3 fields");
                const auto i = reader.parse_index(f[0], "recording");
                const auto k = reader.parse_index(f[1], "species");
                if (i >= store.dims.recordings || k >= store.dims.species) reader.fail("index out of range");
                ch.y_mean[i * store.dims.species + k] = reader.parse_double(f[2], "mean");
                ++rows;
            }
            if (rows != ch.y_mean.size()) reader.fail("expected one row per cell");
        }
        if (const auto path = chain_file(dir, c, "waic.csv"); std::filesystem::exists(path)) {
            auto win = open_in(path);
            ch.waic = WaicAccumulator::read(win);
        }
        if (const auto path = chain_file(dir, c, "labels.csv"); std::filesystem::exists(path)) {
            auto lin = open_in(path);
            csv::Reader reader(lin, path.string());
            reader.expect_header({"iteration", "labels"});
            std::vector<std::string> f;
            while (reader.next(f)) {
                if (f.size() != 2 || f[1].size() != store.dims.recordings * store.dims.species) {
                    reader.fail("malformed label snapshot");
                }
                ch.snapshot_iterations.push_back(reader.parse_index(f[0], "iteration"));
                std::vector<std::uint8_t> y(f[1].size());
                for (std::size_t x = 0; x < y.size(); ++x) {
                    if (f[1][x] != '0' && f[1][x] != '1') reader.fail("labels must be 0 or 1");
                    y[x] = f[1][x] == '1' ? 1 : 0;
                }
                ch.label_snapshots.push_back(std::move(y));
            }
        }
        store.chains.push_back(std::move(ch));
    }
    return store;
}

}  // namespace crowdlabel
