#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/format.hpp"
#include "crowdlabel/pipeline.hpp"

namespace crowdlabel::cli {
namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

std::ifstream open_input(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read " + p.string());
    return in;
}

std::filesystem::path require_input(const std::optional<std::string>& flag, const ConfigFile& file,
                                    const char* key, const char* flag_name) {
    const auto p = input_path(flag, file, key);
    if (!p) throw ConfigError(std::string("missing input: pass ") + flag_name + " or set data." + key);
    return *p;
}

AnnotationTensor read_tensor(const std::filesystem::path& p, std::optional<Dims> dims = std::nullopt) {
    auto in = open_input(p);
    return load_annotations(in, dims);
}

ExpertiseSets read_expertise(const std::optional<std::filesystem::path>& p,
                             const AnnotationTensor& tensor) {
    if (!p) return load_expertise(nullptr, tensor);
    auto in = open_input(*p);
    return load_expertise(&in, tensor);
}

template <class F>
std::string to_text(F&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

struct SimulateOptions {
    std::optional<std::string> config, out;
    std::optional<int> scenario;
    std::optional<double> density;
    std::optional<std::uint64_t> seed, stream;
    std::optional<std::size_t> recordings, annotators, species;
};

int cmd_simulate(const SimulateOptions& o) {
    const auto file = ConfigFile::load(o.config);
    ScenarioConfig sc;
    if (const auto* s = file.section("scenario")) scenario_from_json(*s, sc);
    if (o.scenario) sc.scenario = *o.scenario;
    if (o.density) sc.density = *o.density;
    if (o.seed) sc.seed = *o.seed;
    if (o.stream) sc.stream = *o.stream;
    if (o.recordings) sc.n_recordings = *o.recordings;
    if (o.annotators) sc.n_annotators = *o.annotators;
    if (o.species) sc.n_species = *o.species;
    const auto data = simulate(sc);
    const auto dir = output_dir(o.out, file, "simulate");
    write_text(dir / "annotations.csv", to_text([&](auto& out) { write_annotations(out, data.tensor); }));
    write_text(dir / "expertise.csv", to_text([&](auto& out) { write_expertise(out, data.expertise); }));
    write_text(dir / "gold.csv", to_text([&](auto& out) { write_gold_standard(out, data.gold); }));
    write_text(dir / "truth.json", to_text([&](auto& out) { write_truth(out, sc, data.truth); }));
    write_text(dir / "scenario.json", scenario_to_json(sc).dump(1) + "\n");
    std::cout << "wrote " << data.tensor.size() << " annotations to " << dir.string() << '\n'
              << "dims=" << sc.n_recordings << ',' << sc.n_annotators << ',' << sc.n_species << '\n';
    return 0;
}

struct FitOptions {
    std::optional<std::string> config, out, model, profile, data, expertise, dims;
    HyperFlags hypers;
    McmcFlags mcmc;
};

std::string diagnostics_summary(const DiagnosticsReport& d) {
    const bool ok = d.max_rhat < 1.1 && d.min_ess >= 100.0;
    std::ostringstream out;
    out << "min_ess=" << format_double(d.min_ess) << '\n'
        << "min_ess_parameter=" << d.min_ess_parameter << '\n'
        << "max_rhat=" << format_double(d.max_rhat) << '\n'
        << "max_rhat_parameter=" << d.max_rhat_parameter << '\n'
        << "converged=" << (ok ? "true" : "false") << '\n';
    return out.str();
}

void write_diagnostics_files(const std::filesystem::path& dir, const DiagnosticsReport& d) {
    write_text(dir / "diagnostics.csv", to_text([&](auto& out) { write_diagnostics(out, d); }));
    write_text(dir / "diagnostics.txt", diagnostics_summary(d));
}

int cmd_fit(const FitOptions& o) {
    const auto file = ConfigFile::load(o.config);
    const auto settings = resolve_fit(o.model, o.profile, file, o.hypers, o.mcmc);
    const auto dims = o.dims ? std::optional<Dims>(parse_dims(*o.dims)) : file.data_dims();
    const auto tensor = read_tensor(require_input(o.data, file, "annotations", "--data"), dims);
    const auto sets = read_expertise(input_path(o.expertise, file, "expertise"), tensor);
    const auto dir = output_dir(o.out, file, "fit");

    const auto store = run(tensor, sets, settings.hypers, settings.mcmc);
    write_draw_store(dir, store);
    const auto probs = posterior_label_probabilities(store);
    std::ostringstream post;
    post << "recording,species,probability\n";
    for (std::size_t i = 0; i < tensor.n_recordings(); ++i) {
        for (std::size_t k = 0; k < tensor.n_species(); ++k) {
            post << i << ',' << k << ',' << format_double(probs[i * tensor.n_species() + k]) << '\n';
        }
    }
    write_text(dir / "posterior.csv", post.str());
    const auto diag = diagnose(store);
    write_diagnostics_files(dir, diag);
    std::cout << "model=" << model_name(settings.model) << " chains=" << store.chains.size()
              << " retained=" << store.n_retained() << '\n'
              << diagnostics_summary(diag);
    if (!(diag.max_rhat < 1.1 && diag.min_ess >= 100.0)) {
        std::cerr << "warning: convergence rule (R-hat < 1.1, ESS >= 100) not met\n";
    }
    return 0;
}

struct DiagnoseOptions {
    std::string run_dir;
    std::optional<std::string> out;
};

int cmd_diagnose(const DiagnoseOptions& o) {
    const auto store = read_draw_store(o.run_dir);
    const auto diag = diagnose(store);
    const std::filesystem::path dir = o.out ? std::filesystem::path(*o.out) : std::filesystem::path(o.run_dir);
    write_diagnostics_files(dir, diag);
    std::cout << diagnostics_summary(diag);
    return 0;
}

struct EvaluateOptions {
    std::string run_dir;
    std::optional<std::string> config, out, data, expertise, gold, truth;
};

int cmd_evaluate(const EvaluateOptions& o) {
    const auto file = ConfigFile::load(o.config);
    const auto store = read_draw_store(o.run_dir);
    const auto tensor = read_tensor(require_input(o.data, file, "annotations", "--data"), store.dims);
    const auto sets = read_expertise(input_path(o.expertise, file, "expertise"), tensor);
    if (dataset_hash(tensor, sets) != store.data_hash) {
        throw DataError("annotations and expertise sets differ from the data the run was fitted on");
    }
    const auto gold_path = input_path(o.gold, file, "gold");
    if (!gold_path) throw DataError("missing gold standard: pass --gold or set data.gold");
    auto gin = open_input(*gold_path);
    const auto gold = load_gold_standard(gin, tensor.dims());
    std::optional<SimTruth> truth;
    if (const auto tp = input_path(o.truth, file, "truth")) {
        auto tin = open_input(*tp);
        truth = read_truth(tin);
    }
    const auto report = evaluate_store(store, tensor, gold, truth ? &*truth : nullptr);
    const std::filesystem::path dir = o.out ? std::filesystem::path(*o.out) : std::filesystem::path(o.run_dir);
    const auto text = to_text([&](auto& out) { write_report(out, report); });
    write_text(dir / "report.txt", text);
    write_text(dir / "roc.csv", to_text([&](auto& out) { write_roc(out, report.model_roc); }));
    write_text(dir / "mv_roc.csv", to_text([&](auto& out) { write_roc(out, report.majority_roc); }));
    std::cout << text;
    return 0;
}

struct ImportOptions {
    std::string input;
    std::optional<std::string> out, config;
};

int cmd_import(const ImportOptions& o) {
    const auto file = ConfigFile::load(o.config);
    auto in = open_input(o.input);
    IdMap ids;
    const auto tensor = import_annotations(in, ids);
    const auto dir = output_dir(o.out, file, "import");
    write_text(dir / "annotations.csv", to_text([&](auto& out) { write_annotations(out, tensor); }));
    write_text(dir / "ids.csv", to_text([&](auto& out) { ids.write(out); }));
    const auto s = summarize(tensor);
    std::cout << "recordings=" << s.dims.recordings << " annotators=" << s.dims.annotators
              << " species=" << s.dims.species << " annotations=" << tensor.size()
              << " missing_rate=" << format_double(s.missing_rate)
              << " recordings_per_annotator=" << format_double(s.mean_recordings_per_annotator) << '\n';
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Bayesian aggregation of crowdsourced multi-label annotations"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a simulated scenario");
    simulate_cmd->add_option("--config", sim.config, "JSON config file");
    simulate_cmd->add_option("--scenario", sim.scenario, "1-4")->check(CLI::Range(1, 4));
    simulate_cmd->add_option("--density", sim.density, "Expected annotators per recording");
    simulate_cmd->add_option("--seed", sim.seed, "Seed");
    simulate_cmd->add_option("--stream", sim.stream, "Stream id");
    simulate_cmd->add_option("--recordings", sim.recordings, "Number of recordings");
    simulate_cmd->add_option("--annotators", sim.annotators, "Number of annotators");
    simulate_cmd->add_option("--species", sim.species, "Number of species");
    simulate_cmd->add_option("--out", sim.out, "Output directory");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Run MCMC for one model");
    fit_cmd->add_option("--config", fit.config, "JSON config file");
    fit_cmd->add_option("--model", fit.model, "base, base-hier, dp-bmm or dp-bmm-hier");
    fit_cmd->add_option("--profile", fit.profile, "Default priors: simulation, field or none");
    fit_cmd->add_option("--data", fit.data, "Annotation file");
    fit_cmd->add_option("--expertise", fit.expertise, "Expertise-set file");
    fit_cmd->add_option("--dims", fit.dims, "R,A,S; default is the largest index in the data");
    fit_cmd->add_option("--out", fit.out, "Output directory");
    fit.hypers.add_to(*fit_cmd);
    fit.mcmc.add_to(*fit_cmd);

    DiagnoseOptions diag;
    auto* diagnose_cmd = app.add_subcommand("diagnose", "Recompute ESS and split R-hat for a run");
    diagnose_cmd->add_option("--run", diag.run_dir, "Run directory written by fit")->required();
    diagnose_cmd->add_option("--out", diag.out, "Output directory (default: the run directory)");

    EvaluateOptions eval;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a run against a gold standard");
    evaluate_cmd->add_option("--run", eval.run_dir, "Run directory written by fit")->required();
    evaluate_cmd->add_option("--config", eval.config, "JSON config file");
    evaluate_cmd->add_option("--data", eval.data, "Annotation file the run was fitted on");
    evaluate_cmd->add_option("--expertise", eval.expertise, "Expertise-set file");
    evaluate_cmd->add_option("--gold", eval.gold, "Gold-standard file");
    evaluate_cmd->add_option("--truth", eval.truth, "Simulation truth file (adds coverage and MSE)");
    evaluate_cmd->add_option("--out", eval.out, "Output directory (default: the run directory)");

    ImportOptions imp;
    auto* import_cmd =
        app.add_subcommand("import", "Convert an export with string IDs to dense-index files");
    import_cmd->add_option("--in", imp.input, "recording,annotator,species,label file")->required();
    import_cmd->add_option("--config", imp.config, "JSON config file");
    import_cmd->add_option("--out", imp.out, "Output directory");

    SweepOptions sweep;
    add_sweep_command(app, sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate_cmd) return cmd_simulate(sim);
        if (*fit_cmd) return cmd_fit(fit);
        if (*diagnose_cmd) return cmd_diagnose(diag);
        if (*evaluate_cmd) return cmd_evaluate(eval);
        if (*import_cmd) return cmd_import(imp);
        return run_sweep(sweep);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInvariant;
    }
}

}  // namespace
}  // namespace crowdlabel::cli

int main(int argc, char** argv) { return crowdlabel::cli::dispatch(argc, argv); }
