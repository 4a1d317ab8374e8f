#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdlabel/config.hpp"

namespace crowdlabel::cli {

// Per-prior overrides; only flags actually given enter the flag layer.
struct HyperFlags {
    std::optional<double> a_o, b_o, a_lambda, b_lambda, a_psi, b_psi;
    std::optional<double> o_mean, o_strength, lambda_mean, lambda_strength, psi_mean, psi_strength;
    std::optional<double> mu_lambda, phi_lambda, mu_psi, phi_psi, u1, u2;
    std::optional<double> phi_floor, phi_lambda_star_init, phi_psi_star_init;
    std::optional<std::size_t> eb_every;
    std::optional<double> eb_decay;
    std::optional<std::string> psi_location;
    bool no_empirical_bayes = false;
    bool eb_no_freeze = false;

    void add_to(CLI::App& app);
    HyperDoc layer() const;
};

struct McmcFlags {
    std::optional<std::size_t> chains, iters, burn, thin, freeze_at, snapshot_every;
    std::optional<std::size_t> assignment_sweeps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> init, waic_unit;
    std::vector<std::string> track;
    bool no_waic = false;
    bool sequential = false;
    bool unblocked = false;

    void add_to(CLI::App& app);
    void apply(McmcConfig& config) const;
};

// Top-level config file: model, profile, data, hypers, mcmc, scenario,
// sweep and out. Relative paths resolve against the file's directory.
struct ConfigFile {
    std::filesystem::path base;
    nlohmann::json doc = nlohmann::json::object();

    static ConfigFile load(const std::optional<std::string>& path);
    const nlohmann::json* section(const char* key) const;
    std::optional<std::string> string(const char* key) const;
    std::optional<std::filesystem::path> data_path(const char* key) const;
    // data.dims as [recordings, annotators, species].
    std::optional<Dims> data_dims() const;
};

// Hyperparameters and MCMC settings after layering profile < file < flags.
struct FitSettings {
    ModelKind model = ModelKind::Base;
    std::string profile;
    HyperDoc hyper_doc;
    Hypers hypers;
    McmcConfig mcmc;
};

FitSettings resolve_fit(const std::optional<std::string>& model_flag,
                        const std::optional<std::string>& profile_flag, const ConfigFile& file,
                        const HyperFlags& hypers, const McmcFlags& mcmc);

// --out, else the config file's "out", else $CROWDLABEL_OUTPUT_ROOT/<command>
// (./crowdlabel_out/<command> when unset).
std::filesystem::path output_dir(const std::optional<std::string>& flag, const ConfigFile& file,
                                 const std::string& command);

// First non-empty of the flag and the config file's data.<key>.
// Parses "R,A,S" into positive dimensions; throws ConfigError.
Dims parse_dims(const std::string& text);

std::optional<std::filesystem::path> input_path(const std::optional<std::string>& flag,
                                                const ConfigFile& file, const char* key);

void write_text(const std::filesystem::path& path, const std::string& text);

struct SweepOptions {
    std::optional<std::string> model_flag;  // unused; models come from the grid
    std::optional<std::string> profile;
    std::vector<int> scenarios;
    std::vector<double> densities;
    std::vector<std::string> models;
    std::optional<std::size_t> replicates;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    std::optional<std::string> config;
    HyperFlags hypers;
    McmcFlags mcmc;
};

void add_sweep_command(CLI::App& app, SweepOptions& options);
int run_sweep(const SweepOptions& options);

}  // namespace crowdlabel::cli
