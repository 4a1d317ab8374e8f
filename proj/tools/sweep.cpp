#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "cli.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/format.hpp"
#include "crowdlabel/pipeline.hpp"

namespace crowdlabel::cli {

void add_sweep_command(CLI::App& app, SweepOptions& o) {
    auto* cmd = app.add_subcommand("sweep", "Simulate and fit a scenario x density x model grid");
    cmd->add_option("--config", o.config, "JSON config file (sections: sweep, scenario, hypers, mcmc)");
    cmd->add_option("--profile", o.profile, "Default priors: simulation, field or none");
    cmd->add_option("--scenarios", o.scenarios, "Scenario ids")->check(CLI::Range(1, 4));
    cmd->add_option("--densities", o.densities, "Expected annotators per recording");
    cmd->add_option("--models", o.models, "Models to fit on every replicate");
    cmd->add_option("--replicates", o.replicates, "Replicates per grid cell (default 20)");
    cmd->add_option("--jobs", o.jobs, "Concurrent replicate workers (default 1)");
    cmd->add_option("--out", o.out, "Output directory");
    o.hypers.add_to(*cmd);
    o.mcmc.add_to(*cmd);
}

namespace {

struct RunKey {
    int scenario = 0;
    double density = 0.0;
    std::size_t replicate = 0;
    std::string model;

    auto tie() const { return std::tie(scenario, density, replicate, model); }
    bool operator<(const RunKey& o) const { return tie() < o.tie(); }
};

struct RunResult {
    RunKey key;
    double auc = 0.0, mv_auc = 0.0, brier = 0.0, mv_brier = 0.0;
    double tpr_coverage = 0.0, tpr_mse = 0.0, fpr_coverage = 0.0, fpr_mse = 0.0;
    double min_ess = 0.0, max_rhat = 0.0;
};

nlohmann::ordered_json to_json(const RunResult& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.key.scenario;
    j["density"] = r.key.density;
    j["replicate"] = r.key.replicate;
    j["model"] = r.key.model;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
    j["auc"] = num(r.auc);
    j["mv_auc"] = num(r.mv_auc);
    j["brier"] = num(r.brier);
    j["mv_brier"] = num(r.mv_brier);
    j["tpr_coverage"] = num(r.tpr_coverage);
    j["tpr_mse"] = num(r.tpr_mse);
    j["fpr_coverage"] = num(r.fpr_coverage);
    j["fpr_mse"] = num(r.fpr_mse);
    j["min_ess"] = num(r.min_ess);
    j["max_rhat"] = num(r.max_rhat);
    return j;
}

RunResult from_json(const nlohmann::json& j) {
    auto num = [&](const char* k) {
        const auto& v = j.at(k);
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    RunResult r;
    r.key = RunKey{j.at("scenario").get<int>(), j.at("density").get<double>(),
                   j.at("replicate").get<std::size_t>(), j.at("model").get<std::string>()};
    r.auc = num("auc");
    r.mv_auc = num("mv_auc");
    r.brier = num("brier");
    r.mv_brier = num("mv_brier");
    r.tpr_coverage = num("tpr_coverage");
    r.tpr_mse = num("tpr_mse");
    r.fpr_coverage = num("fpr_coverage");
    r.fpr_mse = num("fpr_mse");
    r.min_ess = num("min_ess");
    r.max_rhat = num("max_rhat");
    return r;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

template <class T>
std::vector<T> section_list(const nlohmann::json* sweep, const char* key, std::vector<T> flag,
                            std::vector<T> fallback) {
    if (!flag.empty()) return flag;
    if (sweep && sweep->contains(key)) {
        try {
            return sweep->at(key).get<std::vector<T>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("sweep.") + key + " must be a list");
        }
    }
    return fallback;
}

// Drops a final line cut short by an interrupted write; any other unreadable
// line means the state is corrupt.
std::vector<RunResult> load_results(const std::filesystem::path& path) {
    std::vector<RunResult> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::size_t start = 0;
    std::size_t line_no = 0;
    std::size_t kept_bytes = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        ++line_no;
        if (end == std::string::npos) break;  // unterminated tail
        const std::string line = text.substr(start, end - start);
        try {
            out.push_back(from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": corrupt sweep record (" +
                            e.what() + ")");
        }
        start = end + 1;
        kept_bytes = start;
    }
    if (kept_bytes != text.size()) std::filesystem::resize_file(path, kept_bytes);
    return out;
}

void write_tables(const std::filesystem::path& dir, const std::vector<int>& scenarios,
                  const std::vector<double>& densities, const std::vector<std::string>& models,
                  const std::vector<RunResult>& results) {
    struct Metric {
        const char* name;
        bool with_mv;
        double RunResult::*field;
        double RunResult::*mv_field;
        int reduce;  // 0 mean, 1 min, 2 max
    };
    const Metric metrics[] = {
        {"auc", true, &RunResult::auc, &RunResult::mv_auc, 0},
        {"brier", true, &RunResult::brier, &RunResult::mv_brier, 0},
        {"tpr_coverage", false, &RunResult::tpr_coverage, nullptr, 0},
        {"tpr_mse", false, &RunResult::tpr_mse, nullptr, 0},
        {"fpr_coverage", false, &RunResult::fpr_coverage, nullptr, 0},
        {"fpr_mse", false, &RunResult::fpr_mse, nullptr, 0},
        {"min_ess", false, &RunResult::min_ess, nullptr, 1},
        {"max_rhat", false, &RunResult::max_rhat, nullptr, 2},
    };
    for (const auto& m : metrics) {
        std::ostringstream out;
        out << "scenario,density,replicates";
        if (m.with_mv) out << ",mv";
        for (const auto& model : models) out << ',' << model;
        out << '\n';
        for (int s : scenarios) {
            for (double d : densities) {
                auto reduce = [&](const std::string& model, double RunResult::*field) {
                    std::vector<double> v;
                    for (const auto& r : results) {
                        if (r.key.scenario == s && r.key.density == d && r.key.model == model) {
                            v.push_back(r.*field);
                        }
                    }
                    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
                    double acc = v.front();
                    if (m.reduce == 0) {
                        acc = 0.0;
                        for (double x : v) acc += x;
                        acc /= static_cast<double>(v.size());
                    } else {
                        for (double x : v) acc = m.reduce == 1 ? std::min(acc, x) : std::max(acc, x);
                    }
                    return acc;
                };
                std::set<std::size_t> reps;
                for (const auto& r : results) {
                    if (r.key.scenario == s && r.key.density == d) reps.insert(r.key.replicate);
                }
                out << s << ',' << format_double(d) << ',' << reps.size();
                if (m.with_mv) out << ',' << format_double(reduce(models.front(), m.mv_field));
                for (const auto& model : models) out << ',' << format_double(reduce(model, m.field));
                out << '\n';
            }
        }
        write_text(dir / (std::string(m.name) + ".csv"), out.str());
    }
}

}  // namespace

int run_sweep(const SweepOptions& o) {
    const auto file = ConfigFile::load(o.config);
    const nlohmann::json* sweep = file.section("sweep");
    if (sweep) {
        for (const auto& [k, v] : sweep->items()) {
            if (k != "scenarios" && k != "densities" && k != "models" && k != "replicates") {
                throw ConfigError("config section 'sweep': unknown key '" + k + "'");
            }
        }
    }
    const auto scenarios = section_list<int>(sweep, "scenarios", o.scenarios, {1, 2, 3, 4});
    const auto densities =
        section_list<double>(sweep, "densities", o.densities, {0.8, 1.6, 2.4, 3.2, 4.0});
    const auto models =
        section_list<std::string>(sweep, "models", o.models, {"base", "base-hier", "dp-bmm", "dp-bmm-hier"});
    std::size_t replicates = 20;
    if (sweep && sweep->contains("replicates")) replicates = sweep->at("replicates").get<std::size_t>();
    if (o.replicates) replicates = *o.replicates;
    const std::size_t jobs = std::max<std::size_t>(1, o.jobs.value_or(1));
    if (models.empty() || scenarios.empty() || densities.empty()) throw ConfigError("empty sweep grid");

    ScenarioConfig base_scenario;
    if (const auto* s = file.section("scenario")) scenario_from_json(*s, base_scenario);

    std::map<std::string, FitSettings> settings;
    nlohmann::ordered_json echo;
    echo["scenarios"] = scenarios;
    echo["densities"] = densities;
    echo["scenario"] = scenario_to_json(base_scenario);
    for (const auto& name : models) {
        auto fs = resolve_fit(name, o.profile, file, o.hypers, o.mcmc);
        fs.mcmc.record_waic = false;
        echo["models"][name]["hypers"] = hypers_to_json(fs.hypers);
        echo["models"][name]["mcmc"] = mcmc_to_json(fs.mcmc);
        settings.emplace(name, std::move(fs));
    }
    Fnv1a h;
    h.add(echo.dump());
    const std::string hash = h.hex();

    const auto dir = output_dir(o.out, file, "sweep");
    std::filesystem::create_directories(dir);
    const auto manifest_path = dir / "sweep.json";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        nlohmann::json prior;
        try {
            in >> prior;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(manifest_path.string() + ": corrupt manifest (" + e.what() + ")");
        }
        if (prior.value("config_hash", std::string()) != hash) {
            throw ConfigError(dir.string() + " holds a sweep with a different configuration (hash " +
                              prior.value("config_hash", std::string("?")) + ", now " + hash +
                              "); use a fresh --out");
        }
    }
    nlohmann::ordered_json manifest;
    manifest["config_hash"] = hash;
    manifest["config"] = echo;
    write_text(manifest_path, manifest.dump(1) + "\n");

    const auto results_path = dir / "runs.jsonl";
    auto results = load_results(results_path);
    std::set<RunKey> done;
    for (const auto& r : results) done.insert(r.key);

    struct Task {
        std::size_t cell;
        int scenario;
        double density;
        std::size_t replicate;
    };
    std::vector<Task> tasks;
    std::size_t cell = 0;
    for (int s : scenarios) {
        for (double d : densities) {
            for (std::size_t r = 0; r < replicates; ++r) {
                bool pending = false;
                for (const auto& m : models) pending |= !done.count(RunKey{s, d, r, m});
                if (pending) tasks.push_back(Task{cell, s, d, r});
            }
            ++cell;
        }
    }
    std::cout << "sweep: " << tasks.size() << " replicate(s) to run, " << results.size()
              << " run(s) already recorded\n";

    std::mutex mutex;
    std::ofstream log(results_path, std::ios::app | std::ios::binary);
    if (!log) throw DataError("cannot write " + results_path.string());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            {
                std::lock_guard lock(mutex);
                if (failure) return;
            }
            const Task& task = tasks[t];
            try {
                ScenarioConfig sc = base_scenario;
                sc.scenario = task.scenario;
                sc.density = task.density;
                sc.stream = task.cell * 100000 + task.replicate;
                const auto data = simulate(sc);
                for (const auto& name : models) {
                    RunKey key{task.scenario, task.density, task.replicate, name};
                    if (done.count(key)) continue;
                    const auto& fs = settings.at(name);
                    McmcConfig mc = fs.mcmc;
                    mc.seed = mix_seed(mc.seed, sc.stream);
                    if (jobs > 1) mc.parallel_chains = false;
                    const auto store = run(data.tensor, data.expertise, fs.hypers, mc);
                    const auto report = evaluate_store(store, data.tensor, data.gold, &data.truth);
                    const auto diag = diagnose(store);
                    RunResult r{key,
                                report.model_roc.auc,
                                report.majority_roc.auc,
                                report.brier,
                                report.majority_brier,
                                report.tpr.coverage,
                                report.tpr.mse,
                                report.fpr.coverage,
                                report.fpr.mse,
                                diag.min_ess,
                                diag.max_rhat};
                    std::lock_guard lock(mutex);
                    log << to_json(r).dump() << '\n';
                    log.flush();
                    results.push_back(r);
                    std::cout << "scenario " << key.scenario << " density " << format_double(key.density)
                              << " replicate " << key.replicate << ' ' << name
                              << ": auc=" << format_double(r.auc) << " mv_auc=" << format_double(r.mv_auc)
                              << std::endl;
                }
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    std::sort(results.begin(), results.end(),
              [](const RunResult& a, const RunResult& b) { return a.key < b.key; });
    write_tables(dir, scenarios, densities, models, results);
    std::cout << "tables written to " << dir.string() << '\n';
    return 0;
}

}  // namespace crowdlabel::cli
