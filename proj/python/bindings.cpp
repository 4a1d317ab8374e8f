#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <optional>
#include <sstream>

#include "crowdlabel/config.hpp"
#include "crowdlabel/errors.hpp"
#include "crowdlabel/pipeline.hpp"

namespace py = pybind11;
using namespace crowdlabel;

namespace {

struct Dataset {
    AnnotationTensor tensor;
    ExpertiseSets expertise;
    std::optional<GoldStandard> gold;
    std::optional<SimTruth> truth;
};

std::ifstream open_input(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read " + p.string());
    return in;
}

std::optional<Dims> to_dims(const std::optional<std::tuple<std::size_t, std::size_t, std::size_t>>& t) {
    if (!t) return std::nullopt;
    return Dims{std::get<0>(*t), std::get<1>(*t), std::get<2>(*t)};
}

Dataset from_arrays(py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> rows,
                    std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> dims_arg,
                    std::optional<py::array_t<bool, py::array::c_style | py::array::forcecast>> mask) {
    if (rows.ndim() != 2 || rows.shape(1) != 4) throw DataError("annotations must have shape (n, 4)");
    const auto r = rows.unchecked<2>();
    std::vector<Annotation> entries;
    Dims inferred;
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        for (int c = 0; c < 4; ++c) {
            if (r(i, c) < 0) throw DataError("annotation row " + std::to_string(i) + " has a negative value");
        }
        if (r(i, 3) > 1) throw DataError("annotation row " + std::to_string(i) + " has a label other than 0/1");
        Annotation a{static_cast<std::uint32_t>(r(i, 0)), static_cast<std::uint32_t>(r(i, 1)),
                     static_cast<std::uint32_t>(r(i, 2)), static_cast<std::uint8_t>(r(i, 3))};
        inferred.recordings = std::max<std::size_t>(inferred.recordings, a.recording + 1);
        inferred.annotators = std::max<std::size_t>(inferred.annotators, a.annotator + 1);
        inferred.species = std::max<std::size_t>(inferred.species, a.species + 1);
        entries.push_back(a);
    }
    Dataset d;
    d.tensor = AnnotationTensor(to_dims(dims_arg).value_or(inferred), std::move(entries));
    if (mask) {
        if (mask->ndim() != 2 || std::size_t(mask->shape(0)) != d.tensor.n_annotators() ||
            std::size_t(mask->shape(1)) != d.tensor.n_species()) {
            throw DataError("expertise mask must have shape (annotators, species)");
        }
        const auto m = mask->unchecked<2>();
        d.expertise = ExpertiseSets(d.tensor.n_annotators(), d.tensor.n_species());
        for (std::size_t j = 0; j < d.tensor.n_annotators(); ++j) {
            for (std::size_t k = 0; k < d.tensor.n_species(); ++k) d.expertise.set(j, k, m(j, k));
        }
        check_expertise_consistency(d.expertise, d.tensor);
    } else {
        d.expertise = load_expertise(nullptr, d.tensor);
    }
    return d;
}

Dataset load_dataset(const std::filesystem::path& annotations, std::optional<std::filesystem::path> expertise,
                     std::optional<std::filesystem::path> gold,
                     std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> dims) {
    Dataset d;
    auto in = open_input(annotations);
    d.tensor = load_annotations(in, to_dims(dims));
    if (expertise) {
        auto ein = open_input(*expertise);
        d.expertise = load_expertise(&ein, d.tensor);
    } else {
        d.expertise = load_expertise(nullptr, d.tensor);
    }
    if (gold) {
        auto gin = open_input(*gold);
        d.gold = load_gold_standard(gin, d.tensor.dims());
    }
    return d;
}

Dataset simulate_dataset(const std::string& scenario_json) {
    ScenarioConfig sc;
    scenario_from_json(nlohmann::json::parse(scenario_json), sc);
    auto sim = simulate(sc);
    return Dataset{std::move(sim.tensor), std::move(sim.expertise), std::move(sim.gold), std::move(sim.truth)};
}

DrawStore fit_dataset(const Dataset& d, const std::string& model_name, const std::string& profile,
                      const std::string& hypers_json, const std::string& mcmc_json) {
    const ModelKind model = parse_model(model_name);
    HyperDoc doc = profile_hypers(profile);
    merge_hypers(doc, nlohmann::json::parse(hypers_json));
    const Hypers hypers = hypers_from_doc(model, doc);
    McmcConfig mcmc;
    mcmc.model = model;
    apply_default_budget(profile, model, mcmc);
    mcmc_from_json(nlohmann::json::parse(mcmc_json), mcmc);
    mcmc.model = model;
    mcmc.validate();
    py::gil_scoped_release release;
    return run(d.tensor, d.expertise, hypers, mcmc);
}

py::array_t<double> matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> vector_array(const std::vector<double>& v) {
    py::array_t<double> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict diagnostics_dict(const DrawStore& store) {
    const auto report = diagnose(store);
    py::dict ess, rhat;
    for (const auto& p : report.parameters) {
        ess[py::str(p.name)] = p.ess;
        rhat[py::str(p.name)] = p.rhat;
    }
    py::dict out;
    out["min_ess"] = report.min_ess;
    out["min_ess_parameter"] = report.min_ess_parameter;
    out["max_rhat"] = report.max_rhat;
    out["max_rhat_parameter"] = report.max_rhat_parameter;
    out["ess"] = ess;
    out["rhat"] = rhat;
    return out;
}

py::dict coverage_dict(const CoverageResult& c) {
    py::dict out;
    out["coverage"] = c.coverage;
    out["mse"] = c.mse;
    out["posterior_mean"] = vector_array(c.posterior_mean);
    return out;
}

py::dict evaluate_dict(const DrawStore& store, const Dataset& d) {
    if (!d.gold) throw DataError("dataset has no gold standard");
    if (dataset_hash(d.tensor, d.expertise) != store.data_hash) {
        throw DataError("dataset differs from the data the fit was run on");
    }
    const auto report = evaluate_store(store, d.tensor, *d.gold, d.truth ? &*d.truth : nullptr);
    py::dict out;
    out["auc"] = report.model_roc.auc;
    out["majority_auc"] = report.majority_roc.auc;
    out["brier"] = report.brier;
    out["majority_brier"] = report.majority_brier;
    out["n_cells"] = report.n_cells;
    if (report.has_waic) {
        py::dict w;
        w["lppd"] = report.waic.lppd;
        w["p_waic"] = report.waic.p_waic;
        w["waic"] = report.waic.waic;
        out["waic"] = w;
    }
    if (report.has_coverage) {
        out["tpr"] = coverage_dict(report.tpr);
        out["fpr"] = coverage_dict(report.fpr);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bayesian aggregation of crowdsourced multi-label annotations";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def_static("from_arrays", &from_arrays, py::arg("annotations"), py::arg("dims") = py::none(),
                    py::arg("expertise") = py::none())
        .def_static("load", &load_dataset, py::arg("annotations"), py::arg("expertise") = py::none(),
                    py::arg("gold") = py::none(), py::arg("dims") = py::none())
        .def_static("simulate_json", &simulate_dataset, py::arg("scenario"))
        .def_property_readonly("dims",
                               [](const Dataset& d) {
                                   const auto& x = d.tensor.dims();
                                   return std::make_tuple(x.recordings, x.annotators, x.species);
                               })
        .def_property_readonly("n_annotations", [](const Dataset& d) { return d.tensor.size(); })
        .def_property_readonly("annotations",
                               [](const Dataset& d) {
                                   py::array_t<std::int64_t> out({d.tensor.size(), std::size_t(4)});
                                   auto w = out.mutable_unchecked<2>();
                                   py::ssize_t i = 0;
                                   for (const auto& a : d.tensor.entries()) {
                                       w(i, 0) = a.recording;
                                       w(i, 1) = a.annotator;
                                       w(i, 2) = a.species;
                                       w(i, 3) = a.label;
                                       ++i;
                                   }
                                   return out;
                               })
        .def_property_readonly("expertise",
                               [](const Dataset& d) {
                                   const auto& s = d.expertise;
                                   py::array_t<bool> out({s.n_annotators(), s.n_species()});
                                   auto w = out.mutable_unchecked<2>();
                                   for (std::size_t j = 0; j < s.n_annotators(); ++j) {
                                       for (std::size_t k = 0; k < s.n_species(); ++k) w(j, k) = s.contains(j, k);
                                   }
                                   return out;
                               })
        .def_property(
            "gold",
            [](const Dataset& d) -> py::object {
                if (!d.gold) return py::none();
                py::array_t<std::int64_t> out({d.gold->labels.size(), std::size_t(3)});
                auto w = out.mutable_unchecked<2>();
                for (std::size_t i = 0; i < d.gold->labels.size(); ++i) {
                    const auto& g = d.gold->labels[i];
                    w(i, 0) = g.recording;
                    w(i, 1) = g.species;
                    w(i, 2) = g.label;
                }
                return out;
            },
            [](Dataset& d, py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> rows) {
                if (rows.ndim() != 2 || rows.shape(1) != 3) throw DataError("gold must have shape (n, 3)");
                const auto r = rows.unchecked<2>();
                std::string csv = "recording,species,label\n";
                for (py::ssize_t i = 0; i < r.shape(0); ++i) {
                    csv += std::to_string(r(i, 0)) + ',' + std::to_string(r(i, 1)) + ',' +
                           std::to_string(r(i, 2)) + '\n';
                }
                std::istringstream in(csv);
                d.gold = load_gold_standard(in, d.tensor.dims());
            })
        .def("majority_vote",
             [](const Dataset& d) {
                 return matrix(majority_vote(d.tensor), d.tensor.n_recordings(), d.tensor.n_species());
             })
        .def_property_readonly("true_avg_tpr", [](const Dataset& d) -> py::object {
            if (!d.truth) return py::none();
            return vector_array(d.truth->avg_tpr);
        })
        .def_property_readonly("true_avg_fpr", [](const Dataset& d) -> py::object {
            if (!d.truth) return py::none();
            return vector_array(d.truth->avg_fpr);
        });

    py::class_<DrawStore>(m, "Fit")
        .def_property_readonly("model", [](const DrawStore& s) { return std::string(model_name(s.model)); })
        .def_property_readonly("n_chains", [](const DrawStore& s) { return s.chains.size(); })
        .def_property_readonly("n_retained", &DrawStore::n_retained)
        .def_property_readonly("parameter_names",
                               [](const DrawStore& s) {
                                   return s.chains.empty() ? std::vector<std::string>{} : s.chains.front().names;
                               })
        .def("label_probabilities",
             [](const DrawStore& s) {
                 return matrix(posterior_label_probabilities(s), s.dims.recordings, s.dims.species);
             })
        .def(
            "draws", [](const DrawStore& s, const std::string& name) { return vector_array(s.pooled(name)); },
            py::arg("name"))
        .def("diagnostics", &diagnostics_dict)
        .def("save", [](const DrawStore& s, const std::filesystem::path& dir) { write_draw_store(dir, s); })
        .def_static("load", [](const std::filesystem::path& dir) { return read_draw_store(dir); });

    m.def("fit_json", &fit_dataset, py::arg("dataset"), py::arg("model"), py::arg("profile"), py::arg("hypers"),
          py::arg("mcmc"));
    m.def("evaluate", &evaluate_dict, py::arg("fit"), py::arg("dataset"));
}
