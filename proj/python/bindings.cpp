// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vidrefine/config.hpp"
#include "vidrefine/convergence.hpp"
#include "vidrefine/ensemble.hpp"
#include "vidrefine/pipeline.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace vidrefine;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::handle& obj) {
    return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

PhysicsContext context_from(const py::object& obj) {
    if (obj.is_none()) return PhysicsContext::defaults();
    return from_python(obj).get<PhysicsContext>();
}

py::object run_mock_or_remote(const fs::path& dataset_path, const fs::path& config_path, const fs::path& out_dir,
                              bool mock) {
    const auto dataset = load_dataset(dataset_path);
    auto cfg = load_config(config_path);
    if (mock) cfg.run.mock = true;
    RunManifest manifest;
    {
        py::gil_scoped_release release;
        manifest = start_run(out_dir, dataset, cfg.context, cfg.run, build_adapters(cfg.run));
    }
    return to_python(manifest);
}

py::object resume_run_py(const fs::path& run_dir, bool mock) {
    std::optional<AdapterSet> adapters;
    if (mock) {
        auto cfg = read_manifest(run_dir).config;
        cfg.mock = true;
        adapters = build_adapters(cfg);
    }
    RunManifest manifest;
    {
        py::gil_scoped_release release;
        manifest = resume_run(run_dir, adapters);
    }
    return to_python(manifest);
}

py::dict selection_dict(const std::vector<std::string>& runs, const std::vector<std::string>& samples,
                        const std::vector<std::vector<std::optional<double>>>& scores) {
    ScoreMatrix m{runs, samples, scores};
    validate(m);
    const auto sel = select_best(m);
    py::dict d = to_python(Json(sel));
    py::list means;
    for (const auto& a : run_aggregates(m)) means.append(a ? py::cast(*a) : py::none());
    d["run_aggregates"] = means;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Refinement loop, convergence check and ensemble selection";

    static py::exception<Error> error_type(m, "VidrefineError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error_type.ptr(), (e.kind() + ": " + e.what()).c_str());
        }
    });

    m.def("normalize", [](const std::string& text) { return normalize(text); }, py::arg("text"),
          "Lowercased, punctuation-free tokens.");
    m.def(
        "similarity",
        [](const std::string& a, const std::string& b, const std::string& metric) { return similarity(metric, a, b); },
        py::arg("a"), py::arg("b"), py::arg("metric") = "jaccard");
    m.def(
        "converged",
        [](const std::string& prev, const std::string& next, double threshold, const std::string& metric) {
            const auto r = converged(Prompt::make(prev, 1), Prompt::make(next, 2), threshold, metric);
            py::dict d;
            d["value"] = r.value;
            d["converged"] = r.converged;
            d["tokens_a"] = r.tokens_a;
            d["tokens_b"] = r.tokens_b;
            d["threshold_used"] = r.threshold_used;
            return d;
        },
        py::arg("prev"), py::arg("next"), py::arg("threshold") = 0.9, py::arg("metric") = "jaccard");

    m.def("default_context", [] { return to_python(PhysicsContext::defaults()); });
    m.def(
        "render_analyst_input",
        [](const std::string& description, const py::object& context) {
            return render_analyst_input(context_from(context), description);
        },
        py::arg("description"), py::arg("context") = py::none());

    m.def("select_best", &selection_dict, py::arg("runs"), py::arg("samples"), py::arg("scores"),
          "Per-sample best run. `scores[sample][run]` may be None.");
    m.def(
        "report", [](double aggregate, double baseline) { return to_python(report(aggregate, baseline)); },
        py::arg("aggregate"), py::arg("baseline"));
    m.def("format_delta", &format_delta, py::arg("rounded_delta"));

    m.def(
        "load_dataset",
        [](const fs::path& path) {
            Json samples = Json::array();
            for (const auto& s : load_dataset(path).samples) samples.push_back(s);
            return to_python(samples);
        },
        py::arg("path"));
    m.def("run", &run_mock_or_remote, py::arg("dataset"), py::arg("config"), py::arg("out"), py::arg("mock") = false);
    m.def("resume", &resume_run_py, py::arg("run_dir"), py::arg("mock") = false);
    m.def(
        "load_manifest", [](const fs::path& run_dir) { return to_python(read_manifest(run_dir)); }, py::arg("run_dir"));
}
