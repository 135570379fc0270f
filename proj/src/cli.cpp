// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/cli.hpp"

#include <cstdio>
#include <memory>

#include "CLI11.hpp"
#include "vidrefine/config.hpp"
#include "vidrefine/dataset.hpp"
#include "vidrefine/ensemble.hpp"
#include "vidrefine/pipeline.hpp"
#include "vidrefine/remote.hpp"
#include "vidrefine/scripted.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

std::string fixed(double x, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

int failed_count(const RunManifest& m) {
    int n = 0;
    for (const auto& [id, r] : m.results) n += r.status == SampleStatus::failed;
    return n;
}

Json run_summary_json(const RunManifest& m, const fs::path& run_dir) {
    Json samples = Json::array();
    for (const auto& [id, r] : m.results) {
        samples.push_back(Json{{"id", id},
                               {"status", std::string(to_string(r.status))},
                               {"iterations", r.iterations.size()},
                               {"converged", r.converged},
                               {"convergence_similarity",
                                r.convergence_similarity ? Json(*r.convergence_similarity) : Json(nullptr)},
                               {"final_video", r.final_video ? Json(r.final_video->uri) : Json(nullptr)},
                               {"failure_reason", r.failure_reason ? Json(*r.failure_reason) : Json(nullptr)},
                               {"failure_detail", r.failure_detail ? Json(*r.failure_detail) : Json(nullptr)}});
    }
    return Json{{"run_id", m.run_id},
                {"run_dir", run_dir.string()},
                {"completed", m.completed},
                {"failed", failed_count(m)},
                {"samples", samples}};
}

void print_run_summary(std::ostream& out, const RunManifest& m, const fs::path& run_dir) {
    out << "run " << m.run_id << " (" << run_dir.string() << ")\n";
    for (const auto& [id, r] : m.results) {
        out << "  " << id << "  " << to_string(r.status) << "  " << r.iterations.size() << " iteration"
            << (r.iterations.size() == 1 ? "" : "s");
        if (r.status == SampleStatus::complete) {
            if (r.converged)
                out << ", converged (similarity " << fixed(*r.convergence_similarity, 3) << ")";
            else
                out << ", iteration budget exhausted";
        } else if (r.failure_reason) {
            out << ", " << *r.failure_reason;
            if (r.failure_detail) out << ": " << *r.failure_detail;
        }
        out << "\n";
    }
    out << (m.completed ? "completed" : "incomplete") << ": " << m.results.size() - failed_count(m) << " complete, "
        << failed_count(m) << " failed\n";
}

int run_exit_code(const RunManifest& m) {
    if (!m.completed) return kExitInternal;
    return failed_count(m) == 0 ? kExitOk : kExitFailures;
}

struct Options {
    bool json = false;
    // run
    std::string dataset;
    std::string config;
    std::string out_dir;
    bool mock = false;
    // resume
    std::string run_dir;
    // ensemble
    std::string scores;
    std::vector<std::string> runs;
    std::string scorer = "sidecar";
    std::string sidecar_dir;
    // report
    double aggregate = 0.0;
    double baseline = 0.0;
};

int cmd_run(const Options& o, std::ostream& out) {
    auto dataset = load_dataset(o.dataset);
    auto cfg = load_config(o.config);
    if (o.mock) cfg.run.mock = true;
    const auto adapters = build_adapters(cfg.run);
    const auto manifest = start_run(o.out_dir, dataset, cfg.context, cfg.run, adapters);
    if (o.json)
        out << run_summary_json(manifest, o.out_dir).dump(2) << "\n";
    else
        print_run_summary(out, manifest, o.out_dir);
    return run_exit_code(manifest);
}

int cmd_resume(const Options& o, std::ostream& out) {
    std::optional<AdapterSet> adapters;
    if (o.mock) {
        auto cfg = read_manifest(o.run_dir).config;
        cfg.mock = true;
        adapters = build_adapters(cfg);
    }
    const auto manifest = resume_run(o.run_dir, adapters);
    if (o.json)
        out << run_summary_json(manifest, o.run_dir).dump(2) << "\n";
    else
        print_run_summary(out, manifest, o.run_dir);
    return run_exit_code(manifest);
}

int cmd_ensemble(const Options& o, std::ostream& out) {
    ScoreMatrix m;
    if (!o.scores.empty()) {
        m = load_score_csv(o.scores);
    } else {
        std::unique_ptr<Scorer> scorer;
        if (o.scorer == "sidecar")
            scorer = std::make_unique<SidecarScorer>(o.sidecar_dir);
        else if (o.scorer == "self")
            scorer = std::make_unique<SelfSimilarityScorer>();
        else
            throw ValidationError("unknown scorer \"" + o.scorer + "\" (expected sidecar or self)");
        std::vector<fs::path> dirs(o.runs.begin(), o.runs.end());
        m = score_runs(dirs, *scorer);
    }
    const auto sel = select_best(m);
    const auto aggregates = run_aggregates(m);
    if (o.json) {
        Json per_run = Json::object();
        for (std::size_t r = 0; r < m.runs.size(); ++r)
            per_run[m.runs[r]] = aggregates[r] ? Json(*aggregates[r]) : Json(nullptr);
        out << Json{{"selection", sel}, {"run_aggregates", per_run}}.dump(2) << "\n";
    } else {
        out << format_selection(m, sel);
        for (std::size_t r = 0; r < m.runs.size(); ++r)
            out << "  run " << m.runs[r] << " mean " << (aggregates[r] ? fixed(*aggregates[r]) : "n/a") << "\n";
    }
    return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
    const auto r = report(o.aggregate, o.baseline);
    if (o.json)
        out << Json(r).dump(2) << "\n";
    else
        out << "aggregate " << fixed(r.aggregate) << "  baseline " << fixed(r.baseline) << "  delta "
            << format_delta(r.delta_rounded) << "\n";
    return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
    const auto ds = load_dataset(o.dataset);
    if (o.json)
        out << Json{{"dataset", o.dataset}, {"valid", true}, {"samples", ds.samples.size()}}.dump(2) << "\n";
    else
        out << o.dataset << ": " << ds.samples.size() << " samples OK\n";
    return kExitOk;
}

bool is_usage_error(const Error& e) {
    const auto& k = e.kind();
    return k == "ValidationError" || k == "MissingPlaceholder" || k == "CollisionError" || k == "CorruptManifest" ||
           k == "UnscorableSample";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Iterative critique-and-rewrite orchestration for video continuation"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "Run the refinement loop over a dataset");
    run->add_option("--dataset", o.dataset, "JSONL dataset manifest")->required()->check(CLI::ExistingFile);
    run->add_option("--config", o.config, "JSON run config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", o.out_dir, "Run directory to create")->required();
    run->add_flag("--mock", o.mock, "Use scripted adapters instead of remote models");
    run->add_flag("--json", o.json, "Machine-readable output");

    auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
    resume->add_option("--run", o.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    resume->add_flag("--mock", o.mock, "Use scripted adapters instead of remote models");
    resume->add_flag("--json", o.json, "Machine-readable output");

    auto* ensemble = app.add_subcommand("ensemble", "Pick the best run per sample");
    auto* scores_opt = ensemble->add_option("--scores", o.scores, "Score matrix CSV")->check(CLI::ExistingFile);
    auto* runs_opt = ensemble->add_option("--runs", o.runs, "Run directories to score")->check(CLI::ExistingDirectory);
    scores_opt->excludes(runs_opt);
    ensemble->add_option("--scorer", o.scorer, "Scorer for --runs: sidecar or self");
    ensemble->add_option("--sidecar-dir", o.sidecar_dir, "Directory of score sidecars for non-file URIs");
    ensemble->add_flag("--json", o.json, "Machine-readable output");

    auto* rep = app.add_subcommand("report", "Compare an aggregate score with a baseline");
    rep->add_option("--aggregate", o.aggregate, "Aggregate score")->required();
    rep->add_option("--baseline", o.baseline, "Baseline score")->required();
    rep->add_flag("--json", o.json, "Machine-readable output");

    auto* val = app.add_subcommand("validate", "Validate a dataset manifest");
    val->add_option("--dataset", o.dataset, "JSONL dataset manifest")->required()->check(CLI::ExistingFile);
    val->add_flag("--json", o.json, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (app.got_subcommand(ensemble) && o.scores.empty() && o.runs.empty()) {
        err << "error: ensemble needs --scores or --runs\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(run)) return cmd_run(o, out);
        if (app.got_subcommand(resume)) return cmd_resume(o, out);
        if (app.got_subcommand(ensemble)) return cmd_ensemble(o, out);
        if (app.got_subcommand(rep)) return cmd_report(o, out);
        if (app.got_subcommand(val)) return cmd_validate(o, out);
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return is_usage_error(e) ? kExitUsage : kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace vidrefine
