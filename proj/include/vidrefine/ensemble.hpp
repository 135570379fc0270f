// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vidrefine/adapters.hpp"
#include "vidrefine/model.hpp"

namespace vidrefine {

/// Scores of every sample under every run; absent cells are unscored or
/// failed, never zero.
struct ScoreMatrix {
    std::vector<std::string> runs;
    std::vector<std::string> samples;
    std::vector<std::vector<std::optional<double>>> scores;  // [sample][run]

    const std::optional<double>& at(std::size_t sample, std::size_t run) const { return scores[sample][run]; }
};

/// Throws ValidationError when the table shape does not match the id lists
/// or ids repeat.
void validate(const ScoreMatrix& m);

struct EnsembleSelection {
    std::map<std::string, std::string> choice;        // sample -> run
    std::map<std::string, double> per_sample_score;   // sample -> best score
    double aggregate = 0.0;                           // mean of per_sample_score
    std::set<std::string> runs_used;

    bool operator==(const EnsembleSelection&) const = default;
};

/// Per-sample argmax over runs. Ties go to the run listed first. Throws
/// UnscorableSample if a sample has no present score.
EnsembleSelection select_best(const ScoreMatrix& m);

/// Mean of each run's present scores (nullopt for a run with none).
std::vector<std::optional<double>> run_aggregates(const ScoreMatrix& m);

/// Keeps only the listed runs, in the given order.
ScoreMatrix restrict_runs(const ScoreMatrix& m, const std::vector<std::string>& runs);

/// floor(x * 10^digits + 0.5) / 10^digits, with a small tolerance so that
/// decimal inputs like 1.005 round as written rather than as stored.
double round_half_up(double x, int digits);

struct Report {
    double aggregate = 0.0;
    double baseline = 0.0;
    double delta = 0.0;          // exact
    double delta_rounded = 0.0;  // two decimals, half-up
};

/// Throws ValidationError for non-finite inputs.
Report report(double aggregate, double baseline);

/// "+6.07", "-0.50", "0.00".
std::string format_delta(double rounded_delta);

/// CSV with a header row "<label>,<run>,<run>..." and one row per sample
/// "<sample>,<score>,..."; an empty cell or NA marks an absent score.
/// Errors name the offending line.
ScoreMatrix parse_score_csv(std::istream& in, const std::string& source_name = "scores");
ScoreMatrix load_score_csv(const std::filesystem::path& path);

/// Scores the final video of every complete sample with a ground truth in
/// each run directory. Runs are named by their run ids; samples appear in
/// first-seen order. Cells whose scorer raises ScoreUnavailable are absent.
ScoreMatrix score_runs(const std::vector<std::filesystem::path>& run_dirs, Scorer& scorer);

void to_json(Json& j, const EnsembleSelection& v);
void to_json(Json& j, const Report& v);

/// Fixed-width text table of the selection.
std::string format_selection(const ScoreMatrix& m, const EnsembleSelection& sel);

}  // namespace vidrefine
