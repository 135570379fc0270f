// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vidrefine/dataset.hpp"
#include "vidrefine/store.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim_copy(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(trim_copy(cell));
    return cells;
}

std::string fixed2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

}  // namespace

void validate(const ScoreMatrix& m) {
    if (m.scores.size() != m.samples.size()) throw ValidationError("score table has the wrong number of rows");
    for (const auto& row : m.scores)
        if (row.size() != m.runs.size()) throw ValidationError("score table has the wrong number of columns");
    const std::set<std::string> runs(m.runs.begin(), m.runs.end());
    if (runs.size() != m.runs.size()) throw ValidationError("run ids repeat in the score table");
    const std::set<std::string> samples(m.samples.begin(), m.samples.end());
    if (samples.size() != m.samples.size()) throw ValidationError("sample ids repeat in the score table");
    for (const auto& row : m.scores)
        for (const auto& cell : row)
            if (cell && !std::isfinite(*cell)) throw ValidationError("score table holds a non-finite score");
}

EnsembleSelection select_best(const ScoreMatrix& m) {
    validate(m);
    EnsembleSelection sel;
    double total = 0.0;
    for (std::size_t s = 0; s < m.samples.size(); ++s) {
        std::optional<std::size_t> best;
        for (std::size_t r = 0; r < m.runs.size(); ++r) {
            const auto& cell = m.at(s, r);
            if (cell && (!best || *cell > *m.at(s, *best))) best = r;
        }
        if (!best) throw UnscorableSample("sample " + m.samples[s] + " has no score in any run");
        const double score = *m.at(s, *best);
        sel.choice[m.samples[s]] = m.runs[*best];
        sel.per_sample_score[m.samples[s]] = score;
        sel.runs_used.insert(m.runs[*best]);
        total += score;
    }
    sel.aggregate = m.samples.empty() ? 0.0 : total / static_cast<double>(m.samples.size());
    return sel;
}

std::vector<std::optional<double>> run_aggregates(const ScoreMatrix& m) {
    validate(m);
    std::vector<std::optional<double>> out(m.runs.size());
    for (std::size_t r = 0; r < m.runs.size(); ++r) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t s = 0; s < m.samples.size(); ++s) {
            if (const auto& cell = m.at(s, r)) {
                sum += *cell;
                ++n;
            }
        }
        if (n > 0) out[r] = sum / static_cast<double>(n);
    }
    return out;
}

ScoreMatrix restrict_runs(const ScoreMatrix& m, const std::vector<std::string>& runs) {
    validate(m);
    std::vector<std::size_t> cols;
    for (const auto& id : runs) {
        std::size_t r = 0;
        while (r < m.runs.size() && m.runs[r] != id) ++r;
        if (r == m.runs.size()) throw ValidationError("unknown run id " + id);
        cols.push_back(r);
    }
    ScoreMatrix out{runs, m.samples, {}};
    for (const auto& row : m.scores) {
        std::vector<std::optional<double>> picked;
        for (auto c : cols) picked.push_back(row[c]);
        out.scores.push_back(std::move(picked));
    }
    return out;
}

double round_half_up(double x, int digits) {
    const double scale = std::pow(10.0, digits);
    const double scaled = x * scale;
    return std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, std::abs(scaled))) / scale;
}

Report report(double aggregate, double baseline) {
    if (!std::isfinite(aggregate) || !std::isfinite(baseline))
        throw ValidationError("report needs finite aggregate and baseline");
    Report r;
    r.aggregate = aggregate;
    r.baseline = baseline;
    r.delta = aggregate - baseline;
    r.delta_rounded = round_half_up(r.delta, 2);
    if (r.delta_rounded == 0.0) r.delta_rounded = 0.0;  // no "-0.00"
    return r;
}

std::string format_delta(double rounded_delta) {
    const auto text = fixed2(rounded_delta);
    return rounded_delta > 0 ? "+" + text : text;
}

ScoreMatrix parse_score_csv(std::istream& in, const std::string& source_name) {
    ScoreMatrix m;
    std::string line;
    int lineno = 0;
    bool header = true;
    auto fail = [&](const std::string& what) -> void {
        throw ValidationError(source_name + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_copy(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (header) {
            if (cells.size() < 2) fail("header needs a label column and at least one run id");
            m.runs.assign(cells.begin() + 1, cells.end());
            for (const auto& r : m.runs)
                if (r.empty()) fail("empty run id in header");
            header = false;
            continue;
        }
        if (cells.size() != m.runs.size() + 1)
            fail("expected " + std::to_string(m.runs.size() + 1) + " cells, found " + std::to_string(cells.size()));
        if (cells[0].empty()) fail("empty sample id");
        std::vector<std::optional<double>> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const auto& c = cells[i];
            if (c.empty() || c == "NA" || c == "na" || c == "-") {
                row.emplace_back();
                continue;
            }
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                fail("cell \"" + c + "\" is not a number");
            }
            if (used != c.size() || !std::isfinite(v)) fail("cell \"" + c + "\" is not a finite number");
            row.emplace_back(v);
        }
        m.samples.push_back(cells[0]);
        m.scores.push_back(std::move(row));
    }
    if (header) throw ValidationError(source_name + ": missing header row");
    try {
        validate(m);
    } catch (const ValidationError& e) {
        throw ValidationError(source_name + ": " + e.what());
    }
    return m;
}

ScoreMatrix load_score_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return parse_score_csv(in, path.string());
}

ScoreMatrix score_runs(const std::vector<fs::path>& run_dirs, Scorer& scorer) {
    ScoreMatrix m;
    std::map<std::string, std::size_t> sample_index;
    std::vector<std::map<std::string, double>> columns;
    for (const auto& dir : run_dirs) {
        const auto manifest = read_manifest(dir);
        const auto inputs = read_run_inputs(RunLayout{dir});
        m.runs.push_back(manifest.run_id);
        auto& column = columns.emplace_back();
        for (const auto& sample : inputs.dataset.samples) {
            if (!sample_index.count(sample.id)) {
                sample_index[sample.id] = m.samples.size();
                m.samples.push_back(sample.id);
            }
            auto it = manifest.results.find(sample.id);
            if (it == manifest.results.end() || it->second.status != SampleStatus::complete || !sample.ground_truth)
                continue;
            const auto& video = *it->second.final_video;
            const auto truth = reference_artifact(*sample.ground_truth, inputs.dataset.base_dir, video.duration_s, video.fps);
            try {
                column[sample.id] = scorer.score(video, truth);
            } catch (const ScoreUnavailable&) {
            }
        }
    }
    for (const auto& id : m.samples) {
        std::vector<std::optional<double>> row;
        for (const auto& column : columns) {
            auto it = column.find(id);
            row.push_back(it == column.end() ? std::nullopt : std::optional<double>(it->second));
        }
        m.scores.push_back(std::move(row));
    }
    validate(m);
    return m;
}

void to_json(Json& j, const EnsembleSelection& v) {
    j = Json{{"choice", v.choice},
             {"per_sample_score", v.per_sample_score},
             {"aggregate", v.aggregate},
             {"runs_used", v.runs_used}};
}

void to_json(Json& j, const Report& v) {
    j = Json{{"aggregate", v.aggregate},
             {"baseline", v.baseline},
             {"delta", v.delta},
             {"delta_rounded", v.delta_rounded},
             {"delta_display", format_delta(v.delta_rounded)}};
}

std::string format_selection(const ScoreMatrix& m, const EnsembleSelection& sel) {
    std::size_t w_sample = 6, w_run = 3;
    for (const auto& s : m.samples) w_sample = std::max(w_sample, s.size());
    for (const auto& r : m.runs) w_run = std::max(w_run, r.size());
    std::ostringstream os;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    os << pad("sample", w_sample) << "  " << pad("run", w_run) << "  score\n";
    for (const auto& s : m.samples)
        os << pad(s, w_sample) << "  " << pad(sel.choice.at(s), w_run) << "  " << fixed2(sel.per_sample_score.at(s))
           << "\n";
    os << "aggregate " << fixed2(sel.aggregate) << " over " << m.samples.size() << " samples, "
       << sel.runs_used.size() << " of " << m.runs.size() << " runs used\n";
    return os.str();
}

}  // namespace vidrefine
