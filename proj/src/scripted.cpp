// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/scripted.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vidrefine/dataset.hpp"
#include "vidrefine/digest.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

[[noreturn]] void raise(const std::string& kind, const std::string& message) {
    if (kind == "ModelRefusal") throw ModelRefusal(message);
    if (kind == "TransportError") throw TransportError(message);
    if (kind == "EmptyResponse") throw EmptyResponse(message);
    if (kind == "GenerationFailed") throw GenerationFailed(message);
    if (kind == "PromptTooLong") throw PromptTooLong(message);
    throw ValidationError("fixture names unknown error kind \"" + kind + "\"");
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

struct Expansion {
    std::string_view description;
    std::string_view uri;
    int iteration = 1;
    std::uint64_t seed = 0;
};

// Placeholders are expanded in a fixed order; {description} goes last so
// text containing braces cannot be re-expanded.
std::string resolve(const Json& output, const Expansion& ex) {
    if (output.is_object()) {
        const auto kind = output.value("error", std::string());
        raise(kind, output.value("message", "scripted " + kind));
    }
    if (!output.is_string()) throw ValidationError("fixture outputs must be strings or error objects");
    std::string text = output.get<std::string>();
    replace_all(text, "{uri}", ex.uri);
    replace_all(text, "{iteration}", std::to_string(ex.iteration));
    replace_all(text, "{seed}", std::to_string(ex.seed));
    replace_all(text, "{description}", ex.description);
    return text;
}

const Json* find_entry(const Json& section, const char* table, const std::string& key) {
    auto t = section.find(table);
    if (t == section.end() || !t->is_object()) return nullptr;
    if (auto it = t->find(key); it != t->end()) return &*it;
    return nullptr;
}

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) throw ValidationError(std::string("fixture section \"") + what + "\" must be an object");
}

}  // namespace

ScriptedFixture ScriptedFixture::builtin() {
    ScriptedFixture f;
    f.analyst = Json{{"default_predict",
                      "{description} The motion continues under gravity, with contact and momentum "
                      "conserved."},
                     {"default_critique", "{description}"}};
    f.rewriter = Json{{"mode", "identity"}};
    return f;
}

ScriptedFixture ScriptedFixture::from_json(const Json& j) {
    require_object(j, "root");
    ScriptedFixture f;
    for (const auto& item : j.items()) {
        if (item.key() != "analyst" && item.key() != "rewriter" && item.key() != "generator")
            throw ValidationError("unknown fixture section \"" + item.key() + "\"");
    }
    f.analyst = j.value("analyst", Json::object());
    f.rewriter = j.value("rewriter", Json{{"mode", "identity"}});
    f.generator = j.value("generator", Json::object());
    require_object(f.analyst, "analyst");
    require_object(f.rewriter, "rewriter");
    require_object(f.generator, "generator");
    return f;
}

ScriptedFixture ScriptedFixture::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open fixture " + path.string());
    try {
        return from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw ValidationError(path.string() + ": malformed fixture JSON: " + e.what());
    }
}

std::string analyst_key(const AnalystRequest& req) {
    return std::string(to_string(req.mode)) + "|" + req.video.uri + "|" + req.prior_description;
}

ScriptedAnalyst::ScriptedAnalyst(Json section, std::uint64_t seed) : section_(std::move(section)), seed_(seed) {
    require_object(section_, "analyst");
    if (auto it = section_.find("rules"); it != section_.end()) {
        if (!it->is_array()) throw ValidationError("analyst \"rules\" must be an array");
        for (const auto& rule : *it) {
            if (!rule.is_object() || !rule.contains("output"))
                throw ValidationError("every analyst rule needs an \"output\"");
            if ((rule.contains("mode") && !rule["mode"].is_string()) ||
                (rule.contains("uri_prefix") && !rule["uri_prefix"].is_string()) ||
                (rule.contains("iteration") && !rule["iteration"].is_number_integer()))
                throw ValidationError("analyst rule fields have the wrong type");
        }
    }
}

Critique ScriptedAnalyst::analyze(const AnalystRequest& req) {
    validate(req);
    const auto key = analyst_key(req);
    const Json* out = find_entry(section_, "entries", key);
    if (!out) out = find_entry(section_, "entries", sha256_hex(key));
    if (!out) out = find_entry(section_, "entries", std::string(to_string(req.mode)) + "|" + req.video.uri);
    if (auto rules = section_.find("rules"); !out && rules != section_.end()) {
        for (const auto& rule : *rules) {
            if (rule.contains("mode") && rule["mode"].get<std::string>() != to_string(req.mode)) continue;
            if (rule.contains("uri_prefix") && req.video.uri.rfind(rule["uri_prefix"].get<std::string>(), 0) != 0)
                continue;
            if (rule.contains("iteration") && rule["iteration"].get<int>() != req.iteration) continue;
            out = &rule.at("output");
            break;
        }
    }
    const Json fallback = section_.value(req.mode == AnalystMode::predict ? "default_predict" : "default_critique",
                                         Json("{description}"));
    if (!out) out = &fallback;

    Critique c;
    c.text = resolve(*out, {req.prior_description, req.video.uri, req.iteration, seed_});
    c.iteration = req.iteration;
    c.kind = req.mode == AnalystMode::predict ? CritiqueKind::initial_prediction
                                              : CritiqueKind::inconsistency_report;
    if (c.text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw EmptyResponse("scripted analyst produced an empty critique");
    return c;
}

ScriptedRewriter::ScriptedRewriter(Json section, std::uint64_t seed) : section_(std::move(section)), seed_(seed) {
    require_object(section_, "rewriter");
    const auto mode = section_.value("mode", std::string("identity"));
    if (mode != "identity" && mode != "constant" && mode != "sequence" && mode != "table")
        throw ValidationError("unknown scripted rewriter mode \"" + mode + "\"");
    if (mode == "sequence" && (!section_.contains("sequence") || !section_["sequence"].is_array() ||
                               section_["sequence"].empty()))
        throw ValidationError("sequence rewriter needs a non-empty \"sequence\" array");
    if (mode == "constant" && !section_.contains("constant"))
        throw ValidationError("constant rewriter needs a \"constant\" output");
}

Prompt ScriptedRewriter::rewrite(const Critique& critique, int max_chars) {
    if (critique.text.empty()) throw ValidationError("cannot rewrite an empty critique");
    const auto mode = section_.value("mode", std::string("identity"));
    const Expansion ex{critique.text, {}, critique.iteration, seed_};
    std::string text;
    if (mode == "identity") {
        text = critique.text;
    } else if (mode == "constant") {
        text = resolve(section_["constant"], ex);
    } else if (mode == "sequence") {
        const auto& seq = section_["sequence"];
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(critique.iteration - 1), seq.size() - 1);
        text = resolve(seq[idx], ex);
    } else {
        const Json* out = find_entry(section_, "table", critique.text);
        text = out ? resolve(*out, ex) : critique.text;
    }
    return finish_prompt(text, critique, max_chars);
}

ScriptedGenerator::ScriptedGenerator(Json section) : section_(std::move(section)) {
    require_object(section_, "generator");
}

VideoArtifact ScriptedGenerator::generate(const GeneratorRequest& req) {
    validate(req);
    if (const Json* out = find_entry(section_, "failures", req.prompt.text))
        resolve(*out, {req.prompt.text, req.prefix_video.uri, req.prompt.iteration, 0});
    VideoArtifact v;
    v.uri = "mock://" + req.prefix_video.uri + "/" + req.prompt.text;
    v.duration_s = req.duration_s;
    v.fps = req.fps;
    v.producer_iteration = req.prompt.iteration;
    v.checksum = sha256_hex(req.prefix_video.uri + "|" + req.prompt.text + "|" + std::to_string(req.inference_steps));
    return v;
}

AdapterSet scripted_adapters(const ScriptedFixture& fixture, std::uint64_t seed) {
    return AdapterSet{std::make_shared<ScriptedAnalyst>(fixture.analyst, seed),
                      std::make_shared<ScriptedRewriter>(fixture.rewriter, seed),
                      std::make_shared<ScriptedGenerator>(fixture.generator)};
}

SidecarScorer::SidecarScorer(fs::path sidecar_dir, fs::path base_dir)
    : sidecar_dir_(std::move(sidecar_dir)), base_dir_(std::move(base_dir)) {}

fs::path SidecarScorer::sidecar_for(const VideoArtifact& video) const {
    if (auto p = local_path(video.uri, base_dir_)) return fs::path(p->string() + ".score");
    return sidecar_dir_ / (sha256_hex(video.uri) + ".score");
}

double SidecarScorer::score(const VideoArtifact& video, const VideoArtifact&) {
    const auto path = sidecar_for(video);
    std::ifstream in(path);
    if (!in) throw ScoreUnavailable("no score sidecar at " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ScoreUnavailable("sidecar " + path.string() + " does not hold a number");
    }
    if (text.find_first_not_of(" \t\r\n", used) != std::string::npos || !std::isfinite(value))
        throw ScoreUnavailable("sidecar " + path.string() + " does not hold a single finite number");
    return value;
}

double SelfSimilarityScorer::score(const VideoArtifact& video, const VideoArtifact& ground_truth) {
    const auto& a = video.checksum;
    const auto& b = ground_truth.checksum;
    if (a.empty() || b.empty()) throw ScoreUnavailable("self-similarity scoring needs checksums");
    const std::size_t n = std::max(a.size(), b.size());
    std::size_t same = 0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a[i] == b[i];
    return 100.0 * static_cast<double>(same) / static_cast<double>(n);
}

}  // namespace vidrefine
