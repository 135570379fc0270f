// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/model.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <set>

#include "vidrefine/error.hpp"

namespace vidrefine {
namespace {

constexpr std::string_view kPlaceholders[] = {"{B}", "{I}", "{description}"};

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

[[noreturn]] void invalid(const std::string& what) { throw ValidationError(what); }

template <typename T>
void read_optional(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->template get<T>();
}

template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null())
        out = it->template get<T>();
    else
        out.reset();
}

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> known,
                         std::string_view where) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (auto k : known) found = found || k == item.key();
        if (!found)
            invalid("unknown key \"" + item.key() + "\" in " + std::string(where));
    }
}

}  // namespace

PhysicsContext PhysicsContext::defaults() {
    return PhysicsContext{
        .knowledge_base =
            "Objects fall under gravity unless supported. Momentum is conserved in "
            "collisions. Rigid bodies keep their shape; fluids flow and settle. "
            "Nothing appears, vanishes or passes through solid matter.",
        .instructions =
            "Watch the 3-second clip and predict, in detail, how the scene evolves over "
            "the next 5 seconds. When shown a generated continuation, list every "
            "physical inconsistency and describe the corrected motion.",
        .template_text = "Physics knowledge:\n{B}\n\nTask:\n{I}\n\nScene description:\n{description}\n",
    };
}

std::string render_analyst_input(const PhysicsContext& ctx, std::string_view description) {
    validate(ctx);
    // Single left-to-right pass so substituted text is never rescanned.
    std::string out;
    std::string_view rest = ctx.template_text;
    while (!rest.empty()) {
        std::size_t best = std::string_view::npos;
        std::string_view which;
        for (auto ph : kPlaceholders) {
            const auto pos = rest.find(ph);
            if (pos < best) {
                best = pos;
                which = ph;
            }
        }
        if (best == std::string_view::npos) {
            out.append(rest);
            break;
        }
        out.append(rest.substr(0, best));
        if (which == "{B}")
            out.append(ctx.knowledge_base);
        else if (which == "{I}")
            out.append(ctx.instructions);
        else
            out.append(description);
        rest.remove_prefix(best + which.size());
    }
    return out;
}

std::size_t utf8_length(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

Prompt Prompt::make(std::string_view text, int iteration) {
    const auto t = trim(text);
    return Prompt{std::string(t), iteration, utf8_length(t)};
}

std::string_view to_string(CritiqueKind kind) {
    return kind == CritiqueKind::initial_prediction ? "initial_prediction" : "inconsistency_report";
}

std::string_view to_string(SampleStatus status) {
    switch (status) {
        case SampleStatus::running: return "running";
        case SampleStatus::complete: return "complete";
        case SampleStatus::failed: return "failed";
    }
    return "unknown";
}

std::string utc_now_iso() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const Sample& s) {
    if (s.id.empty()) invalid("sample id is empty");
    if (s.id == "." || s.id == "..") invalid("sample id \"" + s.id + "\" is reserved");
    for (char c : s.id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        if (!ok) invalid("sample id \"" + s.id + "\" may only contain [A-Za-z0-9._-]");
    }
    if (s.prefix_video.empty()) invalid("sample " + s.id + ": prefix_video is empty");
    if (trim(s.description).empty()) invalid("sample " + s.id + ": description is empty");
    if (s.ground_truth && s.ground_truth->empty()) invalid("sample " + s.id + ": ground_truth is empty");
}

void validate(const PhysicsContext& ctx) {
    for (auto ph : kPlaceholders) {
        const auto n = count_occurrences(ctx.template_text, ph);
        if (n != 1)
            throw MissingPlaceholder("analyst template must contain " + std::string(ph) +
                                     " exactly once (found " + std::to_string(n) + ")");
    }
}

void validate(const Prompt& p, int max_prompt_chars) {
    if (trim(p.text).empty()) invalid("prompt text is empty");
    if (p.iteration < 1) invalid("prompt iteration must be >= 1");
    if (p.char_count != utf8_length(p.text)) invalid("prompt char_count does not match its text");
    if (p.char_count > static_cast<std::size_t>(max_prompt_chars))
        invalid("prompt has " + std::to_string(p.char_count) + " chars, limit is " +
                std::to_string(max_prompt_chars));
}

void validate(const Critique& c) {
    if (trim(c.text).empty()) invalid("critique text is empty");
    if (c.iteration < 1) invalid("critique iteration must be >= 1");
    if ((c.kind == CritiqueKind::initial_prediction) != (c.iteration == 1))
        invalid("critique kind initial_prediction is only valid at iteration 1");
}

void validate(const VideoArtifact& v) {
    if (v.uri.empty()) invalid("video uri is empty");
    if (!(v.duration_s > 0) || !std::isfinite(v.duration_s)) invalid("video duration_s must be > 0");
    if (!(v.fps > 0) || !std::isfinite(v.fps)) invalid("video fps must be > 0");
    if (v.producer_iteration < 0) invalid("video producer_iteration must be >= 0");
    if (v.checksum.empty()) invalid("video checksum is empty");
}

void validate(const RetryPolicy& r) {
    if (r.max_attempts < 1) invalid("retry.max_attempts must be >= 1");
    if (r.base_backoff_ms < 0) invalid("retry.base_backoff_ms must be >= 0");
}

void validate(const EndpointSpec& e) {
    if (e.base_url.empty()) invalid("endpoint base_url is empty");
    if (e.timeout_ms <= 0) invalid("endpoint timeout_ms must be > 0");
    if (e.poll_interval_ms < 0) invalid("endpoint poll_interval_ms must be >= 0");
}

void validate(const RunConfig& c) {
    if (c.max_iterations < 1) invalid("max_iterations must be >= 1");
    if (!(c.convergence_threshold >= 0.0 && c.convergence_threshold <= 1.0))
        invalid("convergence_threshold must lie in [0, 1]");
    if (c.inference_steps <= 0) invalid("inference_steps must be > 0");
    if (c.max_prompt_chars < 1) invalid("max_prompt_chars must be >= 1");
    if (c.max_concurrent_samples < 1) invalid("max_concurrent_samples must be >= 1");
    if (!(c.duration_s > 0)) invalid("duration_s must be > 0");
    if (!(c.fps > 0)) invalid("fps must be > 0");
    validate(c.retry);
    for (const auto* e : {&c.analyst, &c.rewriter, &c.generator, &c.scorer})
        if (*e) validate(**e);
}

void validate(const IterationRecord& r, const RunConfig& cfg) {
    if (r.index < 1) invalid("iteration index must be >= 1");
    validate(r.prompt, cfg.max_prompt_chars);
    validate(r.critique);
    validate(r.video);
    if (r.prompt.iteration != r.index || r.video.producer_iteration != r.index ||
        r.critique.iteration != r.index)
        invalid("iteration " + std::to_string(r.index) +
                ": prompt, critique and video must carry the same iteration index");
    if (r.finished_at < r.started_at) invalid("iteration finished before it started");
}

void validate(const SampleResult& s, const RunConfig& cfg) {
    if (s.sample_id.empty()) invalid("result has empty sample_id");
    const auto n = static_cast<int>(s.iterations.size());
    if (n > cfg.max_iterations) invalid(s.sample_id + ": more iterations than max_iterations");
    for (int i = 0; i < n; ++i) {
        if (s.iterations[i].index != i + 1) invalid(s.sample_id + ": iteration indices must be 1..n");
        validate(s.iterations[i], cfg);
    }
    if (s.convergence_similarity &&
        !(*s.convergence_similarity >= 0.0 && *s.convergence_similarity <= 1.0))
        invalid(s.sample_id + ": convergence_similarity outside [0, 1]");
    if (s.converged &&
        !(s.convergence_similarity && *s.convergence_similarity >= cfg.convergence_threshold))
        invalid(s.sample_id + ": converged without similarity >= threshold");
    switch (s.status) {
        case SampleStatus::complete:
            if (n < 1) invalid(s.sample_id + ": complete result without iterations");
            if (!s.final_video || !(*s.final_video == s.iterations.back().video))
                invalid(s.sample_id + ": final_video must be the last iteration's video");
            if (s.failure_reason || s.failure_detail)
                invalid(s.sample_id + ": complete result carries a failure reason");
            break;
        case SampleStatus::failed:
            if (!s.failure_reason || s.failure_reason->empty())
                invalid(s.sample_id + ": failed result without a failure reason");
            break;
        case SampleStatus::running:
            break;
    }
}

void validate(const RunManifest& m, const std::vector<std::string>& sample_ids) {
    if (m.run_id.empty()) invalid("manifest run_id is empty");
    validate(m.config);
    const std::set<std::string> ids(sample_ids.begin(), sample_ids.end());
    bool all_terminal = true;
    for (const auto& id : sample_ids) {
        auto it = m.results.find(id);
        all_terminal = all_terminal && it != m.results.end() && it->second.terminal();
    }
    for (const auto& [id, r] : m.results) {
        if (id != r.sample_id) invalid("manifest result key " + id + " does not match its sample_id");
        if (!ids.count(id)) invalid("manifest has a result for unknown sample " + id);
        validate(r, m.config);
    }
    if (m.completed != all_terminal)
        invalid("manifest completed flag disagrees with the terminal status of its samples");
}

// ---------------------------------------------------------------------------
// JSON

NLOHMANN_JSON_SERIALIZE_ENUM(CritiqueKind, {
    {CritiqueKind::initial_prediction, "initial_prediction"},
    {CritiqueKind::inconsistency_report, "inconsistency_report"},
})

NLOHMANN_JSON_SERIALIZE_ENUM(SampleStatus, {
    {SampleStatus::running, "running"},
    {SampleStatus::complete, "complete"},
    {SampleStatus::failed, "failed"},
})

void to_json(Json& j, const Sample& v) {
    j = Json{{"id", v.id}, {"prefix_video", v.prefix_video}, {"description", v.description}};
    if (v.ground_truth) j["ground_truth"] = *v.ground_truth;
}

void from_json(const Json& j, Sample& v) {
    if (!j.is_object()) invalid("sample must be a JSON object");
    reject_unknown_keys(j, {"id", "prefix_video", "description", "ground_truth"}, "sample");
    for (const char* key : {"id", "prefix_video", "description"}) {
        if (!j.contains(key)) invalid(std::string("missing field \"") + key + "\"");
        if (!j.at(key).is_string()) invalid(std::string("field \"") + key + "\" must be a string");
    }
    v.id = j.at("id").get<std::string>();
    v.prefix_video = j.at("prefix_video").get<std::string>();
    v.description = j.at("description").get<std::string>();
    v.ground_truth.reset();
    if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) invalid("field \"ground_truth\" must be a string");
        v.ground_truth = it->get<std::string>();
    }
}

void to_json(Json& j, const PhysicsContext& v) {
    j = Json{{"knowledge_base", v.knowledge_base},
             {"instructions", v.instructions},
             {"template", v.template_text}};
}

void from_json(const Json& j, PhysicsContext& v) {
    reject_unknown_keys(j, {"knowledge_base", "instructions", "template"}, "physics_context");
    v = PhysicsContext::defaults();
    read_optional(j, "knowledge_base", v.knowledge_base);
    read_optional(j, "instructions", v.instructions);
    read_optional(j, "template", v.template_text);
}

void to_json(Json& j, const Prompt& v) {
    j = Json{{"text", v.text}, {"iteration", v.iteration}, {"char_count", v.char_count}};
}

void from_json(const Json& j, Prompt& v) {
    j.at("text").get_to(v.text);
    j.at("iteration").get_to(v.iteration);
    j.at("char_count").get_to(v.char_count);
}

void to_json(Json& j, const Critique& v) {
    j = Json{{"text", v.text}, {"iteration", v.iteration}, {"kind", v.kind}};
}

void from_json(const Json& j, Critique& v) {
    j.at("text").get_to(v.text);
    j.at("iteration").get_to(v.iteration);
    j.at("kind").get_to(v.kind);
}

void to_json(Json& j, const VideoArtifact& v) {
    j = Json{{"uri", v.uri},
             {"duration_s", v.duration_s},
             {"fps", v.fps},
             {"producer_iteration", v.producer_iteration},
             {"checksum", v.checksum}};
}

void from_json(const Json& j, VideoArtifact& v) {
    j.at("uri").get_to(v.uri);
    j.at("duration_s").get_to(v.duration_s);
    j.at("fps").get_to(v.fps);
    j.at("producer_iteration").get_to(v.producer_iteration);
    j.at("checksum").get_to(v.checksum);
}

void to_json(Json& j, const RetryPolicy& v) {
    j = Json{{"max_attempts", v.max_attempts}, {"base_backoff_ms", v.base_backoff_ms}};
}

void from_json(const Json& j, RetryPolicy& v) {
    reject_unknown_keys(j, {"max_attempts", "base_backoff_ms"}, "retry");
    v = RetryPolicy{};
    read_optional(j, "max_attempts", v.max_attempts);
    read_optional(j, "base_backoff_ms", v.base_backoff_ms);
}

void to_json(Json& j, const EndpointSpec& v) {
    j = Json{{"base_url", v.base_url},
             {"model_id", v.model_id},
             {"timeout_ms", v.timeout_ms},
             {"credential_env_var", v.credential_env_var},
             {"poll_interval_ms", v.poll_interval_ms}};
}

void from_json(const Json& j, EndpointSpec& v) {
    reject_unknown_keys(j, {"base_url", "model_id", "timeout_ms", "credential_env_var", "poll_interval_ms"},
                        "endpoint");
    v = EndpointSpec{};
    j.at("base_url").get_to(v.base_url);
    read_optional(j, "model_id", v.model_id);
    read_optional(j, "timeout_ms", v.timeout_ms);
    read_optional(j, "credential_env_var", v.credential_env_var);
    read_optional(j, "poll_interval_ms", v.poll_interval_ms);
}

void to_json(Json& j, const RunConfig& v) {
    j = Json{{"max_iterations", v.max_iterations},
             {"convergence_threshold", v.convergence_threshold},
             {"convergence_metric", v.convergence_metric},
             {"inference_steps", v.inference_steps},
             {"max_prompt_chars", v.max_prompt_chars},
             {"max_concurrent_samples", v.max_concurrent_samples},
             {"retry", v.retry},
             {"duration_s", v.duration_s},
             {"fps", v.fps},
             {"seed", v.seed},
             {"mock", v.mock},
             {"mock_fixture", v.mock_fixture}};
    const std::pair<const char*, const std::optional<EndpointSpec>*> endpoints[] = {
        {"analyst", &v.analyst}, {"rewriter", &v.rewriter}, {"generator", &v.generator}, {"scorer", &v.scorer}};
    for (const auto& [key, e] : endpoints) j[key] = *e ? Json(**e) : Json(nullptr);
}

void from_json(const Json& j, RunConfig& v) {
    if (!j.is_object()) invalid("config must be a JSON object");
    reject_unknown_keys(j,
                        {"max_iterations", "convergence_threshold", "convergence_metric", "inference_steps",
                         "max_prompt_chars", "max_concurrent_samples", "retry", "duration_s", "fps", "seed",
                         "mock", "mock_fixture", "analyst", "rewriter", "generator", "scorer"},
                        "config");
    v = RunConfig{};
    read_optional(j, "max_iterations", v.max_iterations);
    read_optional(j, "convergence_threshold", v.convergence_threshold);
    read_optional(j, "convergence_metric", v.convergence_metric);
    read_optional(j, "inference_steps", v.inference_steps);
    read_optional(j, "max_prompt_chars", v.max_prompt_chars);
    read_optional(j, "max_concurrent_samples", v.max_concurrent_samples);
    read_optional(j, "retry", v.retry);
    read_optional(j, "duration_s", v.duration_s);
    read_optional(j, "fps", v.fps);
    read_optional(j, "seed", v.seed);
    read_optional(j, "mock", v.mock);
    read_optional(j, "mock_fixture", v.mock_fixture);
    read_optional(j, "analyst", v.analyst);
    read_optional(j, "rewriter", v.rewriter);
    read_optional(j, "generator", v.generator);
    read_optional(j, "scorer", v.scorer);
}

void to_json(Json& j, const IterationRecord& v) {
    j = Json{{"index", v.index},
             {"prompt", v.prompt},
             {"critique", v.critique},
             {"video", v.video},
             {"started_at", v.started_at},
             {"finished_at", v.finished_at},
             {"adapter_meta", v.adapter_meta}};
}

void from_json(const Json& j, IterationRecord& v) {
    j.at("index").get_to(v.index);
    j.at("prompt").get_to(v.prompt);
    j.at("critique").get_to(v.critique);
    j.at("video").get_to(v.video);
    j.at("started_at").get_to(v.started_at);
    j.at("finished_at").get_to(v.finished_at);
    j.at("adapter_meta").get_to(v.adapter_meta);
}

void to_json(Json& j, const SampleResult& v) {
    j = Json{{"sample_id", v.sample_id},
             {"iterations", v.iterations},
             {"converged", v.converged},
             {"convergence_similarity", v.convergence_similarity ? Json(*v.convergence_similarity) : Json(nullptr)},
             {"final_video", v.final_video ? Json(*v.final_video) : Json(nullptr)},
             {"status", v.status},
             {"failure_reason", v.failure_reason ? Json(*v.failure_reason) : Json(nullptr)},
             {"failure_detail", v.failure_detail ? Json(*v.failure_detail) : Json(nullptr)},
             {"next_critique", v.next_critique ? Json(*v.next_critique) : Json(nullptr)},
             {"next_prompt", v.next_prompt ? Json(*v.next_prompt) : Json(nullptr)}};
}

void from_json(const Json& j, SampleResult& v) {
    j.at("sample_id").get_to(v.sample_id);
    j.at("iterations").get_to(v.iterations);
    j.at("converged").get_to(v.converged);
    j.at("status").get_to(v.status);
    read_optional(j, "convergence_similarity", v.convergence_similarity);
    read_optional(j, "final_video", v.final_video);
    read_optional(j, "failure_reason", v.failure_reason);
    read_optional(j, "failure_detail", v.failure_detail);
    read_optional(j, "next_critique", v.next_critique);
    read_optional(j, "next_prompt", v.next_prompt);
}

void to_json(Json& j, const RunManifest& v) {
    j = Json{{"run_id", v.run_id},
             {"config", v.config},
             {"dataset_digest", v.dataset_digest},
             {"results", v.results},
             {"created_at", v.created_at},
             {"completed", v.completed}};
}

void from_json(const Json& j, RunManifest& v) {
    j.at("run_id").get_to(v.run_id);
    j.at("config").get_to(v.config);
    j.at("dataset_digest").get_to(v.dataset_digest);
    j.at("results").get_to(v.results);
    j.at("created_at").get_to(v.created_at);
    j.at("completed").get_to(v.completed);
}

Json without_timestamps(const Json& manifest_json) {
    Json out = manifest_json;
    out.erase("created_at");
    if (!out.contains("results")) return out;
    for (auto& [id, result] : out["results"].items()) {
        for (auto& rec : result["iterations"]) {
            rec.erase("started_at");
            rec.erase("finished_at");
            auto& meta = rec["adapter_meta"];
            for (auto it = meta.begin(); it != meta.end();) {
                const auto& key = it.key();
                if (key.size() > 3 && key.compare(key.size() - 3, 3, "_ms") == 0)
                    it = meta.erase(it);
                else
                    ++it;
            }
        }
    }
    return out;
}

}  // namespace vidrefine
