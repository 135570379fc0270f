// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vidrefine {

using Json = nlohmann::json;

/// One benchmark item: a conditioning clip plus its scene description.
struct Sample {
    std::string id;
    std::string prefix_video;  // URI or filesystem path
    std::string description;
    std::optional<std::string> ground_truth;

    bool operator==(const Sample&) const = default;
};

/// Physics knowledge base and task instructions injected into every analyst
/// call. `template_text` must contain each of {B}, {I} and {description}
/// exactly once.
struct PhysicsContext {
    std::string knowledge_base;
    std::string instructions;
    std::string template_text;

    /// Placeholder defaults; real deployments replace both texts.
    static PhysicsContext defaults();

    bool operator==(const PhysicsContext&) const = default;
};

/// Substitutes {B}, {I} and {description}. Throws MissingPlaceholder when the
/// template lacks one (or repeats one).
std::string render_analyst_input(const PhysicsContext& ctx, std::string_view description);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

/// A generator-compatible prompt. `char_count` counts code points.
struct Prompt {
    std::string text;
    int iteration = 1;
    std::size_t char_count = 0;

    /// Trims surrounding whitespace and fills in `char_count`.
    static Prompt make(std::string_view text, int iteration);

    bool operator==(const Prompt&) const = default;
};

enum class CritiqueKind { initial_prediction, inconsistency_report };

struct Critique {
    std::string text;
    int iteration = 1;
    CritiqueKind kind = CritiqueKind::initial_prediction;

    bool operator==(const Critique&) const = default;
};

/// Video content is only ever handled by reference. Source clips (the
/// conditioning prefix) carry producer_iteration 0; generated videos carry
/// the loop index that produced them.
struct VideoArtifact {
    std::string uri;
    double duration_s = 5.0;
    double fps = 24.0;
    int producer_iteration = 1;
    std::string checksum;

    bool operator==(const VideoArtifact&) const = default;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 500;

    bool operator==(const RetryPolicy&) const = default;
};

/// Where a remote model lives. The credential itself is read from the named
/// environment variable at call time and is never stored.
struct EndpointSpec {
    std::string base_url;
    std::string model_id;
    int timeout_ms = 60000;
    std::string credential_env_var;
    int poll_interval_ms = 2000;  // generator jobs only

    bool operator==(const EndpointSpec&) const = default;
};

struct RunConfig {
    int max_iterations = 4;
    double convergence_threshold = 0.9;
    std::string convergence_metric = "jaccard";
    int inference_steps = 16;
    int max_prompt_chars = 1000;
    int max_concurrent_samples = 4;
    RetryPolicy retry;
    double duration_s = 5.0;
    double fps = 24.0;
    std::uint64_t seed = 0;
    bool mock = false;
    std::string mock_fixture;  // empty: built-in scripted behaviour
    std::optional<EndpointSpec> analyst;
    std::optional<EndpointSpec> rewriter;
    std::optional<EndpointSpec> generator;
    std::optional<EndpointSpec> scorer;

    bool operator==(const RunConfig&) const = default;
};

/// One loop step k: the critique t^k that led to prompt p^k, and the video
/// v^k generated from it.
struct IterationRecord {
    int index = 1;
    Prompt prompt;
    Critique critique;
    VideoArtifact video;
    std::string started_at;
    std::string finished_at;
    std::map<std::string, std::string> adapter_meta;

    bool operator==(const IterationRecord&) const = default;
};

/// `running` marks a partially recorded sample in an interrupted run.
enum class SampleStatus { running, complete, failed };

struct SampleResult {
    std::string sample_id;
    std::vector<IterationRecord> iterations;
    bool converged = false;
    std::optional<double> convergence_similarity;
    std::optional<VideoArtifact> final_video;
    SampleStatus status = SampleStatus::running;
    std::optional<std::string> failure_reason;  // error kind, e.g. "ModelRefusal"
    std::optional<std::string> failure_detail;  // error message
    // Last critique/prompt computed after the final generation. Never used
    // for generation.
    std::optional<Critique> next_critique;
    std::optional<Prompt> next_prompt;

    bool terminal() const { return status != SampleStatus::running; }

    bool operator==(const SampleResult&) const = default;
};

struct RunManifest {
    std::string run_id;
    RunConfig config;
    std::string dataset_digest;
    std::map<std::string, SampleResult> results;
    std::string created_at;
    bool completed = false;

    bool operator==(const RunManifest&) const = default;
};

// Validation passes. Each throws ValidationError naming the broken invariant.
void validate(const Sample& sample);
void validate(const PhysicsContext& ctx);
void validate(const Prompt& prompt, int max_prompt_chars);
void validate(const Critique& critique);
void validate(const VideoArtifact& video);
void validate(const RetryPolicy& retry);
void validate(const EndpointSpec& endpoint);
void validate(const RunConfig& cfg);
void validate(const IterationRecord& record, const RunConfig& cfg);
void validate(const SampleResult& result, const RunConfig& cfg);
/// `sample_ids` is the dataset; checks the completed flag against it.
void validate(const RunManifest& manifest, const std::vector<std::string>& sample_ids);

std::string_view to_string(CritiqueKind kind);
std::string_view to_string(SampleStatus status);

/// UTC wall clock as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string utc_now_iso();

void to_json(Json& j, const Sample& v);
void from_json(const Json& j, Sample& v);
void to_json(Json& j, const PhysicsContext& v);
void from_json(const Json& j, PhysicsContext& v);
void to_json(Json& j, const Prompt& v);
void from_json(const Json& j, Prompt& v);
void to_json(Json& j, const Critique& v);
void from_json(const Json& j, Critique& v);
void to_json(Json& j, const VideoArtifact& v);
void from_json(const Json& j, VideoArtifact& v);
void to_json(Json& j, const RetryPolicy& v);
void from_json(const Json& j, RetryPolicy& v);
void to_json(Json& j, const EndpointSpec& v);
void from_json(const Json& j, EndpointSpec& v);
void to_json(Json& j, const RunConfig& v);
void from_json(const Json& j, RunConfig& v);
void to_json(Json& j, const IterationRecord& v);
void from_json(const Json& j, IterationRecord& v);
void to_json(Json& j, const SampleResult& v);
void from_json(const Json& j, SampleResult& v);
void to_json(Json& j, const RunManifest& v);
void from_json(const Json& j, RunManifest& v);

/// Drops wall-clock and latency fields so manifests from separate runs can
/// be compared.
Json without_timestamps(const Json& manifest_json);

}  // namespace vidrefine
