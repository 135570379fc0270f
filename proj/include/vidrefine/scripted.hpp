// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vidrefine/adapters.hpp"

namespace vidrefine {

/// Deterministic stand-ins for the three model roles, driven by a JSON
/// fixture. Every output is a pure function of (fixture, request, seed).
///
/// An output is either a string or {"error": "<Kind>", "message": "..."},
/// which raises the named error (ModelRefusal, TransportError,
/// EmptyResponse, GenerationFailed, PromptTooLong). String outputs are
/// templates: {description} expands to the request's prior description or
/// critique text, {uri} to the video URI, {iteration} to the iteration and
/// {seed} to the seed.
struct ScriptedFixture {
    Json analyst = Json::object();
    Json rewriter = Json::object();
    Json generator = Json::object();

    /// Behaviour of `--mock` without a fixture file: the analyst predicts
    /// from the description and echoes the prompt back as its critique, the
    /// rewriter is the identity.
    static ScriptedFixture builtin();

    static ScriptedFixture load(const std::filesystem::path& path);
    static ScriptedFixture from_json(const Json& j);
};

/// Lookup key for an analyst request, before hashing:
/// "<mode>|<video uri>|<prior description>".
std::string analyst_key(const AnalystRequest& req);

/// Analyst fixture section:
///   "entries": { key-or-sha256(key): output, "<mode>|<video uri>": output }
///   "rules": [{"mode"?, "uri_prefix"?, "iteration"?, "output"}]
///   "default_predict", "default_critique": output (default "{description}")
/// Lookup tries the full key, its SHA-256, then "<mode>|<video uri>", then
/// the first matching rule, then the per-mode default.
class ScriptedAnalyst final : public Analyst {
public:
    explicit ScriptedAnalyst(Json section, std::uint64_t seed = 0);
    Critique analyze(const AnalystRequest& req) override;
    std::string model_id() const override { return "scripted-analyst"; }

private:
    Json section_;
    std::uint64_t seed_;
};

/// Rewriter fixture section, "mode" is one of:
///   identity  - prompt == critique text
///   constant  - "constant": text
///   sequence  - "sequence": [...], indexed by critique iteration, last repeats
///   table     - "table": {critique text: output}, identity when absent
class ScriptedRewriter final : public Rewriter {
public:
    explicit ScriptedRewriter(Json section, std::uint64_t seed = 0);
    Prompt rewrite(const Critique& critique, int max_chars) override;
    std::string model_id() const override { return "scripted-rewriter"; }

private:
    Json section_;
    std::uint64_t seed_;
};

/// Produces uri "mock://<prefix uri>/<prompt>" and checksum
/// sha256("<prefix uri>|<prompt>|<inference steps>"). Optional
/// "failures": {prompt text: output} injects errors.
class ScriptedGenerator final : public Generator {
public:
    explicit ScriptedGenerator(Json section = Json::object());
    VideoArtifact generate(const GeneratorRequest& req) override;
    std::string model_id() const override { return "scripted-generator"; }

private:
    Json section_;
};

AdapterSet scripted_adapters(const ScriptedFixture& fixture, std::uint64_t seed);

/// Reads the score from a sidecar text file. For a local video path the
/// sidecar is "<path>.score"; for other URIs it is
/// "<sidecar_dir>/<sha256(uri)>.score".
class SidecarScorer final : public Scorer {
public:
    explicit SidecarScorer(std::filesystem::path sidecar_dir = {}, std::filesystem::path base_dir = {});
    double score(const VideoArtifact& video, const VideoArtifact& ground_truth) override;

    std::filesystem::path sidecar_for(const VideoArtifact& video) const;

private:
    std::filesystem::path sidecar_dir_;
    std::filesystem::path base_dir_;
};

/// 100 x fraction of agreeing checksum characters; a video scored against
/// itself gets the maximum, 100.
class SelfSimilarityScorer final : public Scorer {
public:
    double score(const VideoArtifact& video, const VideoArtifact& ground_truth) override;
};

}  // namespace vidrefine
