// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "vidrefine/adapters.hpp"

namespace vidrefine {

/// HTTP-backed model roles. Wire formats are documented in
/// docs/wire-formats.md.
///
/// Analyst and rewriter POST "<base_url>/chat/completions" with a
/// chat-completion body; the generator submits "<base_url>/jobs" and polls
/// "<base_url>/jobs/<id>"; the scorer POSTs "<base_url>/score".
///
/// When `credential_env_var` is set, its value is sent as a bearer token.
/// It is read per request and never stored, logged or put in error text.

class RemoteAnalyst final : public Analyst {
public:
    explicit RemoteAnalyst(EndpointSpec endpoint);
    Critique analyze(const AnalystRequest& req) override;
    std::string model_id() const override { return endpoint_.model_id; }

    /// Request body for `req`, exposed for contract tests.
    static Json request_body(const EndpointSpec& endpoint, const AnalystRequest& req);

private:
    EndpointSpec endpoint_;
};

class RemoteRewriter final : public Rewriter {
public:
    explicit RemoteRewriter(EndpointSpec endpoint);
    Prompt rewrite(const Critique& critique, int max_chars) override;
    std::string model_id() const override { return endpoint_.model_id; }

    static Json request_body(const EndpointSpec& endpoint, const Critique& critique, int max_chars);

private:
    EndpointSpec endpoint_;
};

class RemoteGenerator final : public Generator {
public:
    RemoteGenerator(EndpointSpec endpoint, Sleeper sleep = real_sleeper());
    VideoArtifact generate(const GeneratorRequest& req) override;
    std::string model_id() const override { return endpoint_.model_id; }

    static Json request_body(const EndpointSpec& endpoint, const GeneratorRequest& req);

private:
    EndpointSpec endpoint_;
    Sleeper sleep_;
};

class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(EndpointSpec endpoint);
    double score(const VideoArtifact& video, const VideoArtifact& ground_truth) override;

private:
    EndpointSpec endpoint_;
};

/// Extracts the reply text of a chat-completion response. Throws
/// ModelRefusal for refusals or content-filter stops and EmptyResponse for
/// blank content.
std::string chat_reply_text(const Json& response);

}  // namespace vidrefine
