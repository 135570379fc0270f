// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "vidrefine/error.hpp"
#include "vidrefine/model.hpp"

namespace vidrefine {

enum class AnalystMode { predict, critique };

std::string_view to_string(AnalystMode mode);

/// Arguments of the analyst. `video` is the prefix clip in predict mode and
/// a generated continuation in critique mode.
struct AnalystRequest {
    std::string system_input;
    VideoArtifact video;
    std::string prior_description;
    AnalystMode mode = AnalystMode::predict;
    int iteration = 1;  // iteration of the critique to produce
};

/// Arguments of the generator.
struct GeneratorRequest {
    Prompt prompt;
    VideoArtifact prefix_video;
    int inference_steps = 16;
    double duration_s = 5.0;
    double fps = 24.0;
};

/// Checks the pairing rules: predict pairs with a source clip, critique
/// with a generated video.
void validate(const AnalystRequest& req);
void validate(const GeneratorRequest& req);

/// Vision-language role: initial physics prediction and critique of
/// generated videos.
class Analyst {
public:
    virtual ~Analyst() = default;
    virtual Critique analyze(const AnalystRequest& req) = 0;
    virtual std::string model_id() const = 0;
};

/// Language role: condenses analyst output into a generator prompt of at
/// most `max_chars` code points.
class Rewriter {
public:
    virtual ~Rewriter() = default;
    virtual Prompt rewrite(const Critique& critique, int max_chars) = 0;
    virtual std::string model_id() const = 0;
};

/// Video role: continues the prefix clip according to the prompt.
class Generator {
public:
    virtual ~Generator() = default;
    virtual VideoArtifact generate(const GeneratorRequest& req) = 0;
    virtual std::string model_id() const = 0;
};

/// Scoring plugin boundary. Higher is better.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score(const VideoArtifact& video, const VideoArtifact& ground_truth) = 0;
};

/// The model roles a pipeline runs against. Implementations must accept
/// concurrent calls.
struct AdapterSet {
    std::shared_ptr<Analyst> analyst;
    std::shared_ptr<Rewriter> rewriter;
    std::shared_ptr<Generator> generator;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

/// Delay before retry number `retry` (1-based): base * 2^(retry-1).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry);

/// Runs `fn`, retrying retryable errors up to `policy.max_attempts` total
/// attempts with exponential backoff. EmptyResponse is retried at most once;
/// a second one is rethrown as non-retryable. Non-retryable errors and
/// non-`Error` exceptions propagate immediately.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, const Sleeper& sleep, Fn&& fn) -> decltype(fn()) {
    int empty_seen = 0;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const EmptyResponse& e) {
            if (++empty_seen > 1 || attempt >= policy.max_attempts)
                throw Error("EmptyResponse", e.what(), false);
        } catch (const Error& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
        }
        sleep(backoff_delay(policy, attempt));
    }
}

/// Decorators that apply `with_retry` to every call of the wrapped adapter.
std::shared_ptr<Analyst> retrying(std::shared_ptr<Analyst> inner, RetryPolicy policy, Sleeper sleep);
std::shared_ptr<Rewriter> retrying(std::shared_ptr<Rewriter> inner, RetryPolicy policy, Sleeper sleep);
std::shared_ptr<Generator> retrying(std::shared_ptr<Generator> inner, RetryPolicy policy, Sleeper sleep);

/// Enforces the rewriter's output contract on a raw model reply.
Prompt finish_prompt(std::string_view raw, const Critique& critique, int max_chars);

}  // namespace vidrefine
