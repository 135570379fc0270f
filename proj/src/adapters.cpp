// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/adapters.hpp"

#include <thread>

namespace vidrefine {

std::string_view to_string(AnalystMode mode) { return mode == AnalystMode::predict ? "predict" : "critique"; }

void validate(const AnalystRequest& req) {
    if (req.system_input.empty()) throw ValidationError("analyst request has an empty system input");
    validate(req.video);
    if (req.mode == AnalystMode::predict && req.video.producer_iteration != 0)
        throw ValidationError("predict requests must carry the prefix clip");
    if (req.mode == AnalystMode::critique && req.video.producer_iteration < 1)
        throw ValidationError("critique requests must carry a generated video");
    if (req.iteration < 1) throw ValidationError("analyst request iteration must be >= 1");
}

void validate(const GeneratorRequest& req) {
    if (req.inference_steps <= 0) throw ValidationError("inference_steps must be > 0");
    if (!(req.duration_s > 0) || !(req.fps > 0)) throw ValidationError("duration_s and fps must be > 0");
    if (req.prompt.text.empty()) throw ValidationError("generator request has an empty prompt");
    validate(req.prefix_video);
}

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry) {
    const int shift = std::min(std::max(retry - 1, 0), 30);
    return std::chrono::milliseconds(static_cast<long long>(policy.base_backoff_ms) << shift);
}

Prompt finish_prompt(std::string_view raw, const Critique& critique, int max_chars) {
    Prompt p = Prompt::make(raw, critique.iteration);
    if (p.text.empty()) throw EmptyResponse("rewriter returned an empty prompt");
    if (p.char_count > static_cast<std::size_t>(max_chars))
        throw PromptTooLong("rewritten prompt has " + std::to_string(p.char_count) +
                            " chars, limit is " + std::to_string(max_chars));
    return p;
}

namespace {

class RetryingAnalyst final : public Analyst {
public:
    RetryingAnalyst(std::shared_ptr<Analyst> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    Critique analyze(const AnalystRequest& req) override {
        return with_retry(policy_, sleep_, [&] { return inner_->analyze(req); });
    }
    std::string model_id() const override { return inner_->model_id(); }

private:
    std::shared_ptr<Analyst> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

class RetryingRewriter final : public Rewriter {
public:
    RetryingRewriter(std::shared_ptr<Rewriter> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    Prompt rewrite(const Critique& critique, int max_chars) override {
        return with_retry(policy_, sleep_, [&] { return inner_->rewrite(critique, max_chars); });
    }
    std::string model_id() const override { return inner_->model_id(); }

private:
    std::shared_ptr<Rewriter> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

class RetryingGenerator final : public Generator {
public:
    RetryingGenerator(std::shared_ptr<Generator> inner, RetryPolicy policy, Sleeper sleep)
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)) {}
    VideoArtifact generate(const GeneratorRequest& req) override {
        return with_retry(policy_, sleep_, [&] { return inner_->generate(req); });
    }
    std::string model_id() const override { return inner_->model_id(); }

private:
    std::shared_ptr<Generator> inner_;
    RetryPolicy policy_;
    Sleeper sleep_;
};

}  // namespace

std::shared_ptr<Analyst> retrying(std::shared_ptr<Analyst> inner, RetryPolicy policy, Sleeper sleep) {
    return std::make_shared<RetryingAnalyst>(std::move(inner), policy, std::move(sleep));
}

std::shared_ptr<Rewriter> retrying(std::shared_ptr<Rewriter> inner, RetryPolicy policy, Sleeper sleep) {
    return std::make_shared<RetryingRewriter>(std::move(inner), policy, std::move(sleep));
}

std::shared_ptr<Generator> retrying(std::shared_ptr<Generator> inner, RetryPolicy policy, Sleeper sleep) {
    return std::make_shared<RetryingGenerator>(std::move(inner), policy, std::move(sleep));
}

}  // namespace vidrefine
