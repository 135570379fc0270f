// SPDX-License-Identifier: Apache-2.0

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "vidrefine/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "httplib.h"
#include "vidrefine/digest.hpp"

namespace vidrefine {
namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

Url split_url(const std::string& base) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint base_url must include a scheme");
    const auto path_start = base.find('/', scheme_end + 3);
    Url u;
    u.origin = base.substr(0, path_start);
    u.prefix = path_start == std::string::npos ? "" : base.substr(path_start);
    while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
    return u;
}

class HttpSession {
public:
    explicit HttpSession(const EndpointSpec& ep) : url_(split_url(ep.base_url)), client_(url_.origin) {
        const auto timeout = std::chrono::milliseconds(ep.timeout_ms);
        client_.set_connection_timeout(timeout);
        client_.set_read_timeout(timeout);
        client_.set_write_timeout(timeout);
        if (!ep.credential_env_var.empty()) {
            const char* secret = std::getenv(ep.credential_env_var.c_str());
            if (!secret || !*secret)
                throw TransportError("credential variable " + ep.credential_env_var + " is not set", false);
            headers_.emplace("Authorization", std::string("Bearer ") + secret);
        }
    }

    Json post(const std::string& path, const Json& body) {
        auto res = client_.Post(url_.prefix + path, headers_, body.dump(), "application/json");
        return decode(res, "POST " + path);
    }

    Json get(const std::string& path) {
        auto res = client_.Get(url_.prefix + path, headers_);
        return decode(res, "GET " + path);
    }

private:
    Json decode(const httplib::Result& res, const std::string& what) {
        if (!res) throw TransportError(what + " failed: " + httplib::to_string(res.error()));
        const int status = res->status;
        if (status < 200 || status >= 300) {
            const bool retryable = status == 408 || status == 429 || status >= 500;
            throw TransportError(what + " returned HTTP " + std::to_string(status), retryable);
        }
        try {
            return Json::parse(res->body);
        } catch (const Json::exception&) {
            throw TransportError(what + " returned a body that is not JSON");
        }
    }

    Url url_;
    httplib::Client client_;
    httplib::Headers headers_;
};

Json video_ref(const VideoArtifact& v) { return Json{{"uri", v.uri}, {"checksum", v.checksum}}; }

}  // namespace

std::string chat_reply_text(const Json& response) {
    const auto choices = response.find("choices");
    if (choices == response.end() || !choices->is_array() || choices->empty())
        throw EmptyResponse("chat response has no choices");
    const auto& choice = (*choices)[0];
    if (choice.value("finish_reason", std::string()) == "content_filter")
        throw ModelRefusal("model output was stopped by its content filter");
    const auto message = choice.find("message");
    if (message == choice.end() || !message->is_object()) throw EmptyResponse("chat response has no message");
    if (auto r = message->find("refusal"); r != message->end() && r->is_string() && !r->get<std::string>().empty())
        throw ModelRefusal("model refused: " + r->get<std::string>());
    const auto content = message->find("content");
    if (content == message->end() || !content->is_string()) throw EmptyResponse("chat message has no text content");
    const auto text = content->get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw EmptyResponse("chat message is blank");
    return text;
}

RemoteAnalyst::RemoteAnalyst(EndpointSpec endpoint) : endpoint_(std::move(endpoint)) { validate(endpoint_); }

Json RemoteAnalyst::request_body(const EndpointSpec& endpoint, const AnalystRequest& req) {
    const std::string lead = req.mode == AnalystMode::predict
                                 ? "Predict the next seconds of this clip. Scene description:\n"
                                 : "This continuation was generated from the prompt below. Report every "
                                   "physical inconsistency and describe the corrected motion. Prompt:\n";
    return Json{{"model", endpoint.model_id},
                {"messages",
                 Json::array({Json{{"role", "system"}, {"content", req.system_input}},
                              Json{{"role", "user"},
                                   {"content", Json::array({Json{{"type", "text"}, {"text", lead + req.prior_description}},
                                                            Json{{"type", "video_url"},
                                                                 {"video_url", Json{{"url", req.video.uri}}}}})}}})}};
}

Critique RemoteAnalyst::analyze(const AnalystRequest& req) {
    validate(req);
    HttpSession http(endpoint_);
    Critique c;
    c.text = chat_reply_text(http.post("/chat/completions", request_body(endpoint_, req)));
    c.iteration = req.iteration;
    c.kind = req.mode == AnalystMode::predict ? CritiqueKind::initial_prediction : CritiqueKind::inconsistency_report;
    return c;
}

RemoteRewriter::RemoteRewriter(EndpointSpec endpoint) : endpoint_(std::move(endpoint)) { validate(endpoint_); }

Json RemoteRewriter::request_body(const EndpointSpec& endpoint, const Critique& critique, int max_chars) {
    const std::string instruction =
        "Rewrite the physics analysis into one concise prompt for a video generation model. Keep the physical "
        "cues, drop the reasoning, use at most " +
        std::to_string(max_chars) + " characters, and reply with the prompt only.";
    return Json{{"model", endpoint.model_id},
                {"messages", Json::array({Json{{"role", "system"}, {"content", instruction}},
                                          Json{{"role", "user"}, {"content", critique.text}}})}};
}

Prompt RemoteRewriter::rewrite(const Critique& critique, int max_chars) {
    if (critique.text.empty()) throw ValidationError("cannot rewrite an empty critique");
    HttpSession http(endpoint_);
    const auto text = chat_reply_text(http.post("/chat/completions", request_body(endpoint_, critique, max_chars)));
    return finish_prompt(text, critique, max_chars);
}

RemoteGenerator::RemoteGenerator(EndpointSpec endpoint, Sleeper sleep)
    : endpoint_(std::move(endpoint)), sleep_(std::move(sleep)) {
    validate(endpoint_);
}

Json RemoteGenerator::request_body(const EndpointSpec& endpoint, const GeneratorRequest& req) {
    return Json{{"model", endpoint.model_id},
                {"prompt", req.prompt.text},
                {"prefix_video", video_ref(req.prefix_video)},
                {"inference_steps", req.inference_steps},
                {"duration_s", req.duration_s},
                {"fps", req.fps}};
}

VideoArtifact RemoteGenerator::generate(const GeneratorRequest& req) {
    validate(req);
    HttpSession http(endpoint_);
    const auto submitted = http.post("/jobs", request_body(endpoint_, req));
    const auto id = submitted.value("job_id", std::string());
    if (id.empty()) throw TransportError("generator job submission returned no job_id", false);

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(endpoint_.timeout_ms);
    for (;;) {
        const auto job = http.get("/jobs/" + id);
        const auto status = job.value("status", std::string());
        if (status == "succeeded") {
            const auto video = job.value("video", Json::object());
            VideoArtifact v;
            v.uri = video.value("uri", std::string());
            if (v.uri.empty()) throw GenerationFailed("job " + id + " succeeded without a video uri");
            v.checksum = video.value("checksum", std::string());
            if (v.checksum.empty()) v.checksum = sha256_hex(v.uri);
            v.duration_s = req.duration_s;
            v.fps = req.fps;
            v.producer_iteration = req.prompt.iteration;
            return v;
        }
        if (status == "failed")
            throw GenerationFailed("job " + id + " failed: " + job.value("error", std::string("unknown error")));
        if (status != "queued" && status != "running")
            throw TransportError("job " + id + " reported unknown status \"" + status + "\"", false);
        if (std::chrono::steady_clock::now() >= deadline)
            throw TransportError("job " + id + " did not finish within " + std::to_string(endpoint_.timeout_ms) + " ms");
        sleep_(std::chrono::milliseconds(endpoint_.poll_interval_ms));
    }
}

RemoteScorer::RemoteScorer(EndpointSpec endpoint) : endpoint_(std::move(endpoint)) { validate(endpoint_); }

double RemoteScorer::score(const VideoArtifact& video, const VideoArtifact& ground_truth) {
    try {
        HttpSession http(endpoint_);
        const auto res = http.post("/score", Json{{"model", endpoint_.model_id},
                                                  {"video", video_ref(video)},
                                                  {"ground_truth", video_ref(ground_truth)}});
        const auto it = res.find("score");
        if (it == res.end() || !it->is_number()) throw ScoreUnavailable("scorer response has no numeric score");
        const double s = it->get<double>();
        if (!std::isfinite(s)) throw ScoreUnavailable("scorer returned a non-finite score");
        return s;
    } catch (const ScoreUnavailable&) {
        throw;
    } catch (const Error& e) {
        throw ScoreUnavailable(std::string("remote scorer failed: ") + e.what());
    }
}

}  // namespace vidrefine
