// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "vidrefine/remote.hpp"
#include "vidrefine/scripted.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

// Adapter failure that ends the current sample.
struct SampleFailure {
    std::string kind;
    std::string message;
};

template <typename Fn>
auto guarded(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw SampleFailure{e.kind(), e.what()};
    }
}

using Clock = std::chrono::steady_clock;

std::string elapsed_ms(Clock::time_point since) {
    return std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count());
}

}  // namespace

Pipeline::Pipeline(AdapterSet adapters, PhysicsContext ctx, RunConfig cfg, fs::path dataset_base_dir)
    : adapters_(std::move(adapters)), ctx_(std::move(ctx)), cfg_(std::move(cfg)), base_dir_(std::move(dataset_base_dir)) {
    if (!adapters_.analyst || !adapters_.rewriter || !adapters_.generator)
        throw ValidationError("pipeline needs an analyst, a rewriter and a generator");
    validate(cfg_);
    validate(ctx_);
    if (!is_known_metric(cfg_.convergence_metric))
        throw ValidationError("unknown convergence metric \"" + cfg_.convergence_metric + "\"");
}

Pipeline::Step Pipeline::predict(const Sample& sample, const std::string& system_input) const {
    Step step;
    AnalystRequest req;
    req.system_input = system_input;
    req.video = prefix_artifact(sample, base_dir_, cfg_.fps);
    req.prior_description = sample.description;
    req.mode = AnalystMode::predict;
    req.iteration = 1;

    auto t0 = Clock::now();
    step.critique = adapters_.analyst->analyze(req);
    step.meta["analyze_ms"] = elapsed_ms(t0);
    validate(step.critique);
    if (step.critique.kind != CritiqueKind::initial_prediction || step.critique.iteration != 1)
        throw ValidationError("analyst returned a critique that does not match a predict request");

    t0 = Clock::now();
    step.prompt = adapters_.rewriter->rewrite(step.critique, cfg_.max_prompt_chars);
    step.meta["rewrite_ms"] = elapsed_ms(t0);
    validate(step.prompt, cfg_.max_prompt_chars);
    if (step.prompt.iteration != 1) throw ValidationError("rewriter changed the iteration index");
    return step;
}

Pipeline::Step Pipeline::refine(const std::string& system_input, const VideoArtifact& video, const Prompt& used,
                                int next_k) const {
    Step step;
    AnalystRequest req;
    req.system_input = system_input;
    req.video = video;
    req.prior_description = used.text;
    req.mode = AnalystMode::critique;
    req.iteration = next_k;

    auto t0 = Clock::now();
    step.critique = adapters_.analyst->analyze(req);
    step.meta["analyze_ms"] = elapsed_ms(t0);
    validate(step.critique);
    if (step.critique.kind != CritiqueKind::inconsistency_report || step.critique.iteration != next_k)
        throw ValidationError("analyst returned a critique that does not match a critique request");

    t0 = Clock::now();
    step.prompt = adapters_.rewriter->rewrite(step.critique, cfg_.max_prompt_chars);
    step.meta["rewrite_ms"] = elapsed_ms(t0);
    validate(step.prompt, cfg_.max_prompt_chars);
    if (step.prompt.iteration != next_k) throw ValidationError("rewriter changed the iteration index");
    return step;
}

VideoArtifact Pipeline::generate(const Prompt& prompt, const VideoArtifact& prefix,
                                 std::map<std::string, std::string>& meta) const {
    GeneratorRequest req;
    req.prompt = prompt;
    req.prefix_video = prefix;
    req.inference_steps = cfg_.inference_steps;
    req.duration_s = cfg_.duration_s;
    req.fps = cfg_.fps;

    const auto t0 = Clock::now();
    auto video = adapters_.generator->generate(req);
    meta["generate_ms"] = elapsed_ms(t0);
    validate(video);
    if (video.duration_s != req.duration_s || video.fps != req.fps)
        throw ValidationError("generator returned a video with the wrong duration or frame rate");
    if (video.producer_iteration != prompt.iteration)
        throw ValidationError("generator returned a video for the wrong iteration");
    return video;
}

Prompt Pipeline::bootstrap(const Sample& sample) const {
    return predict(sample, render_analyst_input(ctx_, sample.description)).prompt;
}

SampleResult Pipeline::run_sample(const Sample& sample, RunObserver* observer,
                                  const std::optional<SampleResult>& resume_from, std::stop_token stop) const {
    SampleResult result;
    result.sample_id = sample.id;
    if (resume_from) {
        if (resume_from->sample_id != sample.id)
            throw ValidationError("resume record belongs to sample " + resume_from->sample_id);
        result.iterations = resume_from->iterations;
    }
    if (static_cast<int>(result.iterations.size()) > cfg_.max_iterations)
        throw ValidationError("resume record for " + sample.id + " exceeds max_iterations");

    const std::map<std::string, std::string> models{{"analyst_model", adapters_.analyst->model_id()},
                                                    {"rewriter_model", adapters_.rewriter->model_id()},
                                                    {"generator_model", adapters_.generator->model_id()}};

    // A converged comparison of p_k against p_{k+1}; true ends the sample.
    auto settle = [&](const Prompt& prev, const Step& next) {
        const auto report = converged(prev, next.prompt, cfg_.convergence_threshold, cfg_.convergence_metric);
        result.convergence_similarity = report.value;
        result.next_critique = next.critique;
        result.next_prompt = next.prompt;
        result.converged = report.converged;
        return report.converged;
    };

    try {
        const auto system_input = guarded([&] { return render_analyst_input(ctx_, sample.description); });
        const auto prefix = guarded([&] { return prefix_artifact(sample, base_dir_, cfg_.fps); });

        int k = static_cast<int>(result.iterations.size()) + 1;
        Step pending;
        bool done = false;
        if (k == 1) {
            pending = guarded([&] { return predict(sample, system_input); });
        } else {
            const auto& last = result.iterations.back();
            pending = guarded([&] { return refine(system_input, last.video, last.prompt, k); });
            done = settle(last.prompt, pending);
        }

        for (; !done && k <= cfg_.max_iterations; ++k) {
            if (stop.stop_requested()) throw Interrupted();
            IterationRecord rec;
            rec.index = k;
            rec.prompt = pending.prompt;
            rec.critique = pending.critique;
            rec.adapter_meta = models;
            rec.adapter_meta.insert(pending.meta.begin(), pending.meta.end());
            rec.started_at = utc_now_iso();
            rec.video = guarded([&] { return generate(rec.prompt, prefix, rec.adapter_meta); });
            rec.finished_at = utc_now_iso();
            result.iterations.push_back(std::move(rec));
            if (observer) observer->on_iteration(result);

            const auto& last = result.iterations.back();
            pending = guarded([&] { return refine(system_input, last.video, last.prompt, k + 1); });
            done = settle(last.prompt, pending);
        }
        result.final_video = result.iterations.back().video;
        result.status = SampleStatus::complete;
    } catch (const SampleFailure& f) {
        result.status = SampleStatus::failed;
        result.failure_reason = f.kind;
        result.failure_detail = f.message;
        result.converged = false;
    }
    return result;
}

RunManifest Pipeline::run_batch(const Dataset& dataset, RunManifest manifest, RunObserver* observer) const {
    std::vector<const Sample*> pending;
    for (const auto& s : dataset.samples) {
        auto it = manifest.results.find(s.id);
        if (it == manifest.results.end() || !it->second.terminal()) pending.push_back(&s);
    }

    std::mutex mu;  // guards manifest, observer calls and first_error
    std::exception_ptr first_error;
    std::stop_source stop;
    std::atomic<std::size_t> next{0};

    // Serializes observer callbacks so the observer is a single writer.
    struct Serialized final : RunObserver {
        RunObserver* inner;
        std::mutex* mu;
        void on_iteration(const SampleResult& partial) override {
            std::lock_guard lock(*mu);
            inner->on_iteration(partial);
        }
    } serialized;
    serialized.inner = observer;
    serialized.mu = &mu;

    auto worker = [&] {
        for (;;) {
            if (stop.stop_requested()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const Sample& sample = *pending[i];
            try {
                std::optional<SampleResult> prior;
                {
                    std::lock_guard lock(mu);
                    if (auto it = manifest.results.find(sample.id); it != manifest.results.end()) prior = it->second;
                }
                auto result = run_sample(sample, observer ? &serialized : nullptr, prior, stop.get_token());
                std::lock_guard lock(mu);
                manifest.results[sample.id] = result;
                if (observer) observer->on_sample_done(result);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first_error) first_error = std::current_exception();
                stop.request_stop();
                return;
            }
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_concurrent_samples), pending.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    manifest.completed = std::all_of(dataset.samples.begin(), dataset.samples.end(), [&](const Sample& s) {
        auto it = manifest.results.find(s.id);
        return it != manifest.results.end() && it->second.terminal();
    });
    if (observer) observer->on_run_done(manifest);
    return manifest;
}

RunManifest new_manifest(std::string run_id, const RunConfig& cfg, const Dataset& dataset) {
    RunManifest m;
    m.run_id = std::move(run_id);
    m.config = cfg;
    m.dataset_digest = dataset_digest(dataset.samples);
    m.created_at = utc_now_iso();
    m.completed = dataset.samples.empty();
    return m;
}

AdapterSet build_adapters(const RunConfig& cfg, Sleeper sleep) {
    AdapterSet raw;
    if (cfg.mock) {
        const auto fixture =
            cfg.mock_fixture.empty() ? ScriptedFixture::builtin() : ScriptedFixture::load(cfg.mock_fixture);
        raw = scripted_adapters(fixture, cfg.seed);
    } else {
        if (!cfg.analyst || !cfg.rewriter || !cfg.generator)
            throw ValidationError("config needs analyst, rewriter and generator endpoints (or \"mock\": true)");
        raw.analyst = std::make_shared<RemoteAnalyst>(*cfg.analyst);
        raw.rewriter = std::make_shared<RemoteRewriter>(*cfg.rewriter);
        raw.generator = std::make_shared<RemoteGenerator>(*cfg.generator, sleep);
    }
    return AdapterSet{retrying(raw.analyst, cfg.retry, sleep), retrying(raw.rewriter, cfg.retry, sleep),
                      retrying(raw.generator, cfg.retry, sleep)};
}

namespace {

class StoreObserver final : public RunObserver {
public:
    StoreObserver(RunStore& store, RunHook hook) : store_(store), hook_(std::move(hook)) {}

    void on_iteration(const SampleResult& partial) override {
        store_.record_iteration(partial);
        if (hook_) hook_("iteration", &partial);
    }
    void on_sample_done(const SampleResult& result) override {
        store_.record_result(result);
        if (hook_) hook_("sample", &result);
    }
    void on_run_done(const RunManifest& manifest) override {
        store_.record_manifest(manifest);
        if (hook_) hook_("run", nullptr);
    }

private:
    RunStore& store_;
    RunHook hook_;
};

}  // namespace

RunManifest start_run(const fs::path& run_dir, const Dataset& dataset, const PhysicsContext& ctx,
                      const RunConfig& cfg, const AdapterSet& adapters, RunHook hook) {
    Pipeline pipeline(adapters, ctx, cfg, dataset.base_dir);
    const auto run_id = fs::absolute(run_dir).lexically_normal().filename().string();
    auto manifest = new_manifest(run_id, cfg, dataset);
    manifest.completed = false;
    auto store = RunStore::create(run_dir, manifest, dataset, ctx);
    StoreObserver observer(store, std::move(hook));
    return pipeline.run_batch(dataset, std::move(manifest), &observer);
}

RunManifest resume_run(const fs::path& run_dir, std::optional<AdapterSet> adapters, RunHook hook) {
    auto store = RunStore::open(run_dir);
    auto manifest = store.snapshot();
    if (manifest.completed) return manifest;
    auto inputs = read_run_inputs(store.layout());
    if (dataset_digest(inputs.dataset.samples) != manifest.dataset_digest)
        throw CorruptManifest(run_dir.string() + ": dataset.jsonl does not match the manifest's dataset_digest");
    try {
        // A crash after the last sample but before the run was marked
        // complete leaves every result terminal with completed=false.
        auto settled = manifest;
        settled.completed = std::all_of(inputs.dataset.samples.begin(), inputs.dataset.samples.end(), [&](const Sample& s) {
            auto it = manifest.results.find(s.id);
            return it != manifest.results.end() && it->second.terminal();
        });
        validate(settled, inputs.dataset.ids());
    } catch (const ValidationError& e) {
        throw CorruptManifest(run_dir.string() + ": " + e.what());
    }
    if (!adapters) adapters = build_adapters(manifest.config);
    Pipeline pipeline(*adapters, inputs.context, manifest.config, inputs.dataset.base_dir);
    StoreObserver observer(store, std::move(hook));
    return pipeline.run_batch(inputs.dataset, std::move(manifest), &observer);
}

}  // namespace vidrefine
