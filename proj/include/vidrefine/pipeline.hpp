// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>

#include "vidrefine/adapters.hpp"
#include "vidrefine/convergence.hpp"
#include "vidrefine/dataset.hpp"
#include "vidrefine/model.hpp"
#include "vidrefine/store.hpp"

namespace vidrefine {

/// Receives progress from the loop. Calls are serialized by the batch
/// runner; an exception thrown here aborts the batch (it is not a sample
/// failure).
class RunObserver {
public:
    virtual ~RunObserver() = default;
    /// `partial.iterations.back()` was just generated.
    virtual void on_iteration(const SampleResult& partial) { (void)partial; }
    virtual void on_sample_done(const SampleResult& result) { (void)result; }
    virtual void on_run_done(const RunManifest& manifest) { (void)manifest; }
};

/// Raised when a batch is stopped between iterations.
class Interrupted : public std::runtime_error {
public:
    Interrupted() : std::runtime_error("run interrupted") {}
};

/// The per-sample refinement loop and the batch runner built on it.
///
/// For each sample the analyst predicts from the prefix clip, the rewriter
/// turns that into prompt p1, and then for k = 1..max_iterations:
///
///   v_k     = generate(p_k, prefix)
///   t_{k+1} = analyze(v_k, critique)
///   p_{k+1} = rewrite(t_{k+1})
///   stop if similarity(p_k, p_{k+1}) >= threshold
///
/// The final video is v_k of the last generation; p_{k+1} of the last step
/// is kept in the result but never generated from.
class Pipeline {
public:
    Pipeline(AdapterSet adapters, PhysicsContext ctx, RunConfig cfg,
             std::filesystem::path dataset_base_dir = {});

    const RunConfig& config() const { return cfg_; }
    const PhysicsContext& context() const { return ctx_; }

    /// Step one: initial prediction t1 and prompt p1. Adapter errors
    /// propagate.
    Prompt bootstrap(const Sample& sample) const;

    /// Runs (or continues) one sample. Adapter failures end the sample with
    /// status failed and failure_reason set to the error kind; recorded
    /// iterations are kept. `resume_from` continues after its last recorded
    /// iteration.
    SampleResult run_sample(const Sample& sample, RunObserver* observer = nullptr,
                            const std::optional<SampleResult>& resume_from = std::nullopt,
                            std::stop_token stop = {}) const;

    /// Runs every sample without a terminal result in `manifest` on up to
    /// max_concurrent_samples workers and returns the updated manifest.
    /// Observer exceptions stop the remaining work and are rethrown after
    /// all workers have joined.
    RunManifest run_batch(const Dataset& dataset, RunManifest manifest, RunObserver* observer = nullptr) const;

private:
    struct Step {
        Critique critique;
        Prompt prompt;
        std::map<std::string, std::string> meta;
    };

    Step predict(const Sample& sample, const std::string& system_input) const;
    Step refine(const std::string& system_input, const VideoArtifact& video, const Prompt& used, int next_k) const;
    VideoArtifact generate(const Prompt& prompt, const VideoArtifact& prefix, std::map<std::string, std::string>& meta) const;

    AdapterSet adapters_;
    PhysicsContext ctx_;
    RunConfig cfg_;
    std::filesystem::path base_dir_;
};

/// A fresh manifest for `dataset` under `cfg`.
RunManifest new_manifest(std::string run_id, const RunConfig& cfg, const Dataset& dataset);

/// Adapters for a config: scripted when `cfg.mock`, otherwise the remote
/// endpoints. All three are wrapped in the retry policy.
AdapterSet build_adapters(const RunConfig& cfg, Sleeper sleep = real_sleeper());

/// Called after the store has persisted each event; throwing aborts the run.
using RunHook = std::function<void(std::string_view event, const SampleResult* result)>;

/// Creates `run_dir` (CollisionError if it already holds a run), writes the
/// manifest and empty samples directory before any adapter call, and runs
/// the batch.
RunManifest start_run(const std::filesystem::path& run_dir, const Dataset& dataset, const PhysicsContext& ctx,
                      const RunConfig& cfg, const AdapterSet& adapters, RunHook hook = {});

/// Continues an interrupted run. Terminal samples are untouched; running
/// samples continue from their last recorded iteration. A completed run is
/// returned unchanged without writing. Adapters default to
/// build_adapters(manifest.config).
RunManifest resume_run(const std::filesystem::path& run_dir, std::optional<AdapterSet> adapters = std::nullopt,
                       RunHook hook = {});

}  // namespace vidrefine
