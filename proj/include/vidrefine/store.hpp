// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>

#include "vidrefine/dataset.hpp"
#include "vidrefine/model.hpp"

namespace vidrefine {

inline constexpr int kManifestSchemaVersion = 1;

/// Paths of one run directory:
///
///   <run_dir>/manifest.json
///   <run_dir>/dataset.jsonl
///   <run_dir>/inputs.json
///   <run_dir>/samples/<sample_id>/iter_<k>/{prompt.txt,critique.txt,video.ref}
struct RunLayout {
    std::filesystem::path run_dir;

    /// `<root>/runs/<run_id>`.
    static RunLayout for_run(const std::filesystem::path& root, std::string_view run_id);

    std::string run_id() const { return run_dir.filename().string(); }
    std::filesystem::path manifest() const { return run_dir / "manifest.json"; }
    std::filesystem::path dataset() const { return run_dir / "dataset.jsonl"; }
    std::filesystem::path inputs() const { return run_dir / "inputs.json"; }
    std::filesystem::path samples_dir() const { return run_dir / "samples"; }
    std::filesystem::path iteration_dir(std::string_view sample_id, int k) const;
    std::filesystem::path prompt_file(std::string_view sample_id, int k) const;
    std::filesystem::path critique_file(std::string_view sample_id, int k) const;
    std::filesystem::path video_ref_file(std::string_view sample_id, int k) const;
};

/// Writes `contents` to a temporary sibling, fsyncs it and renames it over
/// `path`. Readers see the old or the new file, never a torn one.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

/// Envelope: {"schema_version", "checksum": sha256 of the dumped manifest,
/// "manifest"}. Replaced atomically.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& run_dir);

/// Throws CorruptManifest when the file is missing, truncated, fails its
/// checksum or does not match the schema.
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// Inputs a run needs to be resumed without the original files.
struct RunInputs {
    Dataset dataset;
    PhysicsContext context;
};

RunInputs read_run_inputs(const RunLayout& layout);

/// The single writer of a run directory. Every method is serialized; the
/// iteration files are on disk before the manifest that references them.
class RunStore {
public:
    /// Creates the directory, inputs and an initial manifest. Throws
    /// CollisionError if `run_dir` already holds a manifest.
    static RunStore create(const std::filesystem::path& run_dir, const RunManifest& initial,
                           const Dataset& dataset, const PhysicsContext& ctx);

    /// Opens an existing run for resumption.
    static RunStore open(const std::filesystem::path& run_dir);

    RunStore(RunStore&& other) noexcept;

    const RunLayout& layout() const { return layout_; }
    RunManifest snapshot() const;

    /// Persists the newest iteration of `partial` and the updated manifest.
    void record_iteration(const SampleResult& partial);
    void record_result(const SampleResult& result);
    void record_manifest(const RunManifest& manifest);

private:
    RunStore(RunLayout layout, RunManifest manifest);
    void write_iteration_files(const std::string& sample_id, const IterationRecord& rec) const;

    RunLayout layout_;
    RunManifest manifest_;
    mutable std::mutex mu_;
};

}  // namespace vidrefine
