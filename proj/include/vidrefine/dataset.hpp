// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "vidrefine/model.hpp"

namespace vidrefine {

/// Samples read from a JSONL dataset manifest. Relative artifact paths
/// resolve against `base_dir`.
struct Dataset {
    std::vector<Sample> samples;
    std::filesystem::path base_dir;

    std::vector<std::string> ids() const;
};

/// Parses and validates JSONL. Errors are ValidationError with messages of
/// the form "<source>:<line>: <problem>". Blank lines are skipped.
Dataset parse_dataset(std::istream& in, const std::string& source_name,
                      const std::filesystem::path& base_dir);

Dataset load_dataset(const std::filesystem::path& path);

/// Writes canonical JSONL, one sample per line.
void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);

/// Digest over the canonical serialization, so copies of a dataset file
/// that differ only in whitespace or key order share a digest.
std::string dataset_digest(const std::vector<Sample>& samples);

/// Local filesystem path for a reference, or nullopt for non-file URIs
/// (mock://, http://, ...). `file://` prefixes are stripped.
std::optional<std::filesystem::path> local_path(const std::string& ref,
                                                const std::filesystem::path& base_dir);

/// An artifact for an existing reference (ground truth, prefix clip).
/// producer_iteration is 0.
VideoArtifact reference_artifact(const std::string& ref, const std::filesystem::path& base_dir,
                                 double duration_s, double fps);

/// The conditioning clip as an artifact: 3 s long, checksum of the file
/// bytes when local, otherwise of the URI string.
VideoArtifact prefix_artifact(const Sample& sample, const std::filesystem::path& base_dir, double fps);

}  // namespace vidrefine
