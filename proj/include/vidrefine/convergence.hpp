// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vidrefine/model.hpp"

namespace vidrefine {

/// Outcome of comparing consecutive prompts p^k and p^{k+1}.
struct SimilarityReport {
    double value = 0.0;
    std::size_t tokens_a = 0;
    std::size_t tokens_b = 0;
    bool converged = false;
    double threshold_used = 0.0;

    bool operator==(const SimilarityReport&) const = default;
};

/// Lowercases ASCII letters, drops ASCII punctuation, splits on whitespace.
/// Bytes outside ASCII are kept verbatim.
std::vector<std::string> normalize(std::string_view text);

/// Token-set Jaccard index of the normalized texts; 1.0 when both are empty.
double similarity(std::string_view a, std::string_view b);

/// 1 - (token-level Levenshtein distance / longer token count); 1.0 when
/// both are empty. Order-sensitive alternative to the Jaccard default.
double token_edit_similarity(std::string_view a, std::string_view b);

/// Similarity by metric name ("jaccard" or "token_edit"). Throws
/// ValidationError for unknown names.
double similarity(std::string_view metric, std::string_view a, std::string_view b);

bool is_known_metric(std::string_view metric);

/// Compares two prompts against threshold `theta` in [0, 1].
SimilarityReport converged(const Prompt& prev, const Prompt& next, double theta,
                           std::string_view metric = "jaccard");

}  // namespace vidrefine
