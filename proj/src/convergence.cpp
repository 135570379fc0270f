// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/convergence.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vidrefine/error.hpp"

namespace vidrefine {

std::vector<std::string> normalize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            continue;
        } else {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        }
    }
    flush();
    return tokens;
}

double similarity(std::string_view a, std::string_view b) {
    const auto ta = normalize(a);
    const auto tb = normalize(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

double token_edit_similarity(std::string_view a, std::string_view b) {
    const auto ta = normalize(a);
    const auto tb = normalize(b);
    const std::size_t n = ta.size(), m = tb.size();
    if (n == 0 && m == 0) return 1.0;
    std::vector<std::size_t> row(m + 1);
    for (std::size_t j = 0; j <= m; ++j) row[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (ta[i - 1] == tb[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return 1.0 - static_cast<double>(row[m]) / static_cast<double>(std::max(n, m));
}

bool is_known_metric(std::string_view metric) { return metric == "jaccard" || metric == "token_edit"; }

double similarity(std::string_view metric, std::string_view a, std::string_view b) {
    if (metric == "jaccard") return similarity(a, b);
    if (metric == "token_edit") return token_edit_similarity(a, b);
    throw ValidationError("unknown convergence metric \"" + std::string(metric) + "\"");
}

SimilarityReport converged(const Prompt& prev, const Prompt& next, double theta, std::string_view metric) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("convergence threshold must lie in [0, 1]");
    SimilarityReport r;
    r.value = similarity(metric, prev.text, next.text);
    r.tokens_a = normalize(prev.text).size();
    r.tokens_b = normalize(next.text).size();
    r.threshold_used = theta;
    r.converged = r.value >= theta;
    return r;
}

}  // namespace vidrefine
