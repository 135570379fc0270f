// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "vidrefine/convergence.hpp"
#include "vidrefine/error.hpp"

using namespace vidrefine;

namespace {

using Tokens = std::vector<std::string>;

std::string random_string(std::mt19937_64& rng) {
    static const std::string alphabet = "abcABC xyz  XYZ.,!?;:'\"-\t\n()0123";
    std::uniform_int_distribution<int> len(0, 24);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    for (int i = len(rng); i > 0; --i) s.push_back(alphabet[pick(rng)]);
    return s;
}

}  // namespace

TEST_CASE("normalize") {
    CHECK(normalize("The Ball, falls!") == Tokens{"the", "ball", "falls"});
    CHECK(normalize("").empty());
    CHECK(normalize("  a   b ") == Tokens{"a", "b"});
    CHECK(normalize("... !!! ?").empty());
    CHECK(normalize("don't stop") == Tokens{"dont", "stop"});
    CHECK(normalize("Éclair") == Tokens{"\xC3\x89" "clair"});
}

TEST_CASE("jaccard similarity examples") {
    CHECK(similarity("the ball falls", "the ball falls") == 1.0);
    // {a,b} over {a,b,c,d}
    CHECK(similarity("a b c", "a b d") == 0.5);
    CHECK(similarity("red ball", "blue cube") == 0.0);
    CHECK(similarity("", "") == 1.0);
    CHECK(similarity("", "a") == 0.0);
    CHECK(similarity("a a a b", "b a") == 1.0);
}

TEST_CASE("converged reports") {
    const auto p = Prompt::make("the ball falls", 1);
    const auto same = converged(p, Prompt::make("the ball falls", 2), 0.9);
    CHECK(same.converged);
    CHECK(same.value == 1.0);
    CHECK(same.tokens_a == 3);
    CHECK(same.threshold_used == 0.9);

    const auto half = converged(Prompt::make("a b c", 1), Prompt::make("a b d", 2), 0.9);
    CHECK(half.value == 0.5);
    CHECK_FALSE(half.converged);

    CHECK(converged(Prompt::make("red ball", 1), Prompt::make("blue cube", 2), 0.0).converged);
    CHECK_THROWS_AS(converged(p, p, 1.1), ValidationError);
    CHECK_THROWS_AS(converged(p, p, 0.5, "cosine"), ValidationError);
}

TEST_CASE("token edit similarity is order sensitive") {
    CHECK(token_edit_similarity("a b c", "a b c") == 1.0);
    CHECK(token_edit_similarity("a b c", "c b a") < 1.0);
    CHECK(similarity("a b c", "c b a") == 1.0);
    CHECK(token_edit_similarity("", "") == 1.0);
    CHECK(token_edit_similarity("a b c d", "a b x d") == doctest::Approx(0.75));
    CHECK(similarity("token_edit", "a", "a") == 1.0);
}

TEST_CASE("similarity properties over random strings") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_string(rng);
        const auto b = random_string(rng);
        for (const char* metric : {"jaccard", "token_edit"}) {
            const double ab = similarity(metric, a, b);
            REQUIRE(ab == similarity(metric, b, a));
            REQUIRE(ab >= 0.0);
            REQUIRE(ab <= 1.0);
            REQUIRE(similarity(metric, a, a) == 1.0);
        }
        std::string noisy;
        for (char c : a) noisy.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        noisy += " ?!.";
        REQUIRE(similarity(a, noisy) == 1.0);
    }
}
