#include <doctest.h>

#include <cmath>
#include <random>

#include "memanchor/metrics.hpp"

using namespace memanchor;

namespace {

std::string random_words(std::mt19937& rng) {
    static const char* words[] = {"shell", "necklace", "hawaii", "blue", "dog",
                                  "garden", "paint",    "sunday", "ran",  "trip"};
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_int_distribution<int> pick(0, 9);
    std::string out;
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
        if (!out.empty()) out += " ";
        out += words[pick(rng)];
    }
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("token_f1 hand cases") {
    CHECK(token_f1("a shell necklace", "a shell necklace") == doctest::Approx(1.0).epsilon(1e-12));
    // P = 2/3, R = 1 -> F1 = 4/5
    CHECK(token_f1("a shell necklace", "shell necklace") == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(token_f1("entirely different words", "shell necklace") == doctest::Approx(0.0));
    CHECK(token_f1("", "") == doctest::Approx(1.0));
    CHECK(token_f1("", "shell") == doctest::Approx(0.0));
    CHECK(token_f1("shell", "") == doctest::Approx(0.0));
}

TEST_CASE("token_f1 normalization: case, punctuation, whitespace") {
    CHECK(token_f1("A  Shell, Necklace!", "a shell necklace") == doctest::Approx(1.0));
    // articles are kept
    CHECK(token_f1("the shell", "shell") < 1.0);
}

TEST_CASE("bleu1 hand cases") {
    CHECK(bleu1("shell necklace", "shell necklace") == doctest::Approx(1.0).epsilon(1e-12));
    // clipped precision 2/4, BP = 1 since c > r
    CHECK(bleu1("shell necklace from hawaii", "shell necklace") == doctest::Approx(0.5).epsilon(1e-9));
    // precision 1, BP = exp(1 - 2/1)
    CHECK(bleu1("shell", "shell necklace") == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(bleu1("", "shell") == doctest::Approx(0.0));
    CHECK(bleu1("word", "") == doctest::Approx(0.0));
}

TEST_CASE("bleu1 clips repeated unigrams") {
    // "shell shell shell" vs "shell": clipped count 1 of 3, BP = exp(1 - 1/3)... c=3 > r=1 -> BP=1
    CHECK(bleu1("shell shell shell", "shell") == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("metric bounds and F1 symmetry on random strings") {
    std::mt19937 rng(19);
    for (int i = 0; i < 200; ++i) {
        std::string a = random_words(rng);
        std::string b = random_words(rng);
        double f1 = token_f1(a, b);
        double bleu = bleu1(a, b);
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);
        CHECK(bleu >= 0.0);
        CHECK(bleu <= 1.0);
        // the multiset intersection is symmetric, so F1 is too
        CHECK(token_f1(a, b) == doctest::Approx(token_f1(b, a)).epsilon(1e-12));
    }
}

}  // TEST_SUITE
