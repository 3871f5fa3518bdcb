#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rauzy/bignum.hpp"
#include "rauzy/errors.hpp"

namespace rauzy::subst {

// A word over the alphabet {1..m}; letters stored as bytes.
using Word = std::vector<std::uint8_t>;

// Words serialize as digit strings for m <= 9 and as comma-separated
// integers otherwise, so the arity picks the format.
Word word_from_string(const std::string& s, int m = 9);
std::string word_to_string(const Word& w, int m = 9);

// Map letter -> nonempty word over {1..m}, extended to words by
// concatenation. The atom of all renormalization here.
struct Substitution {
    int m = 0;
    std::vector<Word> images; // images[b-1] is the image of letter b

    int arity() const { return m; }
    const Word& image(int b) const { return images[std::size_t(b) - 1]; }

    void validate() const;
    static Substitution identity(int m);

    bool operator==(const Substitution&) const = default;
};

// S(a,b) = number of occurrences of a in the image of b.
BigMat matrix_of(const Substitution& z);

inline constexpr std::size_t kComposeBudget = 10'000'000;

// result(b) = outer(inner(b)). Throws DegeneracyError when the composed
// images would exceed `budget` letters; matrices of compositions never
// need the words, use matrix products instead.
Substitution compose(const Substitution& outer, const Substitution& inner,
                     std::size_t budget = kComposeBudget);

// entry j = number of j's in v
std::vector<std::int64_t> population_vector(const Word& v, int m);

// |v|_s = <population(v), s>
double tiling_length(const Word& v, const std::vector<double>& s);
Rat tiling_length(const Word& v, const std::vector<Rat>& s);

// All words v with |v| <= max_len such that, writing c for the first
// letter of v, the word vc occurs in every image of z. Sorted by
// (length, lexicographic) for determinism.
std::vector<Word> good_return_words(const Substitution& z, std::size_t max_len);

// Default search bound: the longest image length.
std::size_t default_return_length(const Substitution& z);

// A family of m good return words with linearly independent population
// vectors (checked by exact integer rank), or nullopt. Greedy over the
// (length, lex)-sorted candidate list, so ties resolve deterministically.
std::optional<std::vector<Word>> select_return_basis(const Substitution& z,
                                                     std::size_t max_len);

struct DecayConstants {
    double col; // col(Q^t) = max_{i,j,k} Q^t(i,j)/Q^t(k,j)
    double c1;  // 1 / (2 m max(Q) col(Q^t)), always in (0, 1/4]
};

// Requires Q strictly positive.
DecayConstants decay_constants(const BigMat& Q);

bool occurs(const Word& haystack, const Word& needle);

nlohmann::json to_json(const Substitution& z);
Substitution substitution_from_json(const nlohmann::json& j);

} // namespace rauzy::subst
