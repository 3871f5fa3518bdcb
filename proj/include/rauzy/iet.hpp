#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rauzy/bignum.hpp"
#include "rauzy/errors.hpp"
#include "rauzy/subst.hpp"

namespace rauzy::iet {

struct Permutation {
    std::vector<int> pi; // 1-based images: pi[i-1] = position of interval i in the image

    int size() const { return int(pi.size()); }
    int operator()(int i) const { return pi[std::size_t(i) - 1]; }
    int inverse(int p) const;
    bool is_bijection() const;
    // no k < m with pi({1..k}) = {1..k}
    bool irreducible() const;
    void validate() const;

    bool operator==(const Permutation&) const = default;
    bool operator<(const Permutation& o) const { return pi < o.pi; }
};

enum class StepKind : char { a = 'a', b = 'b' };

// One Rauzy induction move. Interval labels are persistent along a path:
// the winner keeps its label and absorbs the loser's length, the loser's
// label moves to the freshly cut interval. In label coordinates the length
// linkage is lambda_old = A lambda_new with A = I + E_{winner,loser}.
struct RauzyStep {
    StepKind kind;
    int winner = 0;
    int loser = 0;
    int m = 0;

    BigMat length_matrix() const;                 // I + E_{winner,loser}
    BigMat incidence() const;                     // transpose of length_matrix
    subst::Substitution substitution() const;     // label space, images of length 1 or 2
};

// Interval exchange kept in the two-row form: `top` lists labels in domain
// order, `bottom` in image order, lengths indexed by label. A freshly
// constructed exchange has top = (1..m), so labels coincide with domain
// positions there.
template <class Len>
struct IetT {
    int m = 0;
    std::vector<int> top, bottom;
    std::vector<Len> len; // by label

    static IetT from(const Permutation& pi, std::vector<Len> lambda_domain);

    Permutation monodromy() const;
    std::vector<Len> lambda_domain() const;
    Len total() const;
    void normalize(); // scale lengths to total 1
};

using Iet = IetT<double>;
using IetExact = IetT<Rat>;

IetExact to_exact(const Iet& T);
Iet to_double(const IetExact& T);

// Relative tie threshold in floating mode; below double resolution the
// branch choice is meaningless.
inline constexpr double kTieRelTol = 1e-14;

// One induction step, renormalized to unit total length. Throws TieError
// on lambda_m == lambda_{pi^-1(m)} (saddle connection).
// Returns (new exchange, step, log of the length contraction).
template <class Len>
struct StepResult {
    IetT<Len> next;
    RauzyStep step;
    double log_contraction; // log |Lambda| increment (Teichmueller time)
};
template <class Len>
StepResult<Len> rauzy_step(const IetT<Len>& T);

template <class Len>
struct RauzyPathT {
    IetT<Len> start;
    std::vector<RauzyStep> steps;
    std::vector<double> lambda_log;       // cumulative log|Lambda(-n)|, size steps
    std::vector<Permutation> vertices;    // monodromy before step k (size steps+1)
    std::vector<std::vector<int>> tops;   // top order before step k (size steps+1)
    IetT<Len> final_state;

    std::string kinds() const;
    // A_n^t ... A_1^t over steps [i0, i1); equals matrix_of(zeta_block)^t.
    BigMat cocycle_matrix(std::size_t i0, std::size_t i1) const;
    BigMat cocycle_matrix() const { return cocycle_matrix(0, steps.size()); }
};

using RauzyPath = RauzyPathT<double>;
using RauzyPathExact = RauzyPathT<Rat>;

template <class Len>
RauzyPathT<Len> rauzy_path(const IetT<Len>& T, std::size_t n);

// Lebesgue-uniform length vector on the open simplex, deterministic in seed.
Iet sample_iet(const Permutation& pi, std::uint64_t seed);

struct RauzyClass {
    std::vector<Permutation> permutations;      // BFS order from the seed
    std::vector<std::array<int, 2>> edges;      // [i][kind] -> target index
    int index_of(const Permutation& p) const;   // -1 if absent
    std::size_t size() const { return permutations.size(); }
    bool strongly_connected() const;
    // length of the pure-a (or pure-b) cycle through vertex i
    std::vector<StepKind> pure_cycle(int i, StepKind k) const;
};

Permutation apply_move(const Permutation& pi, StepKind k);
RauzyClass rauzy_class(const Permutation& pi);

// Substitution of one abstract move in domain-position coordinates
// (for paths in the class graph, where no persistent labels exist).
subst::Substitution abstract_step_substitution(const Permutation& pi, StepKind k);
// Composite over a kind word starting at pi; first step outermost.
subst::Substitution abstract_path_substitution(const Permutation& pi,
                                               const std::vector<StepKind>& word);

// Composite of the labeled per-step substitutions of a path (first step
// outermost); same letters as block_substitution.
template <class Len>
subst::Substitution path_substitution(const RauzyPathT<Len>& path);

// zeta_{IJ} by explicit Rokhlin-tower simulation: for each subinterval of
// the final induced exchange (indexed by its persistent label), record
// which original subinterval contains each floor of its return tower.
// Throws DegeneracyError if a floor straddles an original discontinuity.
template <class Len>
subst::Substitution block_substitution(const IetT<Len>& T, const RauzyPathT<Len>& path);

// no proper suffix equals the prefix of the same length
bool word_is_simple(const std::vector<StepKind>& w);

struct SimpleLoop {
    int base = 0;                  // class vertex index the loop is anchored at
    std::vector<StepKind> word;    // edge kinds
    subst::Substitution zeta;      // abstract substitution of the loop
    int common_first_letter = 0;   // shared first letter of all images
};

// Deterministic search (breadth-first over loop length, a-edges before
// b-edges) for a simple loop word whose matrix is strictly positive and
// whose substitution images all start with one common letter.
SimpleLoop find_positive_simple_loop(const RauzyClass& cls, std::size_t max_len = 64);

nlohmann::json to_json(const Iet& T);
Iet iet_from_json(const nlohmann::json& j);

} // namespace rauzy::iet
