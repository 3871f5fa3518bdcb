#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rauzy/bignum.hpp"
#include "rauzy/errors.hpp"
#include "rauzy/subst.hpp"

namespace rauzy::bv {

// One step of an S-adic expansion. Large steps (telescoped blocks) are kept
// as composition chains of small substitutions; the composite word images
// are never materialized unless they fit the budget, while the matrix is
// always available.
struct SeqStep {
    std::vector<subst::Substitution> chain; // composite = chain[0] o chain[1] o ...
    BigMat mat;                             // matrix of the composite

    static SeqStep of(subst::Substitution z);
    static SeqStep of_chain(std::vector<subst::Substitution> chain);
};

struct CanonicalMarker {
    subst::Substitution q;     // the sandwich substitution
    std::size_t q_chain_len;   // how many leading/trailing chain entries compose it
};

class SubstitutionSequence {
public:
    explicit SubstitutionSequence(std::vector<subst::Substitution> steps,
                                  std::optional<CanonicalMarker> marker = std::nullopt);
    static SubstitutionSequence from_chains(std::vector<SeqStep> steps,
                                            std::optional<CanonicalMarker> marker = std::nullopt);

    int arity() const { return m_; }
    std::size_t size() const { return steps_->size(); }
    const SeqStep& step(std::size_t k) const;            // 1-based
    const BigMat& step_matrix(std::size_t k) const;      // S_k
    // materialized composite of step k, memoized; throws on budget
    const subst::Substitution& step_substitution(std::size_t k) const;

    BigMat product(std::size_t n) const;                        // S^{[n]}; n = 0 -> identity
    BigMat product(std::size_t n1, std::size_t n2) const;       // S^{[n1,n2]}; empty range -> identity

    const std::optional<CanonicalMarker>& canonical() const { return marker_; }

    // letter at a given position of the (possibly unmaterialized) image of b
    // under step k, and the image length; both guard against overflow
    std::int64_t image_length(std::size_t k, int b) const;
    int image_letter(std::size_t k, int b, std::int64_t pos) const;

    // flattened list of the small substitutions of steps n1..n2 (1-based,
    // inclusive), outermost first
    std::vector<const subst::Substitution*> raw_view(std::size_t n1, std::size_t n2) const;

private:
    SubstitutionSequence() = default;

    // caches are shared across copies and guarded for concurrent first use
    struct Cache {
        std::mutex mu;
        std::vector<BigMat> prefix; // prefix[n] = S^{[n]}
        std::vector<std::optional<subst::Substitution>> materialized;
    };

    int m_ = 0;
    std::shared_ptr<std::vector<SeqStep>> steps_;
    std::optional<CanonicalMarker> marker_;
    std::shared_ptr<Cache> cache_;
};

// h^{(n)}: exact tower heights, h_i = |zeta^{[n]}(i)|
std::vector<BigInt> heights(const SubstitutionSequence& seq, std::size_t n);

struct MeasureData {
    std::vector<std::vector<double>> z; // z[l] for l = 0..depth_used
    double convergence_gap = 0;
    std::size_t depth_used = 0;
};

// Cylinder measure vectors from nested cone images; stops when the l^1
// diameter of the normalized image-cone columns drops below gap_tol.
// Throws DegeneracyError if no strictly positive block appears.
MeasureData invariant_measure(const SubstitutionSequence& seq, std::size_t depth,
                              double gap_tol = 1e-13);

inline constexpr std::size_t kWordBudget = 10'000'000;

// Prefix of zeta^{[n]}(b), at most `window` letters (window = 0 means all,
// subject to the budget).
subst::Word horizontal_word(const SubstitutionSequence& seq, int b, std::size_t n,
                            std::size_t window = 0, std::size_t budget = kWordBudget);

// A finite path: vertices b_0..b_n and edge positions pos_k inside the
// image zeta_k(b_k), with zeta_k(b_k)[pos_k] = b_{k-1}.
struct PathPrefix {
    std::vector<int> vertices;          // size n+1
    std::vector<std::int64_t> positions; // size n

    std::size_t length() const { return positions.size(); }
    int top_vertex() const { return vertices.back(); }
};

PathPrefix minimal_prefix(const SubstitutionSequence& seq, int b, std::size_t n);
void validate_prefix(const SubstitutionSequence& seq, const PathPrefix& p);

// Adic successor: increment the lowest non-maximal edge, reset everything
// below to minimal. Throws DegeneracyError on the all-maximal path.
PathPrefix vershik_successor(const SubstitutionSequence& seq, const PathPrefix& p);

// The one-sided word read forward from the path's position:
// b_0 v_0 zeta^{[1]}(v_1) zeta^{[2]}(v_2) ... with v_k the suffix of
// zeta_{k+1}(b_{k+1}) after the chosen edge.
subst::Word forward_word(const SubstitutionSequence& seq, const PathPrefix& p,
                         std::size_t count, std::size_t budget = kWordBudget);

// The suffix words v_k of the expansion above (v_k lives at level k+1,
// i.e. it is expanded through zeta^{[k]}).
std::vector<subst::Word> prefix_suffix_decomposition(const SubstitutionSequence& seq,
                                                     const PathPrefix& p);

// Regroup a sequence of elementary steps into canonical sandwich blocks
// [boundaries[i], boundaries[i+1]); the first and last q_len raw steps of
// every block must compose to q_block.
SubstitutionSequence telescope_canonical(const SubstitutionSequence& raw,
                                         const subst::Substitution& q_block,
                                         std::size_t q_len,
                                         const std::vector<std::size_t>& boundaries);

// s^{(l)} = (S^{[l]})^t s
std::vector<double> level_roof(const SubstitutionSequence& seq, const std::vector<double>& s,
                               std::size_t l);
std::vector<Rat> level_roof(const SubstitutionSequence& seq, const std::vector<Rat>& s,
                            std::size_t l);

struct Tile {
    int letter;
    double start;
    double duration;
};

// Tiling of [0, T] by letter durations along the forward word of p.
std::vector<Tile> suspension_itinerary(const SubstitutionSequence& seq, const PathPrefix& p,
                                       const std::vector<double>& s, double T,
                                       std::size_t budget = kWordBudget);

nlohmann::json to_json(const SubstitutionSequence& seq);
SubstitutionSequence sequence_from_json(const nlohmann::json& j);

} // namespace rauzy::bv
