#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "rauzy/bignum.hpp"
#include "rauzy/bv.hpp"
#include "rauzy/errors.hpp"
#include "rauzy/iet.hpp"

namespace rauzy::coc {

// A stream of cocycle matrices consumed by left multiplication,
// B <- A_{k+1} B.
class CocycleStream {
public:
    virtual ~CocycleStream() = default;
    virtual int dim() const = 0;
    virtual void apply_next(Eigen::MatrixXd& B) = 0;
};

// Rauzy induction stream: each step is a cheap row operation. Ties
// propagate as TieError with the step index.
class IetStream final : public CocycleStream {
public:
    explicit IetStream(iet::Iet start) : state_(std::move(start)) {}
    int dim() const override { return state_.m; }
    void apply_next(Eigen::MatrixXd& B) override;
    const iet::Iet& state() const { return state_; }
    double teich_time() const { return teich_; }

private:
    iet::Iet state_;
    std::size_t steps_ = 0;
    double teich_ = 0;
};

// Levels of a substitution sequence, converted with power-of-two scaling;
// wraps around at the end of the sequence.
class SequenceStream final : public CocycleStream {
public:
    explicit SequenceStream(const bv::SubstitutionSequence& seq);
    int dim() const override { return m_; }
    void apply_next(Eigen::MatrixXd& B) override;

private:
    int m_;
    std::vector<Eigen::MatrixXd> mats_;
    std::size_t k_ = 0;
};

// Fixed list of matrices, repeated cyclically (tests and demos).
class MatrixStream final : public CocycleStream {
public:
    explicit MatrixStream(std::vector<Eigen::MatrixXd> mats) : mats_(std::move(mats)) {}
    int dim() const override { return int(mats_.front().rows()); }
    void apply_next(Eigen::MatrixXd& B) override {
        B = mats_[k_ % mats_.size()] * B;
        ++k_;
    }

private:
    std::vector<Eigen::MatrixXd> mats_;
    std::size_t k_ = 0;
};

struct LyapunovEstimate {
    std::vector<double> theta; // descending
    std::vector<double> se;    // batch-means standard errors
    std::size_t n_steps = 0;
};

// QR-based spectrum: accumulate log diagonal entries of periodically
// re-orthonormalized products. Standard errors from batch means over the
// checkpoints.
LyapunovEstimate lyapunov_spectrum(CocycleStream& stream, std::size_t n,
                                   std::size_t checkpoint_every = 8);

struct OseledetsFrames {
    std::size_t levels = 0;            // frames reported for 0..levels
    std::vector<Eigen::VectorXd> e1;   // cone iterates, entrywise >= 0
    std::vector<Eigen::VectorXd> e2;   // covariant second vectors
    std::vector<double> logA1, logA2;  // accumulated growth, logA*(0) = 0
    double theta1 = 0, theta2 = 0;     // per-level estimates with the buffer
    double min_angle = 0;              // min angle(e1,e2) past the warmup
    double resid1 = 0, resid2 = 0;     // reconstruction residuals
    std::size_t resid2_level = 0;      // level at which resid2 is measured
                                       // (capped so doubles still resolve it)
};

// Frames for the top two directions of the level cocycle of `seq`. Runs
// `buffer` levels beyond n so the covariant second vector is resolved at
// the reported levels; refuses when the top-two gap is not significant.
OseledetsFrames oseledets_frames(const bv::SubstitutionSequence& seq, std::size_t n,
                                 std::size_t buffer = 24, double gap_sigmas = 5.0);

struct WStats {
    std::vector<double> W; // log operator norms of the canonical steps

    // (sum of the ceil(delta N) largest W) / (delta N log(1/delta))
    double ld_stat(double delta) const;
};

WStats w_statistics(const bv::SubstitutionSequence& seq);

struct ReturnTimeStats {
    std::vector<std::size_t> gaps; // steps between doubled-marker boundaries
    std::vector<double> L;         // Teichmueller time increments
    double eps_fit = 0;            // largest grid eps with a stable mean of exp(eps L)
};

// Occurrence statistics of the doubled block q.q along a path, anchored at
// the loop's base vertex. Requires q simple and at least 30 occurrences.
ReturnTimeStats return_time_stats(const iet::RauzyPath& path,
                                  const std::vector<iet::StepKind>& q,
                                  const iet::Permutation& anchor);
ReturnTimeStats return_time_stats(const iet::RauzyPathExact& path,
                                  const std::vector<iet::StepKind>& q,
                                  const iet::Permutation& anchor);

// matrix converted to double with a power-of-two rescale; returns log scale
std::pair<Eigen::MatrixXd, double> to_scaled_double(const BigMat& A);

} // namespace rauzy::coc
