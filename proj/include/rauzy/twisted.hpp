#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "rauzy/bignum.hpp"
#include "rauzy/bv.hpp"
#include "rauzy/errors.hpp"
#include "rauzy/subst.hpp"

namespace rauzy::twisted {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;

// Fractional parts of omega * s^{(k)} along a sequence, kept exactly: omega
// and s are dyadic rationals, and frac(A x) = frac(A frac(x)) for integer A,
// so the orbit never loses precision. The accumulated error is identically
// zero and the precision budget can never be exceeded for double inputs.
class ModularOrbit {
public:
    ModularOrbit(const bv::SubstitutionSequence& seq, const std::vector<double>& s, double omega,
                 std::size_t upto_level);

    const std::vector<Rat>& at_level(std::size_t k) const; // k = 0..upto
    std::size_t levels() const { return f_.size() - 1; }
    double omega() const { return omega_; }
    double error_bound() const { return 0.0; }

private:
    double omega_;
    std::vector<std::vector<Rat>> f_;
};

// || <pop(v), f> ||_{R/Z}
double mod1_dist(const std::vector<Rat>& f, const subst::Word& v);

// Twisted character sum Phi_a^s(v, omega) with exact prefix lengths.
Complex twisted_letter_sum(const subst::Word& v, int a, const std::vector<double>& s,
                           double omega);

struct TwistMatrix {
    CMat M; // row b, column c
    double omega = 0;
};

// Entry (b,c) sums the twist phases of the occurrences of c in xi2(b),
// measured in the roof transported through xi1.
TwistMatrix twist_matrix(const subst::Substitution& xi1, const subst::Substitution& xi2,
                         const std::vector<double>& s, double omega);

struct TwistProduct {
    CMat Pi;          // rescaled product; row b, column a holds Phi_a(zeta^{[range]}(b))
    double log_scale; // true product = exp(log_scale) * Pi
};

// Product of the twist matrices of levels n1..n2 (deepest level leftmost),
// with phases measured against the level-(n1-1) roof. Product over an empty
// range is the identity.
TwistProduct twist_product(const bv::SubstitutionSequence& seq, std::size_t n1, std::size_t n2,
                           const std::vector<double>& s, double omega);
inline TwistProduct twist_product(const bv::SubstitutionSequence& seq, std::size_t n,
                                  const std::vector<double>& s, double omega) {
    return twist_product(seq, 1, n, s, omega);
}

struct DecayBound {
    double log_block;        // log of ||S^{[l+1,n]}||_1 * prod(1 - c1 d_k^2)
    double log_prefix;       // log of the summed prefix-decomposition variant
    double log_product_only; // log of prod(1 - c1 d_k^2) alone
    std::vector<double> dists; // the mod-1 distances d_k actually used
};

// Decay bounds for |Phi| over levels [l+1, n] of a canonical sequence.
// `returns` must be good return words of the marker substitution. The
// prefix-sum flavor needs level n+1 to exist.
DecayBound dioph_bound(const bv::SubstitutionSequence& seq, std::size_t ell, std::size_t n,
                       const std::vector<double>& s, double omega,
                       const std::vector<subst::Word>& returns);

// Piecewise polynomial profile on [0, L], degree <= 3 per piece,
// coefficients in the local variable u = t - piece_start.
struct PiecewisePoly {
    std::vector<double> breaks;              // increasing, breaks.front() = 0
    std::vector<std::array<double, 4>> coef; // one per piece

    double length() const { return breaks.back(); }
    double eval(double t) const;
    double sup_norm() const;
    Complex fourier(double omega) const; // int_0^L e^{-2 pi i omega t} psi(t) dt
    Complex fourier_window(double a, double b, double omega) const;

    static PiecewisePoly constant(double value, double L);
    static PiecewisePoly linear(double v0, double v1, double L);
};

// int_{t0}^{t1} e^{-2 pi i omega t} sum_k c_k (t - t0)^k dt
Complex poly_segment_fourier(double t0, double t1, const std::array<double, 4>& c, double omega);

// Cylindrical test function of a given level: f = sum_a c_a 1_{X_a^{(l)}} psi_a(t').
struct CylFunction {
    std::size_t level = 0;
    std::vector<double> coeff;                            // c_a
    std::vector<PiecewisePoly> prof;                      // psi_a on [0, s_a^{(l)}]
    std::vector<double> roof;                             // the level-0 roof s
    std::vector<std::function<double(double)>> callable;  // optional, quadrature only

    bool has_closed_form() const { return callable.empty(); }
    double sup_norm() const;
};

// indicator-profile function of the given level
CylFunction make_cyl_indicator(const bv::SubstitutionSequence& seq, const std::vector<double>& s,
                               std::size_t level, const std::vector<double>& coeff);
// random piecewise-polynomial profiles (degree <= 3), deterministic in seed
CylFunction make_cyl_poly(const bv::SubstitutionSequence& seq, const std::vector<double>& s,
                          std::size_t level, const std::vector<double>& coeff,
                          std::uint64_t seed);

struct BirkhoffEval {
    Complex formula;    // psi-hat times Phi over the level-l word
    Complex quadrature; // tile-by-tile closed-form integration at level 0
    double R_used;      // R snapped down to a level-l tile boundary
    double snap_gap;    // R - R_used
};

// Twisted Birkhoff integral over [0, R], evaluated from the level-l tile
// origin of the path p, in the two independent modes.
BirkhoffEval twisted_birkhoff(const bv::SubstitutionSequence& seq, const bv::PathPrefix& p,
                              const CylFunction& f, double omega, double R,
                              std::size_t budget = bv::kWordBudget);

// One pass over the itinerary with snapshots at each R of the sorted grid.
std::vector<BirkhoffEval> birkhoff_scan(const bv::SubstitutionSequence& seq,
                                        const bv::PathPrefix& p, const CylFunction& f,
                                        double omega, const std::vector<double>& R_grid,
                                        std::size_t budget = bv::kWordBudget);

struct GrowthFit {
    double alpha;
    double C1;
    double residual; // rms residual of the log-log fit
};

// Least squares of log|S_R| against log R. Needs >= 8 samples spanning
// >= 2 decades.
GrowthFit growth_fit(const std::vector<std::pair<double, double>>& samples);

} // namespace rauzy::twisted
