#include "rauzy/twisted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rauzy/rng.hpp"

namespace rauzy::twisted {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

inline Complex phase_of_frac(const Rat& fr) {
    return std::polar(1.0, -kTwoPi * fr.get_d());
}

std::vector<Rat> advance_frac(const BigMat& S, const std::vector<Rat>& f) {
    std::vector<Rat> out = S.apply_transpose(f);
    for (Rat& x : out) x = frac_rat(x);
    return out;
}

double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

} // namespace

ModularOrbit::ModularOrbit(const bv::SubstitutionSequence& seq, const std::vector<double>& s,
                           double omega, std::size_t upto_level)
    : omega_(omega) {
    if (int(s.size()) != seq.arity()) throw ConfigError("ModularOrbit: roof size mismatch");
    if (upto_level > seq.size()) throw ConfigError("ModularOrbit: level beyond sequence");
    Rat w = rat_of_double(omega);
    auto f = std::vector<Rat>(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) f[j] = frac_rat(w * rat_of_double(s[j]));
    f_.push_back(f);
    for (std::size_t k = 1; k <= upto_level; ++k) {
        for (const auto* z : seq.raw_view(k, k)) f = advance_frac(subst::matrix_of(*z), f);
        f_.push_back(f);
    }
}

const std::vector<Rat>& ModularOrbit::at_level(std::size_t k) const {
    if (k >= f_.size()) throw ConfigError("ModularOrbit: level not computed");
    return f_[k];
}

double mod1_dist(const std::vector<Rat>& f, const subst::Word& v) {
    Rat acc = 0;
    for (auto c : v) acc += f.at(std::size_t(c) - 1);
    return dist_mod1(acc);
}

Complex twisted_letter_sum(const subst::Word& v, int a, const std::vector<double>& s,
                           double omega) {
    Rat w = rat_of_double(omega);
    auto ws = std::vector<Rat>(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) ws[j] = w * rat_of_double(s[j]);
    Complex total = 0;
    Rat acc = 0; // frac of omega * |prefix|_s
    for (auto c : v) {
        if (int(c) == a) total += phase_of_frac(acc);
        acc = frac_rat(acc + ws.at(std::size_t(c) - 1));
    }
    return total;
}

TwistMatrix twist_matrix(const subst::Substitution& xi1, const subst::Substitution& xi2,
                         const std::vector<double>& s, double omega) {
    if (xi1.m != xi2.m) throw ConfigError("twist_matrix: arity mismatch");
    const int m = xi1.m;
    Rat w = rat_of_double(omega);
    auto sq = std::vector<Rat>(std::size_t(m));
    for (int j = 0; j < m; ++j) sq[std::size_t(j)] = rat_of_double(s.at(std::size_t(j)));
    std::vector<Rat> s1 = subst::matrix_of(xi1).apply_transpose(sq);
    auto f = std::vector<Rat>(std::size_t(m));
    for (int j = 0; j < m; ++j) f[std::size_t(j)] = frac_rat(w * s1[std::size_t(j)]);

    TwistMatrix out;
    out.omega = omega;
    out.M = CMat::Zero(m, m);
    for (int b = 1; b <= m; ++b) {
        Rat acc = 0;
        for (auto c : xi2.image(b)) {
            out.M(b - 1, int(c) - 1) += phase_of_frac(acc);
            acc = frac_rat(acc + f[std::size_t(c) - 1]);
        }
    }
    return out;
}

TwistProduct twist_product(const bv::SubstitutionSequence& seq, std::size_t n1, std::size_t n2,
                           const std::vector<double>& s, double omega) {
    if (n1 < 1) throw ConfigError("twist_product: n1 must be >= 1");
    const bool empty = (n2 + 1 == n1);
    if (!empty && (n2 < n1 || n2 > seq.size())) throw ConfigError("twist_product: bad range");
    const int m = seq.arity();
    Rat w = rat_of_double(omega);
    auto f = std::vector<Rat>(std::size_t(m));
    for (int j = 0; j < m; ++j)
        f[std::size_t(j)] = frac_rat(w * rat_of_double(s.at(std::size_t(j))));
    for (std::size_t k = 1; k < n1; ++k)
        for (const auto* z : seq.raw_view(k, k)) f = advance_frac(subst::matrix_of(*z), f);

    TwistProduct out;
    out.Pi = CMat::Identity(m, m);
    out.log_scale = 0;
    if (empty) return out;

    CMat M(m, m);
    for (std::size_t k = n1; k <= n2; ++k) {
        for (const auto* z : seq.raw_view(k, k)) {
            M.setZero();
            for (int b = 1; b <= m; ++b) {
                Rat acc = 0;
                for (auto c : z->image(b)) {
                    M(b - 1, int(c) - 1) += phase_of_frac(acc);
                    acc = frac_rat(acc + f[std::size_t(c) - 1]);
                }
            }
            out.Pi = M * out.Pi;
            f = advance_frac(subst::matrix_of(*z), f);
        }
        double mx = out.Pi.cwiseAbs().maxCoeff();
        if (mx > 1e120) {
            out.Pi /= mx;
            out.log_scale += std::log(mx);
        }
    }
    return out;
}

DecayBound dioph_bound(const bv::SubstitutionSequence& seq, std::size_t ell, std::size_t n,
                       const std::vector<double>& s, double omega,
                       const std::vector<subst::Word>& returns) {
    const auto& marker = seq.canonical();
    if (!marker) throw ConfigError("dioph_bound: sequence has no canonical marker");
    if (returns.empty()) throw ConfigError("dioph_bound: need at least one return word");
    if (n < ell + 1 || n > seq.size()) throw ConfigError("dioph_bound: bad level range");
    BigMat Q = subst::matrix_of(marker->q);
    if (!Q.strictly_positive()) throw ConfigError("dioph_bound: marker matrix not positive");
    for (const auto& v : returns) {
        subst::Word vc = v;
        vc.push_back(v.front());
        for (int b = 1; b <= seq.arity(); ++b)
            if (!subst::occurs(marker->q.image(b), vc))
                throw ConfigError("dioph_bound: word is not a good return word of the marker");
    }
    auto dc = subst::decay_constants(Q);

    ModularOrbit orbit(seq, s, omega, n);
    DecayBound out;
    out.log_product_only = 0;
    for (std::size_t k = ell + 1; k + 1 <= n; ++k) {
        double d = 0;
        for (const auto& v : returns) d = std::max(d, mod1_dist(orbit.at_level(k), v));
        out.dists.push_back(d);
        out.log_product_only += std::log1p(-dc.c1 * d * d);
    }
    out.log_block = log_big(seq.product(ell + 1, n).norm1()) + out.log_product_only;

    if (n < seq.size()) {
        double lse = -std::numeric_limits<double>::infinity();
        double run = 0; // running sum of log decay factors, levels ell+1..j-1
        for (std::size_t j = ell; j <= n; ++j) {
            double term = std::log(2.0) + log_big(seq.product(ell + 1, j).norm1()) +
                          log_big(seq.step_matrix(j + 1).norm1()) + run;
            lse = logaddexp(lse, term);
            if (j >= ell + 1 && j + 1 <= n) {
                double d = out.dists[j - (ell + 1)];
                run += std::log1p(-dc.c1 * d * d);
            }
        }
        out.log_prefix = lse;
    } else {
        out.log_prefix = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double PiecewisePoly::eval(double t) const {
    if (t < breaks.front() || t > breaks.back() + 1e-12) return 0.0;
    std::size_t i = 0;
    while (i + 2 < breaks.size() && t >= breaks[i + 1]) ++i;
    double u = t - breaks[i];
    const auto& c = coef[i];
    return ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
}

double PiecewisePoly::sup_norm() const {
    double best = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double L = breaks[i + 1] - breaks[i];
        for (int k = 0; k <= 16; ++k)
            best = std::max(best, std::fabs(eval(breaks[i] + L * k / 16.0)));
    }
    return best;
}

Complex poly_segment_fourier(double t0, double t1, const std::array<double, 4>& c, double omega) {
    const double L = t1 - t0;
    if (L <= 0) return 0.0;
    const Complex s(0.0, kTwoPi * omega);
    Complex total = 0;
    if (std::abs(s) * L < 1e-4) {
        for (int k = 0; k <= 3; ++k) {
            if (c[std::size_t(k)] == 0) continue;
            Complex term = 0;
            Complex spow = 1;
            double fact = 1;
            for (int t = 0; t <= 8; ++t) {
                term += spow / fact * std::pow(L, k + t + 1) / double(k + t + 1) *
                        ((t % 2) ? -1.0 : 1.0);
                spow *= s;
                fact *= double(t + 1);
            }
            total += c[std::size_t(k)] * term;
        }
    } else {
        Complex eL = std::exp(-s * L);
        Complex I = (1.0 - eL) / s; // I_0
        double Lk = 1;
        total += c[0] * I;
        for (int k = 1; k <= 3; ++k) {
            Lk *= L;
            I = (double(k) * I - Lk * eL) / s;
            total += c[std::size_t(k)] * I;
        }
    }
    return std::polar(1.0, -kTwoPi * omega * t0) * total;
}

Complex PiecewisePoly::fourier_window(double a, double b, double omega) const {
    a = std::max(a, breaks.front());
    b = std::min(b, breaks.back());
    if (b <= a) return 0.0;
    Complex total = 0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = std::max(a, breaks[i]);
        double hi = std::min(b, breaks[i + 1]);
        if (hi <= lo) continue;
        double d = lo - breaks[i];
        const auto& c = coef[i];
        // local polynomial re-expanded around `lo`
        std::array<double, 4> sh{};
        sh[0] = ((c[3] * d + c[2]) * d + c[1]) * d + c[0];
        sh[1] = 3 * c[3] * d * d + 2 * c[2] * d + c[1];
        sh[2] = 3 * c[3] * d + c[2];
        sh[3] = c[3];
        total += poly_segment_fourier(lo, hi, sh, omega);
    }
    return total;
}

Complex PiecewisePoly::fourier(double omega) const {
    return fourier_window(breaks.front(), breaks.back(), omega);
}

PiecewisePoly PiecewisePoly::constant(double value, double L) {
    PiecewisePoly p;
    p.breaks = {0.0, L};
    p.coef = {{value, 0, 0, 0}};
    return p;
}

PiecewisePoly PiecewisePoly::linear(double v0, double v1, double L) {
    PiecewisePoly p;
    p.breaks = {0.0, L};
    p.coef = {{v0, (v1 - v0) / L, 0, 0}};
    return p;
}

double CylFunction::sup_norm() const {
    double best = 0;
    for (std::size_t a = 0; a < coeff.size(); ++a)
        best = std::max(best, std::fabs(coeff[a]) * prof[a].sup_norm());
    return best;
}

CylFunction make_cyl_indicator(const bv::SubstitutionSequence& seq, const std::vector<double>& s,
                               std::size_t level, const std::vector<double>& coeff) {
    auto sl = bv::level_roof(seq, s, level);
    CylFunction f;
    f.level = level;
    f.coeff = coeff;
    f.roof = s;
    for (int a = 0; a < seq.arity(); ++a)
        f.prof.push_back(PiecewisePoly::constant(1.0, sl[std::size_t(a)]));
    return f;
}

CylFunction make_cyl_poly(const bv::SubstitutionSequence& seq, const std::vector<double>& s,
                          std::size_t level, const std::vector<double>& coeff,
                          std::uint64_t seed) {
    auto sl = bv::level_roof(seq, s, level);
    CounterRng rng(seed, 0xCF11);
    CylFunction f;
    f.level = level;
    f.coeff = coeff;
    f.roof = s;
    for (int a = 0; a < seq.arity(); ++a) {
        double L = sl[std::size_t(a)];
        PiecewisePoly p;
        int pieces = 1 + int(rng.next_below(3));
        p.breaks.push_back(0);
        for (int i = 1; i < pieces; ++i) p.breaks.push_back(L * double(i) / pieces);
        p.breaks.push_back(L);
        for (int i = 0; i < pieces; ++i) {
            std::array<double, 4> c{};
            for (int k = 0; k <= 3; ++k) c[std::size_t(k)] = 2 * rng.next_unit() - 1;
            p.coef.push_back(c);
        }
        f.prof.push_back(p);
    }
    return f;
}

namespace {

bv::SubstitutionSequence shift_sequence(const bv::SubstitutionSequence& seq, std::size_t l) {
    if (l == 0) return seq;
    std::vector<bv::SeqStep> steps;
    for (std::size_t k = l + 1; k <= seq.size(); ++k) steps.push_back(seq.step(k));
    return bv::SubstitutionSequence::from_chains(std::move(steps));
}

bv::PathPrefix shift_prefix(const bv::PathPrefix& p, std::size_t l) {
    bv::PathPrefix q;
    q.vertices.assign(p.vertices.begin() + long(l), p.vertices.end());
    q.positions.assign(p.positions.begin() + long(l), p.positions.end());
    return q;
}

} // namespace

std::vector<BirkhoffEval> birkhoffEval_scan_impl(const bv::SubstitutionSequence& seq,
                                                 const bv::PathPrefix& p, const CylFunction& f,
                                                 double omega, const std::vector<double>& R_grid,
                                                 std::size_t budget) {
    const int m = seq.arity();
    const std::size_t l = f.level;
    if (p.length() < l) throw ConfigError("twisted_birkhoff: path prefix shorter than the level");
    if (int(f.coeff.size()) != m || int(f.prof.size()) != m || int(f.roof.size()) != m)
        throw ConfigError("twisted_birkhoff: function data size mismatch");
    if (!std::is_sorted(R_grid.begin(), R_grid.end()))
        throw ConfigError("twisted_birkhoff: R grid must be sorted");
    if (R_grid.empty()) return {};

    auto sl = std::vector<double>(std::size_t(m));
    for (int a = 0; a < m; ++a) sl[std::size_t(a)] = f.prof[std::size_t(a)].length();
    auto sl_q = std::vector<Rat>(std::size_t(m));
    for (int a = 0; a < m; ++a) sl_q[std::size_t(a)] = rat_of_double(sl[std::size_t(a)]);
    Rat w = rat_of_double(omega);

    const double Rmax = R_grid.back();
    double slmin = *std::min_element(sl.begin(), sl.end());
    if (slmin <= 0) throw ConfigError("twisted_birkhoff: profile domains must be positive");
    std::size_t tiles_needed = std::size_t(Rmax / slmin) + 2;
    if (tiles_needed > budget)
        throw InsufficientDataError("twisted_birkhoff: itinerary budget exhausted before R");

    bv::SubstitutionSequence upper = shift_sequence(seq, l);
    subst::Word xl = bv::forward_word(upper, shift_prefix(p, l), 0, budget);

    // per-letter level-0 expansions for the quadrature walk
    auto expansion = std::vector<subst::Word>(std::size_t(m));
    for (int a = 1; a <= m; ++a) expansion[std::size_t(a) - 1] = bv::horizontal_word(seq, a, l);
    auto psi_hat = std::vector<Complex>(std::size_t(m));
    if (f.has_closed_form())
        for (int a = 0; a < m; ++a) psi_hat[std::size_t(a)] = f.prof[std::size_t(a)].fourier(omega);

    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};

    std::vector<BirkhoffEval> out;
    auto Phi = std::vector<Complex>(std::size_t(m), 0.0);
    Complex quad = 0;
    double T = 0;
    Rat accT = 0;
    std::size_t gi = 0;

    for (std::size_t k = 0; k < xl.size() && gi < R_grid.size(); ++k) {
        int A = xl[k];
        double dur = sl[std::size_t(A) - 1];
        while (gi < R_grid.size() && T + dur > R_grid[gi]) {
            BirkhoffEval ev;
            ev.R_used = T;
            ev.snap_gap = R_grid[gi] - T;
            ev.formula = 0;
            if (f.has_closed_form())
                for (int a = 0; a < m; ++a)
                    ev.formula +=
                        f.coeff[std::size_t(a)] * psi_hat[std::size_t(a)] * Phi[std::size_t(a)];
            ev.quadrature = quad;
            out.push_back(ev);
            ++gi;
        }
        if (gi >= R_grid.size()) break;
        Complex ph = phase_of_frac(accT);
        Phi[std::size_t(A) - 1] += ph;
        if (f.coeff[std::size_t(A) - 1] != 0.0) {
            // integrate psi_A along the level-0 tiles inside this block
            const PiecewisePoly& pr = f.prof[std::size_t(A) - 1];
            Complex I = 0;
            double t0 = 0;
            for (auto x : expansion[std::size_t(A) - 1]) {
                double t1 = t0 + f.roof[std::size_t(x) - 1];
                if (f.has_closed_form()) {
                    I += pr.fourier_window(t0, t1, omega);
                } else {
                    const auto& fn = f.callable[std::size_t(A) - 1];
                    double h = (t1 - t0) / 2, c0 = (t0 + t1) / 2;
                    for (int gq = 0; gq < 4; ++gq) {
                        double u = c0 + h * gx[gq];
                        I += gw[gq] * h * fn(u) * std::polar(1.0, -kTwoPi * omega * u);
                    }
                }
                t0 = t1;
            }
            quad += f.coeff[std::size_t(A) - 1] * ph * I;
        }
        T += dur;
        accT = frac_rat(accT + w * sl_q[std::size_t(A) - 1]);
    }
    if (gi < R_grid.size())
        throw InsufficientDataError("twisted_birkhoff: itinerary budget exhausted before R");
    return out;
}

std::vector<BirkhoffEval> birkhoff_scan(const bv::SubstitutionSequence& seq,
                                        const bv::PathPrefix& p, const CylFunction& f,
                                        double omega, const std::vector<double>& R_grid,
                                        std::size_t budget) {
    return birkhoffEval_scan_impl(seq, p, f, omega, R_grid, budget);
}

BirkhoffEval twisted_birkhoff(const bv::SubstitutionSequence& seq, const bv::PathPrefix& p,
                              const CylFunction& f, double omega, double R, std::size_t budget) {
    auto v = birkhoff_scan(seq, p, f, omega, {R}, budget);
    return v.front();
}

GrowthFit growth_fit(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 8) throw InsufficientDataError("growth_fit: need at least 8 samples");
    double rmin = samples.front().first, rmax = samples.front().first;
    for (const auto& [R, S] : samples) {
        rmin = std::min(rmin, R);
        rmax = std::max(rmax, R);
        if (R <= 0 || S <= 0) throw ConfigError("growth_fit: samples must be positive");
    }
    if (rmax / rmin < 100.0)
        throw InsufficientDataError("growth_fit: samples must span two decades in R");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(samples.size());
    for (const auto& [R, S] : samples) {
        double x = std::log(R), y = std::log(S);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-12) throw InsufficientDataError("growth_fit: degenerate spread");
    GrowthFit out;
    out.alpha = (n * sxy - sx * sy) / denom;
    double intercept = (sy - out.alpha * sx) / n;
    out.C1 = std::exp(intercept);
    double rss = 0;
    for (const auto& [R, S] : samples) {
        double e = std::log(S) - (intercept + out.alpha * std::log(R));
        rss += e * e;
    }
    out.residual = std::sqrt(rss / n);
    return out;
}

} // namespace rauzy::twisted
