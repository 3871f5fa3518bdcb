#include "rauzy/cocycle.hpp"

#include <algorithm>
#include <cmath>

namespace rauzy::coc {

void IetStream::apply_next(Eigen::MatrixXd& B) {
    iet::StepResult<double> r;
    try {
        r = iet::rauzy_step(state_);
    } catch (const TieError& e) {
        throw TieError(std::string(e.what()) + " (stream step " + std::to_string(steps_) + ")",
                       steps_);
    }
    state_ = std::move(r.next);
    teich_ += r.log_contraction;
    ++steps_;
    // incidence is I + E_{loser,winner}: add the winner row to the loser row
    B.row(r.step.loser - 1) += B.row(r.step.winner - 1);
}

std::pair<Eigen::MatrixXd, double> to_scaled_double(const BigMat& A) {
    long maxbits = 0;
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            maxbits = std::max(maxbits, long(mpz_sizeinbase(A.at(i, j).get_mpz_t(), 2)));
    double log_scale = 0;
    BigInt div = 1;
    if (maxbits > 512) {
        long shift = maxbits - 256;
        div <<= shift;
        log_scale = double(shift) * M_LN2;
    }
    Eigen::MatrixXd M(A.rows(), A.cols());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) {
            Rat r(A.at(i, j), div);
            r.canonicalize();
            M(i, j) = r.get_d();
        }
    return {M, log_scale};
}

SequenceStream::SequenceStream(const bv::SubstitutionSequence& seq) : m_(seq.arity()) {
    for (std::size_t k = 1; k <= seq.size(); ++k) {
        auto [M, ls] = to_scaled_double(seq.step_matrix(k).transposed());
        if (ls != 0)
            throw DegeneracyError("SequenceStream: step matrix too large for double stream");
        mats_.push_back(M);
    }
}

void SequenceStream::apply_next(Eigen::MatrixXd& B) {
    B = mats_[k_ % mats_.size()] * B;
    ++k_;
}

LyapunovEstimate lyapunov_spectrum(CocycleStream& stream, std::size_t n,
                                   std::size_t checkpoint_every) {
    if (checkpoint_every < 1) throw ConfigError("lyapunov_spectrum: bad checkpoint cadence");
    if (n < 10 * checkpoint_every)
        throw ConfigError("lyapunov_spectrum: need at least ten checkpoints");
    const int m = stream.dim();
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m, m);
    std::vector<double> total(std::size_t(m), 0.0);
    std::vector<std::vector<double>> checkpoints; // per-checkpoint increments
    const double overflow = std::pow(2.0, 100);

    auto reorthonormalize = [&](std::vector<double>* record) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
        Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
        Eigen::MatrixXd Q = qr.householderQ();
        auto inc = std::vector<double>(std::size_t(m));
        for (int i = 0; i < m; ++i) {
            double d = R(i, i);
            if (d == 0) throw DegeneracyError("lyapunov_spectrum: singular step matrix");
            inc[std::size_t(i)] = std::log(std::fabs(d));
            total[std::size_t(i)] += inc[std::size_t(i)];
            if (d < 0) Q.col(i) = -Q.col(i);
        }
        B = Q;
        if (record) *record = inc;
    };

    std::size_t since = 0;
    for (std::size_t s = 0; s < n; ++s) {
        stream.apply_next(B);
        ++since;
        bool big = B.cwiseAbs().maxCoeff() > overflow;
        if (since == checkpoint_every || big || s + 1 == n) {
            std::vector<double> inc;
            reorthonormalize(&inc);
            checkpoints.push_back(std::move(inc));
            since = 0;
        }
    }

    LyapunovEstimate est;
    est.n_steps = n;
    est.theta.resize(std::size_t(m));
    for (int i = 0; i < m; ++i) est.theta[std::size_t(i)] = total[std::size_t(i)] / double(n);

    // batch means over the checkpoints
    std::size_t nb = std::min<std::size_t>(32, checkpoints.size());
    std::size_t per = checkpoints.size() / nb;
    est.se.assign(std::size_t(m), 0.0);
    for (int i = 0; i < m; ++i) {
        std::vector<double> rates;
        for (std::size_t b = 0; b < nb; ++b) {
            double sum = 0;
            std::size_t cnt = 0;
            for (std::size_t c = b * per; c < (b + 1) * per; ++c) {
                sum += checkpoints[c][std::size_t(i)];
                ++cnt;
            }
            rates.push_back(sum / double(cnt * checkpoint_every));
        }
        double mean = 0;
        for (double r : rates) mean += r;
        mean /= double(rates.size());
        double var = 0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= double(rates.size() > 1 ? rates.size() - 1 : 1);
        est.se[std::size_t(i)] = std::sqrt(var / double(rates.size()));
    }
    return est;
}

OseledetsFrames oseledets_frames(const bv::SubstitutionSequence& seq, std::size_t n,
                                 std::size_t buffer, double gap_sigmas) {
    const int m = seq.arity();
    if (m < 2) throw ConfigError("oseledets_frames: need at least two letters");
    std::size_t L = n + buffer;
    if (L > seq.size())
        throw InsufficientDataError("oseledets_frames: sequence too short for level " +
                                    std::to_string(n) + " plus buffer");

    std::vector<Eigen::MatrixXd> A(L);
    std::vector<double> logsc(L);
    for (std::size_t k = 1; k <= L; ++k) {
        auto [M, ls] = to_scaled_double(seq.step_matrix(k).transposed());
        A[k - 1] = M;
        logsc[k - 1] = ls;
    }

    // gap pre-check from a full QR pass over the available levels
    {
        Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m, m);
        std::vector<std::vector<double>> incs;
        for (std::size_t k = 0; k < L; ++k) {
            B = A[k] * B;
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
            Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
            Eigen::MatrixXd Q = qr.householderQ();
            auto inc = std::vector<double>(std::size_t(m));
            for (int i = 0; i < m; ++i) {
                if (R(i, i) == 0) throw DegeneracyError("oseledets_frames: singular level matrix");
                inc[std::size_t(i)] = std::log(std::fabs(R(i, i))) + logsc[k];
                if (R(i, i) < 0) Q.col(i) = -Q.col(i);
            }
            incs.push_back(inc);
            B = Q;
        }
        double t1 = 0, t2 = 0;
        std::vector<double> r1s, r2s;
        for (auto& inc : incs) {
            t1 += inc[0];
            t2 += inc[1];
            r1s.push_back(inc[0]);
            r2s.push_back(inc[1]);
        }
        t1 /= double(L);
        t2 /= double(L);
        auto sd = [&](const std::vector<double>& v, double mean) {
            double var = 0;
            for (double x : v) var += (x - mean) * (x - mean);
            return std::sqrt(var / double(v.size() > 1 ? v.size() - 1 : 1) / double(v.size()));
        };
        double se = sd(r1s, t1) + sd(r2s, t2);
        bool trivial = true; // an exactly constant identity cocycle is fine
        for (std::size_t k = 0; k < L && trivial; ++k)
            trivial = A[k].isIdentity(0.0) && logsc[k] == 0.0;
        if (!trivial && t1 - t2 <= gap_sigmas * se)
            throw DegeneracyError("oseledets_frames: top two growth rates not separated (" +
                                  std::to_string(t1) + " vs " + std::to_string(t2) + ", se " +
                                  std::to_string(se) + ")");
    }

    OseledetsFrames out;
    out.levels = n;

    // forward pass: 2-frame QR evolution plus cone iteration
    std::vector<Eigen::MatrixXd> Qs(L + 1), Rs(L + 1);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, 2);
    Q(0, 0) = 1;
    Q(1, 1) = 1;
    Qs[0] = Q;
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
    std::vector<Eigen::VectorXd> cone(L + 1);
    cone[0] = v;
    std::vector<double> logr1(L + 1, 0.0), logr2(L + 1, 0.0), logcone(L + 1, 0.0);
    for (std::size_t k = 1; k <= L; ++k) {
        Eigen::MatrixXd Z = A[k - 1] * Q;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
        Eigen::MatrixXd R = qr.matrixQR().topRows(2).triangularView<Eigen::Upper>();
        Eigen::MatrixXd Qfull = qr.householderQ();
        Q = Qfull.leftCols(2);
        for (int i = 0; i < 2; ++i)
            if (R(i, i) < 0) {
                Q.col(i) = -Q.col(i);
                R.row(i) = -R.row(i);
            }
        Qs[k] = Q;
        Rs[k] = R;
        logr1[k] = logr1[k - 1] + std::log(R(0, 0)) + logsc[k - 1];
        logr2[k] = logr2[k - 1] + std::log(R(1, 1)) + logsc[k - 1];

        Eigen::VectorXd w = A[k - 1] * cone[k - 1];
        double nw = w.norm();
        logcone[k] = logcone[k - 1] + std::log(nw) + logsc[k - 1];
        cone[k] = w / nw;
    }
    out.theta1 = logr1[L] / double(L);
    out.theta2 = logr2[L] / double(L);

    // backward pass: covariant coefficients of the second direction
    std::vector<Eigen::Vector2d> c(L + 1);
    c[L] = Eigen::Vector2d(0.0, 1.0);
    for (std::size_t k = L; k >= 1; --k) {
        Eigen::Vector2d prev = Rs[k].inverse() * c[k];
        c[k - 1] = prev / prev.norm();
    }

    out.e1.resize(n + 1);
    out.e2.resize(n + 1);
    out.logA1.resize(n + 1);
    out.logA2.resize(n + 1);
    double logA2 = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        out.e1[k] = cone[k];
        Eigen::VectorXd e2 = Qs[k] * c[k];
        // deterministic sign
        for (int i = 0; i < m; ++i) {
            if (std::fabs(e2(i)) > 1e-14) {
                if (e2(i) < 0) e2 = -e2;
                break;
            }
        }
        out.e2[k] = e2;
        out.logA1[k] = logr1[k];
        if (k >= 1) {
            Eigen::VectorXd img = A[k - 1] * out.e2[k - 1];
            logA2 += std::log(img.norm()) + logsc[k - 1];
        }
        out.logA2[k] = logA2;
    }

    // diagnostics
    std::size_t warmup = std::min<std::size_t>(8, n / 2);
    double minang = M_PI;
    for (std::size_t k = warmup; k <= n; ++k) {
        double cosang = std::fabs(out.e1[k].dot(out.e2[k]));
        minang = std::min(minang, std::acos(std::min(1.0, cosang)));
    }
    out.min_angle = minang;

    // Reconstruction residuals: direction of the sequentially propagated
    // seed against the independently evolved frame. For the second
    // direction the propagation error grows like exp(gap * n), so it is
    // measured at the deepest level still resolved in double precision.
    {
        Eigen::VectorXd x = cone[0];
        for (std::size_t k = 1; k <= n; ++k) {
            x = A[k - 1] * x;
            x /= x.norm();
        }
        Eigen::VectorXd q1 = Qs[n].col(0);
        if (x.dot(q1) < 0) q1 = -q1;
        out.resid1 = (x - q1).norm();

        double gap_per_level = std::max(out.theta1 - out.theta2, 0.0);
        std::size_t n2 = n;
        if (gap_per_level > 1e-9)
            n2 = std::max<std::size_t>(
                1, std::min<std::size_t>(n, std::size_t(25.0 / gap_per_level)));
        out.resid2_level = n2;
        Eigen::VectorXd y = out.e2[0];
        for (std::size_t k = 1; k <= n2; ++k) {
            y = A[k - 1] * y;
            y /= y.norm();
        }
        Eigen::VectorXd t2v = (n2 <= n) ? out.e2[n2] : out.e2[n];
        if (y.dot(t2v) < 0) y = -y;
        out.resid2 = (y - t2v).norm();
    }
    return out;
}

double WStats::ld_stat(double delta) const {
    if (delta <= 0 || delta >= 1) throw ConfigError("ld_stat: delta must lie in (0,1)");
    const std::size_t N = W.size();
    std::size_t k = std::size_t(std::ceil(delta * double(N)));
    k = std::max<std::size_t>(1, std::min(k, N));
    std::vector<double> sorted = W;
    std::sort(sorted.rbegin(), sorted.rend());
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
    return sum / (delta * double(N) * std::log(1.0 / delta));
}

WStats w_statistics(const bv::SubstitutionSequence& seq) {
    if (!seq.canonical()) throw ConfigError("w_statistics: sequence has no canonical marker");
    WStats out;
    for (std::size_t k = 1; k <= seq.size(); ++k) {
        auto [M, ls] = to_scaled_double(seq.step_matrix(k));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        out.W.push_back(std::log(svd.singularValues()(0)) + ls);
    }
    return out;
}

namespace {

ReturnTimeStats return_time_impl(const std::string& kinds,
                                 const std::vector<iet::Permutation>& vertices,
                                 const std::vector<double>& lambda_log,
                                 const std::vector<iet::StepKind>& q,
                                 const iet::Permutation& anchor) {
    if (!iet::word_is_simple(q)) throw ConfigError("return_time_stats: marker word not simple");
    const std::size_t k = q.size();
    const std::size_t n = kinds.size();
    std::string qs;
    for (auto s : q) qs.push_back(char(s));
    std::string qq = qs + qs;

    std::vector<std::size_t> boundaries;
    for (std::size_t j = k; j + k <= n; ++j) {
        if (vertices[j - k] == anchor && kinds.compare(j - k, 2 * k, qq) == 0)
            boundaries.push_back(j);
    }
    if (boundaries.size() < 31)
        throw InsufficientDataError("return_time_stats: fewer than 30 occurrences of the marker");

    ReturnTimeStats out;
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
        out.gaps.push_back(boundaries[i + 1] - boundaries[i]);
        out.L.push_back(lambda_log[boundaries[i + 1] - 1] - lambda_log[boundaries[i] - 1]);
    }

    // largest eps on a geometric grid whose empirical mean of exp(eps L) is
    // stable under halving the sample
    out.eps_fit = 0;
    for (int g = 24; g >= 0; --g) {
        double eps = 1e-3 * std::pow(1000.0, double(g) / 24.0);
        double full = 0, half = 0;
        std::size_t nh = out.L.size() / 2;
        for (std::size_t i = 0; i < out.L.size(); ++i) {
            double v = std::exp(eps * out.L[i]);
            full += v;
            if (i < nh) half += v;
        }
        full /= double(out.L.size());
        half /= double(nh);
        if (std::isfinite(full) && std::fabs(full - half) < 0.10 * full) {
            out.eps_fit = eps;
            break;
        }
    }
    return out;
}

} // namespace

ReturnTimeStats return_time_stats(const iet::RauzyPath& path,
                                  const std::vector<iet::StepKind>& q,
                                  const iet::Permutation& anchor) {
    return return_time_impl(path.kinds(), path.vertices, path.lambda_log, q, anchor);
}

ReturnTimeStats return_time_stats(const iet::RauzyPathExact& path,
                                  const std::vector<iet::StepKind>& q,
                                  const iet::Permutation& anchor) {
    return return_time_impl(path.kinds(), path.vertices, path.lambda_log, q, anchor);
}

} // namespace rauzy::coc
