#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rauzy/errors.hpp"

namespace rauzy {

using BigInt = mpz_class;
using Rat = mpq_class;

// Exact rational value of a double (every finite double is dyadic).
inline Rat rat_of_double(double x) {
    Rat q;
    mpq_set_d(q.get_mpq_t(), x);
    return q;
}

// Natural logarithm of a positive big integer.
inline double log_big(const BigInt& z) {
    signed long exp2;
    double mant = mpz_get_d_2exp(&exp2, z.get_mpz_t());
    return std::log(std::fabs(mant)) + double(exp2) * M_LN2;
}

inline BigInt floor_rat(const Rat& q) {
    BigInt r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

// Fractional part in [0,1).
inline Rat frac_rat(const Rat& q) { return q - Rat(floor_rat(q)); }

// Nearest integer, ties rounded up, so that the remainder lies in [-1/2, 1/2).
inline BigInt nearest_int(const Rat& q) { return floor_rat(q + Rat(1, 2)); }

// Distance to the nearest integer, as a double.
inline double dist_mod1(const Rat& q) {
    Rat f = frac_rat(q);
    double d = f.get_d();
    return d <= 0.5 ? d : 1.0 - d;
}

// Dense matrix of big integers. Sizes here are tiny (alphabet squared);
// entries are what grow.
class BigMat {
public:
    BigMat() = default;
    BigMat(int rows, int cols) : r_(rows), c_(cols), a_(std::size_t(rows) * cols) {}

    static BigMat identity(int n) {
        BigMat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }

    BigInt& at(int i, int j) { return a_[std::size_t(i) * c_ + j]; }
    const BigInt& at(int i, int j) const { return a_[std::size_t(i) * c_ + j]; }

    bool operator==(const BigMat& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }

    BigMat operator*(const BigMat& o) const {
        if (c_ != o.r_) throw ConfigError("BigMat: dimension mismatch in product");
        BigMat out(r_, o.c_);
        BigInt tmp;
        for (int i = 0; i < r_; ++i)
            for (int k = 0; k < c_; ++k) {
                const BigInt& aik = at(i, k);
                if (aik == 0) continue;
                for (int j = 0; j < o.c_; ++j) {
                    tmp = aik * o.at(k, j);
                    out.at(i, j) += tmp;
                }
            }
        return out;
    }

    BigMat transposed() const {
        BigMat out(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) out.at(j, i) = at(i, j);
        return out;
    }

    BigInt column_sum(int j) const {
        BigInt s = 0;
        for (int i = 0; i < r_; ++i) s += at(i, j);
        return s;
    }

    // max absolute column sum
    BigInt norm1() const {
        BigInt best = 0;
        for (int j = 0; j < c_; ++j) {
            BigInt s = 0;
            for (int i = 0; i < r_; ++i) s += abs(at(i, j));
            if (s > best) best = s;
        }
        return best;
    }

    bool strictly_positive() const {
        for (const auto& x : a_)
            if (x <= 0) return false;
        return true;
    }

    bool nonnegative() const {
        for (const auto& x : a_)
            if (x < 0) return false;
        return true;
    }

    BigInt max_entry() const {
        BigInt best = a_.empty() ? BigInt(0) : a_[0];
        for (const auto& x : a_)
            if (x > best) best = x;
        return best;
    }

    std::vector<BigInt> apply(const std::vector<BigInt>& v) const {
        if (int(v.size()) != c_) throw ConfigError("BigMat: vector size mismatch");
        std::vector<BigInt> out(r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) out[i] += at(i, j) * v[j];
        return out;
    }

    // (A^t v), used for roof-vector recursions s^(l) = S^t s
    std::vector<Rat> apply_transpose(const std::vector<Rat>& v) const {
        if (int(v.size()) != r_) throw ConfigError("BigMat: vector size mismatch");
        std::vector<Rat> out(c_);
        for (int j = 0; j < c_; ++j) {
            Rat s = 0;
            for (int i = 0; i < r_; ++i)
                if (at(i, j) != 0) s += Rat(at(i, j)) * v[i];
            out[j] = s;
        }
        return out;
    }

    std::vector<double> to_double() const {
        std::vector<double> out(a_.size());
        for (std::size_t i = 0; i < a_.size(); ++i) out[i] = a_[i].get_d();
        return out;
    }

private:
    int r_ = 0, c_ = 0;
    std::vector<BigInt> a_;
};

// Exact determinant by fraction-free (Bareiss) elimination.
inline BigInt det_exact(BigMat m) {
    if (m.rows() != m.cols()) throw ConfigError("det_exact: square matrix required");
    const int n = m.rows();
    if (n == 0) return 1;
    BigInt prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m.at(k, k) == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i)
                if (m.at(i, k) != 0) { p = i; break; }
            if (p < 0) return 0;
            for (int j = 0; j < n; ++j) swap(m.at(k, j), m.at(p, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                BigInt num = m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j);
                mpz_divexact(m.at(i, j).get_mpz_t(), num.get_mpz_t(), prev.get_mpz_t());
            }
        prev = m.at(k, k);
    }
    return sign > 0 ? m.at(n - 1, n - 1) : -m.at(n - 1, n - 1);
}

// Exact rank over the rationals (input integer entries).
inline int rank_exact(const BigMat& m0) {
    int r = m0.rows(), c = m0.cols();
    std::vector<std::vector<Rat>> m(r, std::vector<Rat>(c));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m[i][j] = Rat(m0.at(i, j));
    int rank = 0;
    for (int col = 0; col < c && rank < r; ++col) {
        int p = -1;
        for (int i = rank; i < r; ++i)
            if (m[i][col] != 0) { p = i; break; }
        if (p < 0) continue;
        std::swap(m[rank], m[p]);
        for (int i = rank + 1; i < r; ++i) {
            if (m[i][col] == 0) continue;
            Rat f = m[i][col] / m[rank][col];
            for (int j = col; j < c; ++j) m[i][j] -= f * m[rank][j];
        }
        ++rank;
    }
    return rank;
}

} // namespace rauzy
