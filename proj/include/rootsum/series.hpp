#pragma once

// Exact rational asymptotic expansions in powers of 1/n:
//
//     l_{-1} n + l_0 + sum_{t=1}^{T} l_t / n^t + O(n^{-T-1}).

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace rootsum {

class TruncatedSeries {
public:
    explicit TruncatedSeries(int order = 1) : order_(order), coeffs_(static_cast<std::size_t>(order + 2)) {
        if (order < 0) throw std::invalid_argument("series order must be nonnegative");
    }

    /// Highest stored degree T.
    int order() const { return order_; }
    /// The expansion is exact up to O(n^-tail_order()).
    int tail_order() const { return order_ + 1; }

    /// Coefficient l_deg; zero outside [-1, T].
    mpq_class operator[](int deg) const {
        if (deg < -1 || deg > order_) return mpq_class(0);
        return coeffs_[static_cast<std::size_t>(deg + 1)];
    }

    /// Adds to l_deg; contributions beyond the truncation order are dropped.
    void add(int deg, const mpq_class& value) {
        if (deg < -1) throw std::invalid_argument("series degree below -1");
        if (deg > order_) return;
        coeffs_[static_cast<std::size_t>(deg + 1)] += value;
    }

    TruncatedSeries truncated(int order) const {
        TruncatedSeries out(std::min(order, order_));
        for (int d = -1; d <= out.order_; ++d) out.add(d, (*this)[d]);
        return out;
    }

    friend TruncatedSeries operator+(const TruncatedSeries& a, const TruncatedSeries& b) {
        TruncatedSeries out(std::min(a.order_, b.order_));
        for (int d = -1; d <= out.order_; ++d) out.add(d, a[d] + b[d]);
        return out;
    }

    friend TruncatedSeries operator-(const TruncatedSeries& a, const TruncatedSeries& b) {
        TruncatedSeries out(std::min(a.order_, b.order_));
        for (int d = -1; d <= out.order_; ++d) out.add(d, a[d] - b[d]);
        return out;
    }

    friend TruncatedSeries operator*(const mpq_class& s, const TruncatedSeries& a) {
        TruncatedSeries out(a.order_);
        for (int d = -1; d <= a.order_; ++d) out.add(d, s * a[d]);
        return out;
    }

    friend bool operator==(const TruncatedSeries&, const TruncatedSeries&) = default;

private:
    int order_;
    std::vector<mpq_class> coeffs_;
};

inline mpz_class factorial(unsigned long n) {
    mpz_class out;
    mpz_fac_ui(out.get_mpz_t(), n);
    return out;
}

inline mpz_class binomial(unsigned long n, unsigned long k) {
    mpz_class out;
    mpz_bin_uiui(out.get_mpz_t(), n, k);
    return out;
}

/// Delta_j(R; n) for R(n) = 1/n, by the difference recursion.
inline mpq_class delta_R(int j, std::uint64_t n) {
    if (j < 1 || n < 1) throw std::invalid_argument("delta_R needs j >= 1 and n >= 1");
    // row[i] holds Delta_level(R; n + i).
    std::vector<mpq_class> row;
    for (int i = 0; i < j; ++i) {
        row.emplace_back(mpz_class(1), mpz_class(static_cast<unsigned long>(n + static_cast<std::uint64_t>(i))));
    }
    for (int level = 2; level <= j; ++level) {
        for (std::size_t i = 0; i + 1 < row.size(); ++i) row[i] = row[i] - row[i + 1];
        row.pop_back();
    }
    return row.front();
}

/// K(j, 0..T): (j-1)!/prod_{m<j}(n+m) = sum_t K(j,t) / n^(j+t) + O(n^(-j-T-1)).
inline std::vector<mpq_class> K_coeffs(int j, int T) {
    if (j < 1 || T < 0) throw std::invalid_argument("K_coeffs needs j >= 1 and T >= 0");
    std::vector<mpq_class> acc(static_cast<std::size_t>(T + 1));
    acc[0] = mpq_class(factorial(static_cast<unsigned long>(j - 1)));
    // multiply by (1 + m/n)^{-1} = sum_w (-m)^w n^{-w}
    for (int m = 1; m < j; ++m) {
        std::vector<mpq_class> next(acc.size());
        for (std::size_t q = 0; q < acc.size(); ++q) {
            mpz_class power(1);
            for (std::size_t i = q + 1; i-- > 0;) {
                // acc[i] * (-m)^(q-i)
                next[q] += acc[i] * power;
                power *= -m;
            }
        }
        acc = std::move(next);
    }
    return acc;
}

/// C_w = binomial(1/2, w), the Taylor coefficients of sqrt(1 + x).
inline mpq_class C_coeff(int w) {
    if (w < 0) throw std::invalid_argument("C_coeff needs w >= 0");
    mpq_class out(1);
    const mpq_class half(1, 2);
    for (int i = 0; i < w; ++i) out *= half - i;
    out /= mpq_class(factorial(static_cast<unsigned long>(w)));
    return out;
}

/// P(t, d, 0..H): 1/(n+d)^t = sum_q P(t,d,q) / n^(t+q) + O(n^(-t-H-1)).
inline std::vector<mpq_class> P_coeffs(int t, long d, int H) {
    if (t < 1 || H < 0) throw std::invalid_argument("P_coeffs needs t >= 1 and H >= 0");
    std::vector<mpq_class> out;
    out.reserve(static_cast<std::size_t>(H + 1));
    mpz_class dq(1);
    for (int q = 0; q <= H; ++q) {
        mpz_class v = binomial(static_cast<unsigned long>(t + q - 1), static_cast<unsigned long>(q)) * dq;
        out.emplace_back(q % 2 == 0 ? v : mpz_class(-v));
        dq *= d;
    }
    return out;
}

/// a * sqrt((n + d)^2 + c)
struct SqrtTerm {
    mpq_class a;
    long d = 0;
    mpq_class c;

    friend bool operator==(const SqrtTerm&, const SqrtTerm&) = default;
};

/// Re-expand s(n + d) in powers of 1/n, keeping the order of s.
inline TruncatedSeries shift_series(const TruncatedSeries& s, long d) {
    const int T = s.order();
    TruncatedSeries out(T);
    out.add(-1, s[-1]);
    out.add(0, s[-1] * d + s[0]);
    for (int t = 1; t <= T; ++t) {
        if (s[t] == 0) continue;
        auto p = P_coeffs(t, d, T - t);
        for (int q = 0; q <= T - t; ++q) out.add(t + q, s[t] * p[static_cast<std::size_t>(q)]);
    }
    return out;
}

/// a sqrt(N^2 + c) = a N + sum_{w>=1} a C_w c^w N^{1-2w} with N = n + d,
/// each N^{-t} recentred at n.
inline TruncatedSeries sqrt_term_series(const SqrtTerm& term, int T) {
    if (T < 1) throw std::invalid_argument("sqrt_term_series needs T >= 1");
    TruncatedSeries at_shift(T);
    at_shift.add(-1, term.a);
    mpq_class cw(1);
    for (int w = 1; 2 * w - 1 <= T; ++w) {
        cw *= term.c;
        at_shift.add(2 * w - 1, term.a * C_coeff(w) * cw);
    }
    return shift_series(at_shift, term.d);
}

inline TruncatedSeries series_sum(std::span<const SqrtTerm> terms, int T) {
    TruncatedSeries out(T);
    for (const auto& t : terms) out = out + sqrt_term_series(t, T);
    return out;
}

inline TruncatedSeries series_sum(const std::vector<SqrtTerm>& terms, int T) {
    return series_sum(std::span<const SqrtTerm>(terms), T);
}

/// Series of Delta_j(R; n): sum_{t=0}^{T-j} K(j,t) / n^(j+t), truncated at order T.
inline TruncatedSeries delta_R_series(int j, int T) {
    TruncatedSeries out(T);
    if (T < j) return out;
    auto K = K_coeffs(j, T - j);
    for (int t = 0; t <= T - j; ++t) out.add(j + t, K[static_cast<std::size_t>(t)]);
    return out;
}

} // namespace rootsum
