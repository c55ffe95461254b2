#pragma once

// Test-only reference computations. Everything here goes through MPFR at a
// precision far above what the library requests, and never calls into the
// library's own enclosure code.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <mpfr.h>

#include "rootsum/dyadic.hpp"
#include "rootsum/ring.hpp"

namespace oracle {

inline constexpr long prec = 2048;

class Real {
public:
    explicit Real(long bits = prec) { mpfr_init2(x_, bits); mpfr_set_zero(x_, 1); }
    Real(const Real&) = delete;
    Real& operator=(const Real&) = delete;
    ~Real() { mpfr_clear(x_); }
    mpfr_ptr get() { return x_; }
    mpfr_srcptr get() const { return x_; }

private:
    mpfr_t x_;
};

inline mpq_class to_mpq(mpfr_srcptr x) {
    if (mpfr_zero_p(x)) return 0;
    mpz_class m;
    const mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), x);
    mpq_class out(m);
    if (e >= 0) {
        mpz_mul_2exp(out.get_num_mpz_t(), out.get_num_mpz_t(), static_cast<mp_bitcnt_t>(e));
    } else {
        mpz_mul_2exp(out.get_den_mpz_t(), out.get_den_mpz_t(), static_cast<mp_bitcnt_t>(-e));
    }
    out.canonicalize();
    return out;
}

using Terms = std::vector<std::pair<mpq_class, mpz_class>>;

/// sum c sqrt(r), rounded to `prec` bits per operation.
inline void value_into(Real& out, const Terms& terms) {
    Real s;
    mpfr_set_zero(out.get(), 1);
    for (const auto& [c, r] : terms) {
        mpfr_set_z(s.get(), r.get_mpz_t(), MPFR_RNDN);
        mpfr_sqrt(s.get(), s.get(), MPFR_RNDN);
        mpfr_mul_q(s.get(), s.get(), c.get_mpq_t(), MPFR_RNDN);
        mpfr_add(out.get(), out.get(), s.get(), MPFR_RNDN);
    }
}

inline Terms terms_of(const rootsum::QuadRat& w) {
    Terms t;
    for (std::size_t i = 0; i < w.coeffs().size(); ++i) t.emplace_back(w.coeffs()[i], mpz_class(w.basis().products[i]));
    return t;
}

inline Terms terms_of(const rootsum::QuadInt& w) { return terms_of(rootsum::to_rat(w)); }

inline mpq_class value(const Terms& terms) {
    Real v;
    value_into(v, terms);
    return to_mpq(v.get());
}

inline mpq_class value(const rootsum::QuadRat& w) { return value(terms_of(w)); }
inline mpq_class value(const rootsum::QuadInt& w) { return value(terms_of(w)); }

inline mpq_class floor_q(const mpq_class& x) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return mpq_class(f);
}

inline mpq_class frac(const mpq_class& x) { return x - floor_q(x); }

inline mpq_class dist(const mpq_class& x) {
    const mpq_class f = frac(x);
    return f <= mpq_class(1, 2) ? f : mpq_class(1) - f;
}

inline mpq_class dist(const Terms& t) { return dist(value(t)); }
inline mpq_class dist(const rootsum::QuadInt& w) { return dist(value(w)); }
inline mpq_class dist(const rootsum::QuadRat& w) { return dist(value(w)); }

/// Slack covering the rounding of `value` for moderate coefficients.
inline mpq_class tol() {
    mpz_class d(1);
    d <<= 1900;
    return mpq_class(mpz_class(1), d);
}

inline bool encloses(const rootsum::DyadicInterval& iv, const mpq_class& x, const mpq_class& slack = tol()) {
    return iv.lo.to_mpq() - slack <= x && x <= iv.hi.to_mpq() + slack;
}

/// The value as a double, for tolerance comparisons with frozen constants.
inline double approx(const mpq_class& x) { return x.get_d(); }

/// Smallest ||sum d_f sqrt f|| over nonzero integer vectors with |d_f| <= n,
/// by plain enumeration; returns the distance only.
inline mpq_class brute_min(int tau, long n) {
    const rootsum::Basis& B = rootsum::basis_for(tau);
    const std::size_t dim = B.size() - 1;
    std::vector<long> d(dim, -n);
    mpq_class best(1);
    for (;;) {
        bool zero = true;
        for (long x : d) zero = zero && x == 0;
        if (!zero) {
            Terms t;
            for (std::size_t i = 0; i < dim; ++i) t.emplace_back(mpq_class(d[i]), mpz_class(B.products[i + 1]));
            const mpq_class v = dist(t);
            if (v < best) best = v;
        }
        std::size_t i = 0;
        while (i < dim && d[i] == n) d[i++] = -n;
        if (i == dim) break;
        ++d[i];
    }
    return best;
}

/// min over 1 <= b <= n of ||sqrt(b) - alpha||, with the minimising b.
inline std::pair<mpq_class, long> best_single_root(const mpq_class& alpha, long n) {
    mpq_class best(1);
    long arg = 0;
    for (long b = 1; b <= n; ++b) {
        const mpq_class v = dist(Terms{{mpq_class(1), mpz_class(b)}, {mpq_class(-alpha), mpz_class(1)}});
        if (v < best) {
            best = v;
            arg = b;
        }
    }
    return {best, arg};
}

inline rootsum::QuadInt random_int(std::mt19937_64& rng, int tau, long lo, long hi) {
    std::uniform_int_distribution<long> pick(lo, hi);
    std::vector<mpz_class> c(rootsum::basis_for(tau).size());
    for (auto& x : c) x = pick(rng);
    return rootsum::QuadInt(tau, std::move(c));
}

inline rootsum::QuadRat random_rat(std::mt19937_64& rng, int tau, long lo, long hi, long max_den) {
    std::uniform_int_distribution<long> num(lo, hi);
    std::uniform_int_distribution<long> den(1, max_den);
    std::vector<mpq_class> c(rootsum::basis_for(tau).size());
    for (auto& x : c) x = mpq_class(mpz_class(num(rng)), mpz_class(den(rng)));
    return rootsum::QuadRat(tau, std::move(c));
}

} // namespace oracle
