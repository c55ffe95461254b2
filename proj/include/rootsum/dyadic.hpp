#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <gmpxx.h>

namespace rootsum {

/// A dyadic rational m * 2^e with arbitrary precision mantissa.
///
/// Values are kept canonical (odd mantissa, or zero with exponent 0) so that
/// equal values have equal representations and serialize identically.
class Dyadic {
public:
    Dyadic() = default;

    Dyadic(mpz_class mantissa, long exponent) : mant_(std::move(mantissa)), exp_(exponent) { normalize(); }

    explicit Dyadic(long value) : mant_(value) { normalize(); }

    static Dyadic from_int(const mpz_class& value) { return Dyadic(value, 0); }

    static Dyadic pow2(long e) { return Dyadic(mpz_class(1), e); }

    /// floor(q * 2^bits) * 2^-bits
    static Dyadic floor_at(const mpq_class& q, long bits) {
        mpz_class num = q.get_num();
        mpz_class den = q.get_den();
        shift_pair(num, den, bits);
        mpz_class out;
        mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        return Dyadic(std::move(out), -bits);
    }

    /// ceil(q * 2^bits) * 2^-bits
    static Dyadic ceil_at(const mpq_class& q, long bits) {
        mpz_class num = q.get_num();
        mpz_class den = q.get_den();
        shift_pair(num, den, bits);
        mpz_class out;
        mpz_cdiv_q(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        return Dyadic(std::move(out), -bits);
    }

    const mpz_class& mantissa() const { return mant_; }
    long exponent() const { return exp_; }

    int sign() const { return sgn(mant_); }
    bool is_zero() const { return mant_ == 0; }

    mpq_class to_mpq() const {
        mpq_class out(mant_);
        if (exp_ > 0) {
            mpq_mul_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(exp_));
        } else if (exp_ < 0) {
            mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(-exp_));
        }
        return out;
    }

    double to_double() const {
        if (mant_ == 0) return 0.0;
        long e = 0;
        double d = mpz_get_d_2exp(&e, mant_.get_mpz_t());
        return std::ldexp(d, static_cast<int>(std::clamp(e + exp_, -100000L, 100000L)));
    }

    mpz_class floor() const {
        if (exp_ >= 0) return shifted_mant();
        mpz_class out;
        mpz_fdiv_q_2exp(out.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(-exp_));
        return out;
    }

    mpz_class ceil() const {
        if (exp_ >= 0) return shifted_mant();
        mpz_class out;
        mpz_cdiv_q_2exp(out.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(-exp_));
        return out;
    }

    bool is_integer() const { return exp_ >= 0; }

    /// Multiply by 2^e.
    Dyadic scaled(long e) const {
        if (mant_ == 0) return {};
        return Dyadic(mant_, exp_ + e);
    }

    Dyadic abs() const { return Dyadic(::abs(mant_), exp_); }

    /// "m*2^e", the canonical wire form.
    std::string to_string() const { return mant_.get_str() + "*2^" + std::to_string(exp_); }

    static Dyadic parse(std::string_view text) {
        auto star = text.find("*2^");
        if (star == std::string_view::npos) {
            mpz_class m;
            if (m.set_str(std::string(text), 10) != 0) throw std::invalid_argument("bad dyadic: " + std::string(text));
            return Dyadic(std::move(m), 0);
        }
        mpz_class m;
        if (m.set_str(std::string(text.substr(0, star)), 10) != 0) {
            throw std::invalid_argument("bad dyadic mantissa: " + std::string(text));
        }
        std::string etext(text.substr(star + 3));
        std::size_t used = 0;
        long e = 0;
        try {
            e = std::stol(etext, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != etext.size()) throw std::invalid_argument("bad dyadic exponent: " + std::string(text));
        return Dyadic(std::move(m), e);
    }

    /// Scientific decimal rendering with `digits` significant digits.
    std::string to_decimal(int digits = 17) const {
        if (mant_ == 0) return "0";
        mp_bitcnt_t prec = static_cast<mp_bitcnt_t>(mpz_sizeinbase(mant_.get_mpz_t(), 2) + 64);
        mpf_class f(0, std::max<mp_bitcnt_t>(prec, 128));
        mpf_set_z(f.get_mpf_t(), mant_.get_mpz_t());
        if (exp_ > 0) mpf_mul_2exp(f.get_mpf_t(), f.get_mpf_t(), static_cast<mp_bitcnt_t>(exp_));
        if (exp_ < 0) mpf_div_2exp(f.get_mpf_t(), f.get_mpf_t(), static_cast<mp_bitcnt_t>(-exp_));
        int n = gmp_snprintf(nullptr, 0, "%.*Fe", digits - 1, f.get_mpf_t());
        std::string out(static_cast<std::size_t>(n) + 1, '\0');
        gmp_snprintf(out.data(), out.size(), "%.*Fe", digits - 1, f.get_mpf_t());
        out.resize(static_cast<std::size_t>(n));
        return out;
    }

    friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        long e = std::min(a.exp_, b.exp_);
        return Dyadic(a.aligned(e) + b.aligned(e), e);
    }

    friend Dyadic operator-(const Dyadic& a) { return Dyadic(-a.mant_, a.exp_); }

    friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

    friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
        return Dyadic(mpz_class(a.mant_ * b.mant_), a.exp_ + b.exp_);
    }

    friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.mant_ == b.mant_ && a.exp_ == b.exp_; }

    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
        long e = std::min(a.exp_, b.exp_);
        int c = cmp(a.aligned(e), b.aligned(e));
        return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }

    friend Dyadic min(const Dyadic& a, const Dyadic& b) { return b < a ? b : a; }
    friend Dyadic max(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }

private:
    static void shift_pair(mpz_class& num, mpz_class& den, long bits) {
        if (bits >= 0) {
            mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
        } else {
            mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<mp_bitcnt_t>(-bits));
        }
    }

    void normalize() {
        if (mant_ == 0) {
            exp_ = 0;
            return;
        }
        mp_bitcnt_t tz = mpz_scan1(mant_.get_mpz_t(), 0);
        if (tz > 0) {
            mpz_fdiv_q_2exp(mant_.get_mpz_t(), mant_.get_mpz_t(), tz);
            exp_ += static_cast<long>(tz);
        }
    }

    mpz_class shifted_mant() const {
        mpz_class out;
        mpz_mul_2exp(out.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(exp_));
        return out;
    }

    // Mantissa rescaled to exponent e <= exp_.
    mpz_class aligned(long e) const {
        mpz_class out;
        mpz_mul_2exp(out.get_mpz_t(), mant_.get_mpz_t(), static_cast<mp_bitcnt_t>(exp_ - e));
        return out;
    }

    mpz_class mant_{0};
    long exp_ = 0;
};

/// Closed interval [lo, hi] with dyadic endpoints.
struct DyadicInterval {
    Dyadic lo;
    Dyadic hi;

    static DyadicInterval point(const Dyadic& x) { return {x, x}; }

    Dyadic width() const { return hi - lo; }
    bool is_point() const { return lo == hi; }

    bool contains(const mpq_class& x) const { return lo.to_mpq() <= x && x <= hi.to_mpq(); }
    bool contains(const DyadicInterval& other) const { return lo <= other.lo && other.hi <= hi; }

    mpq_class midpoint() const {
        mpq_class m = lo.to_mpq() + hi.to_mpq();
        mpq_div_2exp(m.get_mpq_t(), m.get_mpq_t(), 1);
        return m;
    }

    double mid_double() const { return (lo.to_double() + hi.to_double()) / 2.0; }

    /// Largest absolute value over the interval.
    Dyadic magnitude() const { return max(lo.abs(), hi.abs()); }

    friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;

    friend DyadicInterval operator+(const DyadicInterval& a, const DyadicInterval& b) {
        return {a.lo + b.lo, a.hi + b.hi};
    }
    friend DyadicInterval operator-(const DyadicInterval& a) { return {-a.hi, -a.lo}; }
    friend DyadicInterval operator-(const DyadicInterval& a, const DyadicInterval& b) { return a + (-b); }

    friend DyadicInterval operator*(const DyadicInterval& a, const DyadicInterval& b) {
        Dyadic p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
        return {min(min(p1, p2), min(p3, p4)), max(max(p1, p2), max(p3, p4))};
    }
};

} // namespace rootsum
