#pragma once

// Certified enclosures of real values sum_i c_i * sqrt(r_i).
//
// Square roots are bracketed by integer square roots of scaled radicands,
// isqrt(r * 4^bits) * 2^-bits <= sqrt(r) < (isqrt(r * 4^bits) + 1) * 2^-bits,
// and rational coefficients are applied with outward rounding to the same
// 2^-bits grid. Nothing here touches floating point.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rootsum/config.hpp"
#include "rootsum/dyadic.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/ring.hpp"

namespace rootsum {

/// A formal sum of c * sqrt(r) with rational c and nonnegative integer r.
struct SqrtForm {
    std::vector<std::pair<mpq_class, mpz_class>> terms;

    static SqrtForm from(const QuadRat& w) {
        SqrtForm out;
        const Basis& B = w.basis();
        for (std::size_t i = 0; i < w.coeffs().size(); ++i) {
            if (w.coeffs()[i] != 0) out.terms.emplace_back(w.coeffs()[i], mpz_class(B.products[i]));
        }
        return out;
    }

    static SqrtForm from(const QuadInt& w) { return from(to_rat(w)); }
};

/// The exact value when every radicand is a perfect square.
inline std::optional<mpq_class> exact_rational_value(const SqrtForm& form) {
    mpq_class sum(0);
    mpz_class root;
    for (const auto& [c, r] : form.terms) {
        if (c == 0) continue;
        if (mpz_perfect_square_p(r.get_mpz_t()) == 0) return std::nullopt;
        mpz_sqrt(root.get_mpz_t(), r.get_mpz_t());
        sum += c * mpq_class(root);
    }
    return sum;
}

inline DyadicInterval sqrt_enclosure(const mpz_class& f, long bits) {
    if (f < 0) throw usage_error("sqrt_enclosure of a negative radicand");
    mpz_class scaled;
    mpz_mul_2exp(scaled.get_mpz_t(), f.get_mpz_t(), static_cast<mp_bitcnt_t>(2 * bits));
    mpz_class s;
    mpz_sqrt(s.get_mpz_t(), scaled.get_mpz_t());
    if (s * s == scaled) return DyadicInterval::point(Dyadic(s, -bits));
    return {Dyadic(s, -bits), Dyadic(mpz_class(s + 1), -bits)};
}

/// Enclosure on the 2^-bits grid; width <= (sum |c| + 2 * terms) * 2^-bits.
inline DyadicInterval eval_enclosure(const SqrtForm& form, long bits) {
    mpz_class lo(0), hi(0), scaled, s, t;
    for (const auto& [c, r] : form.terms) {
        if (c == 0 || r == 0) continue;
        mpz_mul_2exp(scaled.get_mpz_t(), r.get_mpz_t(), static_cast<mp_bitcnt_t>(2 * bits));
        mpz_sqrt(s.get_mpz_t(), scaled.get_mpz_t());
        const bool exact = s * s == scaled;
        const mpz_class& p = c.get_num();
        const mpz_class& q = c.get_den();
        mpz_class s_hi = exact ? s : mpz_class(s + 1);
        // c > 0 pairs the lower root with the lower end; c < 0 swaps them.
        const mpz_class& for_lo = sgn(p) > 0 ? s : s_hi;
        const mpz_class& for_hi = sgn(p) > 0 ? s_hi : s;
        t = p * for_lo;
        mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), q.get_mpz_t());
        lo += t;
        t = p * for_hi;
        mpz_cdiv_q(t.get_mpz_t(), t.get_mpz_t(), q.get_mpz_t());
        hi += t;
    }
    return {Dyadic(lo, -bits), Dyadic(hi, -bits)};
}

inline DyadicInterval eval_enclosure(const QuadRat& w, long bits) { return eval_enclosure(SqrtForm::from(w), bits); }
inline DyadicInterval eval_enclosure(const QuadInt& w, long bits) { return eval_enclosure(SqrtForm::from(w), bits); }

/// Integer part and certified fractional part of a real value.
struct FracResult {
    mpz_class int_part;
    DyadicInterval frac;
    /// Value is a rational integer; frac is the point 0.
    bool exact = false;
};

namespace detail {

inline long bits_for_width(const Dyadic& width) {
    // Smallest b with 2^-b <= width, at least 0.
    if (width.sign() <= 0) throw usage_error("target width must be positive");
    long b = -(width.exponent() + static_cast<long>(mpz_sizeinbase(width.mantissa().get_mpz_t(), 2)) - 1);
    return std::max(0L, b);
}

inline FracResult frac_of_rational(const mpq_class& value, const Dyadic& target_width) {
    FracResult out;
    mpz_fdiv_q(out.int_part.get_mpz_t(), value.get_num_mpz_t(), value.get_den_mpz_t());
    mpq_class rest = value - mpq_class(out.int_part);
    if (rest == 0) {
        out.exact = value.get_den() == 1;
        out.frac = DyadicInterval::point(Dyadic());
        return out;
    }
    long bits = std::max(initial_bits, bits_for_width(target_width) + 1);
    out.frac = {Dyadic::floor_at(rest, bits), Dyadic::ceil_at(rest, bits)};
    return out;
}

} // namespace detail

/// {value} enclosed to `target_width`, escalating precision from 64 bits by
/// doubling until floor(value) is determined.
inline FracResult frac_enclosure(const SqrtForm& form, const Dyadic& target_width, long budget = default_bit_budget) {
    if (target_width.sign() <= 0) throw usage_error("target width must be positive");
    if (auto exact = exact_rational_value(form)) return detail::frac_of_rational(*exact, target_width);
    DyadicInterval iv;
    long bits = initial_bits;
    for (; bits <= budget; bits *= 2) {
        iv = eval_enclosure(form, bits);
        if (iv.width() > target_width) continue;
        mpz_class fl = iv.lo.floor();
        if (fl != iv.hi.floor()) continue;
        Dyadic base = Dyadic::from_int(fl);
        return FracResult{fl, {iv.lo - base, iv.hi - base}, false};
    }
    throw budget_error("cannot determine the integer part", iv, budget);
}

inline FracResult frac_enclosure(const QuadRat& w, const Dyadic& target_width, long budget = default_bit_budget) {
    return frac_enclosure(SqrtForm::from(w), target_width, budget);
}
inline FracResult frac_enclosure(const QuadInt& w, const Dyadic& target_width, long budget = default_bit_budget) {
    return frac_enclosure(SqrtForm::from(w), target_width, budget);
}

/// Enclosure of min(x, 1 - x) for x ranging over a fractional-part enclosure.
inline DyadicInterval dist_of_frac(const DyadicInterval& frac) {
    const Dyadic half = Dyadic::pow2(-1);
    const Dyadic one(1);
    if (frac.hi <= half) return frac;
    if (frac.lo >= half) return {one - frac.hi, one - frac.lo};
    return {min(frac.lo, one - frac.hi), half};
}

/// ||value||, the distance to the nearest integer.
inline DyadicInterval dist_to_int(const SqrtForm& form, const Dyadic& target_width, long budget = default_bit_budget) {
    return dist_of_frac(frac_enclosure(form, target_width, budget).frac);
}

inline DyadicInterval dist_to_int(const QuadRat& w, const Dyadic& target_width, long budget = default_bit_budget) {
    return dist_to_int(SqrtForm::from(w), target_width, budget);
}
inline DyadicInterval dist_to_int(const QuadInt& w, const Dyadic& target_width, long budget = default_bit_budget) {
    return dist_to_int(SqrtForm::from(w), target_width, budget);
}

/// Sign of the real value of w (-1, 0, 1). Zero iff w == 0 by uniqueness of coordinates.
inline int certified_sign(const QuadRat& w, long budget = default_bit_budget) {
    if (w.is_zero()) return 0;
    SqrtForm form = SqrtForm::from(w);
    DyadicInterval iv;
    for (long bits = initial_bits; bits <= budget; bits *= 2) {
        iv = eval_enclosure(form, bits);
        if (iv.lo.sign() > 0) return 1;
        if (iv.hi.sign() < 0) return -1;
    }
    throw budget_error("cannot determine sign", iv, budget);
}

// JSON: {"lo": "m*2^e", "hi": "m*2^e", "lo_decimal": ..., "hi_decimal": ...}
inline nlohmann::ordered_json to_json(const DyadicInterval& iv) {
    nlohmann::ordered_json out;
    out["lo"] = iv.lo.to_string();
    out["hi"] = iv.hi.to_string();
    out["lo_decimal"] = iv.lo.to_decimal();
    out["hi_decimal"] = iv.hi.to_decimal();
    return out;
}

inline DyadicInterval interval_from_json(const nlohmann::ordered_json& j) {
    return {Dyadic::parse(j.at("lo").get<std::string>()), Dyadic::parse(j.at("hi").get<std::string>())};
}

} // namespace rootsum
