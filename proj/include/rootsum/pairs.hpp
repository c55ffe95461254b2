#pragma once

// (T, eps, h)-pairs of perturbed square-root sums and the integer instances
// built from them.
//
// An element of S_{v,h,+} is sum_{j=0}^{h-1} a_j sqrt((n+j)^2 + (-1)^j / v) with
// a_j > 0; S_{v,h,-} flips every perturbation sign. A pair (w+, w-) cancels
// the expansion through degree h-1, has leading coefficients +-K(h,0) at
// degree h, and tracks +-K(h, q) within eps for the next T degrees.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rootsum/dyadic.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/eval.hpp"
#include "rootsum/series.hpp"
#include "rootsum/stats.hpp"

namespace rootsum {

enum class SignClass { plus, minus };

/// Raised when a rescaling would divide by a zero or wrongly signed leading coefficient.
class degenerate_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct SqrtSumExpr {
    std::vector<SqrtTerm> terms;
    std::uint64_t v = 1;
    SignClass sign_class = SignClass::plus;

    std::size_t level() const { return terms.size(); }

    /// Perturbation carried by the term at `shift`.
    static mpq_class perturbation(std::uint64_t v, SignClass cls, long shift) {
        mpq_class c(1, static_cast<unsigned long>(v));
        c.canonicalize();
        const bool negative = (shift % 2 != 0) != (cls == SignClass::minus);
        return negative ? mpq_class(-c) : c;
    }

    static SqrtSumExpr make(std::uint64_t v, SignClass cls, const std::vector<mpq_class>& a) {
        if (v == 0) throw usage_error("v must be positive");
        SqrtSumExpr out;
        out.v = v;
        out.sign_class = cls;
        for (std::size_t j = 0; j < a.size(); ++j) {
            out.terms.push_back({a[j], static_cast<long>(j), perturbation(v, cls, static_cast<long>(j))});
        }
        return out;
    }

    std::vector<mpq_class> outer() const {
        std::vector<mpq_class> a;
        for (const auto& t : terms) a.push_back(t.a);
        return a;
    }

    /// Membership in S_{v,h,+} or S_{v,h,-}.
    bool well_formed() const {
        if (terms.empty() || v == 0) return false;
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const auto& t = terms[j];
            if (t.d != static_cast<long>(j) || t.a <= 0) return false;
            if (t.c != perturbation(v, sign_class, t.d)) return false;
        }
        return true;
    }

    SqrtSumExpr scaled(const mpq_class& s) const {
        SqrtSumExpr out = *this;
        for (auto& t : out.terms) t.a *= s;
        return out;
    }

    TruncatedSeries series(int T) const { return series_sum(terms, T); }

    friend bool operator==(const SqrtSumExpr&, const SqrtSumExpr&) = default;
};

/// Outcome of checking the four pair conditions, with exact margins.
struct PairCheck {
    bool ok = false;
    bool structure_ok = false;
    bool vanishing_ok = false;
    bool leading_ok = false;
    /// max_q |l_{h+q}(w+) - K(h,q)| and max_q |l_{h+q}(w-) + K(h,q)|
    mpq_class plus_margin;
    mpq_class minus_margin;
    std::string failure;

    mpq_class margin() const { return std::max(plus_margin, minus_margin); }
};

struct PairCert {
    SqrtSumExpr omega_plus;
    SqrtSumExpr omega_minus;
    int T = 1;
    mpq_class eps;
    int h = 1;
    TruncatedSeries series_plus;
    TruncatedSeries series_minus;
    PairCheck checks;

    std::uint64_t v() const { return omega_plus.v; }
};

inline PairCheck is_pair(const SqrtSumExpr& wp, const SqrtSumExpr& wm, int T, const mpq_class& eps, int h) {
    if (T < 1 || h < 1) throw usage_error("is_pair needs T >= 1 and h >= 1");
    PairCheck out;
    out.structure_ok = wp.well_formed() && wm.well_formed() && wp.sign_class == SignClass::plus &&
                       wm.sign_class == SignClass::minus && wp.v == wm.v &&
                       wp.level() == static_cast<std::size_t>(h) && wm.level() == static_cast<std::size_t>(h);
    if (!out.structure_ok) out.failure = "elements are not in S_{v,h,+} x S_{v,h,-}";

    const TruncatedSeries sp = wp.series(h + T);
    const TruncatedSeries sm = wm.series(h + T);
    const auto K = K_coeffs(h, T);

    out.vanishing_ok = true;
    for (int q = 1; q < h; ++q) {
        if (sp[q] != 0 || sm[q] != 0) out.vanishing_ok = false;
    }
    if (!out.vanishing_ok && out.failure.empty()) out.failure = "low-order coefficients do not vanish";

    out.leading_ok = sp[h] == K[0] && sm[h] == -K[0];
    if (!out.leading_ok && out.failure.empty()) out.failure = "leading coefficients differ from +-K(h,0)";

    for (int q = 1; q <= T; ++q) {
        const auto& k = K[static_cast<std::size_t>(q)];
        mpq_class dp = abs(sp[h + q] - k);
        mpq_class dm = abs(sm[h + q] + k);
        if (dp > out.plus_margin) out.plus_margin = dp;
        if (dm > out.minus_margin) out.minus_margin = dm;
    }
    const bool within = out.margin() <= eps;
    if (!within && out.failure.empty()) out.failure = "tolerance exceeded: margin " + out.margin().get_str();
    out.ok = out.structure_ok && out.vanishing_ok && out.leading_ok && within;
    return out;
}

inline PairCert make_cert(SqrtSumExpr wp, SqrtSumExpr wm, int T, const mpq_class& eps, int h) {
    PairCert cert;
    cert.checks = is_pair(wp, wm, T, eps, h);
    cert.series_plus = wp.series(h + T);
    cert.series_minus = wm.series(h + T);
    cert.omega_plus = std::move(wp);
    cert.omega_minus = std::move(wm);
    cert.T = T;
    cert.eps = eps;
    cert.h = h;
    return cert;
}

struct BasePairResult {
    std::optional<PairCert> cert;
    /// Exact margin of the tolerance conditions (reported either way).
    mpq_class margin;
};

/// w_{v,+-}(n) = 2v sqrt(n^2 +- 1/v), checked as a (T, eps, 1)-pair.
inline BasePairResult base_pair(std::uint64_t v, int T, const mpq_class& eps) {
    if (v == 0) throw usage_error("v must be positive");
    const mpq_class a(mpz_class(2 * v));
    auto wp = SqrtSumExpr::make(v, SignClass::plus, {a});
    auto wm = SqrtSumExpr::make(v, SignClass::minus, {a});
    PairCert cert = make_cert(std::move(wp), std::move(wm), T, eps, 1);
    BasePairResult out;
    out.margin = cert.checks.margin();
    if (cert.checks.ok) out.cert = std::move(cert);
    return out;
}

/// A+(n) = r+(n) + r-(n+1) and A-(n) = r+(n+1) + r-(n), merged per shift.
inline std::pair<SqrtSumExpr, SqrtSumExpr> combine(const SqrtSumExpr& r_plus, const SqrtSumExpr& r_minus) {
    if (!r_plus.well_formed() || !r_minus.well_formed() || r_plus.sign_class != SignClass::plus ||
        r_minus.sign_class != SignClass::minus || r_plus.v != r_minus.v || r_plus.level() != r_minus.level()) {
        throw usage_error("combine needs a matching (+, -) pair at one level");
    }
    const std::size_t m = r_plus.level();
    std::vector<mpq_class> ap(m + 1), am(m + 1);
    for (std::size_t s = 0; s < m; ++s) {
        ap[s] += r_plus.terms[s].a;
        ap[s + 1] += r_minus.terms[s].a;
        am[s + 1] += r_plus.terms[s].a;
        am[s] += r_minus.terms[s].a;
    }
    return {SqrtSumExpr::make(r_plus.v, SignClass::plus, ap), SqrtSumExpr::make(r_plus.v, SignClass::minus, am)};
}

inline std::pair<SqrtSumExpr, SqrtSumExpr> combine(const PairCert& cert) {
    return combine(cert.omega_plus, cert.omega_minus);
}

/// Scales (A+, A-) at level m+1 so that l_{m+1} becomes +K(m+1,0) and -K(m+1,0).
inline std::pair<SqrtSumExpr, SqrtSumExpr> rescale_pair(const SqrtSumExpr& a_plus, const SqrtSumExpr& a_minus, int m) {
    const mpq_class lp = a_plus.series(m + 1)[m + 1];
    const mpq_class lm = a_minus.series(m + 1)[m + 1];
    if (lp <= 0 || lm >= 0) {
        throw degenerate_error("leading coefficients l_" + std::to_string(m + 1) + " = (" + lp.get_str() + ", " +
                               lm.get_str() + ") cannot be normalised");
    }
    const mpq_class k0 = K_coeffs(m + 1, 0)[0];
    return {a_plus.scaled(k0 / lp), a_minus.scaled(-k0 / lm)};
}

/// Powers of two 2^4 .. 2^20.
inline std::vector<std::uint64_t> default_v_schedule() {
    std::vector<std::uint64_t> out;
    for (int e = 4; e <= 20; ++e) out.push_back(std::uint64_t{1} << e);
    return out;
}

/// First v in the schedule whose folded base pair passes is_pair at (T, eps, h).
inline PairCert build_pair(int h, int T, const mpq_class& eps, std::span<const std::uint64_t> v_schedule) {
    if (h < 1 || T < 1) throw usage_error("build_pair needs h >= 1 and T >= 1");
    if (eps <= 0) throw usage_error("eps must be positive");
    std::optional<mpq_class> best;
    for (std::uint64_t v : v_schedule) {
        const mpq_class a(mpz_class(2 * v));
        auto wp = SqrtSumExpr::make(v, SignClass::plus, {a});
        auto wm = SqrtSumExpr::make(v, SignClass::minus, {a});
        try {
            for (int m = 1; m < h; ++m) {
                auto [ap, am] = combine(wp, wm);
                std::tie(wp, wm) = rescale_pair(ap, am, m);
            }
        } catch (const degenerate_error&) {
            continue;
        }
        PairCert cert = make_cert(std::move(wp), std::move(wm), T, eps, h);
        if (cert.checks.ok) return cert;
        if (cert.checks.structure_ok && cert.checks.vanishing_ok && cert.checks.leading_ok &&
            (!best || cert.checks.margin() < *best)) {
            best = cert.checks.margin();
        }
    }
    throw not_found_error("no (T=" + std::to_string(T) + ", eps=" + eps.get_str() + ", h=" + std::to_string(h) +
                          ")-pair in the v schedule; best margin " + (best ? best->get_str() : std::string("none")));
}

inline PairCert build_pair(int h, int T, const mpq_class& eps) {
    auto schedule = default_v_schedule();
    return build_pair(h, T, eps, schedule);
}

/// sum_i sqrt(a_i^2 (n+i-1)^2 + b_i) = integer-coefficient linear part + G0 / n^k + O(n^-k-1).
struct Theorem1Instance {
    int k = 1;
    std::vector<mpz_class> a;
    std::vector<mpz_class> b;
    mpq_class G0;
    std::uint64_t v = 1;
    mpz_class L;
    int predicted_exponent = 1;

    /// Radicands a_i^2 (n+i-1)^2 + b_i at n.
    std::vector<mpz_class> radicands(std::uint64_t n) const {
        std::vector<mpz_class> out;
        for (std::size_t i = 0; i < a.size(); ++i) {
            mpz_class x(static_cast<unsigned long>(n + i));
            out.push_back(a[i] * a[i] * x * x + b[i]);
        }
        return out;
    }
};

namespace detail {

inline bool scale_is_integral(const mpz_class& L, const SqrtSumExpr& w) {
    for (const auto& t : w.terms) {
        mpq_class A = mpq_class(L) * t.a;
        if (A.get_den() != 1) return false;
        mpq_class b = A * A * t.c;
        if (b.get_den() != 1) return false;
    }
    return true;
}

} // namespace detail

/// Clears denominators of w+ from a level-k certificate.
///
/// With no explicit scale the smallest L making every L*a_j and
/// (L*a_j)^2 * c_j integral is used; L = v * lcm(den a_j) always qualifies.
inline Theorem1Instance theorem1_instance(int k, const PairCert& pair, std::optional<mpz_class> scale_L = std::nullopt) {
    if (pair.h != k) throw usage_error("certificate level " + std::to_string(pair.h) + " does not match k=" + std::to_string(k));
    const SqrtSumExpr& w = pair.omega_plus;
    mpz_class L;
    if (scale_L) {
        L = *scale_L;
        if (L <= 0 || !detail::scale_is_integral(L, w)) throw usage_error("scale " + L.get_str() + " does not clear denominators");
    } else {
        mpz_class den(1);
        for (const auto& t : w.terms) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), t.a.get_den_mpz_t());
        const mpz_class limit = den * static_cast<unsigned long>(w.v);
        for (L = den; L <= limit; L += den) {
            if (detail::scale_is_integral(L, w)) break;
        }
        if (!detail::scale_is_integral(L, w)) throw std::logic_error("automatic scale failed");
    }
    Theorem1Instance inst;
    inst.k = k;
    inst.v = w.v;
    inst.L = L;
    inst.predicted_exponent = k;
    for (const auto& t : w.terms) {
        mpq_class A = mpq_class(L) * t.a;
        mpq_class b = A * A * t.c;
        inst.a.push_back(A.get_num());
        inst.b.push_back(b.get_num());
        if (inst.b.back() == 0) throw std::logic_error("zero perturbation in instance");
    }
    inst.G0 = mpq_class(L) * w.series(k)[k];
    if (inst.G0 == 0) throw std::logic_error("vanishing leading coefficient");
    for (const auto& r : inst.radicands(1)) {
        if (r < 1) throw std::logic_error("instance radicand below 1 at n=1");
    }
    return inst;
}

struct VerifyRow {
    std::uint64_t n = 0;
    DyadicInterval err;
    /// n^k * midpoint(err)
    double scaled = 0;
};

struct VerifyTable {
    std::vector<VerifyRow> rows;
    /// Least-squares slope of log ||.|| against log n.
    double slope = 0;
};

/// Certified ||sum_i sqrt(a_i^2 (n+i-1)^2 + b_i)|| for each n.
///
/// `extra_bits` is the precision kept below the predicted magnitude |G0| / n^k.
inline VerifyTable theorem1_verify(const Theorem1Instance& inst, std::span<const std::uint64_t> n_list,
                                   long extra_bits = 64, long budget = default_bit_budget) {
    if (n_list.empty()) throw usage_error("n list is empty");
    VerifyTable out;
    std::vector<double> lx, ly;
    for (std::uint64_t n : n_list) {
        if (n < 1) throw usage_error("n must be positive");
        SqrtForm form;
        for (auto& r : inst.radicands(n)) form.terms.emplace_back(mpq_class(1), std::move(r));
        const long mag = static_cast<long>(std::ceil(inst.k * std::log2(static_cast<double>(n))));
        const Dyadic width = Dyadic::pow2(-(extra_bits + mag));
        VerifyRow row;
        row.n = n;
        row.err = dist_to_int(form, width, std::max(budget, 2 * (extra_bits + mag)));
        row.scaled = row.err.mid_double() * std::pow(static_cast<double>(n), inst.k);
        if (row.err.mid_double() > 0) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(row.err.mid_double()));
        }
        out.rows.push_back(std::move(row));
    }
    out.slope = lx.size() >= 2 ? least_squares_slope(lx, ly) : std::nan("");
    return out;
}

inline nlohmann::ordered_json to_json(const Theorem1Instance& inst) {
    nlohmann::ordered_json out;
    out["k"] = inst.k;
    auto arr = [](const std::vector<mpz_class>& xs) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& x : xs) {
            if (x.fits_slong_p()) {
                j.push_back(x.get_si());
            } else {
                j.push_back(x.get_str());
            }
        }
        return j;
    };
    out["a"] = arr(inst.a);
    out["b"] = arr(inst.b);
    out["G0"] = inst.G0.get_str();
    out["v"] = inst.v;
    out["L"] = inst.L.fits_slong_p() ? nlohmann::ordered_json(inst.L.get_si()) : nlohmann::ordered_json(inst.L.get_str());
    out["predicted_exponent"] = inst.predicted_exponent;
    return out;
}

} // namespace rootsum
