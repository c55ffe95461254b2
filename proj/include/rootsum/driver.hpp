#pragma once

// End-to-end solvers: sums of k square roots of integers in [1, n] that land
// close to a target alpha modulo 1, integer instances whose fractional part
// decays like n^-k, and slope scans over lists of n.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <regex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>
#include <mpfr.h>

#include "rootsum/config.hpp"
#include "rootsum/dyadic.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/eval.hpp"
#include "rootsum/greedy.hpp"
#include "rootsum/pairs.hpp"
#include "rootsum/parallel.hpp"
#include "rootsum/pigeonhole.hpp"
#include "rootsum/ring.hpp"
#include "rootsum/stats.hpp"

namespace rootsum {

struct GammaInfo {
    mpq_class gamma;
    int tau = 1;
};

/// gamma_k = 2^(floor(log2(k+1)) - 1) - 1/2, with tau = floor(log2(k+1)).
inline GammaInfo gamma(int k) {
    if (k < 1) throw usage_error("k must be positive");
    GammaInfo out;
    out.tau = std::bit_width(static_cast<unsigned>(k) + 1u) - 1;
    mpq_class p(1);
    if (out.tau >= 1) mpq_mul_2exp(p.get_mpq_t(), p.get_mpq_t(), static_cast<mp_bitcnt_t>(out.tau - 1));
    out.gamma = p - mpq_class(1, 2);
    return out;
}

struct AlphaTarget {
    std::string text;
    /// Exact rational in [0, 1).
    mpq_class value;
    /// Bits used when the text named a transcendental constant; 0 when exact.
    long precision_bits = 0;
};

namespace detail {

inline mpq_class frac_of(const mpq_class& x) {
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return x - mpq_class(fl);
}

inline std::optional<mpq_class> parse_decimal(const std::string& s) {
    static const std::regex pattern(R"(^([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?$)");
    std::smatch m;
    if (!std::regex_match(s, m, pattern)) return std::nullopt;
    const std::string whole = m[2].str();
    const std::string fraction = m[3].str();
    if (whole.empty() && fraction.empty()) return std::nullopt;
    mpz_class digits(whole + fraction, 10);
    long scale = -static_cast<long>(fraction.size());
    if (m[4].matched) {
        try {
            scale += std::stol(m[4].str());
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    if (scale > 100000 || scale < -100000) return std::nullopt;
    mpz_class ten;
    mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    mpq_class out = scale < 0 ? mpq_class(digits, ten) : mpq_class(digits * ten);
    out.canonicalize();
    if (m[1].str() == "-") out = -out;
    return out;
}

inline mpq_class mpfr_to_mpq(mpfr_srcptr x) {
    mpz_class z;
    const mpfr_exp_t e = mpfr_get_z_2exp(z.get_mpz_t(), x);
    mpq_class out(z);
    if (e > 0) mpq_mul_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    if (e < 0) mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    return out;
}

} // namespace detail

/// Bits for converting a named constant when the target accuracy is n^-gamma / 2^10.
inline long alpha_precision_bits(const mpq_class& gamma_value, std::uint64_t n) {
    const double need = 10.0 + std::ceil(gamma_value.get_d() * std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2))));
    return std::max(256L, static_cast<long>(need) + 64);
}

/// Decimal ("0.25", "-1e-3"), fraction ("p/q"), or one of pi, e, sqrt2; reduced mod 1.
inline AlphaTarget parse_alpha(const std::string& text, long precision_bits = 256) {
    AlphaTarget out;
    out.text = text;
    mpq_class raw;
    if (text == "pi" || text == "e" || text == "sqrt2") {
        mpfr_t x;
        mpfr_init2(x, static_cast<mpfr_prec_t>(precision_bits));
        if (text == "pi") {
            mpfr_const_pi(x, MPFR_RNDN);
        } else if (text == "e") {
            mpfr_set_ui(x, 1, MPFR_RNDN);
            mpfr_exp(x, x, MPFR_RNDN);
        } else {
            mpfr_sqrt_ui(x, 2, MPFR_RNDN);
        }
        raw = detail::mpfr_to_mpq(x);
        mpfr_clear(x);
        out.precision_bits = precision_bits;
    } else if (auto dec = detail::parse_decimal(text)) {
        raw = *dec;
    } else if (text.find('/') != std::string::npos) {
        if (raw.set_str(text, 10) != 0 || raw.get_den() == 0) throw usage_error("cannot parse alpha: " + text);
        raw.canonicalize();
    } else {
        throw usage_error("cannot parse alpha: " + text);
    }
    out.value = detail::frac_of(raw);
    return out;
}

/// ||sum_j sqrt(b_j) - alpha|| enclosed to width 2^-bits.
inline DyadicInterval approximation_error(std::span<const mpz_class> b, const mpq_class& alpha, long bits,
                                          long budget = default_bit_budget) {
    SqrtForm form;
    for (const auto& x : b) form.terms.emplace_back(mpq_class(1), x);
    if (alpha != 0) form.terms.emplace_back(mpq_class(-alpha), mpz_class(1));
    return dist_to_int(form, Dyadic::pow2(-bits), std::max(budget, 2 * bits));
}

struct Approximation {
    int k = 1;
    std::uint64_t n = 0;
    AlphaTarget alpha;
    int tau = 1;
    mpq_class gamma;
    /// floor(sqrt(n / (p_1...p_tau)))
    std::uint64_t m = 0;
    std::vector<mpz_class> b;
    DyadicInterval err;
    /// The same error without the unit terms.
    DyadicInterval err_unpadded;
    /// Upper dyadic bound for n^-gamma.
    Dyadic bound;
    double D_emp = 0;
    /// alpha0 - {kappa} from the descent.
    DyadicInterval residual;
    bool residual_nonnegative = false;
    int t = 0;
    mpz_class height_used;
};

namespace detail {

/// Center and height cap for the box [1, m]; equals (floor(m/2), floor(m/3)) for m >= 6.
inline std::pair<long, long> box_center_cap(std::uint64_t m) {
    const long center = std::max(1L, static_cast<long>(m / 2));
    const long cap = std::max(0L, std::min(static_cast<long>(m / 3), static_cast<long>(m / 2) - 1));
    return {center, cap};
}

inline long error_bits(const mpq_class& gamma_value, std::uint64_t n) {
    return initial_bits + static_cast<long>(std::ceil(gamma_value.get_d() * std::log2(static_cast<double>(n))));
}

inline Dyadic power_bound(const mpq_class& gamma_value, int tau, std::uint64_t n) {
    // n^-gamma = 1 / (n^(2^(tau-1) - 1) * sqrt(n))
    const long bits = error_bits(gamma_value, n) + 64;
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), n, (1ul << (tau - 1)) - 1);
    const DyadicInterval r = sqrt_enclosure(mpz_class(static_cast<unsigned long>(n)), bits);
    return Dyadic::ceil_at(mpq_class(1) / (mpq_class(p) * r.lo.to_mpq()), bits);
}

} // namespace detail

struct Theorem2Plan {
    int tau = 1;
    std::uint64_t m = 0;
    long center = 1;
    long cap = 0;
    int ladder_depth = 0;
};

inline Theorem2Plan plan_theorem2(int k, std::uint64_t n, std::uint64_t enum_cap) {
    const GammaInfo g = gamma(k);
    if (g.tau > max_tau) throw std::out_of_range("k=" + std::to_string(k) + " needs more than " + std::to_string(max_tau) + " primes");
    const Basis& basis = basis_for(g.tau);
    const std::uint64_t P = basis.radical();
    if (n < 4 * P) {
        throw std::out_of_range("n must be at least 4*" + std::to_string(P) + " = " + std::to_string(4 * P) + " for k=" +
                                std::to_string(k));
    }
    Theorem2Plan plan;
    plan.tau = g.tau;
    mpz_class m;
    mpz_sqrt(m.get_mpz_t(), mpz_class(static_cast<unsigned long>(n / P)).get_mpz_t());
    plan.m = m.get_ui();
    std::tie(plan.center, plan.cap) = detail::box_center_cap(plan.m);
    plan.ladder_depth = ladder_depth(basis, static_cast<std::uint64_t>(plan.cap), enum_cap);
    return plan;
}

/// Solves with a prebuilt ladder at least as deep as the plan needs.
inline Approximation solve_theorem2(int k, const AlphaTarget& alpha, std::uint64_t n, std::span<const LadderEntry> ladder,
                                    const SearchOptions& opts = {}) {
    const GammaInfo g = gamma(k);
    const Theorem2Plan plan = plan_theorem2(k, n, opts.enum_cap);
    const Basis& basis = basis_for(plan.tau);
    if (ladder.size() < static_cast<std::size_t>(plan.ladder_depth)) throw usage_error("ladder too shallow");
    const auto used = ladder.first(static_cast<std::size_t>(plan.ladder_depth));

    const ShiftResult shift =
        centered_descent(QuadRat::constant(plan.tau, alpha.value), basis, plan.center, plan.cap, used, opts.bit_budget);

    Approximation out;
    out.k = k;
    out.n = n;
    out.alpha = alpha;
    out.tau = plan.tau;
    out.gamma = g.gamma;
    out.m = plan.m;
    const std::size_t padding = static_cast<std::size_t>(k + 1) - basis.size();
    std::vector<mpz_class> core;
    for (const auto& [f, c] : shift.d) {
        if (c < 1 || c > mpz_class(static_cast<unsigned long>(plan.m))) throw std::logic_error("coefficient outside [1, m]");
        core.push_back(c * c * f);
    }
    out.b.assign(padding, mpz_class(1));
    out.b.insert(out.b.end(), core.begin(), core.end());
    for (const auto& x : out.b) {
        if (x < 1 || x > mpz_class(static_cast<unsigned long>(n))) throw std::logic_error("b outside [1, n]");
    }
    const long bits = detail::error_bits(g.gamma, n) + 64;
    out.err = approximation_error(out.b, alpha.value, bits, opts.bit_budget);
    out.err_unpadded = approximation_error(core, alpha.value, bits, opts.bit_budget);
    out.bound = detail::power_bound(g.gamma, plan.tau, n);
    out.D_emp = mpq_class(out.err.hi.to_mpq() / out.bound.to_mpq()).get_d();
    out.residual = shift.descent.residual;
    out.residual_nonnegative = certified_sign(shift.descent.residual_exact, opts.bit_budget) >= 0;
    out.t = shift.descent.t;
    out.height_used = shift.descent.height_used;
    return out;
}

inline Approximation solve_theorem2(int k, const std::string& alpha_text, std::uint64_t n, const LadderSource& source,
                                    const SearchOptions& opts = {}) {
    const GammaInfo g = gamma(k);
    const Theorem2Plan plan = plan_theorem2(k, n, opts.enum_cap);
    const AlphaTarget alpha = parse_alpha(alpha_text, alpha_precision_bits(g.gamma, n));
    std::vector<LadderEntry> ladder;
    if (plan.ladder_depth > 0) ladder = source(basis_for(plan.tau), plan.ladder_depth);
    return solve_theorem2(k, alpha, n, ladder, opts);
}

inline Approximation solve_theorem2(int k, const std::string& alpha_text, std::uint64_t n, const SearchOptions& opts = {}) {
    return solve_theorem2(k, alpha_text, n, direct_ladder_source(opts), opts);
}

inline nlohmann::ordered_json to_json(const Approximation& a) {
    nlohmann::ordered_json out;
    out["k"] = a.k;
    out["n"] = a.n;
    out["alpha"] = a.alpha.text;
    out["alpha_value"] = a.alpha.value.get_str();
    out["tau"] = a.tau;
    out["gamma"] = a.gamma.get_str();
    out["m"] = a.m;
    nlohmann::ordered_json b = nlohmann::ordered_json::array();
    for (const auto& x : a.b) b.push_back(x.get_ui());
    out["b"] = std::move(b);
    out["err"] = to_json(a.err);
    out["bound"] = a.bound.to_string();
    out["bound_decimal"] = a.bound.to_decimal();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", a.D_emp);
    out["D_emp"] = std::string(buf);
    out["residual"] = to_json(a.residual);
    out["residual_nonnegative"] = a.residual_nonnegative;
    out["t"] = a.t;
    out["height_used"] = a.height_used.get_str();
    return out;
}

/// Integer instance for exponent k from the first pair in the default schedule.
inline Theorem1Instance theorem1_for(int k, int T = 1, const mpq_class& eps = mpq_class(1, 4)) {
    if (k < 1) throw usage_error("k must be positive");
    return theorem1_instance(k, build_pair(k, T, eps));
}

/// n0 * 2^i for i < count, with n0 = 50 * max a_i.
inline std::vector<std::uint64_t> default_verify_list(const Theorem1Instance& inst, int count = 5) {
    mpz_class amax(0);
    for (const auto& a : inst.a) amax = std::max(amax, a);
    const std::uint64_t n0 = 50 * amax.get_ui();
    std::vector<std::uint64_t> out;
    for (int i = 0; i < count; ++i) out.push_back(n0 << i);
    return out;
}

enum class ScanMode { t1, t2 };

struct ScanRow {
    std::uint64_t n = 0;
    DyadicInterval err;
    Dyadic bound;
    std::optional<double> slope_window;
};

struct ScanResult {
    ScanMode mode = ScanMode::t2;
    int k = 1;
    std::vector<ScanRow> rows;
    /// Least-squares slope of log(err midpoint) against log n.
    double slope = 0;
    /// t2: max D_emp; t1: max n^k * err.
    double max_constant = 0;
    /// t1 only: slope against the radicand size N ~ n^2.
    std::optional<double> slope_in_N;
    /// t2 only: residual certified >= 0 and padding left err unchanged, on every row.
    bool one_sided_and_padding_ok = true;
};

namespace detail {

inline void fill_slopes(ScanResult& r, std::size_t window = 3) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(r.rows[i].n)));
        ly.push_back(std::log(r.rows[i].err.mid_double()));
        if (i + 1 >= window) {
            r.rows[i].slope_window = least_squares_slope(std::span(lx).last(window), std::span(ly).last(window));
        }
    }
    r.slope = lx.size() >= 2 ? least_squares_slope(lx, ly) : std::nan("");
}

inline void require_scan_list(std::span<const std::uint64_t> n_list) {
    if (n_list.size() < 3) throw usage_error("a scan needs at least 3 values of n");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) throw usage_error("n list must be strictly ascending");
    }
}

} // namespace detail

/// Targeting errors over n_list, one ladder shared by all points.
inline ScanResult scan_theorem2(int k, const std::string& alpha_text, std::span<const std::uint64_t> n_list,
                                const LadderSource& source, const SearchOptions& opts = {}) {
    detail::require_scan_list(n_list);
    const GammaInfo g = gamma(k);
    int depth = 0;
    for (auto n : n_list) depth = std::max(depth, plan_theorem2(k, n, opts.enum_cap).ladder_depth);
    std::vector<LadderEntry> ladder;
    if (depth > 0) ladder = source(basis_for(g.tau), depth);

    std::vector<Approximation> sols(n_list.size());
    SearchOptions inner = opts;
    inner.jobs = 1;
    parallel_chunks(opts.jobs, n_list.size(), [&](unsigned, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            const AlphaTarget alpha = parse_alpha(alpha_text, alpha_precision_bits(g.gamma, n_list[i]));
            sols[i] = solve_theorem2(k, alpha, n_list[i], ladder, inner);
        }
    });
    ScanResult out;
    out.mode = ScanMode::t2;
    out.k = k;
    for (const auto& s : sols) {
        out.rows.push_back({s.n, s.err, s.bound, std::nullopt});
        out.max_constant = std::max(out.max_constant, s.D_emp);
        if (!s.residual_nonnegative || !(s.err == s.err_unpadded)) out.one_sided_and_padding_ok = false;
    }
    detail::fill_slopes(out);
    return out;
}

/// ||sum sqrt(a_i^2 (n+i-1)^2 + b_i)|| over n_list for the level-k instance.
inline ScanResult scan_theorem1(const Theorem1Instance& inst, std::span<const std::uint64_t> n_list, const SearchOptions& opts = {}) {
    detail::require_scan_list(n_list);
    std::vector<VerifyRow> rows(n_list.size());
    parallel_chunks(opts.jobs, n_list.size(), [&](unsigned, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            const VerifyTable t = theorem1_verify(inst, std::span(n_list).subspan(i, 1), 64, opts.bit_budget);
            rows[i] = t.rows.front();
        }
    });
    ScanResult out;
    out.mode = ScanMode::t1;
    out.k = inst.k;
    for (const auto& r : rows) {
        // |G0| / n^k, the predicted leading term
        mpz_class nk;
        mpz_ui_pow_ui(nk.get_mpz_t(), r.n, static_cast<unsigned long>(inst.k));
        const long bits = 64 + static_cast<long>(mpz_sizeinbase(nk.get_mpz_t(), 2));
        out.rows.push_back({r.n, r.err, Dyadic::ceil_at(abs(inst.G0) / mpq_class(nk), bits), std::nullopt});
        out.max_constant = std::max(out.max_constant, r.scaled);
    }
    detail::fill_slopes(out);
    out.slope_in_N = out.slope / 2;
    return out;
}

inline void write_scan_csv(std::ostream& os, const ScanResult& r) {
    os << "n,err_lo,err_hi,bound,slope_window\n";
    char buf[64];
    for (const auto& row : r.rows) {
        os << row.n << ',' << row.err.lo.to_decimal() << ',' << row.err.hi.to_decimal() << ',' << row.bound.to_decimal() << ',';
        if (row.slope_window) {
            std::snprintf(buf, sizeof buf, "%.6f", *row.slope_window);
            os << buf;
        }
        os << '\n';
    }
}

inline nlohmann::ordered_json scan_summary(const ScanResult& r) {
    char buf[64];
    auto fmt = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.6f", x);
        return std::string(buf);
    };
    nlohmann::ordered_json out;
    out["mode"] = r.mode == ScanMode::t1 ? "t1" : "t2";
    out["k"] = r.k;
    out["points"] = r.rows.size();
    out["slope"] = fmt(r.slope);
    if (r.slope_in_N) out["slope_in_N"] = fmt(*r.slope_in_N);
    out[r.mode == ScanMode::t1 ? "max_nk_err" : "max_D_emp"] = fmt(r.max_constant);
    if (r.mode == ScanMode::t2) out["one_sided_and_padding_ok"] = r.one_sided_and_padding_ok;
    return out;
}

} // namespace rootsum
