#pragma once

// Greedy ladder descent: approximate alpha from below by {omega} with omega an
// integer combination of ladder elements x_j whose fractional parts are tiny.
//
// Fractional parts are carried as exact field elements ({x} = x - floor(x)),
// so every residual alpha_h is an exact element and its sign is certified.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rootsum/config.hpp"
#include "rootsum/dyadic.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/eval.hpp"
#include "rootsum/pigeonhole.hpp"
#include "rootsum/ring.hpp"

namespace rootsum {

struct LadderEntry {
    int j = 1;
    QuadInt x;
    /// Encloses {x}, inside (0, 2^-j(2^tau - 1)].
    DyadicInterval frac;
    Dyadic lower_cert;

    friend bool operator==(const LadderEntry&, const LadderEntry&) = default;
};

/// (2^j)^-(2^tau - 1)
inline mpq_class level_bound(const Basis& basis, int j) {
    mpq_class out(1);
    mpq_div_2exp(out.get_mpq_t(), out.get_mpq_t(), static_cast<mp_bitcnt_t>(j * irrational_dim(basis)));
    return out;
}

namespace detail {

inline long ladder_bits(const Basis& basis, int j) { return initial_bits + static_cast<long>(j) * irrational_dim(basis); }

/// {x} as an exact element, x - floor(x).
inline QuadRat exact_frac(const QuadInt& x, long budget) {
    const FracResult fr = frac_enclosure(x, Dyadic::pow2(-initial_bits), budget);
    return to_rat(x - QuadInt::constant(x.tau(), fr.int_part));
}

} // namespace detail

/// Turns a pigeonhole witness into a ladder entry, negating it when {w} > 1/2.
inline LadderEntry make_ladder_entry(const Basis& basis, int j, const QuadInt& witness, long budget = default_bit_budget) {
    const Dyadic width = Dyadic::pow2(-detail::ladder_bits(basis, j));
    const Dyadic half = Dyadic::pow2(-1);
    LadderEntry e;
    e.j = j;
    e.x = witness;
    FracResult fr = frac_enclosure(e.x, width, budget);
    if (fr.frac.lo > half) {
        e.x = -e.x;
        fr = frac_enclosure(e.x, width, budget);
    }
    e.frac = fr.frac;
    if (!(e.frac.hi.to_mpq() <= level_bound(basis, j))) {
        throw std::logic_error("ladder level " + std::to_string(j) + " exceeds its bound");
    }
    const Dyadic L = certified_dist_lower_bound(e.x, std::uint64_t{1} << j, budget);
    e.lower_cert = min(L, e.frac.lo);
    return e;
}

/// Levels 1..J from pigeonhole witnesses at n = 2^j.
inline std::vector<LadderEntry> build_ladder(const Basis& basis, int J, const SearchOptions& opts = {}) {
    if (J < 1 || J > 62) throw usage_error("ladder depth must be in [1, 62]");
    std::vector<LadderEntry> out;
    for (int j = 1; j <= J; ++j) {
        const SmallFracWitness w = dirichlet_search(basis, std::uint64_t{1} << j, opts);
        out.push_back(make_ladder_entry(basis, j, w.w, opts.bit_budget));
    }
    return out;
}

/// Deepest J <= bit_width(cap) with the level-J search inside enum_cap; 0 when cap is 0.
inline int ladder_depth(const Basis& basis, std::uint64_t height_cap, std::uint64_t enum_cap) {
    if (height_cap == 0) return 0;
    int J = std::bit_width(height_cap);
    while (J >= 1 && detail::box_count(basis, (std::uint64_t{1} << J) + 1) > mpz_class(static_cast<unsigned long>(enum_cap))) --J;
    if (J < 1) {
        throw capacity_error("ladder for tau=" + std::to_string(basis.tau),
                             detail::clamp_u64(detail::box_count(basis, 3)), enum_cap);
    }
    return J;
}

struct GreedyResult {
    QuadInt omega;
    std::vector<mpz_class> y;
    /// Encloses alpha - {omega}; lo >= 0 is certified.
    DyadicInterval residual;
    QuadRat residual_exact;
    int t = 0;
    mpz_class height_used;
    /// alpha_0, alpha_1, ..., alpha_t
    std::vector<DyadicInterval> alpha_trace;
};

namespace detail {

inline DyadicInterval nonneg_enclosure(const QuadRat& a, long bits) {
    DyadicInterval iv = eval_enclosure(a, bits);
    if (iv.lo.sign() < 0) iv.lo = Dyadic();
    return iv;
}

/// floor(a / fx) for exact a >= 0 and fx > 0.
inline mpz_class certified_quotient_floor(const QuadRat& a, const QuadRat& fx, long budget) {
    const DyadicInterval ai = eval_enclosure(a, 2 * initial_bits);
    const DyadicInterval fi = eval_enclosure(fx, 2 * initial_bits);
    mpz_class q(0);
    if (fi.lo.sign() > 0) {
        mpq_class est = ai.midpoint() / fi.midpoint();
        mpz_fdiv_q(q.get_mpz_t(), est.get_num_mpz_t(), est.get_den_mpz_t());
        if (q < 0) q = 0;
    }
    auto rest_sign = [&](const mpz_class& m) { return certified_sign(a - mpq_class(m) * fx, budget); };
    while (q > 0 && rest_sign(q) < 0) --q;
    while (rest_sign(q + 1) >= 0) ++q;
    return q;
}

} // namespace detail

/// Greedy descent over the ladder, stopping before the first step whose
/// accumulated height would exceed height_cap.
inline GreedyResult greedy_descent(const QuadRat& alpha, std::span<const LadderEntry> ladder, const mpz_class& height_cap,
                                   long budget = default_bit_budget) {
    if (ladder.empty()) throw usage_error("greedy_descent needs a nonempty ladder");
    const int tau = ladder.front().x.tau();
    const Basis& basis = basis_for(tau);
    if (alpha.tau() != tau) throw usage_error("alpha and ladder use different bases");
    if (certified_sign(alpha, budget) < 0 || certified_sign(QuadRat::constant(tau, 1) - alpha, budget) <= 0) {
        throw usage_error("alpha must lie in [0, 1)");
    }
    if (height_cap < 0) throw usage_error("height cap must be nonnegative");

    const long bits = detail::ladder_bits(basis, ladder.back().j + 2);
    GreedyResult out;
    out.omega = QuadInt(tau);
    QuadRat a = alpha;
    out.alpha_trace.push_back(detail::nonneg_enclosure(a, bits));
    for (const auto& entry : ladder) {
        if (entry.x.tau() != tau) throw usage_error("ladder mixes bases");
        const QuadRat fx = detail::exact_frac(entry.x, budget);
        const mpz_class y = detail::certified_quotient_floor(a, fx, budget);
        QuadInt next = out.omega + y * entry.x;
        if (height(next) > height_cap) break;
        out.omega = std::move(next);
        out.y.push_back(y);
        a -= mpq_class(y) * fx;
        ++out.t;
        out.alpha_trace.push_back(detail::nonneg_enclosure(a, bits));
    }
    out.height_used = height(out.omega);
    out.residual_exact = a;
    out.residual = out.alpha_trace.back();
    return out;
}

inline GreedyResult greedy_descent(const mpq_class& alpha, std::span<const LadderEntry> ladder, const mpz_class& height_cap,
                                   long budget = default_bit_budget) {
    if (ladder.empty()) throw usage_error("greedy_descent needs a nonempty ladder");
    return greedy_descent(QuadRat::constant(ladder.front().x.tau(), alpha), ladder, height_cap, budget);
}

/// Coefficients d_f = center + c_f(kappa) on every irrational direction.
struct ShiftResult {
    std::vector<std::pair<unsigned long, mpz_class>> d;
    QuadInt kappa;
    GreedyResult descent;
    /// Encloses ||sum d_f sqrt(f) - alpha||.
    DyadicInterval err;
    /// Encloses {alpha - rho}, the target handed to the descent.
    DyadicInterval alpha0;
    long center = 0;
    long cap = 0;

    QuadInt element(int tau) const {
        QuadInt out(tau);
        for (const auto& [f, c] : d) out += QuadInt::sqrt_of(tau, f, c);
        return out;
    }
};

/// Source of ladders; the CLI supplies a caching one.
using LadderSource = std::function<std::vector<LadderEntry>(const Basis&, int)>;

inline LadderSource direct_ladder_source(SearchOptions opts = {}) {
    return [opts](const Basis& b, int J) { return build_ladder(b, J, opts); };
}

/// Approximates alpha mod 1 by sum_f d_f sqrt(f) with d_f = center + c_f(kappa)
/// and height(kappa) <= cap, approaching from below.
inline ShiftResult centered_descent(const QuadRat& alpha, const Basis& basis, long center, long cap,
                                    std::span<const LadderEntry> ladder, long budget = default_bit_budget) {
    if (center < 1 || cap < 0 || cap >= center) throw usage_error("need center >= 1 and 0 <= cap < center");
    const int tau = basis.tau;
    QuadInt rho(tau);
    for (std::size_t i = 1; i < basis.size(); ++i) rho += QuadInt::sqrt_of(tau, basis.products[i], mpz_class(center));
    const QuadRat shifted = alpha - to_rat(rho);
    const FracResult fr = frac_enclosure(shifted, Dyadic::pow2(-initial_bits), budget);
    const QuadRat alpha0 = shifted - QuadRat::constant(tau, mpq_class(fr.int_part));

    ShiftResult out;
    out.center = center;
    out.cap = cap;
    if (cap == 0 || ladder.empty()) {
        GreedyResult g;
        g.omega = QuadInt(tau);
        g.residual_exact = alpha0;
        const long bits = detail::ladder_bits(basis, 2);
        g.residual = detail::nonneg_enclosure(alpha0, bits);
        g.alpha_trace.push_back(g.residual);
        out.descent = std::move(g);
    } else {
        out.descent = greedy_descent(alpha0, ladder, mpz_class(cap), budget);
    }
    out.kappa = out.descent.omega;
    out.alpha0 = eval_enclosure(alpha0, detail::ladder_bits(basis, 2));
    for (std::size_t i = 1; i < basis.size(); ++i) {
        out.d.emplace_back(basis.products[i], mpz_class(center) + out.kappa.at(i));
    }
    const long bits = detail::ladder_bits(basis, (ladder.empty() ? 0 : ladder.back().j) + 2);
    out.err = dist_to_int(to_rat(out.element(tau)) - alpha, Dyadic::pow2(-bits), budget);
    return out;
}

/// The n >= 6 case: center floor(n/2), cap floor(n/3), so every d_f lies in [1, n].
inline ShiftResult shift_to_positive(const QuadRat& alpha, const Basis& basis, std::uint64_t n, const LadderSource& source,
                                     const SearchOptions& opts = {}) {
    if (n < 6) throw usage_error("shift_to_positive needs n >= 6");
    const long cap = static_cast<long>(n / 3);
    const int J = ladder_depth(basis, static_cast<std::uint64_t>(cap), opts.enum_cap);
    const auto ladder = source(basis, J);
    return centered_descent(alpha, basis, static_cast<long>(n / 2), cap, ladder, opts.bit_budget);
}

inline ShiftResult shift_to_positive(const mpq_class& alpha, const Basis& basis, std::uint64_t n, const SearchOptions& opts = {}) {
    return shift_to_positive(QuadRat::constant(basis.tau, alpha), basis, n, direct_ladder_source(opts), opts);
}

// Ladder cache lines: {"j": j, "x": element, "frac": interval, "lower_cert": "m*2^e"}
inline nlohmann::ordered_json to_json(const LadderEntry& e) {
    nlohmann::ordered_json out;
    out["j"] = e.j;
    out["x"] = to_json(e.x);
    out["frac"] = to_json(e.frac);
    out["lower_cert"] = e.lower_cert.to_string();
    return out;
}

inline LadderEntry ladder_entry_from_json(const nlohmann::ordered_json& j) {
    LadderEntry e;
    e.j = j.at("j").get<int>();
    e.x = element_from_json<QuadInt>(j.at("x"));
    e.frac = interval_from_json(j.at("frac"));
    e.lower_cert = Dyadic::parse(j.at("lower_cert").get<std::string>());
    return e;
}

/// Re-checks a (possibly deserialized) entry against its invariants.
inline bool ladder_entry_valid(const LadderEntry& e, long budget = default_bit_budget) {
    if (e.j < 1 || e.x.is_zero() || e.x.at(0) != 0) return false;
    const Basis& basis = e.x.basis();
    if (height(e.x) > mpz_class(static_cast<unsigned long>(std::uint64_t{1} << e.j))) return false;
    if (!(e.lower_cert.sign() > 0 && e.lower_cert <= e.frac.lo && e.frac.lo <= e.frac.hi)) return false;
    if (!(e.frac.hi.to_mpq() <= level_bound(basis, e.j))) return false;
    const FracResult fr = frac_enclosure(e.x, e.frac.width().is_zero() ? Dyadic::pow2(-initial_bits) : e.frac.width(), budget);
    return !(fr.frac.hi < e.frac.lo || e.frac.hi < fr.frac.lo);
}

inline void write_ladder_jsonl(std::ostream& os, std::span<const LadderEntry> entries) {
    for (const auto& e : entries) os << to_json(e).dump() << '\n';
}

inline std::vector<LadderEntry> read_ladder_jsonl(std::istream& is) {
    std::vector<LadderEntry> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(ladder_entry_from_json(nlohmann::ordered_json::parse(line)));
    }
    return out;
}

inline nlohmann::ordered_json to_json(const GreedyResult& g) {
    nlohmann::ordered_json out;
    out["omega"] = to_json(g.omega);
    nlohmann::ordered_json ys = nlohmann::ordered_json::array();
    for (const auto& y : g.y) ys.push_back(y.get_str());
    out["y"] = std::move(ys);
    out["t"] = g.t;
    out["height_used"] = g.height_used.get_str();
    out["residual"] = to_json(g.residual);
    return out;
}

} // namespace rootsum
