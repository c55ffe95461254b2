#pragma once

// Small fractional parts of integer combinations of sqrt(f), f | p_1...p_tau, f > 1.
//
// Enumeration works on 128-bit fixed-point keys: key(f) = floor({sqrt f} * 2^128),
// and a combination sum d_f sqrt(f) gets key sum d_f key(f) mod 2^128, which
// undershoots the true scaled fractional part by less than sum |d_f| units.
// The keys only rank candidates; every reported distance is re-derived with
// certified enclosures.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rootsum/config.hpp"
#include "rootsum/dyadic.hpp"
#include "rootsum/errors.hpp"
#include "rootsum/eval.hpp"
#include "rootsum/parallel.hpp"
#include "rootsum/ring.hpp"

namespace rootsum {

using u128 = unsigned __int128;

struct SearchOptions {
    std::uint64_t enum_cap = default_enum_cap;
    unsigned jobs = 1;
    long bit_budget = default_bit_budget;
};

struct SmallFracWitness {
    QuadInt w;
    std::uint64_t height_bound = 0;
    DyadicInterval dist;
    Dyadic certified_upper;
};

struct MinDistResult {
    QuadInt w;
    DyadicInterval dist;
};

/// Negates w if its first nonzero coefficient (ascending f) is negative.
inline QuadInt sign_canonical(QuadInt w) {
    for (const auto& c : w.coeffs()) {
        if (c > 0) return w;
        if (c < 0) return -w;
    }
    return w;
}

/// Number of irrational basis directions, 2^tau - 1.
inline int irrational_dim(const Basis& basis) { return static_cast<int>(basis.size()) - 1; }

/// n^-(2^tau - 1) as an exact rational.
inline mpq_class pigeonhole_bound(const Basis& basis, std::uint64_t n) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), n, static_cast<unsigned long>(irrational_dim(basis)));
    return mpq_class(mpz_class(1), p);
}

namespace detail {

inline u128 frac_key(unsigned long f) {
    mpz_class x(f);
    mpz_mul_2exp(x.get_mpz_t(), x.get_mpz_t(), 256);
    mpz_sqrt(x.get_mpz_t(), x.get_mpz_t());
    mpz_fdiv_r_2exp(x.get_mpz_t(), x.get_mpz_t(), 128);
    mpz_class hi;
    mpz_fdiv_q_2exp(hi.get_mpz_t(), x.get_mpz_t(), 64);
    mpz_fdiv_r_2exp(x.get_mpz_t(), x.get_mpz_t(), 64);
    return (static_cast<u128>(hi.get_ui()) << 64) | static_cast<u128>(x.get_ui());
}

inline u128 sat_add(u128 a, u128 b) {
    const u128 s = a + b;
    return s < a ? ~u128{0} : s;
}

/// Points of the box {lo..hi}^D over the irrational basis directions, indexed
/// in mixed radix with the first direction as the least significant digit.
struct Box {
    const Basis* basis;
    int dim;
    long lo;
    long hi;
    std::uint64_t radix;
    std::uint64_t count;
    std::vector<u128> keys;

    Box(const Basis& b, long lo_, long hi_) : basis(&b), dim(irrational_dim(b)), lo(lo_), hi(hi_) {
        radix = static_cast<std::uint64_t>(hi - lo + 1);
        count = 1;
        for (int i = 0; i < dim; ++i) count *= radix;
        for (int i = 0; i < dim; ++i) keys.push_back(frac_key(b.products[static_cast<std::size_t>(i + 1)]));
    }

    std::vector<long> digits(std::uint64_t index) const {
        std::vector<long> d(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            d[static_cast<std::size_t>(i)] = lo + static_cast<long>(index % radix);
            index /= radix;
        }
        return d;
    }

    u128 key_of(const std::vector<long>& d) const {
        u128 k = 0;
        for (int i = 0; i < dim; ++i) {
            const long c = d[static_cast<std::size_t>(i)];
            const u128 term = static_cast<u128>(static_cast<std::uint64_t>(c < 0 ? -c : c)) * keys[static_cast<std::size_t>(i)];
            k = c < 0 ? k - term : k + term;
        }
        return k;
    }

    QuadInt element(std::uint64_t index) const {
        auto d = digits(index);
        std::vector<mpz_class> c(basis->size());
        for (int i = 0; i < dim; ++i) c[static_cast<std::size_t>(i + 1)] = d[static_cast<std::size_t>(i)];
        return QuadInt(basis->tau, std::move(c));
    }

    /// Walks indices [begin, end) calling fn(index, digits, key).
    template <class Fn>
    void walk(std::uint64_t begin, std::uint64_t end, Fn&& fn) const {
        if (begin >= end) return;
        auto d = digits(begin);
        u128 k = key_of(d);
        for (std::uint64_t idx = begin;;) {
            fn(idx, d, k);
            if (++idx == end) break;
            for (int i = 0; i < dim; ++i) {
                auto& di = d[static_cast<std::size_t>(i)];
                if (di < hi) {
                    ++di;
                    k += keys[static_cast<std::size_t>(i)];
                    break;
                }
                k -= static_cast<u128>(radix - 1) * keys[static_cast<std::size_t>(i)];
                di = lo;
            }
        }
    }
};

inline mpz_class box_count(const Basis& basis, std::uint64_t side) {
    mpz_class out;
    mpz_ui_pow_ui(out.get_mpz_t(), side, static_cast<unsigned long>(irrational_dim(basis)));
    return out;
}

inline std::uint64_t clamp_u64(const mpz_class& x) {
    if (x.fits_ulong_p()) return x.get_ui();
    return ~std::uint64_t{0};
}

/// Sorts v by splitting into `jobs` chunks, sorting each, then merging.
inline void parallel_sort(std::vector<u128>& v, unsigned jobs) {
    jobs = std::max(1u, jobs);
    const std::uint64_t n = v.size();
    const std::uint64_t step = (n + jobs - 1) / std::max(1u, jobs);
    parallel_chunks(jobs, jobs, [&](unsigned, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t c = b; c < e; ++c) {
            auto first = v.begin() + static_cast<std::ptrdiff_t>(std::min(n, c * step));
            auto last = v.begin() + static_cast<std::ptrdiff_t>(std::min(n, (c + 1) * step));
            std::sort(first, last);
        }
    });
    for (std::uint64_t width = step; width < n; width *= 2) {
        for (std::uint64_t start = 0; start + width < n; start += 2 * width) {
            auto first = v.begin() + static_cast<std::ptrdiff_t>(start);
            auto mid = first + static_cast<std::ptrdiff_t>(width);
            auto last = v.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + 2 * width));
            std::inplace_merge(first, mid, last);
        }
    }
}

} // namespace detail

/// The candidate with the smallest ||w||, separated from all others by
/// certified enclosures. Candidates must be distinct and sign-canonical, so
/// their distances are pairwise different.
inline MinDistResult certified_argmin(std::span<const QuadInt> candidates, long budget = default_bit_budget) {
    if (candidates.empty()) throw usage_error("no candidates");
    std::vector<DyadicInterval> d(candidates.size());
    for (long bits = initial_bits; bits <= budget; bits *= 2) {
        const Dyadic width = Dyadic::pow2(-bits);
        for (std::size_t i = 0; i < candidates.size(); ++i) d[i] = dist_to_int(candidates[i], width, budget);
        std::size_t best = 0;
        for (std::size_t i = 1; i < d.size(); ++i) {
            if (d[i].hi < d[best].hi) best = i;
        }
        bool separated = true;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (i != best && !(d[best].hi < d[i].lo)) separated = false;
        }
        if (separated) return {candidates[best], d[best]};
    }
    throw budget_error("cannot separate candidate distances", d.front(), budget);
}

/// Closest adjacent pair on the circle among {A_n} and 0, where
/// A_n = { sum_f d_f sqrt(f) : 1 <= d_f <= n }; certified ||w|| <= n^-(2^tau-1).
inline SmallFracWitness dirichlet_search(const Basis& basis, std::uint64_t n, const SearchOptions& opts = {}) {
    if (n < 2) throw usage_error("dirichlet_search needs n >= 2");
    const mpz_class required = detail::box_count(basis, n + 1);
    if (required > mpz_class(static_cast<unsigned long>(opts.enum_cap))) {
        throw capacity_error("dirichlet_search tau=" + std::to_string(basis.tau) + " n=" + std::to_string(n),
                             detail::clamp_u64(required), opts.enum_cap);
    }
    const detail::Box box(basis, 1, static_cast<long>(n));
    const std::uint64_t zero_index = box.count;
    const int ib = std::bit_width(zero_index);
    const u128 low_mask = (u128{1} << ib) - 1;

    std::vector<u128> pts(box.count + 1);
    parallel_chunks(opts.jobs, box.count, [&](unsigned, std::uint64_t b, std::uint64_t e) {
        box.walk(b, e, [&](std::uint64_t idx, const std::vector<long>&, u128 k) { pts[idx] = (k & ~low_mask) | idx; });
    });
    pts[zero_index] = zero_index;
    detail::parallel_sort(pts, opts.jobs);

    // Per-point key error stays below dim * n + 2^ib units; a gap is off by at most twice that.
    const u128 point_err = static_cast<u128>(box.dim) * n + (u128{1} << ib);
    auto gap_at = [&](std::size_t i) { return i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[0] - pts[i]; };
    u128 gmin = ~u128{0};
    for (std::size_t i = 0; i < pts.size(); ++i) gmin = std::min(gmin, gap_at(i));
    const u128 limit = detail::sat_add(gmin, 4 * point_err);

    auto element_at = [&](std::size_t i) {
        const std::uint64_t idx = static_cast<std::uint64_t>(pts[i] & low_mask);
        return idx == zero_index ? QuadInt(basis.tau) : box.element(idx);
    };
    std::vector<QuadInt> cands;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (gap_at(i) > limit) continue;
        const std::size_t j = i + 1 < pts.size() ? i + 1 : 0;
        QuadInt w = sign_canonical(element_at(j) - element_at(i));
        if (std::find(cands.begin(), cands.end(), w) == cands.end()) cands.push_back(std::move(w));
    }
    std::sort(cands.begin(), cands.end(), [](const QuadInt& a, const QuadInt& b) { return a.coeffs() < b.coeffs(); });

    MinDistResult best = certified_argmin(cands, opts.bit_budget);
    const mpq_class bound = pigeonhole_bound(basis, n);
    for (long bits = initial_bits; best.dist.hi.to_mpq() > bound; bits *= 2) {
        if (bits > opts.bit_budget) throw budget_error("pigeonhole bound not certified", best.dist, opts.bit_budget);
        best.dist = dist_to_int(best.w, Dyadic::pow2(-bits), opts.bit_budget);
    }
    return {std::move(best.w), n, best.dist, best.dist.hi};
}

/// Exact minimiser of ||w|| over nonzero w with height <= n, sign-canonical.
inline MinDistResult brute_min_dist(const Basis& basis, std::uint64_t n, const SearchOptions& opts = {}) {
    if (n < 1) throw usage_error("brute_min_dist needs n >= 1");
    const mpz_class required = detail::box_count(basis, 2 * n + 1) - 1;
    if (required > mpz_class(static_cast<unsigned long>(opts.enum_cap))) {
        throw capacity_error("brute_min_dist tau=" + std::to_string(basis.tau) + " n=" + std::to_string(n),
                             detail::clamp_u64(required), opts.enum_cap);
    }
    const detail::Box box(basis, -static_cast<long>(n), static_cast<long>(n));
    const u128 err = 2 * (static_cast<u128>(box.dim) * n + 1);

    struct Local {
        u128 best = ~u128{0};
        std::vector<std::pair<u128, std::uint64_t>> near;
    };
    const unsigned jobs = std::max(1u, opts.jobs);
    std::vector<Local> locals(jobs);
    parallel_chunks(jobs, box.count, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
        Local& L = locals[c];
        box.walk(b, e, [&](std::uint64_t idx, const std::vector<long>& d, u128 k) {
            for (long x : d) {
                if (x < 0) return;
                if (x > 0) break;
            }
            if (std::all_of(d.begin(), d.end(), [](long x) { return x == 0; })) return;
            const u128 dist = std::min(k, u128{0} - k);
            if (dist > detail::sat_add(L.best, err)) return;
            if (dist < L.best) {
                L.best = dist;
                const u128 lim = detail::sat_add(dist, err);
                std::erase_if(L.near, [&](const auto& p) { return p.first > lim; });
            }
            L.near.emplace_back(dist, idx);
        });
    });
    u128 best = ~u128{0};
    for (const auto& L : locals) best = std::min(best, L.best);
    const u128 lim = detail::sat_add(best, err);
    std::vector<std::uint64_t> idx;
    for (const auto& L : locals) {
        for (const auto& [dist, i] : L.near) {
            if (dist <= lim) idx.push_back(i);
        }
    }
    std::sort(idx.begin(), idx.end());
    std::vector<QuadInt> cands;
    for (auto i : idx) cands.push_back(box.element(i));
    return certified_argmin(cands, opts.bit_budget);
}

/// A certified L > 0 with ||w|| >= L, from |N(w - d)| >= 1 at the nearest integer d.
inline Dyadic certified_dist_lower_bound(const QuadInt& w, std::uint64_t n, long budget = default_bit_budget) {
    if (w.is_zero() || w.at(0) != 0) throw usage_error("certified_dist_lower_bound needs a nonzero element with no rational part");
    if (height(w) > mpz_class(static_cast<unsigned long>(n))) throw usage_error("element height exceeds n");
    const FracResult fr = frac_enclosure(w, Dyadic::pow2(-initial_bits), budget);
    const Dyadic half = Dyadic::pow2(-1);
    std::vector<mpz_class> nearest;
    if (fr.frac.lo <= half) nearest.push_back(fr.int_part);
    if (fr.frac.hi >= half) nearest.push_back(fr.int_part + 1);

    std::optional<Dyadic> out;
    const unsigned count = 1u << w.tau();
    for (const auto& d : nearest) {
        const QuadInt u = w - QuadInt::constant(w.tau(), d);
        Dyadic U(1);
        for (unsigned s = 1; s < count; ++s) U = U * eval_enclosure(galois_conjugate(u, s), initial_bits).magnitude();
        const long bits = initial_bits + static_cast<long>(mpz_sizeinbase(U.ceil().get_mpz_t(), 2));
        Dyadic L = Dyadic::floor_at(mpq_class(1) / U.to_mpq(), bits);
        if (!out || L < *out) out = L;
    }
    return *out;
}

inline nlohmann::ordered_json to_json(const SmallFracWitness& w) {
    nlohmann::ordered_json out;
    out["w"] = to_json(w.w);
    out["height_bound"] = w.height_bound;
    out["dist"] = to_json(w.dist);
    out["certified_upper"] = w.certified_upper.to_string();
    return out;
}

inline nlohmann::ordered_json to_json(const MinDistResult& r) {
    nlohmann::ordered_json out;
    out["w"] = to_json(r.w);
    out["dist"] = to_json(r.dist);
    return out;
}

} // namespace rootsum
