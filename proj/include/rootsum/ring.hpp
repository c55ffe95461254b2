#pragma once

// Exact arithmetic in Z[sqrt(p_1),...,sqrt(p_tau)] and Q(sqrt(p_1),...,sqrt(p_tau))
// over the basis { sqrt(f) : f squarefree, f | p_1...p_tau }.
//
// Every f in the basis corresponds to a subset mask of the primes. With that
// encoding the product rule is
//
//     sqrt(f_a) * sqrt(f_b) = prod(primes in a & b) * sqrt(f_{a ^ b}),
//
// and the Galois automorphism sigma_s multiplies the coordinate of f_a by
// (-1)^popcount(a & s).

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rootsum/config.hpp"
#include "rootsum/errors.hpp"

namespace rootsum {

struct Basis {
    int tau = 0;
    std::vector<unsigned long> primes;
    /// The 2^tau squarefree divisors of p_1...p_tau, ascending; products[0] == 1.
    std::vector<unsigned long> products;
    /// masks[i] is the prime subset of products[i].
    std::vector<unsigned> masks;
    std::vector<std::size_t> index_of_mask;
    /// value_of_mask[m] is the product of the primes in mask m.
    std::vector<unsigned long> value_of_mask;

    std::size_t size() const { return products.size(); }

    std::size_t index_of(unsigned long f) const {
        for (std::size_t i = 0; i < products.size(); ++i) {
            if (products[i] == f) return i;
        }
        throw usage_error("radicand " + std::to_string(f) + " is not in the basis for tau=" + std::to_string(tau));
    }

    unsigned long radical() const { return products.back(); }

    friend bool operator==(const Basis& a, const Basis& b) { return a.tau == b.tau; }
};

inline Basis make_basis(int tau) {
    static constexpr std::array<unsigned long, max_tau> first_primes{2, 3, 5, 7, 11, 13};
    if (tau < 1 || tau > max_tau) {
        throw std::out_of_range("tau must be in [1, " + std::to_string(max_tau) + "], got " + std::to_string(tau));
    }
    Basis b;
    b.tau = tau;
    b.primes.assign(first_primes.begin(), first_primes.begin() + tau);
    const unsigned count = 1u << tau;
    b.value_of_mask.resize(count);
    for (unsigned m = 0; m < count; ++m) {
        unsigned long v = 1;
        for (int i = 0; i < tau; ++i) {
            if (m >> i & 1u) v *= b.primes[static_cast<std::size_t>(i)];
        }
        b.value_of_mask[m] = v;
    }
    b.masks.resize(count);
    for (unsigned m = 0; m < count; ++m) b.masks[m] = m;
    std::sort(b.masks.begin(), b.masks.end(),
              [&](unsigned x, unsigned y) { return b.value_of_mask[x] < b.value_of_mask[y]; });
    b.index_of_mask.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        b.products.push_back(b.value_of_mask[b.masks[i]]);
        b.index_of_mask[b.masks[i]] = i;
    }
    return b;
}

/// Shared immutable basis for `tau`; thread-safe.
inline const Basis& basis_for(int tau) {
    static const std::array<Basis, max_tau> cache = [] {
        std::array<Basis, max_tau> out;
        for (int t = 1; t <= max_tau; ++t) out[static_cast<std::size_t>(t - 1)] = make_basis(t);
        return out;
    }();
    if (tau < 1 || tau > max_tau) {
        throw std::out_of_range("tau must be in [1, " + std::to_string(max_tau) + "], got " + std::to_string(tau));
    }
    return cache[static_cast<std::size_t>(tau - 1)];
}

namespace detail {

inline mpz_class scalar_abs(const mpz_class& x) { return abs(x); }
inline mpq_class scalar_abs(const mpq_class& x) { return abs(x); }

inline void canonicalize(mpz_class&) {}
inline void canonicalize(mpq_class& x) { x.canonicalize(); }

inline std::string scalar_str(const mpz_class& x) { return x.get_str(); }
inline std::string scalar_str(const mpq_class& x) { return x.get_str(); }

inline mpz_class parse_scalar(const std::string& s, const mpz_class*) {
    mpz_class out;
    if (out.set_str(s, 10) != 0) throw usage_error("bad integer coefficient: " + s);
    return out;
}

inline mpq_class parse_scalar(const std::string& s, const mpq_class*) {
    mpq_class out;
    if (out.set_str(s, 10) != 0 || out.get_den() == 0) throw usage_error("bad rational coefficient: " + s);
    out.canonicalize();
    return out;
}

} // namespace detail

/// An element sum_f c_f sqrt(f) with coefficients of type Scalar (mpz_class or mpq_class).
///
/// Coefficients are dense, indexed like Basis::products. Two elements are
/// equal iff they share tau and all coefficients agree.
template <class Scalar>
class Element {
public:
    using scalar_type = Scalar;

    Element() : Element(1) {}

    explicit Element(int tau) : tau_(tau), coeffs_(basis_for(tau).size()) {}

    Element(int tau, std::vector<Scalar> coeffs) : tau_(tau), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != basis_for(tau).size()) {
            throw usage_error("coefficient vector has " + std::to_string(coeffs_.size()) + " entries, expected " +
                              std::to_string(basis_for(tau).size()));
        }
        for (auto& c : coeffs_) detail::canonicalize(c);
    }

    /// c * sqrt(f).
    static Element sqrt_of(int tau, unsigned long f, const Scalar& c = Scalar(1)) {
        Element out(tau);
        auto& slot = out.coeffs_[out.basis().index_of(f)];
        slot = c;
        detail::canonicalize(slot);
        return out;
    }

    static Element constant(int tau, const Scalar& c) { return sqrt_of(tau, 1, c); }

    int tau() const { return tau_; }
    const Basis& basis() const { return basis_for(tau_); }
    const std::vector<Scalar>& coeffs() const { return coeffs_; }

    /// Coefficient of sqrt(f).
    const Scalar& coeff(unsigned long f) const { return coeffs_[basis().index_of(f)]; }
    const Scalar& at(std::size_t index) const { return coeffs_.at(index); }

    bool is_zero() const {
        for (const auto& c : coeffs_) {
            if (c != 0) return false;
        }
        return true;
    }

    /// True when only the sqrt(1) coordinate may be nonzero.
    bool is_rational() const {
        for (std::size_t i = 1; i < coeffs_.size(); ++i) {
            if (coeffs_[i] != 0) return false;
        }
        return true;
    }

    Element& operator+=(const Element& o) {
        require_same_basis(*this, o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
        return *this;
    }

    Element& operator-=(const Element& o) {
        require_same_basis(*this, o);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
        return *this;
    }

    Element& operator*=(const Scalar& s) {
        for (auto& c : coeffs_) c *= s;
        return *this;
    }

    friend Element operator+(Element a, const Element& b) { return a += b; }
    friend Element operator-(Element a, const Element& b) { return a -= b; }
    friend Element operator-(Element a) {
        for (auto& c : a.coeffs_) c = -c;
        return a;
    }
    friend Element operator*(const Scalar& s, Element a) { return a *= s; }
    friend Element operator*(Element a, const Scalar& s) { return a *= s; }

    friend Element operator*(const Element& a, const Element& b) {
        require_same_basis(a, b);
        const Basis& B = a.basis();
        Element out(a.tau_);
        Scalar term;
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
            if (a.coeffs_[i] == 0) continue;
            const unsigned mi = B.masks[i];
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
                if (b.coeffs_[j] == 0) continue;
                const unsigned mj = B.masks[j];
                term = a.coeffs_[i] * b.coeffs_[j];
                term *= B.value_of_mask[mi & mj];
                out.coeffs_[B.index_of_mask[mi ^ mj]] += term;
            }
        }
        return out;
    }

    friend bool operator==(const Element& a, const Element& b) { return a.tau_ == b.tau_ && a.coeffs_ == b.coeffs_; }

    friend void require_same_basis(const Element& a, const Element& b) {
        if (a.tau_ != b.tau_) {
            throw usage_error("mixed bases: tau=" + std::to_string(a.tau_) + " and tau=" + std::to_string(b.tau_));
        }
    }

private:
    int tau_;
    std::vector<Scalar> coeffs_;
};

using QuadInt = Element<mpz_class>;
using QuadRat = Element<mpq_class>;

inline QuadRat to_rat(const QuadInt& w) {
    std::vector<mpq_class> c;
    c.reserve(w.coeffs().size());
    for (const auto& x : w.coeffs()) c.emplace_back(x);
    return QuadRat(w.tau(), std::move(c));
}

/// Exact conversion; throws usage_error if some coefficient is not an integer.
inline QuadInt to_int(const QuadRat& w) {
    std::vector<mpz_class> c;
    c.reserve(w.coeffs().size());
    for (const auto& x : w.coeffs()) {
        if (x.get_den() != 1) throw usage_error("element has non-integer coefficient " + x.get_str());
        c.emplace_back(x.get_num());
    }
    return QuadInt(w.tau(), std::move(c));
}

/// sum_i scalar_i * element_i, all over one basis.
template <class Scalar>
Element<Scalar> linear_combine(std::span<const std::pair<Scalar, Element<Scalar>>> terms) {
    if (terms.empty()) throw usage_error("linear_combine needs at least one term");
    Element<Scalar> out(terms.front().second.tau());
    for (const auto& [s, e] : terms) {
        require_same_basis(out, e);
        out += s * e;
    }
    return out;
}

template <class Scalar>
Element<Scalar> linear_combine(const std::vector<std::pair<Scalar, Element<Scalar>>>& terms) {
    return linear_combine(std::span<const std::pair<Scalar, Element<Scalar>>>(terms));
}

template <class Scalar>
Element<Scalar> mul(const Element<Scalar>& a, const Element<Scalar>& b) {
    return a * b;
}

/// max_f |c_f|
template <class Scalar>
Scalar height(const Element<Scalar>& w) {
    Scalar best(0);
    for (const auto& c : w.coeffs()) {
        Scalar a = detail::scalar_abs(c);
        if (a > best) best = a;
    }
    return best;
}

/// sigma_s given as a prime subset mask (bit i set flips sqrt(p_{i+1})).
template <class Scalar>
Element<Scalar> galois_conjugate(const Element<Scalar>& w, unsigned s_mask) {
    const Basis& B = w.basis();
    std::vector<Scalar> c = w.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::popcount(B.masks[i] & s_mask) & 1) c[i] = -c[i];
    }
    return Element<Scalar>(w.tau(), std::move(c));
}

template <class Scalar>
Element<Scalar> galois_conjugate(const Element<Scalar>& w, std::span<const int> s) {
    if (s.size() != static_cast<std::size_t>(w.tau())) {
        throw usage_error("sign vector has length " + std::to_string(s.size()) + ", expected tau=" +
                          std::to_string(w.tau()));
    }
    unsigned mask = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != 0 && s[i] != 1) throw usage_error("sign vector entries must be 0 or 1");
        if (s[i]) mask |= 1u << i;
    }
    return galois_conjugate(w, mask);
}

template <class Scalar>
Element<Scalar> galois_conjugate(const Element<Scalar>& w, const std::vector<int>& s) {
    return galois_conjugate(w, std::span<const int>(s));
}

/// Product of all 2^tau conjugates, computed in the ring.
inline mpz_class field_norm(const QuadInt& w) {
    const unsigned count = 1u << w.tau();
    QuadInt acc = QuadInt::constant(w.tau(), 1);
    for (unsigned s = 0; s < count; ++s) acc = acc * galois_conjugate(w, s);
    if (!acc.is_rational()) throw std::logic_error("conjugate product has an irrational component");
    return acc.at(0);
}

// JSON form: {"tau": t, "coeffs": {"f": "value", ...}}, zero coefficients omitted.
template <class Scalar>
nlohmann::ordered_json to_json(const Element<Scalar>& w) {
    nlohmann::ordered_json coeffs = nlohmann::ordered_json::object();
    const Basis& B = w.basis();
    for (std::size_t i = 0; i < w.coeffs().size(); ++i) {
        if (w.coeffs()[i] != 0) coeffs[std::to_string(B.products[i])] = detail::scalar_str(w.coeffs()[i]);
    }
    nlohmann::ordered_json out;
    out["tau"] = w.tau();
    out["coeffs"] = std::move(coeffs);
    return out;
}

template <class ElementT>
ElementT element_from_json(const nlohmann::ordered_json& j) {
    using Scalar = typename ElementT::scalar_type;
    if (!j.is_object() || !j.contains("tau") || !j.contains("coeffs")) throw usage_error("element JSON needs tau and coeffs");
    int tau = j.at("tau").get<int>();
    const Basis& B = basis_for(tau);
    std::vector<Scalar> c(B.size());
    for (const auto& [key, value] : j.at("coeffs").items()) {
        unsigned long f = 0;
        try {
            f = std::stoul(key);
        } catch (const std::exception&) {
            throw usage_error("bad radicand key: " + key);
        }
        c[B.index_of(f)] = detail::parse_scalar(value.template get<std::string>(), static_cast<const Scalar*>(nullptr));
    }
    return ElementT(tau, std::move(c));
}

inline std::string to_string(const QuadInt& w) { return to_json(w).dump(); }
inline std::string to_string(const QuadRat& w) { return to_json(w).dump(); }

} // namespace rootsum
