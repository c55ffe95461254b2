#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rootsum/greedy.hpp"

using namespace rootsum;

namespace {

using Q = mpq_class;

QuadInt sq(int tau, unsigned long f, long c = 1) { return QuadInt::sqrt_of(tau, f, mpz_class(c)); }

const std::vector<LadderEntry>& ladder(int tau) {
    static const std::vector<LadderEntry> l1 = build_ladder(basis_for(1), 10);
    static const std::vector<LadderEntry> l2 = build_ladder(basis_for(2), 5);
    return tau == 1 ? l1 : l2;
}

void expect_entry(const LadderEntry& e, int j) {
    const Basis& B = e.x.basis();
    EXPECT_EQ(e.j, j);
    EXPECT_EQ(e.x.at(0), 0);
    EXPECT_LE(height(e.x), mpz_class(1ul << j));
    EXPECT_GT(e.lower_cert.sign(), 0);
    EXPECT_LE(e.lower_cert, e.frac.lo);
    EXPECT_LE(e.frac.hi.to_mpq(), level_bound(B, j));
    EXPECT_TRUE(oracle::encloses(e.frac, oracle::frac(oracle::value(e.x))));
    EXPECT_TRUE(ladder_entry_valid(e));
}

// Checks the descent invariants against high-precision values.
void expect_descent(const GreedyResult& g, const QuadRat& alpha, std::span<const LadderEntry> lad, const mpz_class& cap) {
    const Basis& B = alpha.basis();
    ASSERT_EQ(g.alpha_trace.size(), static_cast<std::size_t>(g.t) + 1);
    ASSERT_EQ(g.y.size(), static_cast<std::size_t>(g.t));
    for (std::size_t h = 1; h < g.alpha_trace.size(); ++h) {
        ASSERT_LE(g.alpha_trace[h].lo, g.alpha_trace[h - 1].hi);
        ASSERT_LE(g.alpha_trace[h].lo.to_mpq(), level_bound(B, static_cast<int>(h)));
        ASSERT_GE(g.alpha_trace[h].lo.sign(), 0);
    }
    QuadInt omega(B.tau);
    Q sum(0);
    for (int h = 0; h < g.t; ++h) {
        ASSERT_GE(g.y[h], 0);
        omega += g.y[h] * lad[h].x;
        sum += Q(g.y[h]) * oracle::frac(oracle::value(lad[h].x));
    }
    ASSERT_EQ(omega, g.omega);
    ASSERT_EQ(g.height_used, height(g.omega));
    ASSERT_LE(g.height_used, cap);
    ASSERT_LT(sum, 1);
    // {omega} equals the running sum, and alpha - {omega} is the residual >= 0
    const Q fo = oracle::frac(oracle::value(g.omega));
    ASSERT_LE(abs(fo - sum), oracle::tol());
    const Q resid = oracle::value(alpha) - fo;
    ASSERT_GE(resid, -oracle::tol());
    ASSERT_TRUE(oracle::encloses(g.residual, resid));
    ASSERT_LE(abs(oracle::value(g.residual_exact) - resid), oracle::tol());
    if (g.t > 0) {
        ASSERT_LE(resid, level_bound(B, g.t) + oracle::tol());
    }
}

} // namespace

TEST(Ladder, ExamplesTauOne) {
    const auto& l = ladder(1);
    ASSERT_GE(l.size(), 3u);
    EXPECT_EQ(l[0].x, sq(1, 2, -2));
    EXPECT_NEAR(l[0].frac.mid_double(), 0.1715728752538099, 1e-15);
    EXPECT_EQ(l[1].x, sq(1, 2, -2));
    EXPECT_LE(l[1].frac.hi.to_mpq(), Q(1, 4));
    EXPECT_EQ(l[2].x, sq(1, 2, 5));
    EXPECT_NEAR(l[2].frac.mid_double(), 0.07106781186547524, 1e-15);
    for (std::size_t j = 0; j < l.size(); ++j) expect_entry(l[j], static_cast<int>(j) + 1);
}

TEST(Ladder, TauTwoEntries) {
    const auto& l = ladder(2);
    for (std::size_t j = 0; j < l.size(); ++j) expect_entry(l[j], static_cast<int>(j) + 1);
}

TEST(Ladder, DepthRules) {
    EXPECT_EQ(ladder_depth(basis_for(1), 0, default_enum_cap), 0);
    EXPECT_EQ(ladder_depth(basis_for(1), 5, default_enum_cap), 3);
    EXPECT_EQ(ladder_depth(basis_for(1), 8, default_enum_cap), 4);
    // (2^J + 1)^3 <= cap for tau = 2
    EXPECT_EQ(ladder_depth(basis_for(2), 1000, 125), 2);
    EXPECT_EQ(ladder_depth(basis_for(2), 1000, 124), 1);
    EXPECT_THROW(ladder_depth(basis_for(2), 1000, 26), capacity_error);
    EXPECT_THROW(build_ladder(basis_for(1), 0), usage_error);
}

TEST(Ladder, JsonLinesRoundTrip) {
    const auto& l = ladder(2);
    std::stringstream ss;
    write_ladder_jsonl(ss, l);
    const auto back = read_ladder_jsonl(ss);
    EXPECT_EQ(back, l);

    LadderEntry bad = l[1];
    bad.x = bad.x + sq(2, 6);
    EXPECT_FALSE(ladder_entry_valid(bad));
    bad = l[1];
    bad.lower_cert = bad.frac.hi + Dyadic(1);
    EXPECT_FALSE(ladder_entry_valid(bad));
    bad = l[1];
    bad.frac = {Dyadic(mpz_class(1), -1), Dyadic(mpz_class(1), -1)};
    EXPECT_FALSE(ladder_entry_valid(bad));
}

TEST(Greedy, ZeroTarget) {
    const auto g = greedy_descent(Q(0), ladder(1), mpz_class(1000));
    for (const auto& y : g.y) EXPECT_EQ(y, 0);
    EXPECT_TRUE(g.omega.is_zero());
    EXPECT_EQ(g.residual, DyadicInterval::point(Dyadic()));
}

TEST(Greedy, HalfOnTauOne) {
    const auto& l = ladder(1);
    const auto one = greedy_descent(Q(1, 2), std::span(l).first(1), mpz_class(1000));
    ASSERT_EQ(one.y.size(), 1u);
    EXPECT_EQ(one.y[0], 2);
    // 1/2 - 2(3 - 2 sqrt2) = 4 sqrt2 - 11/2
    EXPECT_NEAR(one.residual.mid_double(), 0.15685424949238020, 1e-15);

    const auto two = greedy_descent(Q(1, 2), std::span(l).first(2), mpz_class(1000));
    EXPECT_EQ(two.y, (std::vector<mpz_class>{2, 0}));
    EXPECT_LE(two.residual.hi.to_mpq(), Q(1, 4));

    const auto three = greedy_descent(Q(1, 2), std::span(l).first(3), mpz_class(1000));
    EXPECT_EQ(three.y, (std::vector<mpz_class>{2, 0, 2}));
    expect_descent(three, QuadRat::constant(1, Q(1, 2)), l, mpz_class(1000));
}

TEST(Greedy, StopsBeforeHeightCap) {
    const auto& l = ladder(1);
    // y = (2, 0, 2): the zero step is free, the third would reach height 6
    const auto g = greedy_descent(Q(1, 2), l, mpz_class(4));
    EXPECT_EQ(g.t, 2);
    EXPECT_EQ(g.y, (std::vector<mpz_class>{2, 0}));
    EXPECT_EQ(g.height_used, 4);
    const auto none = greedy_descent(Q(1, 2), l, mpz_class(0));
    EXPECT_EQ(none.t, 0);
    EXPECT_TRUE(none.omega.is_zero());
}

TEST(Greedy, Errors) {
    const auto& l = ladder(1);
    EXPECT_THROW(greedy_descent(Q(1), l, mpz_class(10)), usage_error);
    EXPECT_THROW(greedy_descent(Q(-1, 3), l, mpz_class(10)), usage_error);
    EXPECT_THROW(greedy_descent(Q(1, 3), std::span<const LadderEntry>{}, mpz_class(10)), usage_error);
    EXPECT_THROW(greedy_descent(QuadRat::constant(2, Q(1, 3)), l, mpz_class(10)), usage_error);
}

class GreedyProperties : public ::testing::TestWithParam<int> {};

TEST_P(GreedyProperties, DescentInvariants) {
    const int tau = GetParam();
    const auto& l = ladder(tau);
    std::mt19937_64 rng(1618 + tau);
    std::uniform_int_distribution<long> den(1, 1000000);
    std::uniform_int_distribution<long> cap_exp(0, 8);
    for (int i = 0; i < 1000; ++i) {
        const long d = den(rng);
        std::uniform_int_distribution<long> num(0, d - 1);
        const Q alpha(num(rng), d);
        const mpz_class cap(1L << (3 * cap_exp(rng)));
        const QuadRat a = QuadRat::constant(tau, alpha);
        const auto g = greedy_descent(a, l, cap);
        expect_descent(g, a, l, cap);
        if (HasFatalFailure()) {
            ADD_FAILURE() << "alpha " << alpha.get_str() << " cap " << cap.get_str();
            return;
        }
    }
}

TEST_P(GreedyProperties, IrrationalTargets) {
    // alpha itself a fractional part {z} for z in the ring.
    const int tau = GetParam();
    const auto& l = ladder(tau);
    std::mt19937_64 rng(777 + tau);
    for (int i = 0; i < 200; ++i) {
        const QuadRat z = oracle::random_rat(rng, tau, -9, 9, 5);
        const QuadRat a = z - QuadRat::constant(tau, oracle::floor_q(oracle::value(z)));
        const auto g = greedy_descent(a, l, mpz_class(1000000));
        expect_descent(g, a, l, mpz_class(1000000));
        if (HasFatalFailure()) return;
    }
}

INSTANTIATE_TEST_SUITE_P(Tau, GreedyProperties, ::testing::Values(1, 2));

TEST(Shift, RangeOnTauOne) {
    const auto s = shift_to_positive(Q(1, 3), basis_for(1), 12);
    ASSERT_EQ(s.d.size(), 1u);
    EXPECT_GE(s.d[0].second, 2);
    EXPECT_LE(s.d[0].second, 10);
    EXPECT_EQ(s.center, 6);
    EXPECT_EQ(s.cap, 4);
}

TEST(Shift, HalfAtHundred) {
    const auto s = shift_to_positive(Q(1, 2), basis_for(1), 100);
    const long d = s.d[0].second.get_si();
    EXPECT_GE(d, 50 - 33);
    EXPECT_LE(d, 50 + 33);
    const Q err = oracle::dist(oracle::Terms{{d, 2}, {Q(-1, 2), 1}});
    EXPECT_TRUE(oracle::encloses(s.err, err));
    // no d <= 100 can beat the enumerated optimum
    Q best(1);
    for (long e = 1; e <= 100; ++e) best = std::min(best, oracle::dist(oracle::Terms{{e, 2}, {Q(-1, 2), 1}}));
    EXPECT_GE(err, best);
    // approach from below: d sqrt2 - 1/2 sits just under an integer
    EXPECT_GE(oracle::frac(oracle::value(oracle::Terms{{d, 2}, {Q(-1, 2), 1}})), Q(1, 2));
}

TEST(Shift, TauTwoBox) {
    const auto s = shift_to_positive(QuadRat::constant(2, Q(3, 4)), basis_for(2), 30, direct_ladder_source());
    ASSERT_EQ(s.d.size(), 3u);
    for (const auto& [f, c] : s.d) {
        EXPECT_GE(c, 15 - 10);
        EXPECT_LE(c, 15 + 10);
    }
    const QuadRat diff = to_rat(s.element(2)) - QuadRat::constant(2, Q(3, 4));
    EXPECT_TRUE(oracle::encloses(s.err, oracle::dist(diff)));
    EXPECT_GE(certified_sign(s.descent.residual_exact), 0);
}

TEST(Shift, CoefficientsInsideBoxProperty) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> pick_n(6, 400);
    std::uniform_int_distribution<long> num(0, 9999);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t n = pick_n(rng);
        const Q alpha(num(rng), 10000);
        const auto s = shift_to_positive(QuadRat::constant(1, alpha), basis_for(1), n,
                                         [](const Basis&, int J) { return std::vector<LadderEntry>(ladder(1).begin(), ladder(1).begin() + std::min(J, 10)); });
        const long lo = static_cast<long>(n / 2 - n / 3), hi = static_cast<long>(n / 2 + n / 3);
        ASSERT_GE(s.d[0].second, lo);
        ASSERT_LE(s.d[0].second, hi);
        ASSERT_GE(s.d[0].second, 1);
        ASSERT_LE(s.d[0].second, static_cast<long>(n));
        ASSERT_GE(certified_sign(s.descent.residual_exact), 0);
    }
}

TEST(Shift, Errors) {
    EXPECT_THROW(shift_to_positive(Q(1, 2), basis_for(1), 5), usage_error);
    EXPECT_THROW(centered_descent(QuadRat::constant(1, Q(1, 2)), basis_for(1), 3, 3, ladder(1)), usage_error);
    EXPECT_THROW(centered_descent(QuadRat::constant(1, Q(1, 2)), basis_for(1), 0, 0, ladder(1)), usage_error);
}

TEST(Shift, ZeroCapKeepsCenter) {
    const auto s = centered_descent(QuadRat::constant(1, Q(1, 2)), basis_for(1), 1, 0, {});
    ASSERT_EQ(s.d.size(), 1u);
    EXPECT_EQ(s.d[0].second, 1);
    // ||sqrt2 - 1/2|| = 0.0857...
    EXPECT_TRUE(oracle::encloses(s.err, oracle::dist(oracle::Terms{{1, 2}, {Q(-1, 2), 1}})));
}
