#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rootsum/eval.hpp"

using namespace rootsum;

namespace {

QuadInt sq(int tau, unsigned long f, long c = 1) { return QuadInt::sqrt_of(tau, f, mpz_class(c)); }

mpq_class pow2q(long e) { return Dyadic::pow2(e).to_mpq(); }

std::size_t nonzero_terms(const QuadRat& w) {
    std::size_t n = 0;
    for (const auto& c : w.coeffs()) n += c != 0;
    return n;
}

} // namespace

TEST(Dyadic, FloorCeilAndWireForm) {
    EXPECT_EQ(Dyadic::floor_at(mpq_class(1, 3), 4).to_string(), "5*2^-4");
    EXPECT_EQ(Dyadic::ceil_at(mpq_class(1, 3), 4).to_string(), "3*2^-3");
    EXPECT_EQ(Dyadic::floor_at(mpq_class(-1, 3), 4).to_string(), "-3*2^-3");
    EXPECT_EQ(Dyadic(12).to_string(), "3*2^2");
    EXPECT_EQ(Dyadic::parse("3*2^2"), Dyadic(12));
    EXPECT_EQ(Dyadic::parse("-7"), Dyadic(-7));
    EXPECT_THROW(Dyadic::parse("1*2^x"), std::invalid_argument);
    EXPECT_THROW(Dyadic::parse("abc"), std::invalid_argument);
    EXPECT_EQ(Dyadic::pow2(-1).to_decimal(3), "5.00e-01");
}

TEST(Dyadic, ArithmeticAndOrder) {
    const Dyadic a = Dyadic::pow2(-3), b(3);
    EXPECT_EQ((a + b).to_mpq(), mpq_class(25, 8));
    EXPECT_EQ((a * b).to_mpq(), mpq_class(3, 8));
    EXPECT_LT(a, b);
    EXPECT_EQ(Dyadic(-5).abs(), Dyadic(5));
    EXPECT_EQ(Dyadic::from_int(mpz_class(-7)).floor(), -7);
    EXPECT_EQ(Dyadic(mpz_class(-7), -1).floor(), -4);
    EXPECT_EQ(Dyadic(mpz_class(-7), -1).ceil(), -3);
}

TEST(SqrtEnclosure, PerfectSquareIsPoint) {
    for (long bits : {1, 17, 64, 300}) {
        const auto iv = sqrt_enclosure(4, bits);
        EXPECT_TRUE(iv.is_point());
        EXPECT_EQ(iv.lo, Dyadic(2));
    }
}

TEST(SqrtEnclosure, Examples) {
    const auto r2 = sqrt_enclosure(2, 20);
    EXPECT_LE(r2.width(), Dyadic::pow2(-20));
    EXPECT_TRUE(oracle::encloses(r2, oracle::value({{1, 2}}), 0));
    EXPECT_TRUE(r2.contains(mpq_class(141421356, 100000000)));

    // isqrt(6 * 4^10) = 2508
    const auto r6 = sqrt_enclosure(6, 10);
    EXPECT_EQ(r6.lo.to_mpq(), mpq_class(627, 256));
    EXPECT_EQ(r6.hi.to_mpq(), mpq_class(2509, 1024));
    EXPECT_TRUE(oracle::encloses(r6, oracle::value({{1, 6}}), 0));
    EXPECT_THROW(sqrt_enclosure(-1, 10), usage_error);
}

TEST(EvalEnclosure, Examples) {
    EXPECT_EQ(eval_enclosure(QuadInt(2), 30), DyadicInterval::point(Dyadic()));

    const auto v = eval_enclosure(sq(1, 2, 5), 30);
    EXPECT_LE(v.width().to_mpq(), mpq_class(5 + 2) * pow2q(-30));
    EXPECT_TRUE(oracle::encloses(v, oracle::value(sq(1, 2, 5)), 0));
    EXPECT_NEAR(v.mid_double(), 7.0710678118654752, 1e-8);

    const QuadInt w = sq(2, 2) + sq(2, 3) - sq(2, 6);
    const auto u = eval_enclosure(w, 20);
    EXPECT_TRUE(oracle::encloses(u, oracle::value(w), 0));
    EXPECT_NEAR(u.mid_double(), 0.69677, 1e-4);
}

TEST(FracEnclosure, Examples) {
    const auto three = frac_enclosure(QuadInt::constant(1, 3), Dyadic::pow2(-20));
    EXPECT_EQ(three.int_part, 3);
    EXPECT_TRUE(three.exact);
    EXPECT_TRUE(three.frac.is_point());
    EXPECT_TRUE(three.frac.lo.is_zero());

    const auto f5 = frac_enclosure(sq(1, 2, 5), Dyadic::pow2(-20));
    EXPECT_EQ(f5.int_part, 7);
    EXPECT_FALSE(f5.exact);
    EXPECT_LE(f5.frac.width(), Dyadic::pow2(-20));
    EXPECT_TRUE(oracle::encloses(f5.frac, oracle::frac(oracle::value(sq(1, 2, 5))), 0));
    EXPECT_NEAR(f5.frac.mid_double(), 0.07106781186547524, 1e-6);

    const auto fm = frac_enclosure(sq(1, 2, -2), Dyadic::pow2(-20));
    EXPECT_EQ(fm.int_part, -3);
    EXPECT_NEAR(fm.frac.mid_double(), 0.1715728752538099, 1e-6);
}

TEST(FracEnclosure, NonIntegerRational) {
    const auto r = frac_enclosure(QuadRat::constant(1, mpq_class(-7, 2)), Dyadic::pow2(-10));
    EXPECT_EQ(r.int_part, -4);
    EXPECT_FALSE(r.exact);
    EXPECT_EQ(r.frac.lo.to_mpq(), mpq_class(1, 2));
    // sqrt(4) coordinates never occur in the basis, but forms allow them.
    SqrtForm form{{{mpq_class(1), mpz_class(9)}, {mpq_class(1, 2), mpz_class(4)}}};
    const auto s = frac_enclosure(form, Dyadic::pow2(-10));
    EXPECT_EQ(s.int_part, 4);
    EXPECT_TRUE(s.exact);
}

TEST(FracEnclosure, Errors) {
    EXPECT_THROW(frac_enclosure(sq(1, 2), Dyadic()), usage_error);
    EXPECT_THROW(frac_enclosure(sq(1, 2), Dyadic(-1)), usage_error);
    try {
        frac_enclosure(sq(1, 2), Dyadic::pow2(-200), 64);
        FAIL() << "expected budget_error";
    } catch (const budget_error& e) {
        EXPECT_EQ(e.bits(), 64);
        EXPECT_TRUE(e.best().contains(oracle::value(sq(1, 2))));
    }
}

TEST(DistToInt, Examples) {
    EXPECT_EQ(dist_to_int(QuadInt::constant(1, 3), Dyadic::pow2(-20)), DyadicInterval::point(Dyadic()));
    const auto d5 = dist_to_int(sq(1, 2, 5), Dyadic::pow2(-40));
    EXPECT_NEAR(d5.mid_double(), 0.07106781186547524, 1e-11);
    const auto d2 = dist_to_int(sq(1, 2, 2), Dyadic::pow2(-40));
    EXPECT_NEAR(d2.mid_double(), 0.1715728752538099, 1e-11);
    EXPECT_LE(d2.width(), Dyadic::pow2(-40));
}

TEST(DistOfFrac, StraddlingHalf) {
    const DyadicInterval f{Dyadic(mpz_class(3), -3), Dyadic(mpz_class(5), -3)};
    const auto d = dist_of_frac(f);
    EXPECT_EQ(d.lo.to_mpq(), mpq_class(3, 8));
    EXPECT_EQ(d.hi.to_mpq(), mpq_class(1, 2));
}

TEST(IntervalJson, RoundTrip) {
    const auto iv = eval_enclosure(sq(2, 6, -3), 50);
    const auto j = to_json(iv);
    EXPECT_EQ(interval_from_json(j), iv);
    EXPECT_TRUE(j.contains("lo_decimal"));
    EXPECT_EQ(j["lo"].get<std::string>(), iv.lo.to_string());
}

TEST(CertifiedSign, Basics) {
    EXPECT_EQ(certified_sign(QuadRat(2)), 0);
    EXPECT_EQ(certified_sign(to_rat(sq(1, 2) - QuadInt::constant(1, 1))), 1);
    // 5 sqrt2 - 7 = 0.0710... > 0
    EXPECT_EQ(certified_sign(to_rat(QuadInt::constant(1, 7) - sq(1, 2, 5))), -1);
    EXPECT_EQ(certified_sign(to_rat(sq(1, 2, 5) - QuadInt::constant(1, 7))), 1);
}

class EvalProperties : public ::testing::TestWithParam<int> {};

TEST_P(EvalProperties, EnclosesHighPrecisionValue) {
    const int tau = GetParam();
    std::mt19937_64 rng(555 + tau);
    std::uniform_int_distribution<long> pick_bits(8, 400);
    for (int i = 0; i < 1000; ++i) {
        const QuadRat w = oracle::random_rat(rng, tau, -1000, 1000, 50);
        const long bits = pick_bits(rng);
        const auto iv = eval_enclosure(w, bits);
        const mpq_class sum_abs = [&] {
            mpq_class s(0);
            for (const auto& c : w.coeffs()) s += abs(c);
            return s;
        }();
        ASSERT_TRUE(oracle::encloses(iv, oracle::value(w))) << to_string(w) << " bits " << bits;
        ASSERT_LE(iv.width().to_mpq(), (sum_abs + 2 * nonzero_terms(w)) * pow2q(-bits));
    }
}

TEST_P(EvalProperties, ContainmentUnderRefinement) {
    const int tau = GetParam();
    std::mt19937_64 rng(808 + tau);
    std::uniform_int_distribution<long> pick_bits(4, 200);
    for (int i = 0; i < 1000; ++i) {
        const QuadRat w = oracle::random_rat(rng, tau, -100, 100, 9);
        const long b = pick_bits(rng);
        const long b2 = b + pick_bits(rng);
        const auto coarse = eval_enclosure(w, b);
        const auto fine = eval_enclosure(w, b2);
        const Dyadic slack = Dyadic(static_cast<long>(nonzero_terms(w))) * Dyadic::pow2(-b);
        ASSERT_LE(coarse.lo - slack, fine.lo);
        ASSERT_LE(fine.hi, coarse.hi + slack);
        ASSERT_LE(fine.width(), coarse.width() + slack);
    }
}

TEST_P(EvalProperties, ExactnessDetection) {
    const int tau = GetParam();
    std::mt19937_64 rng(99 + tau);
    std::uniform_int_distribution<int> coin(0, 3);
    for (int i = 0; i < 1000; ++i) {
        QuadRat w = oracle::random_rat(rng, tau, -50, 50, 3);
        const int kind = coin(rng);
        if (kind < 2) w = QuadRat::constant(tau, kind == 0 ? mpq_class(w.at(0).get_num()) : w.at(0));
        const auto fr = frac_enclosure(w, Dyadic::pow2(-30));
        const bool expect_exact = w.is_rational() && w.at(0).get_den() == 1;
        ASSERT_EQ(fr.exact, expect_exact) << to_string(w);
        if (fr.exact) {
            ASSERT_TRUE(fr.frac.is_point());
        }
        ASSERT_GE(fr.frac.lo.sign(), 0);
        ASSERT_LE(fr.frac.hi, Dyadic(1));
        ASSERT_LE(fr.frac.width(), Dyadic::pow2(-30));
    }
}

TEST_P(EvalProperties, FracConsistentWithValue) {
    const int tau = GetParam();
    std::mt19937_64 rng(1234 + tau);
    for (int i = 0; i < 1000; ++i) {
        const QuadRat w = oracle::random_rat(rng, tau, -10000, 10000, 30);
        const auto fr = frac_enclosure(w, Dyadic::pow2(-40));
        const mpq_class v = oracle::value(w);
        ASSERT_EQ(mpq_class(fr.int_part), oracle::floor_q(v)) << to_string(w);
        ASSERT_TRUE(oracle::encloses(fr.frac, oracle::frac(v))) << to_string(w);
        const auto ev = eval_enclosure(w, 40);
        const mpq_class gap = abs(mpq_class(fr.int_part) + fr.frac.midpoint() - ev.midpoint());
        ASSERT_LE(gap, fr.frac.width().to_mpq() + ev.width().to_mpq());
    }
}

TEST_P(EvalProperties, DistSymmetricUnderNegation) {
    const int tau = GetParam();
    std::mt19937_64 rng(4321 + tau);
    for (int i = 0; i < 1000; ++i) {
        const QuadRat w = oracle::random_rat(rng, tau, -300, 300, 11);
        const Dyadic width = Dyadic::pow2(-50);
        const auto a = dist_to_int(w, width);
        const auto b = dist_to_int(-w, width);
        ASSERT_LE(a.lo, b.hi + width);
        ASSERT_LE(b.lo, a.hi + width);
        ASSERT_TRUE(oracle::encloses(a, oracle::dist(w)));
    }
}

INSTANTIATE_TEST_SUITE_P(Tau, EvalProperties, ::testing::Values(1, 2, 3));
