#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "blowuplab/core.hpp"

using namespace blowuplab;

TEST(SimilarityExponents, ReferenceProblems)
{
    const auto a = similarity_exponents({2.0, 1.5, 1.0, 1});
    EXPECT_DOUBLE_EQ(a.alpha, 1.5);
    EXPECT_DOUBLE_EQ(a.beta, 0.25);
    EXPECT_DOUBLE_EQ(a.bigL, 2.0);

    const auto b = similarity_exponents({3.0, 2.0, 2.0, 3});
    EXPECT_DOUBLE_EQ(b.alpha, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(b.beta, 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(b.bigL, 6.0);
}

TEST(SimilarityExponents, LinearReactionLimit)
{
    const auto e = similarity_exponents({2.0, 1.0, 2.0, 1});
    EXPECT_DOUBLE_EQ(e.alpha, 2.0);
    EXPECT_DOUBLE_EQ(e.beta, 0.5);
    EXPECT_DOUBLE_EQ(e.bigL, 2.0);
}

TEST(SimilarityExponents, RatioIdentityHoldsOnParameterGrid)
{
    for (double m : {1.2, 2.0, 3.0, 5.0})
        for (double pf : {0.0, 0.3, 0.7, 0.95})
            for (double sigma : {0.1, 1.0, 2.0, 4.5})
                for (int N : {1, 2, 3, 5}) {
                    const Problem prob{m, 1.0 + pf * (m - 1.0), sigma, N};
                    const auto e = similarity_exponents(prob);
                    EXPECT_GT(e.alpha, 0.0);
                    EXPECT_GT(e.beta, 0.0);
                    EXPECT_NEAR(e.alpha, e.beta * (sigma + 2.0) / (m - prob.p), 1e-12 * e.alpha);
                    EXPECT_NEAR(e.alpha / e.beta * (m - prob.p), sigma + 2.0, 1e-12 * (sigma + 2.0));
                }
}

TEST(Problem, RejectsOutOfScopeParameters)
{
    EXPECT_THROW(validate(Problem{1.0, 1.0, 1.0, 1}), InvalidArgument);
    EXPECT_THROW(validate(Problem{2.0, 2.0, 1.0, 1}), InvalidArgument);
    EXPECT_THROW(validate(Problem{2.0, 0.9, 1.0, 1}), InvalidArgument);
    EXPECT_THROW(validate(Problem{2.0, 1.5, 0.0, 1}), InvalidArgument);
    EXPECT_THROW(validate(Problem{2.0, 1.5, 1.0, 0}), InvalidArgument);
    EXPECT_NO_THROW(validate(Problem{2.0, 1.0, 1.0, 1}));
    EXPECT_THROW(require_superlinear(Problem{2.0, 1.0, 1.0, 1}, "op"), InvalidArgument);
}

TEST(FujitaExponent, Values)
{
    EXPECT_DOUBLE_EQ(fujita_exponent(2.0, 1.0, 1), 5.0);
    EXPECT_DOUBLE_EQ(fujita_exponent(3.0, 2.0, 3), 13.0 / 3.0);
}

TEST(FujitaExponent, ExceedsMAndEveryAdmissibleP)
{
    for (double m : {1.1, 2.0, 4.0})
        for (double sigma : {0.05, 1.0, 3.0})
            for (int N = 1; N <= 6; ++N) {
                const double pF = fujita_exponent(m, sigma, N);
                EXPECT_GT(pF, m);
                for (double pf : {0.0, 0.5, 0.999})
                    EXPECT_LT(1.0 + pf * (m - 1.0), pF);
            }
}

TEST(NonexistenceBound, Values)
{
    EXPECT_DOUBLE_EQ(nonexistence_time_bound(1.0, 1.5), 2.0);
    EXPECT_NEAR(nonexistence_time_bound(2.0, 1.5), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_LT(nonexistence_time_bound(1e8, 1.5), 1e-11);
    EXPECT_THROW(nonexistence_time_bound(1.0, 1.0), InvalidArgument);
    EXPECT_THROW(nonexistence_time_bound(0.0, 1.5), InvalidArgument);
}

TEST(NonexistenceBound, StrictlyDecreasingInTail)
{
    for (double p : {1.1, 1.5, 3.0}) {
        double prev = nonexistence_time_bound(0.01, p);
        for (double c = 0.02; c < 100.0; c *= 1.3) {
            const double v = nonexistence_time_bound(c, p);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
}

TEST(TailOdeTime, MatchesOdeClosedForm)
{
    // u' = u^p from u(0) = c blows up at c^{1-p}/(p-1).
    EXPECT_DOUBLE_EQ(tail_ode_blowup_time(1.0, 1.5), 2.0);
    EXPECT_NEAR(tail_ode_blowup_time(2.0, 1.5), std::sqrt(2.0), 1e-15);
}

TEST(InitialData, Evaluation)
{
    const Problem prob{2.0, 1.5, 1.0, 1};
    const auto bump = InitialDataSpec::bump(1.0, 1.0);
    EXPECT_DOUBLE_EQ(evaluate(bump, prob, 0.25), 0.9375);
    EXPECT_EQ(evaluate(bump, prob, 1.0), 0.0);
    EXPECT_EQ(evaluate(bump, prob, 3.0), 0.0);
    const auto tail = InitialDataSpec::threshold_tail(1.0);
    for (double r : {0.0, 0.5, 3.0, 100.0})
        EXPECT_NEAR(evaluate(tail, prob, r), std::pow(1.0 + r, -2.0), 1e-15);
    const auto table = InitialDataSpec::from_table({{0.0, 2.0}, {1.0, 1.0}, {2.0, 0.0}});
    EXPECT_DOUBLE_EQ(evaluate(table, prob, 0.5), 1.5);
    EXPECT_THROW(evaluate(table, prob, 2.5), InvalidArgument);
}

TEST(InitialData, TailIsPositiveAndNonincreasing)
{
    const Problem prob{3.0, 2.0, 2.0, 3};
    const auto tail = InitialDataSpec::threshold_tail(0.7);
    double prev = evaluate(tail, prob, 0.0);
    for (double r = 0.1; r < 1e4; r *= 1.5) {
        const double v = evaluate(tail, prob, r);
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(InitialData, ValidationAndKindNames)
{
    EXPECT_THROW(validate(InitialDataSpec::bump(-1.0, 1.0)), InvalidArgument);
    EXPECT_THROW(validate(InitialDataSpec::bump(1.0, 0.0)), InvalidArgument);
    EXPECT_THROW(validate(InitialDataSpec::threshold_tail(-0.1)), InvalidArgument);
    EXPECT_THROW(validate(InitialDataSpec::from_table({})), InvalidArgument);
    EXPECT_THROW(validate(InitialDataSpec::from_table({{1.0, 1.0}, {0.5, 1.0}})), InvalidArgument);
    EXPECT_THROW(validate(InitialDataSpec::from_table({{0.0, -1.0}})), InvalidArgument);
    for (auto k : {DataKind::compact_bump, DataKind::threshold_tail, DataKind::table})
        EXPECT_EQ(parse_data_kind(to_string(k)), k);
    EXPECT_FALSE(parse_data_kind("gaussian").has_value());
}

TEST(UnitSphereArea, LowDimensions)
{
    EXPECT_NEAR(unit_sphere_area(1), 2.0, 1e-15);
    EXPECT_NEAR(unit_sphere_area(2), 2.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(unit_sphere_area(3), 4.0 * std::numbers::pi, 1e-14);
}

TEST(TailNorm, ZeroDataGivesZero)
{
    const Problem prob{2.0, 1.5, 1.0, 1};
    const auto radii = default_tail_radii();
    EXPECT_EQ(adb_tail_norm(InitialDataSpec::bump(0.0, 1.0), prob, radii), 0.0);
    EXPECT_EQ(adb_tail_norm(InitialDataSpec::threshold_tail(0.0), prob, radii), 0.0);
}

TEST(TailNorm, CompactDataVanishesAtDistance)
{
    const Problem prob{2.0, 1.5, 1.0, 1};
    const auto bump = InitialDataSpec::bump(1.0, 1.0);
    const auto radii = default_tail_radii();
    EXPECT_TRUE(std::isfinite(adb_tail_norm(bump, prob, radii)));
    const std::vector<double> far{4.0, 16.0, 1024.0};
    EXPECT_EQ(adb_tail_norm(bump, prob, far), 0.0);
}

TEST(TailNorm, ThresholdTailMatchesExactBallAverage)
{
    // N = 1, σ = 1, p = 1.5, m = 2: ball radius (1+R)^{-1}, weight (1+R)^2,
    // and (1+|x|)^{-2} integrates in closed form on [R-ρ, R+ρ] for R >= ρ.
    const Problem prob{2.0, 1.5, 1.0, 1};
    const auto tail = InitialDataSpec::threshold_tail(1.0);
    const auto radii = default_tail_radii();
    double exact = 0.0;
    for (double R : radii) {
        const double rho = 1.0 / (1.0 + R);
        const double avg = (1.0 / (1.0 + R - rho) - 1.0 / (1.0 + R + rho)) / (2.0 * rho);
        exact = std::max(exact, (1.0 + R) * (1.0 + R) * avg);
    }
    const double coarse = adb_tail_norm(tail, prob, radii);
    TailNormOptions fine;
    fine.radial_nodes = 640;
    const double dense = adb_tail_norm(tail, prob, radii, fine);
    EXPECT_NEAR(coarse, exact, 1e-4 * exact);
    EXPECT_NEAR(dense, exact, 1e-6 * exact);
    EXPECT_NEAR(coarse, dense, 1e-4 * dense);
}

TEST(TailNorm, ThreeDimensionalBallAverageOfConstant)
{
    const Problem prob{3.0, 2.0, 2.0, 3};
    const auto flat = InitialDataSpec::from_table({{0.0, 2.0}, {1e6, 2.0}});
    EXPECT_NEAR(ball_average(flat, prob, 5.0, 0.5), 2.0, 1e-13);
    const std::vector<double> at_origin{0.0};
    EXPECT_NEAR(adb_tail_norm(flat, prob, at_origin), 2.0, 1e-13);
}

TEST(TailNorm, MonotoneInData)
{
    const Problem prob{2.0, 1.5, 1.0, 2};
    const auto radii = default_tail_radii();
    double prev = 0.0;
    for (double c : {0.1, 0.5, 1.0, 2.0, 7.0}) {
        const double v = adb_tail_norm(InitialDataSpec::threshold_tail(c), prob, radii);
        EXPECT_GE(v, prev);
        prev = v;
    }
    const double small = adb_tail_norm(InitialDataSpec::bump(1.0, 2.0), prob, radii);
    const double large = adb_tail_norm(InitialDataSpec::bump(1.5, 3.0), prob, radii);
    EXPECT_GE(large, small);
}

TEST(TailNorm, RejectsLinearReactionAndEmptyRadii)
{
    const std::vector<double> none;
    EXPECT_THROW(adb_tail_norm(InitialDataSpec::bump(1.0, 1.0), Problem{2.0, 1.0, 1.0, 1}, default_tail_radii()),
                 InvalidArgument);
    EXPECT_THROW(adb_tail_norm(InitialDataSpec::bump(1.0, 1.0), Problem{2.0, 1.5, 1.0, 1}, none), InvalidArgument);
    const auto short_table = InitialDataSpec::from_table({{0.0, 1.0}, {2.0, 0.0}});
    const std::vector<double> far{8.0};
    EXPECT_THROW(adb_tail_norm(short_table, Problem{2.0, 1.5, 1.0, 1}, far), InvalidArgument);
}
