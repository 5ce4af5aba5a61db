#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "blowuplab/selfsimilar.hpp"

using namespace blowuplab;

namespace {

const Problem ref{2.0, 1.5, 1.0, 1};
const Problem cubic{3.0, 2.0, 2.0, 3};

// Plain RK4 for the profile equation in (F, G) = (f^m, (f^m)').
struct Rk4Profile {
    Problem P;
    double alpha, beta;

    explicit Rk4Profile(const Problem& p) : P(p)
    {
        const auto ex = similarity_exponents(p);
        alpha = ex.alpha;
        beta = ex.beta;
    }

    std::array<double, 2> rhs(double x, const std::array<double, 2>& y) const
    {
        const double F = std::max(y[0], 0.0);
        const double f = std::pow(F, 1.0 / P.m);
        const double fp = F > 0.0 ? y[1] * f / (P.m * F) : 0.0;
        const double curv = P.dim > 1 ? -(P.dim - 1) / x * y[1] : 0.0;
        return {y[1], curv + alpha * f - beta * x * fp - std::pow(x, P.sigma) * std::pow(f, P.p)};
    }

    // First zero of G after the series start, by linear interpolation.
    double first_max(double a, double h) const
    {
        double x = 1e-3;
        const double c = alpha * a / P.dim;
        std::array<double, 2> y{std::pow(a, P.m) + 0.5 * c * x * x, c * x};
        while (true) {
            auto add = [](const std::array<double, 2>& u, const std::array<double, 2>& k, double s) {
                return std::array<double, 2>{u[0] + s * k[0], u[1] + s * k[1]};
            };
            const auto k1 = rhs(x, y);
            const auto k2 = rhs(x + h / 2, add(y, k1, h / 2));
            const auto k3 = rhs(x + h / 2, add(y, k2, h / 2));
            const auto k4 = rhs(x + h, add(y, k3, h));
            std::array<double, 2> z;
            for (int i = 0; i < 2; ++i)
                z[i] = y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            if (z[1] < 0.0)
                return x + h * y[1] / (y[1] - z[1]);
            y = z;
            x += h;
        }
    }
};

} // namespace

TEST(OriginProfile, SeriesCurvatureAtOrigin)
{
    const auto prof = integrate_profile_from_origin(cubic, 1.0);
    ASSERT_GT(prof.xi.size(), 10u);
    // (f^m)''(0) = α a / N = (2/3)/3.
    for (std::size_t k = 0; k < prof.xi.size() && prof.xi[k] < 1e-2; ++k) {
        if (prof.xi[k] > 0.0) {
            EXPECT_NEAR(prof.flux[k] / prof.xi[k], 2.0 / 9.0, 2e-3);
        }
    }
    EXPECT_DOUBLE_EQ(*prof.origin_value, 1.0);
}

TEST(OriginProfile, IncreasesUpToFirstMaximum)
{
    for (const auto& P : {ref, cubic}) {
        const auto prof = integrate_profile_from_origin(P, 2.0);
        const double peak = *prof.first_max;
        for (std::size_t k = 1; k < prof.xi.size() && prof.xi[k] < peak; ++k)
            EXPECT_GE(prof.f[k], prof.f[k - 1]);
        EXPECT_GT(prof(peak), 2.0);
    }
}

TEST(OriginProfile, FirstMaximumMatchesStepHalvingRk4)
{
    for (const auto& P : {ref, cubic}) {
        const Rk4Profile rk(P);
        const double coarse = rk.first_max(1.0, 1e-3);
        const double fine = rk.first_max(1.0, 5e-4);
        // Interpolated crossing is second order in h.
        const double oracle = fine + (fine - coarse) / 3.0;
        EXPECT_NEAR(first_maximum(P, 1.0), oracle, 1e-5) << P.dim;
    }
}

TEST(InterfaceBranch, DegenerateFrontLocalLaw)
{
    const double xi_int = 3.0;
    const auto br = integrate_profile_from_interface(ref, xi_int, FrontKind::degenerate, 0.0, true, 0.0);
    const double s = (ref.m - 1.0) * similarity_exponents(ref).beta * xi_int / ref.m;
    std::size_t seen = 0;
    for (std::size_t k = 0; k < br.xi.size(); ++k) {
        const double d = xi_int - br.xi[k];
        if (d > 0.0 && d < 1e-3) {
            EXPECT_NEAR(std::pow(br.f[k], ref.m - 1.0) / (s * d), 1.0, 1e-2);
            ++seen;
        }
    }
    EXPECT_GT(seen, 0u);
}

TEST(InterfaceBranch, TransversalFrontFlux)
{
    const auto br = integrate_profile_from_interface(ref, 1.0, FrontKind::transversal, 0.5, false, 2.0);
    ASSERT_FALSE(br.flux.empty());
    EXPECT_NEAR(br.flux.front(), 0.5, 1e-3);
    EXPECT_DOUBLE_EQ(br.start, 1.0);
}

TEST(CompactProfile, PositiveExactlyBetweenInterfaces)
{
    for (const auto& P : {ref, Problem{2.0, 1.0, 2.0, 1}}) {
        const auto prof = find_compact_subsolution_profile(P);
        ASSERT_TRUE(prof.inner_interface && prof.outer_interface);
        const double x1 = *prof.inner_interface, x2 = *prof.outer_interface;
        EXPECT_NEAR(x1, 1.0, 1e-8);
        EXPECT_GT(x2, x1);
        for (std::size_t k = 0; k < prof.xi.size(); ++k) {
            if (prof.xi[k] > x1 && prof.xi[k] < x2) {
                EXPECT_GT(prof.f[k], 0.0) << prof.xi[k];
            }
        }
        EXPECT_EQ(prof(0.5 * x1), 0.0);
        EXPECT_EQ(prof(x2 * 1.01), 0.0);
        // Transversal inner front, degenerate outer front.
        EXPECT_GT(prof.flux.front(), 1e-3);
        EXPECT_LT(std::abs(prof.flux.back()), 1e-6);
        const auto res = profile_residual(prof);
        EXPECT_LT(res.max_abs, 1e-4 * (1.0 + std::pow(prof.max_value(), P.p)));
    }
}

TEST(CompactProfile, ReferenceOuterInterface)
{
    EXPECT_NEAR(*find_compact_subsolution_profile(ref).outer_interface, 4.636, 1e-3);
    EXPECT_NEAR(*find_compact_subsolution_profile(Problem{2.0, 1.0, 2.0, 1}).outer_interface, 2.5005, 1e-3);
}

TEST(CompactProfile, ShootingMethodsAgree)
{
    const auto a = shoot_compact_by_outer_interface(ref);
    const auto b = shoot_compact_by_inner_slope(ref);
    EXPECT_NEAR(a.outer, b.outer, 1e-4);
    EXPECT_NEAR(a.inner, 1.0, 1e-8);
    EXPECT_NEAR(a.inner_flux, b.inner_flux, 1e-4);
}

TEST(CompactProfile, ToleranceSelfConsistency)
{
    ProfileOptions loose;
    loose.shoot_tol = 1e-8;
    loose.rtol = 1e-9;
    const double a = shoot_compact_by_outer_interface(ref).outer;
    const double b = shoot_compact_by_outer_interface(ref, loose).outer;
    EXPECT_NEAR(a, b, 1e-6);
}

TEST(CompactProfile, FamilyScalesWithInnerTarget)
{
    // Outer front moves outward with the inner one.
    ProfileOptions o;
    o.inner_target = 1.5;
    const auto p15 = find_compact_subsolution_profile(ref, o);
    EXPECT_GT(*p15.outer_interface, *find_compact_subsolution_profile(ref).outer_interface);
    EXPECT_NEAR(*p15.inner_interface, 1.5, 1e-8);
}

TEST(DecreasingProfile, SingularSlopeInThreeDimensions)
{
    const double limit = estimate_interface_limit(cubic);
    const auto prof = find_decreasing_supersolution_profile(cubic, 0.5 * limit);
    ASSERT_TRUE(prof.asymptote_slope.has_value());
    const double expected = -(cubic.dim - 2.0) / cubic.m;
    EXPECT_NEAR(*prof.asymptote_slope, expected, 0.1 * std::abs(expected));
    ASSERT_TRUE(prof.asymptote_coeff.has_value());
    EXPECT_GT(*prof.asymptote_coeff, 0.0);
    for (std::size_t k = 1; k < prof.f.size(); ++k)
        EXPECT_LE(prof.f[k], prof.f[k - 1]);
    EXPECT_LT(profile_residual(prof).max_rel, 1e-3);
}

TEST(DecreasingProfile, OriginValueShrinksWithInterfaceInOneDimension)
{
    // Near a small interface the profile is governed by the front balance
    // f^{m-1} ~ ξ0 (ξ0 - ξ), so f(0) ~ C ξ0^{2/(m-1)}.
    const double a1 = *find_decreasing_supersolution_profile(ref, 0.1).origin_value;
    const double a2 = *find_decreasing_supersolution_profile(ref, 0.05).origin_value;
    const double a3 = *find_decreasing_supersolution_profile(ref, 0.2).origin_value;
    EXPECT_LT(a2, a1);
    EXPECT_LT(a1, a3);
    EXPECT_NEAR(a1 / a2, std::pow(2.0, 2.0 / (ref.m - 1.0)), 0.1 * std::pow(2.0, 2.0 / (ref.m - 1.0)));
}

TEST(DecreasingProfile, InterfaceBeyondLimitRejected)
{
    const double limit = estimate_interface_limit(cubic);
    EXPECT_TRUE(decreasing_branch_monotone(cubic, 0.9 * limit));
    EXPECT_FALSE(decreasing_branch_monotone(cubic, 1.2 * limit));
    EXPECT_THROW(find_decreasing_supersolution_profile(cubic, 1.2 * limit), InterfaceOutOfRange);
}

TEST(FspSupersolution, ConditionsHoldAndTauIsMaximal)
{
    for (const auto& P : {ref, cubic}) {
        const double sup_u = 1.0, zeta0 = 1.0;
        const auto sup = build_fsp_supersolution(P, sup_u, zeta0);
        const auto ex = similarity_exponents(P);
        const auto& fn = sup.function;
        ASSERT_GT(sup.tau, 0.0);
        ASSERT_LE(sup.tau, 1.0);
        EXPECT_GT(selfsimilar_support_edge(fn, 0.0), zeta0);
        for (int k = 0; k <= 200; ++k) {
            const double r = zeta0 * k / 200.0;
            EXPECT_GT(selfsimilar_eval(fn, r, 0.0), sup_u) << P.dim << " r=" << r;
        }
        // Combined profile never exceeds either branch.
        for (std::size_t k = 0; k < fn.profile.xi.size(); ++k) {
            const double x = fn.profile.xi[k];
            if (x > sup.regular.xi.front() && x <= sup.regular.xi.back()) {
                EXPECT_LE(fn.profile.f[k], num::interp_linear(sup.regular.xi, sup.regular.f, x) + 1e-12);
            }
            if (x >= sup.decreasing.xi.front()) {
                EXPECT_LE(fn.profile.f[k], num::interp_linear(sup.decreasing.xi, sup.decreasing.f, x) + 1e-12);
            }
        }
        // Direct check of maximality: slightly larger τ violates a condition.
        if (sup.tau < 1.0) {
            const double t2 = sup.tau * (1.0 + 1e-6);
            const double xi0 = *fn.profile.outer_interface;
            const bool edge_ok = xi0 * std::pow(t2, -ex.beta) > zeta0;
            const double inner = zeta0 * std::pow(t2, ex.beta);
            const double low = std::min(*fn.profile.origin_value,
                                        num::interp_linear(sup.decreasing.xi, sup.decreasing.f, inner));
            EXPECT_FALSE(edge_ok && std::pow(t2, -ex.alpha) * low > sup_u);
        }
    }
}

TEST(FspSupersolution, CachedInterfaceLimitReused)
{
    FspOptions o;
    o.interface_limit = 0.7;
    const auto sup = build_fsp_supersolution(ref, 2.0, 0.5, o);
    EXPECT_DOUBLE_EQ(sup.interface_limit, 0.7);
    EXPECT_LE(*sup.function.profile.outer_interface, 0.35 + 1e-15);
}

TEST(SelfSimilarFunction, EvaluationSupportAndShift)
{
    const auto prof = find_compact_subsolution_profile(ref);
    const auto ex = similarity_exponents(ref);
    const SelfSimilarFunction fn{prof, 2.0, 0.5};
    EXPECT_NEAR(selfsimilar_support_edge(fn, 0.5), *prof.outer_interface * std::pow(2.0, -ex.beta), 1e-12);
    // sup over r at time t is s^{-α} max f.
    for (double t : {0.5, 1.5, 2.3}) {
        const double s = fn.T + fn.t_offset - t;
        double best = 0.0;
        const double edge = selfsimilar_support_edge(fn, t);
        for (int k = 0; k <= 4000; ++k)
            best = std::max(best, selfsimilar_eval(fn, edge * k / 4000.0, t));
        EXPECT_NEAR(best / (std::pow(s, -ex.alpha) * prof.max_value()), 1.0, 1e-3);
    }
    const SelfSimilarFunction moved{prof, 2.0, 1.25};
    for (double r : {0.3, 1.0, 2.0, 3.5})
        EXPECT_DOUBLE_EQ(selfsimilar_eval(fn, r, 1.1), selfsimilar_eval(moved, r, 1.85));
    EXPECT_EQ(selfsimilar_eval(fn, 0.0, 0.5), 0.0);
}

TEST(SelfSimilarFunction, WindowErrors)
{
    const SelfSimilarFunction fn{find_compact_subsolution_profile(ref), 1.0, 0.0};
    EXPECT_THROW(selfsimilar_eval(fn, 1.0, -0.1), InvalidArgument);
    EXPECT_THROW(selfsimilar_eval(fn, 1.0, 1.0), InvalidArgument);
    EXPECT_THROW(selfsimilar_support_edge(fn, 2.0), InvalidArgument);
    EXPECT_NO_THROW(selfsimilar_eval(fn, 1.0, 0.999));
}

TEST(ProfileResidual, OriginProfileCertificate)
{
    const auto prof = integrate_profile_from_origin(ref, 1.0);
    const auto res = profile_residual(prof);
    EXPECT_GT(res.checked, 100u);
    EXPECT_LT(res.max_abs, 1e-4 * (1.0 + std::pow(prof.max_value(), ref.p)));
}

TEST(ProfileResidual, DetectsPerturbedProfile)
{
    auto prof = find_compact_subsolution_profile(ref);
    const auto clean = profile_residual(prof);
    for (std::size_t k = 0; k < prof.f.size(); ++k)
        prof.f[k] *= 1.01;
    EXPECT_GT(profile_residual(prof).max_abs, 100.0 * clean.max_abs);
}

TEST(ProfileRoles, NamesRoundTrip)
{
    for (auto r : {ProfileRole::subsolution_compact, ProfileRole::origin_regular, ProfileRole::decreasing_interface,
                   ProfileRole::combined_min})
        EXPECT_EQ(parse_profile_role(to_string(r)), r);
    EXPECT_FALSE(parse_profile_role("bogus").has_value());
}
