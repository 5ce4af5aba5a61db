#pragma once

// Self-similar profiles u = (T - t)^{-α} f(|x| (T - t)^β) of the radial
// problem. The profile equation
//
//   (f^m)'' + (N-1)/ξ (f^m)' - α f + β ξ f' + ξ^σ f^p = 0
//
// is integrated as a first-order system in (F, G) = (f^m, (f^m)'), which
// stays regular at degenerate interfaces where f' is unbounded.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blowuplab/core.hpp"
#include "blowuplab/error.hpp"
#include "blowuplab/numerics.hpp"
#include "blowuplab/ode.hpp"

namespace blowuplab {

enum class ProfileRole { subsolution_compact, origin_regular, decreasing_interface, combined_min };

inline std::string_view to_string(ProfileRole r)
{
    switch (r) {
    case ProfileRole::subsolution_compact: return "subsolution_compact";
    case ProfileRole::origin_regular: return "origin_regular";
    case ProfileRole::decreasing_interface: return "decreasing_interface";
    case ProfileRole::combined_min: return "combined_min";
    }
    return "?";
}

inline std::optional<ProfileRole> parse_profile_role(std::string_view s)
{
    for (auto r : {ProfileRole::subsolution_compact, ProfileRole::origin_regular, ProfileRole::decreasing_interface,
                   ProfileRole::combined_min})
        if (to_string(r) == s)
            return r;
    return std::nullopt;
}

/// Tabulated profile. `flux` holds (f^m)' where it is known (empty for the
/// combined profile).
struct SelfSimilarProfile {
    Problem problem;
    ProfileRole role = ProfileRole::origin_regular;
    std::vector<double> xi;
    std::vector<double> f;
    std::vector<double> flux;
    std::optional<double> inner_interface;
    std::optional<double> outer_interface;
    std::optional<double> origin_value;
    std::optional<double> asymptote_coeff;
    std::optional<double> asymptote_slope; ///< fitted d ln f / d ln ξ near the origin
    std::optional<double> first_max;       ///< first maximum of an origin-regular profile
    std::optional<double> crossing;        ///< switch point of a combined profile

    double max_value() const { return f.empty() ? 0.0 : *std::max_element(f.begin(), f.end()); }

    /// Linear interpolation; zero outside [inner interface (or 0), outer
    /// interface (or last sample)].
    double operator()(double x) const
    {
        if (xi.empty() || x < 0.0)
            return 0.0;
        const double lo = inner_interface.value_or(xi.front());
        const double hi = outer_interface.value_or(xi.back());
        if (x < lo || x > hi || x < xi.front() || x > xi.back())
            return 0.0;
        return num::interp_linear(xi, f, x);
    }
};

struct ProfileOptions {
    double rtol = 1e-12;
    double atol = 1e-16;
    double f_floor = 1e-12;
    double front_offset = 1e-9;    ///< relative distance of the interface start point
    double origin_offset = 1e-6;   ///< series start for origin-regular profiles
    double inner_target = 1.0;     ///< normalization of the compact profile family
    double shoot_tol = 1e-12;      ///< bisection tolerance for shooting parameters
    double scan_lo = 0.1;          ///< geometric scan range for the outer interface
    double scan_hi = 200.0;
    double scan_ratio = 1.2;
    double xi_max = 50.0;          ///< outer limit for origin-regular and outward branches
    std::size_t table_nodes = 1500; ///< uniform part of the tabulation
    double grading_first = 1e-4;    ///< first graded node, relative to the interval length
    double grading_ratio = 1.02;
    double switch_ratio = 1e-3;     ///< f / running max of f below which f becomes the independent variable
};

namespace detail {

struct ProfileOde {
    Problem prob;
    double alpha = 0.0;
    double beta = 0.0;
    num::Power root_m, pow_p, pow_sigma;

    explicit ProfileOde(const Problem& p)
        : prob(p), alpha(similarity_exponents(p).alpha), beta(similarity_exponents(p).beta), root_m(1.0 / p.m),
          pow_p(p.p), pow_sigma(p.sigma)
    {
    }

    ode::Vec<2> operator()(double xi, const ode::Vec<2>& y) const
    {
        const double F = std::max(y[0], 0.0);
        const double G = y[1];
        const double f = root_m(F);
        const double slope = F > 0.0 ? G * f / (prob.m * F) : 0.0;
        double curv;
        if (prob.dim == 1)
            curv = 0.0;
        else if (xi == 0.0)
            return {G, alpha * f / prob.dim};
        else
            curv = -(prob.dim - 1) / xi * G;
        return {G, curv + alpha * f - beta * xi * slope - pow_sigma(std::abs(xi)) * pow_p(f)};
    }
};

/// Degenerate interface at xi_int: f^{m-1} ≈ s (xi_int - ξ) with
/// s = (m-1) β xi_int / m, and (f^m)' ≈ -β xi_int f.
inline ode::Vec<2> degenerate_front_state(const Problem& prob, double beta, double xi_int, double dist)
{
    const double s = (prob.m - 1.0) * beta * xi_int / prob.m;
    const double f = std::pow(s * dist, 1.0 / (prob.m - 1.0));
    return {std::pow(f, prob.m), -beta * xi_int * f};
}

/// Transversal interface at xi_int with (f^m)' = c, to next order in the
/// distance d: G ≈ c - β xi_int c^{1/m} d^{1/m}.
inline ode::Vec<2> transversal_front_state(const Problem& prob, double beta, double xi_int, double c, double dist)
{
    const double cm = std::pow(c, 1.0 / prob.m);
    const double dm = std::pow(dist, 1.0 / prob.m);
    const double G = c - beta * xi_int * cm * dm;
    const double F = c * dist - beta * xi_int * cm * dist * dm / (1.0 + 1.0 / prob.m);
    return {F, G};
}

/// Nodes on [lo, hi]: geometric clustering towards the requested ends
/// (first node at first·(hi-lo), growth `ratio`) joined to a uniform middle.
inline std::vector<double> graded_nodes(double lo, double hi, std::size_t uniform, double first, double ratio,
                                        bool grade_lo, bool grade_hi)
{
    const double L = hi - lo;
    const double du = L / static_cast<double>(uniform);
    std::vector<double> left, right;
    auto cluster = [&](std::vector<double>& out) {
        double d = first * L;
        while (d * (ratio - 1.0) < du && d < 0.5 * L) {
            out.push_back(d);
            d *= ratio;
        }
    };
    if (grade_lo)
        cluster(left);
    if (grade_hi)
        cluster(right);
    const double a = left.empty() ? lo : lo + left.back();
    const double b = right.empty() ? hi : hi - right.back();
    std::vector<double> nodes;
    nodes.push_back(lo);
    for (double d : left)
        nodes.push_back(lo + d);
    const auto n_mid = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / du)));
    for (std::size_t k = 1; k < n_mid; ++k)
        nodes.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(n_mid));
    for (auto it = right.rbegin(); it != right.rend(); ++it)
        nodes.push_back(hi - *it);
    nodes.push_back(hi);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

inline ode::Options ode_options(const ProfileOptions& opt)
{
    ode::Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    o.max_steps = 2'000'000;
    return o;
}

/// Tabulation helper: observer that stores only the requested stops.
struct StopRecorder {
    std::vector<double>* xs;
    std::vector<ode::Vec<2>>* ys;
    void operator()(double x, const ode::Vec<2>& y, bool at_stop) const
    {
        if (at_stop) {
            xs->push_back(x);
            ys->push_back(y);
        }
    }
};

enum class TurnRule { none, flux_nonnegative, upturn };
enum class BranchEnd { vanished, turned, reached_end, failed };

struct BranchResult {
    BranchEnd end = BranchEnd::failed;
    double x = 0.0;
    ode::Vec<2> y{};
    std::string message;
};

/// Integrates (F, G) in ξ from x0 towards x_end. Once f drops below
/// switch_ratio times its running maximum, the branch is finished with f as
/// the independent variable, where dξ/df = m f^{m-1}/G and
/// dG/df = (m f^{m-1}/G)(-(N-1)G/ξ + αf - ξ^σ f^p) - βξ are regular at a
/// transversal zero. `rule` adds a terminal condition on the sign of G.
template <class Observer>
BranchResult run_branch(const ProfileOde& rhs, double x0, ode::Vec<2> y0, double x_end, const ProfileOptions& opt,
                        TurnRule rule, Observer&& observe, std::span<const double> stops = {})
{
    const Problem& P = rhs.prob;
    const auto oo = ode_options(opt);
    double fpeak = std::pow(std::max(y0[0], 0.0), 1.0 / P.m);
    bool descending = y0[1] < 0.0;
    auto level = [&] { return std::pow(opt.switch_ratio * fpeak, P.m); };
    auto event = [&](double, const ode::Vec<2>& y) {
        const double gF = y[0] - level();
        switch (rule) {
        case TurnRule::none: return gF;
        case TurnRule::flux_nonnegative: return std::min(gF, -y[1]);
        case TurnRule::upturn: return descending ? std::min(gF, -y[1]) : gF;
        }
        return gF;
    };
    auto obs = [&](double x, const ode::Vec<2>& y, bool at_stop) {
        fpeak = std::max(fpeak, std::pow(std::max(y[0], 0.0), 1.0 / P.m));
        if (y[1] < 0.0)
            descending = true;
        observe(x, y, at_stop);
    };
    BranchResult out;
    const auto r1 = ode::integrate<2>(rhs, x0, y0, x_end, oo, event, obs, stops);
    out.x = r1.x;
    out.y = r1.y;
    if (r1.status == ode::Status::reached_end) {
        out.end = BranchEnd::reached_end;
        return out;
    }
    if (r1.status == ode::Status::failed) {
        out.end = BranchEnd::failed;
        out.message = r1.message;
        return out;
    }
    if (r1.y[0] > level() * (1.0 + 1e-12)) {
        out.end = BranchEnd::turned;
        return out;
    }
    const double G0 = r1.y[1];
    if (G0 == 0.0) {
        out.end = BranchEnd::turned;
        return out;
    }
    // Second phase: state (ξ, G) as a function of f, from f_switch down to 0.
    const double m = P.m;
    auto rhs_f = [&](double f, const ode::Vec<2>& z) -> ode::Vec<2> {
        const double xi = z[0], G = z[1];
        const double dxi = m * std::pow(std::max(f, 0.0), m - 1.0) / G;
        const double curv = (P.dim > 1 && xi != 0.0) ? -(P.dim - 1) / xi * G : 0.0;
        const double src = curv + rhs.alpha * f - std::pow(std::abs(xi), P.sigma) * std::pow(std::max(f, 0.0), P.p);
        return {dxi, dxi * src - rhs.beta * xi};
    };
    const double sgn = G0 > 0.0 ? 1.0 : -1.0;
    auto ev_f = [&](double, const ode::Vec<2>& z) { return sgn * z[1]; };
    auto obs_f = [&](double f, const ode::Vec<2>& z, bool) { observe(z[0], ode::Vec<2>{std::pow(f, m), z[1]}, false); };
    const double f_start = std::pow(std::max(r1.y[0], 0.0), 1.0 / m);
    const auto r2 = ode::integrate<2>(rhs_f, f_start, ode::Vec<2>{r1.x, G0}, 0.0, oo, ev_f, obs_f);
    out.x = r2.y[0];
    out.y = {0.0, r2.y[1]};
    if (r2.status == ode::Status::reached_end) {
        out.end = BranchEnd::vanished;
    } else {
        out.end = BranchEnd::turned;
        out.y = {std::pow(std::max(r2.x, 0.0), m), r2.y[1]};
        out.message = r2.message;
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Origin-regular profiles

namespace detail {

inline ode::Vec<2> origin_series_state(const ProfileOde& rhs, double a, double xs)
{
    const double curv0 = rhs.alpha * a / rhs.prob.dim;
    return {std::pow(a, rhs.prob.m) + 0.5 * curv0 * xs * xs, curv0 * xs};
}

} // namespace detail

/// Location of the first maximum of the origin-regular profile with f(0) = a.
inline double first_maximum(const Problem& prob, double a, const ProfileOptions& opt = {})
{
    validate(prob);
    detail::require(a > 0.0 && std::isfinite(a), "first_maximum: a must be positive");
    const detail::ProfileOde rhs(prob);
    const double xs = opt.origin_offset;
    auto r = ode::integrate<2>(rhs, xs, detail::origin_series_state(rhs, a, xs), opt.xi_max, detail::ode_options(opt),
                               [](double, const ode::Vec<2>& y) { return y[1]; });
    if (r.status != ode::Status::event)
        throw NumericalFailure("first_maximum: no maximum before xi_max (" + r.message + ")");
    return r.x;
}

/// Profile with f(0) = a, f'(0) = 0, from the series (f^m)(ξ) ≈ a^m +
/// α a ξ²/(2N). Integrated past its first maximum until f vanishes or ξ
/// reaches xi_max.
inline SelfSimilarProfile integrate_profile_from_origin(const Problem& prob, double a, const ProfileOptions& opt = {})
{
    validate(prob);
    detail::require(a > 0.0 && std::isfinite(a), "integrate_profile_from_origin: a must be positive");
    const detail::ProfileOde rhs(prob);
    const double xs = opt.origin_offset;
    const auto y0 = detail::origin_series_state(rhs, a, xs);
    const double peak_at = first_maximum(prob, a, opt);

    const auto probe = detail::run_branch(rhs, xs, y0, opt.xi_max, opt, detail::TurnRule::none, ode::NoObserver{});
    if (probe.end == detail::BranchEnd::failed || probe.end == detail::BranchEnd::turned)
        throw NumericalFailure("integrate_profile_from_origin: integration failed at xi = " +
                               std::to_string(probe.x) + " (" + probe.message + ")");
    const bool hits = probe.end == detail::BranchEnd::vanished;
    const double end = probe.x;

    const auto nodes =
        detail::graded_nodes(0.0, end, opt.table_nodes, opt.grading_first, opt.grading_ratio, false, hits);
    std::vector<double> stops;
    for (double x : nodes)
        if (x > xs && x < end)
            stops.push_back(x);
    std::vector<double> tx;
    std::vector<ode::Vec<2>> ty;
    detail::run_branch(rhs, xs, y0, end, opt, detail::TurnRule::none, detail::StopRecorder{&tx, &ty}, stops);

    SelfSimilarProfile prof;
    prof.problem = prob;
    prof.role = ProfileRole::origin_regular;
    prof.xi.push_back(0.0);
    prof.f.push_back(a);
    prof.flux.push_back(0.0);
    for (std::size_t k = 0; k < tx.size(); ++k) {
        if (tx[k] <= prof.xi.back() || tx[k] >= end)
            continue;
        prof.xi.push_back(tx[k]);
        prof.f.push_back(std::pow(std::max(ty[k][0], 0.0), 1.0 / prob.m));
        prof.flux.push_back(ty[k][1]);
    }
    prof.xi.push_back(end);
    prof.f.push_back(std::pow(std::max(probe.y[0], 0.0), 1.0 / prob.m));
    prof.flux.push_back(probe.y[1]);
    if (hits)
        prof.outer_interface = end;
    prof.origin_value = a;
    prof.first_max = peak_at;
    return prof;
}

// ---------------------------------------------------------------------------
// Branches started at an interface

enum class FrontKind { degenerate, transversal };

/// Raw branch from an interface, sampled at the integrator's accepted steps.
struct ProfileBranch {
    FrontKind kind = FrontKind::degenerate;
    double start = 0.0;    ///< interface position
    double end = 0.0;      ///< last abscissa reached
    bool hit = false;      ///< f vanished at `end`
    double flux_end = 0.0; ///< (f^m)' at `end`
    std::vector<double> xi, f, flux;
};

/// Integrates from an interface towards the origin (`inward`) or away from
/// it, until f vanishes again or `stop_at` is reached. `slope_param` is
/// the transversal flux c and is ignored for a degenerate start.
inline ProfileBranch integrate_profile_from_interface(const Problem& prob, double xi_int, FrontKind kind,
                                                      double slope_param, bool inward, double stop_at,
                                                      const ProfileOptions& opt = {})
{
    validate(prob);
    detail::require(xi_int > 0.0 && std::isfinite(xi_int), "integrate_profile_from_interface: xi_int must be positive");
    detail::require(kind == FrontKind::degenerate || slope_param > 0.0,
                    "integrate_profile_from_interface: transversal start needs a positive slope parameter");
    const detail::ProfileOde rhs(prob);
    const double d = opt.front_offset * xi_int;
    ode::Vec<2> y0;
    if (kind == FrontKind::degenerate) {
        y0 = detail::degenerate_front_state(prob, rhs.beta, xi_int, d);
        if (!inward)
            y0[1] = -y0[1];
    } else {
        y0 = detail::transversal_front_state(prob, rhs.beta, xi_int, slope_param, d);
        if (inward)
            y0[1] = -y0[1];
    }
    const double x0 = inward ? xi_int - d : xi_int + d;
    ProfileBranch br;
    br.kind = kind;
    br.start = xi_int;
    auto obs = [&](double x, const ode::Vec<2>& y, bool) {
        br.xi.push_back(x);
        br.f.push_back(std::pow(std::max(y[0], 0.0), 1.0 / prob.m));
        br.flux.push_back(y[1]);
    };
    obs(x0, y0, false);
    const auto res = detail::run_branch(rhs, x0, y0, stop_at, opt, detail::TurnRule::none, obs);
    br.end = res.x;
    br.hit = res.end == detail::BranchEnd::vanished;
    br.flux_end = res.y[1];
    if (br.hit) {
        br.xi.push_back(res.x);
        br.f.push_back(0.0);
        br.flux.push_back(res.y[1]);
    }
    return br;
}

namespace detail {

/// Inward shot from a degenerate outer interface; returns the point where
/// f vanishes transversally, if any. Branches that reach the origin, or
/// fail on the singular branch for N >= 3, return nothing.
inline std::optional<std::pair<double, double>> shoot_inward(const Problem& prob, double outer,
                                                             const ProfileOptions& opt)
{
    const ProfileOde rhs(prob);
    const double d = opt.front_offset * outer;
    const double stop = prob.dim == 1 ? 0.0 : 1e-6 * outer;
    const auto res = run_branch(rhs, outer - d, degenerate_front_state(prob, rhs.beta, outer, d), stop, opt,
                                TurnRule::none, ode::NoObserver{});
    if (res.end == BranchEnd::vanished && res.y[1] > 0.0)
        return std::pair{res.x, res.y[1]};
    return std::nullopt;
}

/// Outward shot from a transversal inner interface with flux c: +1 with
/// the vanishing point when f returns to zero (c too large), -1 when the
/// branch turns upward or reaches xi_max (c too small).
struct OutwardOutcome {
    int sign = 0;
    double zero = 0.0;
};

inline OutwardOutcome shoot_outward(const Problem& prob, double inner, double c, const ProfileOptions& opt)
{
    const ProfileOde rhs(prob);
    const double d = opt.front_offset * inner;
    const auto res = run_branch(rhs, inner + d, transversal_front_state(prob, rhs.beta, inner, c, d), opt.xi_max,
                                opt, TurnRule::upturn, ode::NoObserver{});
    if (res.end == BranchEnd::vanished)
        return {+1, res.x};
    return {-1, res.x};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Compact subsolution profile

/// Result of one shooting parameterization of the compact profile family.
struct CompactShot {
    double inner = 0.0;
    double outer = 0.0;
    double inner_flux = 0.0; ///< (f^m)' at the inner interface
    double parameter = 0.0;  ///< outer interface or inner flux, depending on the method
    double scan_lo = 0.0, scan_hi = 0.0;
};

/// Bisection on the outer interface: the degenerate inward branch from a
/// trial outer interface vanishes at an inner point that moves outward with
/// it; the root places that point at opt.inner_target.
inline CompactShot shoot_compact_by_outer_interface(const Problem& prob, const ProfileOptions& opt = {})
{
    validate(prob);
    auto low_side = [&](double outer) {
        const auto hit = detail::shoot_inward(prob, outer, opt);
        return !hit || hit->first < opt.inner_target;
    };
    double lo = -1.0, hi = -1.0;
    for (double x = opt.scan_lo; x <= opt.scan_hi; x *= opt.scan_ratio) {
        if (x <= opt.inner_target)
            continue;
        if (low_side(x)) {
            lo = x;
        } else if (lo > 0.0) {
            hi = x;
            break;
        }
    }
    if (lo < 0.0 || hi < 0.0)
        throw NumericalFailure("find_compact_subsolution_profile: no bracket for the outer interface in [" +
                               std::to_string(opt.scan_lo) + ", " + std::to_string(opt.scan_hi) + "]");
    const auto bracket = num::bisect_predicate(low_side, lo, hi, opt.shoot_tol * hi);
    const auto hit = detail::shoot_inward(prob, bracket.second, opt);
    CompactShot s;
    s.outer = bracket.second;
    s.inner = hit->first;
    s.inner_flux = hit->second;
    s.parameter = bracket.second;
    s.scan_lo = lo;
    s.scan_hi = hi;
    return s;
}

/// Bisection on the flux at the fixed inner interface opt.inner_target:
/// outward branches with too little flux turn upward before vanishing,
/// branches with too much vanish transversally; the threshold is the
/// degenerate contact.
inline CompactShot shoot_compact_by_inner_slope(const Problem& prob, const ProfileOptions& opt = {})
{
    validate(prob);
    const double inner = opt.inner_target;
    double lo = -1.0, hi = -1.0, hi_zero = 0.0;
    for (double c = 1e-4; c <= 1e4; c *= 2.0) {
        const auto o = detail::shoot_outward(prob, inner, c, opt);
        if (o.sign < 0) {
            lo = c;
        } else if (lo > 0.0) {
            hi = c;
            hi_zero = o.zero;
            break;
        }
    }
    if (lo < 0.0 || hi < 0.0)
        throw NumericalFailure("find_compact_subsolution_profile: no bracket for the inner flux in [1e-4, 1e4]");
    const double lo0 = lo, hi0 = hi;
    for (int it = 0; it < 200 && hi - lo > opt.shoot_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto o = detail::shoot_outward(prob, inner, mid, opt);
        if (o.sign < 0) {
            lo = mid;
        } else {
            hi = mid;
            hi_zero = o.zero;
        }
    }
    CompactShot s;
    s.inner = inner;
    s.outer = hi_zero;
    s.inner_flux = hi;
    s.parameter = hi;
    s.scan_lo = lo0;
    s.scan_hi = hi0;
    return s;
}

/// Tabulates the compact profile whose degenerate outer interface is
/// `outer`, on a grid graded towards both interfaces.
inline SelfSimilarProfile tabulate_compact_profile(const Problem& prob, double outer, const ProfileOptions& opt = {})
{
    const auto hit = detail::shoot_inward(prob, outer, opt);
    if (!hit)
        throw NumericalFailure("tabulate_compact_profile: inward branch does not vanish transversally");
    const double inner = hit->first;
    const auto nodes =
        detail::graded_nodes(inner, outer, opt.table_nodes, opt.grading_first, opt.grading_ratio, true, true);
    const detail::ProfileOde rhs(prob);
    const double d = opt.front_offset * outer;
    const double x0 = outer - d;
    std::vector<double> stops; // descending
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it)
        if (*it < x0 && *it > inner)
            stops.push_back(*it);
    std::vector<double> tx;
    std::vector<ode::Vec<2>> ty;
    const auto res = detail::run_branch(rhs, x0, detail::degenerate_front_state(prob, rhs.beta, outer, d), 0.0, opt,
                                        detail::TurnRule::none, detail::StopRecorder{&tx, &ty}, stops);
    if (res.end != detail::BranchEnd::vanished)
        throw NumericalFailure("tabulate_compact_profile: tabulation run did not reach the inner interface");

    SelfSimilarProfile prof;
    prof.problem = prob;
    prof.role = ProfileRole::subsolution_compact;
    prof.xi.push_back(res.x);
    prof.f.push_back(0.0);
    prof.flux.push_back(res.y[1]);
    for (std::size_t k = tx.size(); k-- > 0;) {
        if (tx[k] <= prof.xi.back())
            continue;
        prof.xi.push_back(tx[k]);
        prof.f.push_back(std::pow(std::max(ty[k][0], 0.0), 1.0 / prob.m));
        prof.flux.push_back(ty[k][1]);
    }
    prof.xi.push_back(outer);
    prof.f.push_back(0.0);
    prof.flux.push_back(0.0);
    prof.inner_interface = res.x;
    prof.outer_interface = outer;
    return prof;
}

/// Compact profile of the family normalized by opt.inner_target. Shoots on
/// the outer interface and falls back to the inner flux.
inline SelfSimilarProfile find_compact_subsolution_profile(const Problem& prob, const ProfileOptions& opt = {})
{
    validate(prob);
    double outer;
    try {
        outer = shoot_compact_by_outer_interface(prob, opt).outer;
    } catch (const NumericalFailure&) {
        outer = shoot_compact_by_inner_slope(prob, opt).outer;
    }
    return tabulate_compact_profile(prob, outer, opt);
}

// ---------------------------------------------------------------------------
// Decreasing profiles with an interface

/// Thrown when the inward branch from the interface turns non-monotone,
/// which places the interface beyond the admissible range.
class InterfaceOutOfRange : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

/// Decreasing profile with a degenerate interface at xi0, integrated
/// towards the origin. N = 1 records f(0); N >= 3 fits the singular
/// behaviour D ξ^{-(N-2)/m} near the origin.
inline SelfSimilarProfile find_decreasing_supersolution_profile(const Problem& prob, double xi0,
                                                                const ProfileOptions& opt = {})
{
    validate(prob);
    detail::require(xi0 > 0.0 && std::isfinite(xi0), "find_decreasing_supersolution_profile: xi0 must be positive");
    const detail::ProfileOde rhs(prob);
    const double d = opt.front_offset * xi0;
    const double x0 = xi0 - d;
    const double xmin = prob.dim == 1 ? 0.0 : 1e-6 * xi0;
    auto nodes = detail::graded_nodes(0.0, xi0, opt.table_nodes, opt.grading_first, opt.grading_ratio, false, true);
    if (prob.dim > 1) {
        // Logarithmic nodes towards the singular origin, up to where their
        // spacing matches the uniform one.
        const double du = xi0 / static_cast<double>(opt.table_nodes);
        double x = xmin * 1.01;
        std::vector<double> logs;
        for (; x * 0.01 < du; x *= 1.01)
            logs.push_back(x);
        std::erase_if(nodes, [&](double v) { return v <= x; });
        nodes.insert(nodes.end(), logs.begin(), logs.end());
        std::sort(nodes.begin(), nodes.end());
    }
    std::vector<double> stops;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it)
        if (*it < x0 && *it > xmin)
            stops.push_back(*it);
    std::vector<double> tx;
    std::vector<ode::Vec<2>> ty;
    const auto res = detail::run_branch(rhs, x0, detail::degenerate_front_state(prob, rhs.beta, xi0, d), xmin, opt,
                                        detail::TurnRule::flux_nonnegative, detail::StopRecorder{&tx, &ty}, stops);
    if (res.end != detail::BranchEnd::reached_end)
        throw InterfaceOutOfRange("xi0_out_of_range: decreasing branch from xi0 = " + std::to_string(xi0) +
                                  " stops being monotone at xi = " + std::to_string(res.x) +
                                  (res.message.empty() ? "" : " (" + res.message + ")"));
    tx.push_back(res.x);
    ty.push_back(res.y);

    SelfSimilarProfile prof;
    prof.problem = prob;
    prof.role = ProfileRole::decreasing_interface;
    for (std::size_t k = tx.size(); k-- > 0;) {
        if (!prof.xi.empty() && tx[k] <= prof.xi.back())
            continue;
        prof.xi.push_back(tx[k]);
        prof.f.push_back(std::pow(std::max(ty[k][0], 0.0), 1.0 / prob.m));
        prof.flux.push_back(ty[k][1]);
    }
    prof.xi.push_back(xi0);
    prof.f.push_back(0.0);
    prof.flux.push_back(0.0);
    prof.outer_interface = xi0;
    if (prob.dim == 1) {
        prof.origin_value = prof.f.front();
    } else {
        std::vector<double> lx, lf;
        const double top = 10.0 * prof.xi.front();
        for (std::size_t k = 0; k < prof.xi.size() && prof.xi[k] <= top; ++k) {
            lx.push_back(std::log(prof.xi[k]));
            lf.push_back(std::log(prof.f[k]));
        }
        if (lx.size() >= 2)
            prof.asymptote_slope = num::fit_line(lx, lf).slope;
        if (prob.dim >= 3)
            prof.asymptote_coeff = prof.f.front() * std::pow(prof.xi.front(), (prob.dim - 2.0) / prob.m);
    }
    return prof;
}

/// Whether the decreasing branch from xi0 stays monotone down to the origin.
inline bool decreasing_branch_monotone(const Problem& prob, double xi0, const ProfileOptions& opt = {})
{
    const detail::ProfileOde rhs(prob);
    const double d = opt.front_offset * xi0;
    const double xmin = prob.dim == 1 ? 0.0 : 1e-6 * xi0;
    const auto res = detail::run_branch(rhs, xi0 - d, detail::degenerate_front_state(prob, rhs.beta, xi0, d), xmin,
                                        opt, detail::TurnRule::flux_nonnegative, ode::NoObserver{});
    return res.end == detail::BranchEnd::reached_end;
}

/// Largest interface position (geometric scan refined by bisection) for
/// which the decreasing branch stays monotone. An under-estimate is safe.
inline double estimate_interface_limit(const Problem& prob, const ProfileOptions& opt = {}, double scan_lo = 0.05,
                                       double scan_hi = 100.0, double ratio = 1.25)
{
    auto monotone = [&](double xi0) { return decreasing_branch_monotone(prob, xi0, opt); };
    double good = -1.0, bad = -1.0;
    for (double x = scan_lo; x <= scan_hi; x *= ratio) {
        if (monotone(x)) {
            good = x;
        } else {
            bad = x;
            break;
        }
    }
    if (good < 0.0)
        throw NumericalFailure("estimate_interface_limit: no monotone branch in scan range");
    if (bad < 0.0)
        return good;
    return num::bisect_predicate(monotone, good, bad, 1e-6 * bad).first;
}

// ---------------------------------------------------------------------------
// Space-time evaluation

/// (T + t_offset - t)^{-α} f(r (T + t_offset - t)^β) for
/// t_offset <= t < t_offset + T.
struct SelfSimilarFunction {
    SelfSimilarProfile profile;
    double T = 1.0;
    double t_offset = 0.0;
};

inline double selfsimilar_eval(const SelfSimilarFunction& fn, double r, double t)
{
    if (!(t >= fn.t_offset && t < fn.t_offset + fn.T))
        throw InvalidArgument("selfsimilar_eval: t outside [t_offset, t_offset + T)");
    const auto ex = similarity_exponents(fn.profile.problem);
    const double s = fn.T + fn.t_offset - t;
    return std::pow(s, -ex.alpha) * fn.profile(std::abs(r) * std::pow(s, ex.beta));
}

/// Outer support edge of the space-time function at time t.
inline double selfsimilar_support_edge(const SelfSimilarFunction& fn, double t)
{
    if (!(t >= fn.t_offset && t < fn.t_offset + fn.T))
        throw InvalidArgument("selfsimilar_support_edge: t outside [t_offset, t_offset + T)");
    const auto ex = similarity_exponents(fn.profile.problem);
    const double edge = fn.profile.outer_interface.value_or(fn.profile.xi.back());
    return edge * std::pow(fn.T + fn.t_offset - t, -ex.beta);
}

// ---------------------------------------------------------------------------
// Combined supersolution

struct FspSupersolution {
    SelfSimilarFunction function; ///< combined profile, T = τ, t_offset = 0
    SelfSimilarProfile regular;   ///< f1
    SelfSimilarProfile decreasing; ///< f2
    double interface_limit = 0.0; ///< Ξ estimate
    double tau = 0.0;
};

struct FspOptions {
    double margin = 1.0;       ///< f1(0) = margin · sup_u
    double tau_tol = 1e-10;
    ProfileOptions profile;
    std::optional<double> interface_limit; ///< reuse a previous Ξ estimate
};

/// Combined profile min{f1, f2}: f1 origin-regular with f1(0) = a, f2
/// decreasing with interface xi0 <= first maximum of f1. The time scale τ
/// is the largest value in (0, 1] with support xi0 τ^{-β} > zeta0 and
/// τ^{-α} min(a, f2(zeta0 τ^β)) > sup_u. Times are relative: evaluate the
/// returned function at t - t0.
inline FspSupersolution build_fsp_supersolution(const Problem& prob, double sup_u, double zeta0,
                                                const FspOptions& opt = {})
{
    validate(prob);
    detail::require(sup_u > 0.0 && std::isfinite(sup_u), "build_fsp_supersolution: sup_u must be positive");
    detail::require(zeta0 > 0.0 && std::isfinite(zeta0), "build_fsp_supersolution: zeta0 must be positive");
    const auto ex = similarity_exponents(prob);
    double a = sup_u * opt.margin;
    FspSupersolution out;
    out.interface_limit = opt.interface_limit ? *opt.interface_limit : estimate_interface_limit(prob, opt.profile);
    double xi0 = 0.0;

    // N = 1: f2(0) is finite and must exceed f1(0) = a for the two profiles
    // to cross. f2(0) shrinks with xi0, so a is lowered instead and the
    // shift tau makes up the amplitude.
    for (int k = 0;; ++k) {
        out.regular = integrate_profile_from_origin(prob, a, opt.profile);
        xi0 = std::min(0.5 * out.interface_limit, *out.regular.first_max);
        out.decreasing = find_decreasing_supersolution_profile(prob, xi0, opt.profile);
        if (prob.dim != 1 || out.decreasing.f.front() > a)
            break;
        if (k > 50)
            throw NumericalFailure("build_fsp_supersolution: decreasing profile stays below f1(0)");
        a = 0.5 * out.decreasing.f.front();
    }

    // Crossing: f1 - f2 changes sign from negative to positive on (0, xi0).
    const auto& f1 = out.regular;
    const auto& f2 = out.decreasing;
    auto diff = [&](double x) { return num::interp_linear(f1.xi, f1.f, x) - num::interp_linear(f2.xi, f2.f, x); };
    const double lo = std::max(f1.xi[1], f2.xi.front());
    if (!(diff(lo) < 0.0))
        throw NumericalFailure("build_fsp_supersolution: f1 does not start below f2");
    const double cross = num::bisect_root(diff, lo, xi0, 1e-13 * xi0);

    SelfSimilarProfile comb;
    comb.problem = prob;
    comb.role = ProfileRole::combined_min;
    for (std::size_t k = 0; k < f1.xi.size() && f1.xi[k] < cross; ++k) {
        comb.xi.push_back(f1.xi[k]);
        comb.f.push_back(std::min(f1.f[k], num::interp_linear(f2.xi, f2.f, f1.xi[k])));
    }
    comb.xi.push_back(cross);
    comb.f.push_back(num::interp_linear(f2.xi, f2.f, cross));
    for (std::size_t k = 0; k < f2.xi.size(); ++k)
        if (f2.xi[k] > cross) {
            comb.xi.push_back(f2.xi[k]);
            comb.f.push_back(std::min(f2.f[k], num::interp_linear(f1.xi, f1.f, f2.xi[k])));
        }
    comb.outer_interface = xi0;
    comb.origin_value = a;
    comb.crossing = cross;
    comb.asymptote_coeff = f2.asymptote_coeff;

    auto admissible = [&](double tau) {
        const double edge = xi0 * std::pow(tau, -ex.beta);
        if (!(edge > zeta0))
            return false;
        const double inner = zeta0 * std::pow(tau, ex.beta);
        const double lowest = std::min(a, num::interp_linear(f2.xi, f2.f, inner));
        return std::pow(tau, -ex.alpha) * lowest > sup_u;
    };
    double tau;
    if (admissible(1.0)) {
        tau = 1.0;
    } else {
        double small = 0.5;
        while (!admissible(small)) {
            small *= 0.5;
            if (small < 1e-300)
                throw NumericalFailure("build_fsp_supersolution: no admissible tau");
        }
        tau = num::bisect_predicate(admissible, small, 2.0 * small, opt.tau_tol * small).first;
    }
    out.tau = tau;
    out.function.profile = std::move(comb);
    out.function.T = tau;
    out.function.t_offset = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Residual certificate

struct ProfileResidual {
    double max_abs = 0.0;  ///< max |residual| over the checked nodes
    double max_rel = 0.0;  ///< max |residual| / (sum of term magnitudes)
    double worst_xi = 0.0;     ///< location of max_abs
    double worst_rel_xi = 0.0; ///< location of max_rel
    std::size_t checked = 0;
};

/// Finite-difference residual of the profile equation at interior nodes
/// with f > f_floor. f' and (f^m)'' come from 5-point stencils on f and
/// on the stored flux; stencils never reach across an interface, the
/// origin of a singular profile, or the switch point of a combined profile.
inline ProfileResidual profile_residual(const SelfSimilarProfile& prof, double f_floor = 1e-12)
{
    const auto& P = prof.problem;
    const auto ex = similarity_exponents(P);
    const std::size_t n = prof.xi.size();
    detail::require(prof.flux.size() == n, "profile_residual: profile has no flux table");
    ProfileResidual out;
    std::size_t k = 0;
    while (k < n) {
        // Segment of consecutive positive nodes.
        while (k < n && !(prof.f[k] > f_floor))
            ++k;
        std::size_t e = k;
        while (e < n && prof.f[e] > f_floor && !(prof.crossing && e > k && prof.xi[e - 1] < *prof.crossing &&
                                                  prof.xi[e] >= *prof.crossing))
            ++e;
        if (e - k >= 5) {
            std::span<const double> xs(prof.xi.data() + k, e - k);
            std::span<const double> fs(prof.f.data() + k, e - k);
            std::span<const double> gs(prof.flux.data() + k, e - k);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double x = xs[i];
                const double fp = num::fd_derivative(xs, fs, i, 1);
                const double gp = num::fd_derivative(xs, gs, i, 1);
                const double curv = (P.dim > 1 && x > 0.0) ? (P.dim - 1) / x * gs[i] : (P.dim > 1 ? gp * (P.dim - 1) : 0.0);
                const double react = std::pow(x, P.sigma) * std::pow(fs[i], P.p);
                const double r = gp + curv - ex.alpha * fs[i] + ex.beta * x * fp + react;
                const double scale = std::abs(gp) + std::abs(curv) + ex.alpha * fs[i] + std::abs(ex.beta * x * fp) + react;
                if (std::abs(r) > out.max_abs) {
                    out.max_abs = std::abs(r);
                    out.worst_xi = x;
                }
                if (scale > 0.0 && std::abs(r) / scale > out.max_rel) {
                    out.max_rel = std::abs(r) / scale;
                    out.worst_rel_xi = x;
                }
                ++out.checked;
            }
        }
        k = e == k ? k + 1 : e;
    }
    return out;
}

} // namespace blowuplab
