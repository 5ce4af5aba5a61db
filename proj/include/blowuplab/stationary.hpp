#pragma once

// Radial stationary profiles of the Dirichlet problem
//
//   (W^m)'' + (N-1)/r (W^m)' + r^σ W^p = 0,   W(0) = D^{1/(m-p)},
//
// their rescaling W_R(r) = R^{(σ+2)/(m-p)} W_1(r/R), and the autonomous
// system obtained from Y = r W'/W, Z = r^{σ+2} W^{p-m} / m, η = ln r:
//
//   dY/dη = -(N-2) Y - m Y^2 - Z,   dZ/dη = Z (σ + 2 - (m-p) Y).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blowuplab/core.hpp"
#include "blowuplab/error.hpp"
#include "blowuplab/numerics.hpp"
#include "blowuplab/ode.hpp"

namespace blowuplab {

struct StationaryProfile {
    Problem problem;
    double D = 0.0;          ///< W(0)^{m-p}
    std::vector<double> r;   ///< from 0 to first_zero
    std::vector<double> W;
    std::vector<double> flux; ///< (W^m)'
    double first_zero = 0.0;

    double origin_value() const { return W.empty() ? 0.0 : W.front(); }

    /// Linear interpolation, 0 beyond the first zero.
    double operator()(double x) const
    {
        if (r.empty() || x >= first_zero)
            return 0.0;
        return num::interp_linear(r, W, std::max(x, 0.0));
    }
};

struct StationaryOptions {
    double rtol = 1e-12;
    double atol = 1e-18;
    double w_floor = 1e-12;
    double series_tol = 1e-7; ///< relative size of the series correction at the start radius
    double r_cap = 1e6;
    std::size_t table_nodes = 4000;
    double grading = 2.5; ///< nodes r = R0 (1 - (1-s)^grading) cluster at the zero
};

/// Coefficient k of the series W^{m-p} = D - k r^{σ+2}.
inline double stationary_series_coeff(const Problem& prob)
{
    return (prob.m - prob.p) / (prob.m * (prob.dim + prob.sigma) * (prob.sigma + 2.0));
}

namespace detail {

struct StationaryOde {
    double m, p, sigma;
    int dim;

    ode::Vec<2> operator()(double r, const ode::Vec<2>& y) const
    {
        const double F = std::max(y[0], 0.0);
        const double react = std::pow(r, sigma) * std::pow(F, p / m);
        return {y[1], -(dim - 1) / r * y[1] - react};
    }
};

inline ode::Vec<2> stationary_series_state(const Problem& P, double D, double r)
{
    const double w0 = std::pow(D, 1.0 / (P.m - P.p));
    const double wp = std::pow(w0, P.p);
    const double s = P.sigma + 2.0;
    return {std::pow(w0, P.m) - wp * std::pow(r, s) / ((P.dim + P.sigma) * s),
            -wp * std::pow(r, s - 1.0) / (P.dim + P.sigma)};
}

} // namespace detail

/// Integrates the stationary equation outward from the series start until
/// W^m changes sign; the zero is located on the integrator's dense output.
inline StationaryProfile integrate_stationary_profile(const Problem& prob, double D, const StationaryOptions& opt = {})
{
    require_superlinear(prob, "integrate_stationary_profile");
    detail::require(D > 0.0 && std::isfinite(D), "integrate_stationary_profile: D must be positive");
    detail::require(opt.table_nodes >= 16, "integrate_stationary_profile: need at least 16 table nodes");
    const detail::StationaryOde rhs{prob.m, prob.p, prob.sigma, prob.dim};
    const double k = stationary_series_coeff(prob);
    const double r0 = std::pow(opt.series_tol * D / k, 1.0 / (prob.sigma + 2.0));
    const auto y0 = detail::stationary_series_state(prob, D, r0);

    ode::Options oo;
    oo.rtol = opt.rtol;
    oo.atol = opt.atol;
    auto sign_event = [](double, const ode::Vec<2>& y) { return y[0]; };
    const auto probe = ode::integrate<2>(rhs, r0, y0, opt.r_cap, oo, sign_event);
    if (probe.status == ode::Status::failed)
        throw NumericalFailure("integrate_stationary_profile: " + probe.message);
    if (probe.status != ode::Status::event)
        throw NumericalFailure("integrate_stationary_profile: no zero before r_cap = " + std::to_string(opt.r_cap));
    const double R0 = probe.x;

    StationaryProfile out;
    out.problem = prob;
    out.D = D;
    out.first_zero = R0;
    std::vector<double> nodes;
    const auto n = opt.table_nodes;
    for (std::size_t j = 0; j <= n; ++j) {
        const double s = static_cast<double>(j) / static_cast<double>(n);
        nodes.push_back(j == n ? R0 : R0 * (1.0 - std::pow(1.0 - s, opt.grading)));
    }
    // Nodes up to the midpoint of s come from the forward run; the rest from
    // a backward run started at the located zero, where W^m is small and
    // keeps full relative precision.
    const double split = nodes[n / 2];
    std::vector<double> fwd_stops, bwd_stops;
    for (double x : nodes) {
        if (x > r0 && x < split)
            fwd_stops.push_back(x);
        else if (x > split && x < R0)
            bwd_stops.push_back(x);
    }
    std::reverse(bwd_stops.begin(), bwd_stops.end());

    std::vector<double> sx;
    std::vector<ode::Vec<2>> sy;
    auto record = [&](double x, const ode::Vec<2>& y, bool at_stop) {
        if (at_stop) {
            sx.push_back(x);
            sy.push_back(y);
        }
    };
    const auto fwd = ode::integrate<2>(rhs, r0, y0, split, oo, ode::NoEvent{}, record, fwd_stops);
    if (fwd.status == ode::Status::failed)
        throw NumericalFailure("integrate_stationary_profile: " + fwd.message);
    sx.push_back(split);
    sy.push_back(fwd.y);
    ode::Options ob = oo;
    ob.atol = 1e-300;
    ob.h_initial = 0.5 * (nodes[n] - nodes[n - 1]);

    // The backward start (zero, flux) is corrected by Newton steps so that
    // both runs agree at the split; otherwise their tolerance-level mismatch
    // shows up in difference quotients across the split.
    auto backward_at_split = [&](double R, double G) {
        const auto b = ode::integrate<2>(rhs, R, ode::Vec<2>{0.0, G}, split, ob);
        if (b.status == ode::Status::failed)
            throw NumericalFailure("integrate_stationary_profile: " + b.message);
        return b.y;
    };
    double Rz = R0, Gz = probe.y[1];
    for (int it = 0; it < 8; ++it) {
        const auto b = backward_at_split(Rz, Gz);
        const double e0 = b[0] - fwd.y[0], e1 = b[1] - fwd.y[1];
        if (std::abs(e0) <= 1e-15 * std::abs(fwd.y[0]) && std::abs(e1) <= 1e-15 * std::abs(fwd.y[1]))
            break;
        const double dR = 1e-7 * (Rz - split), dG = 1e-7 * std::abs(Gz);
        const auto bR = backward_at_split(Rz + dR, Gz);
        const auto bG = backward_at_split(Rz, Gz + dG);
        const double j00 = (bR[0] - b[0]) / dR, j10 = (bR[1] - b[1]) / dR;
        const double j01 = (bG[0] - b[0]) / dG, j11 = (bG[1] - b[1]) / dG;
        const double det = j00 * j11 - j01 * j10;
        if (!(std::abs(det) > 0.0))
            break;
        Rz -= (e0 * j11 - e1 * j01) / det;
        Gz -= (j00 * e1 - j10 * e0) / det;
    }
    out.first_zero = Rz;
    for (auto& x : bwd_stops)
        x = std::min(x, Rz);
    nodes.back() = Rz;
    const auto bwd = ode::integrate<2>(rhs, Rz, ode::Vec<2>{0.0, Gz}, split, ob, ode::NoEvent{}, record, bwd_stops);
    if (bwd.status == ode::Status::failed)
        throw NumericalFailure("integrate_stationary_profile: " + bwd.message);

    auto w_of = [&](double F) { return std::pow(std::max(F, 0.0), 1.0 / prob.m); };
    std::vector<std::size_t> order(sx.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sx[a] < sx[b]; });
    std::size_t next = 0;
    auto lookup = [&](double x) -> const ode::Vec<2>& {
        while (next < order.size() && sx[order[next]] < x)
            ++next;
        if (next >= order.size() || sx[order[next]] != x)
            throw NumericalFailure("integrate_stationary_profile: missing table node");
        return sy[order[next]];
    };
    for (double x : nodes) {
        if (x >= Rz) {
            out.r.push_back(Rz);
            out.W.push_back(0.0);
            out.flux.push_back(Gz);
        } else if (x <= r0) {
            const auto y = x > 0.0 ? detail::stationary_series_state(prob, D, x)
                                   : ode::Vec<2>{std::pow(D, prob.m / (prob.m - prob.p)), 0.0};
            out.r.push_back(x);
            out.W.push_back(w_of(y[0]));
            out.flux.push_back(y[1]);
        } else {
            const auto& y = lookup(x);
            out.r.push_back(x);
            const double w = w_of(y[0]);
            out.W.push_back(w > opt.w_floor ? w : 0.0);
            out.flux.push_back(y[1]);
        }
    }
    return out;
}

/// Rescaled profile R^{(σ+2)/(m-p)} W(r/R); the first zero moves to R·R0.
inline StationaryProfile rescale_stationary(const StationaryProfile& base, double R)
{
    detail::require(R > 0.0 && std::isfinite(R), "rescale_stationary: R must be positive");
    const auto& P = base.problem;
    const double amp = std::pow(R, (P.sigma + 2.0) / (P.m - P.p));
    const double flux_amp = std::pow(amp, P.m) / R;
    StationaryProfile out;
    out.problem = P;
    out.D = base.D * std::pow(R, P.sigma + 2.0);
    out.first_zero = R * base.first_zero;
    out.r.reserve(base.r.size());
    for (std::size_t i = 0; i < base.r.size(); ++i) {
        out.r.push_back(R * base.r[i]);
        out.W.push_back(amp * base.W[i]);
        out.flux.push_back(flux_amp * base.flux[i]);
    }
    if (!out.r.empty())
        out.r.back() = out.first_zero;
    return out;
}

/// Stationary profile with first zero at 1. Since R0 scales like
/// D^{1/(σ+2)}, the D = 1 profile predicts D_1 = R0(1)^{-(σ+2)}; a few
/// secant steps on ln R0 absorb integration error.
inline StationaryProfile unit_stationary_profile(const Problem& prob, const StationaryOptions& opt = {},
                                                 double tol = 1e-12)
{
    auto base = integrate_stationary_profile(prob, 1.0, opt);
    const double s = prob.sigma + 2.0;
    double D = std::pow(base.first_zero, -s);
    auto prof = integrate_stationary_profile(prob, D, opt);
    for (int it = 0; it < 20 && std::abs(prof.first_zero - 1.0) > tol; ++it) {
        D *= std::pow(prof.first_zero, -s);
        prof = integrate_stationary_profile(prob, D, opt);
    }
    if (std::abs(prof.first_zero - 1.0) > 1e3 * tol)
        throw NumericalFailure("unit_stationary_profile: first zero did not converge to 1");
    return prof;
}

/// Smallest R on the ladder R0_data·ratio^k (k >= 1) with W_R >= sup_u0 on
/// [0, R0_data]. W_R is nonincreasing, so the check reduces to r = R0_data,
/// but every table node below R0_data is checked as well.
inline StationaryProfile majorizing_stationary(const StationaryProfile& unit, double sup_u0, double R0_data,
                                               double ratio = 1.01)
{
    detail::require(sup_u0 > 0.0 && std::isfinite(sup_u0), "majorizing_stationary: sup_u0 must be positive");
    detail::require(R0_data > 0.0 && std::isfinite(R0_data), "majorizing_stationary: R0_data must be positive");
    detail::require(ratio > 1.0, "majorizing_stationary: ratio must exceed 1");
    detail::require(unit.first_zero > 0.0, "majorizing_stationary: unit profile has no zero");
    const auto& P = unit.problem;
    const double e = (P.sigma + 2.0) / (P.m - P.p);
    auto dominates = [&](double R) {
        if (!(R * unit.first_zero > R0_data))
            return false;
        const double amp = std::pow(R, e);
        if (amp * unit(R0_data / R) < sup_u0)
            return false;
        for (std::size_t i = 0; i < unit.r.size() && R * unit.r[i] <= R0_data; ++i)
            if (amp * unit.W[i] < sup_u0)
                return false;
        return true;
    };
    double R = R0_data / unit.first_zero;
    for (int k = 0; k < 100000; ++k) {
        R *= ratio;
        if (dominates(R))
            return rescale_stationary(unit, R);
    }
    throw NumericalFailure("majorizing_stationary: scan exhausted");
}

/// Finite-difference residual of the stationary equation on the table:
/// (W^m)'' and (W^m)' from 5-point stencils on W^m. `normalized` divides by
/// the largest term magnitude max(|(N-1)/r (W^m)'| + r^σ W^p) over the
/// table, which makes it invariant under rescaling. Nodes with
/// W <= w_floor, the origin, and nodes closer than 1e-5 r to a neighbour
/// (where rounding of r itself dominates the second difference) are skipped.
struct StationaryResidual {
    double max_abs = 0.0;
    double normalized = 0.0;
    double worst_r = 0.0;
    std::size_t checked = 0;
};

inline StationaryResidual stationary_residual(const StationaryProfile& prof, double w_floor = 1e-12)
{
    const auto& P = prof.problem;
    const std::size_t n = prof.r.size();
    std::vector<double> F(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        F[i] = std::pow(prof.W[i], P.m);
        const double curv = prof.r[i] > 0.0 ? std::abs((P.dim - 1) / prof.r[i] * prof.flux[i]) : 0.0;
        scale = std::max(scale, curv + std::pow(prof.r[i], P.sigma) * std::pow(prof.W[i], P.p));
    }
    StationaryResidual out;
    for (std::size_t i = 1; i < n; ++i) {
        if (!(prof.W[i] > w_floor))
            continue;
        const double x = prof.r[i];
        const double gap = std::min(x - prof.r[i - 1], i + 1 < n ? prof.r[i + 1] - x : x - prof.r[i - 1]);
        if (gap < 1e-5 * x)
            continue;
        const double d1 = num::fd_derivative(prof.r, F, i, 1);
        const double d2 = num::fd_derivative(prof.r, F, i, 2);
        const double res = d2 + (P.dim - 1) / x * d1 + std::pow(x, P.sigma) * std::pow(prof.W[i], P.p);
        if (std::abs(res) > out.max_abs) {
            out.max_abs = std::abs(res);
            out.worst_r = x;
        }
        ++out.checked;
    }
    out.normalized = scale > 0.0 ? out.max_abs / scale : out.max_abs;
    return out;
}

// ---------------------------------------------------------------------------
// Phase plane

enum class PointKind { saddle, unstable_node, stable_node, degenerate };

inline std::string_view to_string(PointKind k)
{
    switch (k) {
    case PointKind::saddle: return "saddle";
    case PointKind::unstable_node: return "unstable_node";
    case PointKind::stable_node: return "stable_node";
    case PointKind::degenerate: return "degenerate";
    }
    return "?";
}

struct CriticalPoint {
    std::string name;
    double Y = 0.0;
    double Z = 0.0;
    double eig1 = 0.0; ///< along the Y axis
    double eig2 = 0.0; ///< transverse
    PointKind kind = PointKind::degenerate;
};

inline ode::Vec<2> phase_rhs(const Problem& P, double Y, double Z)
{
    return {-(P.dim - 2) * Y - P.m * Y * Y - Z, Z * (P.sigma + 2.0 - (P.m - P.p) * Y)};
}

inline PointKind classify(double e1, double e2)
{
    if (e1 == 0.0 || e2 == 0.0)
        return PointKind::degenerate;
    if ((e1 > 0.0) != (e2 > 0.0))
        return PointKind::saddle;
    return e1 > 0.0 ? PointKind::unstable_node : PointKind::stable_node;
}

/// P0 = (0,0) and P1 = (-(N-2)/m, 0). The Jacobian on Z = 0 is upper
/// triangular, so its eigenvalues are the diagonal entries.
inline std::vector<CriticalPoint> phase_critical_points(const Problem& prob)
{
    validate(prob);
    const double n2 = prob.dim - 2.0;
    std::vector<CriticalPoint> out;
    for (const double Y : {0.0, -n2 / prob.m}) {
        CriticalPoint c;
        c.name = out.empty() ? "P0" : "P1";
        c.Y = Y;
        c.eig1 = -n2 - 2.0 * prob.m * Y;
        c.eig2 = prob.sigma + 2.0 - (prob.m - prob.p) * Y;
        c.kind = classify(c.eig1, c.eig2);
        out.push_back(c);
    }
    return out;
}

struct PhaseOrbit {
    Problem problem;
    std::vector<double> eta;
    std::vector<double> Y;
    std::vector<double> Z;
};

struct PhaseOptions {
    double z0 = 1e-6;
    double z_cap = 1e6;
    double rtol = 1e-11;
    double atol = 1e-20;
};

/// Lower boundary of the region {Y < 0, Z > -(N-2)Y - mY^2}.
inline double isocline(const Problem& P, double Y)
{
    return -(P.dim - 2) * Y - P.m * Y * Y;
}

inline bool in_region(const Problem& P, double Y, double Z)
{
    return Y < 0.0 && Z > isocline(P, Y);
}

/// Orbit leaving P0 along Y = -Z/(N+σ), integrated until Z >= z_cap.
/// In η the orbit reaches Z = ∞ at a finite η, so the integration runs in
/// s = ln Z, which is monotone along the orbit because dZ/dη > (σ+2) Z
/// while Y < 0, with state (η, ln(-Y)). Y cannot reach 0 from below since
/// dY/dη = -Z there. Every accepted step is recorded and must lie above
/// the isocline Z = -(N-2)Y - mY^2.
inline PhaseOrbit phase_orbit_from_origin(const Problem& prob, const PhaseOptions& opt = {})
{
    require_superlinear(prob, "phase_orbit_from_origin");
    detail::require(opt.z0 > 0.0 && opt.z_cap > opt.z0, "phase_orbit_from_origin: need 0 < z0 < z_cap");
    PhaseOrbit out;
    out.problem = prob;
    const double y_start = -opt.z0 / (prob.dim + prob.sigma);
    auto rhs = [&](double s, const ode::Vec<2>& y) {
        const double Z = std::exp(s), Y = -std::exp(y[1]);
        const auto f = phase_rhs(prob, Y, Z);
        const double ds = f[1] / Z;
        return ode::Vec<2>{1.0 / ds, f[0] / (Y * ds)};
    };
    bool left = false;
    auto record = [&](double s, const ode::Vec<2>& y, bool) {
        const double Z = std::exp(s), Y = -std::exp(y[1]);
        if (!in_region(prob, Y, Z))
            left = true;
        out.eta.push_back(y[0]);
        out.Y.push_back(Y);
        out.Z.push_back(Z);
    };
    out.eta.push_back(0.0);
    out.Y.push_back(y_start);
    out.Z.push_back(opt.z0);
    ode::Options oo;
    oo.rtol = opt.rtol;
    oo.atol = opt.atol;
    oo.h_max = 0.05;
    const auto res = ode::integrate<2>(rhs, std::log(opt.z0), ode::Vec<2>{0.0, std::log(-y_start)}, std::log(opt.z_cap),
                                       oo, ode::NoEvent{}, record);
    if (res.status != ode::Status::reached_end)
        throw NumericalFailure("phase_orbit_from_origin: Z did not reach z_cap (" + res.message + ")");
    if (left)
        throw NumericalFailure("phase_orbit_from_origin: orbit left the region Y < 0, Z > -(N-2)Y - mY^2");
    return out;
}

struct OrbitFit {
    double slope = 0.0;          ///< fitted d ln(-Y) / d ln Z
    double expected_slope = 0.0; ///< m/(m-p)
    double K = 0.0;              ///< Y ~ -K Z^slope
    double theta = 0.0;          ///< m(σ+2)/(m-p)
    std::size_t samples = 0;
};

/// Least-squares fit of ln(-Y) against ln Z over the final decade of Z.
inline OrbitFit check_orbit_asymptotics(const PhaseOrbit& orbit)
{
    const auto& P = orbit.problem;
    detail::require(!orbit.Z.empty(), "check_orbit_asymptotics: empty orbit");
    const double zmax = orbit.Z.back();
    if (!(zmax >= 1e3))
        throw NumericalFailure("check_orbit_asymptotics: orbit must reach Z >= 1e3");
    std::vector<double> lz, ly;
    for (std::size_t i = 0; i < orbit.Z.size(); ++i)
        if (orbit.Z[i] >= 0.1 * zmax && orbit.Y[i] < 0.0) {
            lz.push_back(std::log(orbit.Z[i]));
            ly.push_back(std::log(-orbit.Y[i]));
        }
    if (lz.size() < 5)
        throw NumericalFailure("check_orbit_asymptotics: fewer than 5 samples in the final decade");
    const auto fit = num::fit_line(lz, ly);
    OrbitFit out;
    out.slope = fit.slope;
    out.expected_slope = P.m / (P.m - P.p);
    out.K = std::exp(fit.intercept);
    out.theta = P.m * (P.sigma + 2.0) / (P.m - P.p);
    out.samples = fit.samples;
    return out;
}

/// Stationary profile mapped to (η, Y, Z) at table nodes with r > 0 and
/// W > w_floor. Y uses the stored flux: W' = (W^m)' / (m W^{m-1}).
inline PhaseOrbit stationary_to_phase(const StationaryProfile& prof, double w_floor = 1e-12)
{
    const auto& P = prof.problem;
    PhaseOrbit out;
    out.problem = P;
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
        const double r = prof.r[i], w = prof.W[i];
        if (!(r > 0.0) || !(w > w_floor))
            continue;
        out.eta.push_back(std::log(r));
        out.Y.push_back(r * prof.flux[i] / (P.m * std::pow(w, P.m)));
        out.Z.push_back(std::pow(r, P.sigma + 2.0) * std::pow(w, P.p - P.m) / P.m);
    }
    return out;
}

struct PhaseResidual {
    double max_rel = 0.0; ///< max over samples and components of |d/dη - rhs| / (1 + sum of term magnitudes)
    double worst_eta = 0.0;
    std::size_t checked = 0;
};

/// Residual of the phase system along a tabulated curve, with η-derivatives
/// from 5-point stencils. Samples whose stencil sees Y or Z change by more
/// than `max_variation` relative to the centre value are not resolved by
/// the table and are skipped.
inline PhaseResidual phase_residual(const PhaseOrbit& orbit, double max_variation = 0.05)
{
    const auto& P = orbit.problem;
    PhaseResidual out;
    const std::size_t n = orbit.eta.size();
    if (n < 5)
        return out;
    for (std::size_t i = 0; i < n; ++i) {
        const double Y = orbit.Y[i], Z = orbit.Z[i];
        const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, n - 5);
        bool resolved = true;
        for (std::size_t j = lo; j < lo + 5; ++j)
            if (std::abs(orbit.Y[j] - Y) > max_variation * std::abs(Y) ||
                std::abs(orbit.Z[j] - Z) > max_variation * std::abs(Z))
                resolved = false;
        if (!resolved)
            continue;
        const double dY = num::fd_derivative(orbit.eta, orbit.Y, i, 1);
        const double dZ = num::fd_derivative(orbit.eta, orbit.Z, i, 1);
        const auto f = phase_rhs(P, Y, Z);
        const double sy = 1.0 + std::abs((P.dim - 2) * Y) + P.m * Y * Y + Z;
        const double sz = 1.0 + Z * (P.sigma + 2.0 + std::abs((P.m - P.p) * Y));
        const double rel = std::max(std::abs(dY - f[0]) / sy, std::abs(dZ - f[1]) / sz);
        if (rel > out.max_rel) {
            out.max_rel = rel;
            out.worst_eta = orbit.eta[i];
        }
        ++out.checked;
    }
    return out;
}

} // namespace blowuplab
