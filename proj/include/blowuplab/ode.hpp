#pragma once

// Adaptive Dormand-Prince 5(4) integrator with dense output, used for all
// profile ODEs. Integrates forward or backward in the independent variable,
// stops exactly on requested abscissae and locates a terminal event g <= 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "blowuplab/error.hpp"

namespace blowuplab::ode {

template <std::size_t D>
using Vec = std::array<double, D>;

struct Options {
    double rtol = 1e-10;
    double atol = 1e-14;
    double h_initial = 0.0; ///< 0 picks a starting step automatically
    double h_max = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 5'000'000;
};

enum class Status { reached_end, event, failed };

template <std::size_t D>
struct Result {
    Status status = Status::failed;
    double x = 0.0;
    Vec<D> y{};
    std::size_t steps = 0;
    std::string message;
};

/// Never stops.
struct NoEvent {
    template <class Y>
    double operator()(double, const Y&) const noexcept { return 1.0; }
};

struct NoObserver {
    template <class Y>
    void operator()(double, const Y&, bool) const noexcept {}
};

namespace detail {

template <std::size_t D>
bool all_finite(const Vec<D>& v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

// Dormand-Prince tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

template <std::size_t D>
struct Dense {
    double x0 = 0.0, h = 0.0;
    Vec<D> r1{}, r2{}, r3{}, r4{}, r5{};

    Vec<D> operator()(double x) const
    {
        const double th = (x - x0) / h;
        const double th1 = 1.0 - th;
        Vec<D> y;
        for (std::size_t i = 0; i < D; ++i)
            y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return y;
    }
};

} // namespace detail

/// Integrates y' = rhs(x, y) from x0 towards x_end. `event(x, y)` is a scalar
/// that triggers termination when it becomes <= 0; the crossing is located on
/// the dense output. `observe(x, y, at_stop)` sees every accepted step, and
/// `stops` (monotone in the direction of integration) are hit exactly.
template <std::size_t D, class Rhs, class Event = NoEvent, class Observer = NoObserver>
Result<D> integrate(Rhs&& rhs, double x0, Vec<D> y0, double x_end, const Options& opt = {}, Event&& event = {},
                    Observer&& observe = {}, std::span<const double> stops = {})
{
    using namespace detail;
    Result<D> res;
    const double dir = x_end >= x0 ? 1.0 : -1.0;
    const double span = std::abs(x_end - x0);
    double x = x0;
    Vec<D> y = y0;
    res.x = x;
    res.y = y;
    if (span == 0.0) {
        res.status = Status::reached_end;
        return res;
    }
    if (event(x, y) <= 0.0) {
        res.status = Status::event;
        return res;
    }

    auto norm = [&](const Vec<D>& err, const Vec<D>& ya, const Vec<D>& yb) {
        double s = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            s += (err[i] / sc) * (err[i] / sc);
        }
        return std::sqrt(s / static_cast<double>(D));
    };

    Vec<D> k1 = rhs(x, y);
    if (!all_finite(k1)) {
        res.message = "non-finite derivative at start";
        return res;
    }
    double h = opt.h_initial;
    if (h <= 0.0) {
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double sc = opt.atol + opt.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / D);
        d1n = std::sqrt(d1n / D);
        h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h = std::min({h, 1e-3 * span, opt.h_max});
        h = std::max(h, 256.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)));
    }
    std::size_t next_stop = 0;
    while (next_stop < stops.size() && dir * (stops[next_stop] - x) <= 0.0)
        ++next_stop;

    Vec<D> k2, k3, k4, k5, k6, k7, yt, ynew;
    while (true) {
        if (res.steps >= opt.max_steps) {
            res.message = "step budget exhausted";
            res.status = Status::failed;
            return res;
        }
        double target = x_end;
        bool hits_stop = false;
        if (next_stop < stops.size() && dir * (stops[next_stop] - x_end) < 0.0) {
            target = stops[next_stop];
            hits_stop = true;
        }
        const double remaining = std::abs(target - x);
        const double h_natural = h;
        bool lands = false;
        if (h >= remaining) {
            h = remaining;
            lands = true;
        }
        h = std::min(h, opt.h_max);
        const double hmin = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
        if (h < hmin && !lands) {
            res.message = "step size underflow";
            res.status = Status::failed;
            return res;
        }
        const double hs = dir * h;

        auto stage = [&](auto&& combo) {
            for (std::size_t i = 0; i < D; ++i)
                yt[i] = y[i] + hs * combo(i);
        };
        stage([&](std::size_t i) { return a21 * k1[i]; });
        k2 = rhs(x + c2 * hs, yt);
        stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; });
        k3 = rhs(x + c3 * hs, yt);
        stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; });
        k4 = rhs(x + c4 * hs, yt);
        stage([&](std::size_t i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; });
        k5 = rhs(x + c5 * hs, yt);
        stage([&](std::size_t i) { return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]; });
        k6 = rhs(x + hs, yt);
        for (std::size_t i = 0; i < D; ++i)
            ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        const double xnew = lands ? target : x + hs;
        k7 = rhs(xnew, ynew);

        bool finite = all_finite(k2) && all_finite(k3) && all_finite(k4) && all_finite(k5) && all_finite(k6) &&
                      all_finite(ynew) && all_finite(k7);
        double err = std::numeric_limits<double>::infinity();
        if (finite) {
            Vec<D> e;
            for (std::size_t i = 0; i < D; ++i)
                e[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            err = norm(e, y, ynew);
        }
        ++res.steps;
        if (!finite || !(err <= 1.0)) {
            const double fac = finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
            h *= fac;
            continue;
        }

        const double g_new = event(xnew, ynew);
        if (g_new <= 0.0) {
            Dense<D> dense;
            dense.x0 = x;
            dense.h = hs;
            for (std::size_t i = 0; i < D; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = hs * k1[i] - ydiff;
                dense.r1[i] = y[i];
                dense.r2[i] = ydiff;
                dense.r3[i] = bspl;
                dense.r4[i] = ydiff - hs * k7[i] - bspl;
                dense.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            double lo = x, hi = xnew;
            for (int it = 0; it < 100 && std::abs(hi - lo) > 4.0 * std::numeric_limits<double>::epsilon() *
                                                                   std::max(1.0, std::abs(hi));
                 ++it) {
                const double mid = 0.5 * (lo + hi);
                const Vec<D> ym = dense(mid);
                if (all_finite(ym) && event(mid, ym) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            res.x = hi;
            res.y = hi == xnew ? ynew : dense(hi);
            res.status = Status::event;
            return res;
        }

        x = xnew;
        y = ynew;
        k1 = k7;
        const bool at_stop = lands && hits_stop;
        observe(x, y, at_stop);
        if (at_stop)
            ++next_stop;
        res.x = x;
        res.y = y;
        if (lands && !hits_stop) {
            res.status = Status::reached_end;
            return res;
        }
        const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        h = lands ? std::max(h_natural, h * fac) : h * fac;
    }
}

} // namespace blowuplab::ode
