#pragma once

// Small numerical helpers shared by the solver and the profile modules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "blowuplab/error.hpp"

namespace blowuplab::num {

/// x^e for x >= 0 with fast paths for the small integer and half-integer
/// exponents that dominate the explicit solver's inner loop.
class Power {
public:
    Power() = default;
    explicit Power(double exponent) : e_(exponent)
    {
        if (e_ == 0.0)
            kind_ = Kind::zero;
        else if (e_ == 0.5)
            kind_ = Kind::half;
        else if (e_ == 1.0)
            kind_ = Kind::one;
        else if (e_ == 1.5)
            kind_ = Kind::three_halves;
        else if (e_ == 2.0)
            kind_ = Kind::two;
        else if (e_ == 3.0)
            kind_ = Kind::three;
        else
            kind_ = Kind::general;
    }

    double exponent() const noexcept { return e_; }

    double operator()(double x) const noexcept
    {
        switch (kind_) {
        case Kind::zero: return 1.0;
        case Kind::half: return std::sqrt(x);
        case Kind::one: return x;
        case Kind::three_halves: return x * std::sqrt(x);
        case Kind::two: return x * x;
        case Kind::three: return x * x * x;
        case Kind::general: break;
        }
        return x > 0.0 ? std::pow(x, e_) : (e_ > 0.0 ? 0.0 : std::pow(x, e_));
    }

private:
    enum class Kind { zero, half, one, three_halves, two, three, general };
    double e_ = 1.0;
    Kind kind_ = Kind::one;
};

/// Piecewise-linear interpolation on an increasing abscissa. Outside the
/// table the boundary value is returned.
inline double interp_linear(std::span<const double> xs, std::span<const double> ys, double x)
{
    if (xs.empty())
        return 0.0;
    if (x <= xs.front())
        return ys.front();
    if (x >= xs.back())
        return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double x0 = xs[i - 1], x1 = xs[i];
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * ys[i - 1] + w * ys[i];
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    std::size_t samples = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        throw NumericalFailure("fit_line: need at least two paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw NumericalFailure("fit_line: degenerate abscissa");
    const double slope = sxy / sxx;
    return {my - slope * mx, slope, n};
}

/// Finite-difference weights for derivatives 0..max_order at z on arbitrary
/// nodes (Fornberg's recursion). weights[k][j] multiplies f(nodes[j]) in the
/// k-th derivative.
inline std::vector<std::vector<double>> fd_weights(double z, std::span<const double> nodes, int max_order)
{
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<double>> c(static_cast<std::size_t>(max_order + 1),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, max_order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[static_cast<std::size_t>(i)] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

/// Derivative of the given order at node i of a tabulated function, using a
/// stencil of `width` neighbouring nodes (shifted inward at the ends).
inline double fd_derivative(std::span<const double> xs, std::span<const double> ys, std::size_t i,
                            int order, std::size_t width = 5)
{
    const std::size_t n = xs.size();
    width = std::min(width, n);
    std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
    if (lo + width > n)
        lo = n - width;
    const auto w = fd_weights(xs[i], xs.subspan(lo, width), order);
    double d = 0.0;
    for (std::size_t j = 0; j < width; ++j)
        d += w[static_cast<std::size_t>(order)][j] * ys[lo + j];
    return d;
}

/// Bisection on a predicate that is true at `good` and false at `bad`.
/// Returns the final (good, bad) pair, |good - bad| <= tol.
template <class Pred>
std::pair<double, double> bisect_predicate(Pred&& pred, double good, double bad, double tol, int max_iter = 200)
{
    for (int it = 0; it < max_iter && std::abs(good - bad) > tol; ++it) {
        const double mid = 0.5 * (good + bad);
        if (pred(mid))
            good = mid;
        else
            bad = mid;
    }
    return {good, bad};
}

/// Root of a continuous scalar function bracketed by [a, b] (sign change).
template <class F>
double bisect_root(F&& f, double a, double b, double tol, int max_iter = 200)
{
    double fa = f(a);
    const double fb = f(b);
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw NumericalFailure("bisect_root: no sign change in bracket");
    for (int it = 0; it < max_iter && std::abs(b - a) > tol; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if (fm == 0.0)
            return mid;
        if ((fm > 0.0) == (fa > 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

} // namespace blowuplab::num
