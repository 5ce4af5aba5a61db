#pragma once

// Problem parameters for u_t = Δu^m + |x|^σ u^p, the similarity exponents
// derived from them, initial data descriptions, and closed-form bounds.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blowuplab/error.hpp"
#include "blowuplab/numerics.hpp"

namespace blowuplab {

/// Exponent quadruple (m, p, σ, N). Valid problems have m > 1, σ > 0,
/// N >= 1 and 1 <= p < m.
struct Problem {
    double m = 2.0;
    double p = 1.5;
    double sigma = 1.0;
    int dim = 1;

    friend bool operator==(const Problem&, const Problem&) = default;
};

inline void validate(const Problem& prob)
{
    detail::require(prob.m > 1.0, "problem: m must exceed 1");
    detail::require(prob.sigma > 0.0, "problem: sigma must be positive");
    detail::require(prob.dim >= 1, "problem: dim must be at least 1");
    detail::require(prob.p >= 1.0 && prob.p < prob.m, "problem: p must satisfy 1 <= p < m");
}

/// Throws unless p > 1; for operations whose formulas involve σ/(p-1).
inline void require_superlinear(const Problem& prob, std::string_view op)
{
    validate(prob);
    detail::require(prob.p > 1.0, std::string(op) + ": requires p > 1");
}

struct SimilarityExponents {
    double alpha = 0.0;
    double beta = 0.0;
    double bigL = 0.0;
};

/// α = (σ+2)/L, β = (m-p)/L with L = σ(m-1) + 2(p-1). The p = 1 endpoint is
/// accepted (L = σ(m-1)).
inline SimilarityExponents similarity_exponents(const Problem& prob)
{
    validate(prob);
    const double L = prob.sigma * (prob.m - 1.0) + 2.0 * (prob.p - 1.0);
    return {(prob.sigma + 2.0) / L, (prob.m - prob.p) / L, L};
}

inline double fujita_exponent(double m, double sigma, int dim)
{
    detail::require(m > 1.0 && sigma > 0.0 && dim >= 1, "fujita_exponent: need m > 1, sigma > 0, dim >= 1");
    return m + (sigma + 2.0) / static_cast<double>(dim);
}

/// Latest admissible existence time for data whose tail coefficient
/// liminf |x|^{σ/(p-1)} u0 equals `tail_liminf`: tail_liminf^{-p} / (p-1).
inline double nonexistence_time_bound(double tail_liminf, double p)
{
    detail::require(p > 1.0, "nonexistence_time_bound: requires p > 1");
    detail::require(tail_liminf > 0.0, "nonexistence_time_bound: tail_liminf must be positive");
    return std::pow(tail_liminf, -p) / (p - 1.0);
}

/// Scale-invariant variant tail_liminf^{1-p} / (p-1): the blow-up time of the
/// pointwise reaction ODE started on the threshold tail. Reported next to the
/// bound above by the threshold scenario.
inline double tail_ode_blowup_time(double tail_liminf, double p)
{
    detail::require(p > 1.0, "tail_ode_blowup_time: requires p > 1");
    detail::require(tail_liminf > 0.0, "tail_ode_blowup_time: tail_liminf must be positive");
    return std::pow(tail_liminf, 1.0 - p) / (p - 1.0);
}

/// Radial initial data.
enum class DataKind { compact_bump, threshold_tail, table };

struct InitialDataSpec {
    DataKind kind = DataKind::compact_bump;
    double amplitude = 1.0;  ///< compact_bump height
    double radius = 1.0;     ///< compact_bump support radius
    double tail_coeff = 1.0; ///< threshold_tail coefficient c in c (1+r)^{-σ/(p-1)}
    std::vector<std::pair<double, double>> table; ///< (r, value), r increasing

    static InitialDataSpec bump(double amplitude, double radius)
    {
        InitialDataSpec s;
        s.kind = DataKind::compact_bump;
        s.amplitude = amplitude;
        s.radius = radius;
        return s;
    }
    static InitialDataSpec threshold_tail(double c)
    {
        InitialDataSpec s;
        s.kind = DataKind::threshold_tail;
        s.tail_coeff = c;
        return s;
    }
    static InitialDataSpec from_table(std::vector<std::pair<double, double>> rows)
    {
        InitialDataSpec s;
        s.kind = DataKind::table;
        s.table = std::move(rows);
        return s;
    }

    bool compactly_supported() const { return kind != DataKind::threshold_tail || tail_coeff == 0.0; }

    friend bool operator==(const InitialDataSpec&, const InitialDataSpec&) = default;
};

inline std::string_view to_string(DataKind k)
{
    switch (k) {
    case DataKind::compact_bump: return "compact_bump";
    case DataKind::threshold_tail: return "threshold_tail";
    case DataKind::table: return "table";
    }
    return "?";
}

inline std::optional<DataKind> parse_data_kind(std::string_view s)
{
    if (s == "compact_bump")
        return DataKind::compact_bump;
    if (s == "threshold_tail")
        return DataKind::threshold_tail;
    if (s == "table")
        return DataKind::table;
    return std::nullopt;
}

inline void validate(const InitialDataSpec& spec)
{
    switch (spec.kind) {
    case DataKind::compact_bump:
        detail::require(spec.amplitude >= 0.0, "initial data: amplitude must be nonnegative");
        detail::require(spec.radius > 0.0, "initial data: radius must be positive");
        break;
    case DataKind::threshold_tail:
        detail::require(spec.tail_coeff >= 0.0, "initial data: tail_coeff must be nonnegative");
        break;
    case DataKind::table:
        detail::require(!spec.table.empty(), "initial data: table is empty");
        for (std::size_t i = 0; i < spec.table.size(); ++i) {
            detail::require(spec.table[i].second >= 0.0, "initial data: table values must be nonnegative");
            detail::require(i == 0 || spec.table[i].first > spec.table[i - 1].first,
                            "initial data: table radii must be strictly increasing");
        }
        break;
    }
}

/// u0 at radius r. The threshold tail needs the problem for its exponent.
inline double evaluate(const InitialDataSpec& spec, const Problem& prob, double r)
{
    switch (spec.kind) {
    case DataKind::compact_bump: {
        const double q = r / spec.radius;
        return q < 1.0 ? spec.amplitude * (1.0 - q * q) : 0.0;
    }
    case DataKind::threshold_tail:
        require_superlinear(prob, "threshold_tail");
        return spec.tail_coeff * std::pow(1.0 + r, -prob.sigma / (prob.p - 1.0));
    case DataKind::table: {
        const auto& t = spec.table;
        if (r < t.front().first || r > t.back().first)
            throw InvalidArgument("initial data: table does not cover radius " + std::to_string(r));
        auto it = std::upper_bound(t.begin(), t.end(), r,
                                   [](double v, const std::pair<double, double>& row) { return v < row.first; });
        if (it == t.end())
            return t.back().second;
        if (it == t.begin())
            return t.front().second;
        const auto& [x0, y0] = *(it - 1);
        const auto& [x1, y1] = *it;
        const double w = (r - x0) / (x1 - x0);
        return (1.0 - w) * y0 + w * y1;
    }
    }
    return 0.0;
}

/// Surface area of the unit sphere in R^N (2 for N = 1).
inline double unit_sphere_area(int dim)
{
    const double n = static_cast<double>(dim);
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

struct TailNormOptions {
    int radial_nodes = 64;
    int angular_nodes = 64;
};

inline std::vector<double> default_tail_radii()
{
    std::vector<double> r;
    for (int k = 0; k <= 10; ++k)
        r.push_back(std::ldexp(1.0, k));
    return r;
}

/// Average of radial data over the ball of radius rho centred at distance
/// `centre` from the origin: midpoint rule in the ball's own radial
/// coordinate (weight s^{N-1}) and in the polar angle to the centre
/// direction (weight sin^{N-2}).
inline double ball_average(const InitialDataSpec& spec, const Problem& prob, double centre, double rho,
                           const TailNormOptions& opt = {})
{
    const int N = prob.dim;
    double num = 0.0, den = 0.0;
    const double ds = rho / opt.radial_nodes;
    for (int i = 0; i < opt.radial_nodes; ++i) {
        const double s = (i + 0.5) * ds;
        const double ws = std::pow(s, N - 1);
        if (N == 1) {
            const double v = evaluate(spec, prob, std::abs(centre + s)) + evaluate(spec, prob, std::abs(centre - s));
            num += ws * v;
            den += 2.0 * ws;
            continue;
        }
        const double dth = std::numbers::pi / opt.angular_nodes;
        for (int j = 0; j < opt.angular_nodes; ++j) {
            const double th = (j + 0.5) * dth;
            const double wt = ws * std::pow(std::sin(th), N - 2);
            const double dist = std::sqrt(std::max(0.0, centre * centre + s * s + 2.0 * centre * s * std::cos(th)));
            num += wt * evaluate(spec, prob, dist);
            den += wt;
        }
    }
    return num / den;
}

/// Discrete version of sup_x (1+|x|)^{σ/(p-1)} · (mean of u0 over the ball of
/// radius (1+|x|)^r around x), r = -σ(m-1)/(2(p-1)), sampled at the given
/// centre radii. Finite values certify the admissible decay class.
inline double adb_tail_norm(const InitialDataSpec& spec, const Problem& prob, std::span<const double> sample_radii,
                            const TailNormOptions& opt = {})
{
    require_superlinear(prob, "adb_tail_norm");
    validate(spec);
    detail::require(!sample_radii.empty(), "adb_tail_norm: sample_radii must be nonempty");
    detail::require(opt.radial_nodes >= 64, "adb_tail_norm: at least 64 radial nodes");
    const double ball_exp = -prob.sigma * (prob.m - 1.0) / (2.0 * (prob.p - 1.0));
    const double weight_exp = prob.sigma / (prob.p - 1.0);
    double best = 0.0;
    for (double R : sample_radii) {
        detail::require(R >= 0.0, "adb_tail_norm: sample radii must be nonnegative");
        const double rho = std::pow(1.0 + R, ball_exp);
        const double term = std::pow(1.0 + R, weight_exp) * ball_average(spec, prob, R, rho, opt);
        best = std::max(best, term);
    }
    return best;
}

} // namespace blowuplab
