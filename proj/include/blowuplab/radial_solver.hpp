#pragma once

// Explicit conservative finite differences for radially symmetric solutions
// of u_t = Δu^m + r^σ u^p on a cell-centred grid over [0, r_max] with a
// homogeneous Dirichlet condition at r_max.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "blowuplab/core.hpp"
#include "blowuplab/error.hpp"
#include "blowuplab/numerics.hpp"

namespace blowuplab {

/// Uniform cell-centred grid: node i sits at (i + 1/2) h, h = r_max / cells.
struct RadialGrid {
    double r_max = 0.0;
    std::size_t cells = 0;

    double spacing() const noexcept { return r_max / static_cast<double>(cells); }
    double node(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * spacing(); }

    friend bool operator==(const RadialGrid&, const RadialGrid&) = default;
};

inline RadialGrid make_grid(double r_max, std::size_t cells)
{
    detail::require(r_max > 0.0 && std::isfinite(r_max), "make_grid: r_max must be positive");
    detail::require(cells >= 16, "make_grid: need at least 16 cells");
    return {r_max, cells};
}

struct RadialState {
    RadialGrid grid;
    double t = 0.0;
    std::vector<double> u;
    bool blown_up = false;
};

inline RadialState sample_initial_data(const InitialDataSpec& spec, const Problem& prob, const RadialGrid& grid)
{
    validate(spec);
    RadialState s;
    s.grid = grid;
    s.u.resize(grid.cells);
    for (std::size_t i = 0; i < grid.cells; ++i)
        s.u[i] = evaluate(spec, prob, grid.node(i));
    return s;
}

/// Switches used by validation runs to isolate one of the two terms.
struct Physics {
    bool diffusion = true;
    bool reaction = true;
    std::optional<double> sigma_override; ///< replaces σ in the source weight only
};

struct StepLimits {
    double c_diff = 0.25;
    double c_reac = 0.1;
    double eps = 1e-30;
    double dt_max = 1e-2;
};

inline double sup_norm(const RadialState& s)
{
    double v = 0.0;
    for (double x : s.u)
        v = std::max(v, x);
    return v;
}

/// Largest node radius with u > eps_supp, or 0.
inline double support_radius(const RadialState& s, double eps_supp = 1e-10)
{
    for (std::size_t i = s.u.size(); i-- > 0;)
        if (s.u[i] > eps_supp)
            return s.grid.node(i);
    return 0.0;
}

/// ∫ u dx with the radial measure |S^{N-1}| r^{N-1} dr, using the same cell
/// volumes as the scheme (so diffusion conserves it exactly up to the
/// boundary flux).
inline double mass(const RadialState& s, int dim)
{
    const double h = s.grid.spacing();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i)
        acc += std::pow(s.grid.node(i), dim - 1) * h * s.u[i];
    return unit_sphere_area(dim) * acc;
}

/// Stateful stepper that owns one solution. Coefficients of the discrete
/// operator (1/r^{N-1}) d/dr (r^{N-1} d(u^m)/dr) are precomputed per grid.
class RadialSolver {
public:
    RadialSolver(const Problem& prob, RadialState initial, Physics physics = {}, StepLimits limits = {})
        : prob_(prob), physics_(physics), limits_(limits), state_(std::move(initial)), pow_m_(prob.m),
          pow_p_(prob.p), pow_m1_(prob.m - 1.0), pow_p1_(prob.p - 1.0)
    {
        validate(prob_);
        detail::require(state_.u.size() == state_.grid.cells, "RadialSolver: state size does not match grid");
        for (double v : state_.u)
            detail::require(v >= 0.0 && std::isfinite(v), "RadialSolver: initial values must be finite and >= 0");
        build_coefficients();
    }

    const RadialState& state() const noexcept { return state_; }
    const Problem& problem() const noexcept { return prob_; }
    const Physics& physics() const noexcept { return physics_; }
    const StepLimits& limits() const noexcept { return limits_; }

    /// Largest stable step: min(c_diff h²/(m max u^{m-1}), c_reac / max r^σ u^{p-1}),
    /// capped at dt_max. The diffusion part is scaled down on grids whose
    /// largest row sum of the operator exceeds 4/h² (N >= 4).
    double stable_dt() const
    {
        const double h = state_.grid.spacing();
        double dt = limits_.dt_max;
        if (physics_.diffusion) {
            const double diff = limits_.c_diff * h * h / (prob_.m * pow_m1_(max_u_) + limits_.eps) *
                                std::min(1.0, 4.0 / row_sum_scaled_);
            dt = std::min(dt, diff);
        }
        if (physics_.reaction)
            dt = std::min(dt, limits_.c_reac / (max_react_ + limits_.eps));
        return dt;
    }

    double max_value() const noexcept { return max_u_; }

    /// Same as support_radius(state(), eps_supp), from the cached last
    /// positive index.
    double support_edge(double eps_supp) const noexcept
    {
        for (std::size_t i = active_; i-- > 0;)
            if (state_.u[i] > eps_supp)
                return state_.grid.node(i);
        return 0.0;
    }

    /// One forward-Euler step. Negative values are clamped to zero; a
    /// non-finite value marks the state as blown up.
    void step(double dt)
    {
        detail::require(!state_.blown_up, "step_explicit: state already blown up");
        detail::require(dt > 0.0, "step_explicit: dt must be positive");
        auto& u = state_.u;
        const std::size_t M = u.size();
        if (active_ == 0) {
            state_.t += dt;
            return;
        }
        const std::size_t hi = std::min(M, active_ + 1);
        w_.assign(hi + 1, 0.0);
        for (std::size_t i = 0; i < hi; ++i)
            w_[i] = pow_m_(u[i]);
        // w_[hi] stays 0: either the Dirichlet ghost or an inactive cell.
        next_.resize(hi);
        bool finite = true;
        double umax = 0.0, react = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < hi; ++i) {
            double rate = 0.0;
            if (physics_.diffusion) {
                const double left = i > 0 ? w_[i - 1] : 0.0;
                rate += out_[i] * (w_[i + 1] - w_[i]) - in_[i] * (w_[i] - left);
            }
            if (physics_.reaction && u[i] > 0.0)
                rate += weight_[i] * pow_p_(u[i]);
            double v = u[i] + dt * rate;
            if (v < 0.0)
                v = 0.0;
            if (!std::isfinite(v))
                finite = false;
            next_[i] = v;
            if (v > 0.0) {
                last = i + 1;
                umax = std::max(umax, v);
                react = std::max(react, weight_[i] * pow_p1_(v));
            }
        }
        std::copy(next_.begin(), next_.end(), u.begin());
        state_.t += dt;
        active_ = last;
        max_u_ = umax;
        max_react_ = react;
        if (!finite)
            state_.blown_up = true;
    }

    /// Steps with stable_dt (clipped to land on t_target).
    void advance_to(double t_target)
    {
        while (state_.t < t_target && !state_.blown_up) {
            double dt = stable_dt();
            const bool lands = state_.t + dt >= t_target;
            if (lands)
                dt = t_target - state_.t;
            if (dt <= 0.0)
                break;
            step(dt);
            if (lands)
                state_.t = t_target;
        }
    }

    /// Doubles r_max at fixed spacing; old nodes coincide with new ones, so
    /// linear re-sampling reduces to padding with zeros.
    void double_domain()
    {
        state_.grid.r_max *= 2.0;
        state_.grid.cells *= 2;
        state_.u.resize(state_.grid.cells, 0.0);
        build_coefficients();
    }

    /// Replaces the solution values (same grid), e.g. after an external
    /// modification in a test.
    void reset_values(std::vector<double> u)
    {
        detail::require(u.size() == state_.grid.cells, "reset_values: size mismatch");
        state_.u = std::move(u);
        refresh_stats();
    }

private:
    void build_coefficients()
    {
        const auto& g = state_.grid;
        const std::size_t M = g.cells;
        const double h = g.spacing();
        const int N = prob_.dim;
        const double sigma = physics_.sigma_override.value_or(prob_.sigma);
        out_.assign(M, 0.0);
        in_.assign(M, 0.0);
        weight_.assign(M, 0.0);
        row_sum_scaled_ = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            const double r = g.node(i);
            const double vol = std::pow(r, N - 1) * h;
            const double face_out = std::pow((static_cast<double>(i) + 1.0) * h, N - 1);
            const double face_in = std::pow(static_cast<double>(i) * h, N - 1);
            const double dist_out = (i + 1 == M) ? 0.5 * h : h;
            out_[i] = face_out / (dist_out * vol);
            in_[i] = i == 0 ? 0.0 : face_in / (h * vol);
            weight_[i] = sigma == 0.0 ? 1.0 : std::pow(r, sigma);
            row_sum_scaled_ = std::max(row_sum_scaled_, (out_[i] + in_[i]) * h * h);
        }
        refresh_stats();
    }

    void refresh_stats()
    {
        max_u_ = 0.0;
        max_react_ = 0.0;
        active_ = 0;
        for (std::size_t i = 0; i < state_.u.size(); ++i) {
            const double v = state_.u[i];
            if (v > 0.0) {
                active_ = i + 1;
                max_u_ = std::max(max_u_, v);
                max_react_ = std::max(max_react_, weight_[i] * pow_p1_(v));
            }
        }
    }

    Problem prob_;
    Physics physics_;
    StepLimits limits_;
    RadialState state_;
    num::Power pow_m_, pow_p_, pow_m1_, pow_p1_;
    std::vector<double> out_, in_, weight_, w_, next_;
    double row_sum_scaled_ = 0.0;
    double max_u_ = 0.0;
    double max_react_ = 0.0;
    std::size_t active_ = 0; ///< one past the last positive node
};

inline RadialState step_explicit(const RadialState& state, const Problem& prob, double dt, Physics physics = {})
{
    RadialSolver s(prob, state, physics);
    s.step(dt);
    return s.state();
}

inline double stable_dt(const RadialState& state, const Problem& prob, Physics physics = {}, StepLimits limits = {})
{
    return RadialSolver(prob, state, physics, limits).stable_dt();
}

enum class Termination { reached_t_end, blowup_detected, domain_exhausted };

inline std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::blowup_detected: return "blowup_detected";
    case Termination::domain_exhausted: return "domain_exhausted";
    }
    return "?";
}

struct RunReport {
    Problem problem;
    RadialGrid grid; ///< final grid (after any domain doubling)
    std::vector<double> times;
    std::vector<double> sup_norm;
    std::vector<double> mass;
    std::vector<double> zeta;
    Termination termination = Termination::reached_t_end;
    std::optional<double> blowup_time_estimate;
    std::optional<std::pair<double, double>> blowup_time_ci;
    std::size_t zeta_retractions = 0; ///< recorded decreases of ζ beyond one cell

    std::size_t rows() const noexcept { return times.size(); }
};

struct BlowupEstimate {
    double time = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
};

/// Extrapolates the blow-up time from sup_norm ~ (T - t)^{-α}: linear least
/// squares of sup_norm^{-1/α} against t over the final decade of growth,
/// T = t-intercept. The interval comes from separate fits over the two
/// final half-decades.
inline BlowupEstimate estimate_blowup_time(const RunReport& report, double alpha)
{
    detail::require(alpha > 0.0, "estimate_blowup_time: alpha must be positive");
    if (report.termination != Termination::blowup_detected)
        throw NumericalFailure("estimate_blowup_time: run did not detect blow-up");
    const auto& s = report.sup_norm;
    if (s.empty())
        throw NumericalFailure("estimate_blowup_time: empty report");
    const double first = s.front();
    const double last = *std::max_element(s.begin(), s.end());
    const auto grown = std::count_if(s.begin(), s.end(), [&](double v) { return v > 10.0 * first; });
    if (grown < 10 || !(last > 10.0 * first))
        throw NumericalFailure("estimate_blowup_time: fewer than 10 samples above ten times the initial sup-norm");

    auto fit_window = [&](double lo, double hi) -> std::optional<double> {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] >= lo && s[i] <= hi && s[i] > 0.0) {
                x.push_back(report.times[i]);
                y.push_back(std::pow(s[i], -1.0 / alpha));
            }
        if (x.size() < 3)
            return std::nullopt;
        const auto fit = num::fit_line(x, y);
        if (!(fit.slope < 0.0))
            return std::nullopt;
        return -fit.intercept / fit.slope;
    };
    const auto whole = fit_window(last / 10.0, last);
    if (!whole)
        throw NumericalFailure("estimate_blowup_time: final decade does not support a decreasing fit");
    const double mid = last / std::sqrt(10.0);
    const auto a = fit_window(last / 10.0, mid);
    const auto b = fit_window(mid, last);
    BlowupEstimate est;
    est.time = *whole;
    const double lo = std::min(a.value_or(*whole), b.value_or(*whole));
    const double hi = std::max(a.value_or(*whole), b.value_or(*whole));
    est.ci = {std::min(lo, *whole), std::max(hi, *whole)};
    return est;
}

struct EvolveOptions {
    double cadence = 1e-2;     ///< record at least every `cadence` time units
    double log_cadence = 0.02; ///< and whenever log10(sup u) moved by this much
    double eps_supp = 1e-10;
    int max_doublings = 0;     ///< domain doublings allowed before domain_exhausted
    Physics physics;
    StepLimits limits;
    /// Called with every recorded state (after the row is appended).
    std::function<void(const RadialState&)> on_record;
};

/// Runs the explicit scheme until t_end, sup u >= u_cap or the support edge
/// reaches 0.9 r_max. The support test is only armed for data that starts
/// inside 0.9 r_max; data with unbounded support is the truncated Dirichlet
/// approximation throughout.
inline RunReport evolve(const Problem& prob, const InitialDataSpec& spec, const RadialGrid& grid, double t_end,
                        double u_cap, const EvolveOptions& opt = {})
{
    validate(prob);
    detail::require(t_end > 0.0, "evolve: t_end must be positive");
    RadialSolver solver(prob, sample_initial_data(spec, prob, grid), opt.physics, opt.limits);
    detail::require(u_cap > sup_norm(solver.state()), "evolve: u_cap must exceed the initial sup-norm");

    RunReport rep;
    rep.problem = prob;
    double last_zeta = 0.0;
    auto record = [&] {
        const auto& st = solver.state();
        const double z = support_radius(st, opt.eps_supp);
        if (!rep.zeta.empty() && z < last_zeta - 1.5 * st.grid.spacing())
            ++rep.zeta_retractions;
        last_zeta = z;
        rep.times.push_back(st.t);
        rep.sup_norm.push_back(sup_norm(st));
        rep.mass.push_back(mass(st, prob.dim));
        rep.zeta.push_back(z);
        if (opt.on_record)
            opt.on_record(st);
    };
    record();
    const bool track_edge = support_radius(solver.state(), opt.eps_supp) < 0.9 * grid.r_max;
    int doublings = 0;
    double t_last = 0.0;
    double log_last = std::log10(std::max(sup_norm(solver.state()), 1e-300));

    while (true) {
        const auto& st = solver.state();
        double dt = solver.stable_dt();
        bool final_step = false;
        if (st.t + dt >= t_end) {
            dt = t_end - st.t;
            final_step = true;
        }
        solver.step(dt);
        const double sup = solver.max_value();
        const bool blown = solver.state().blown_up || sup >= u_cap;
        const double lg = std::log10(std::max(sup, 1e-300));
        const bool due = final_step || blown || solver.state().t - t_last >= opt.cadence ||
                         std::abs(lg - log_last) >= opt.log_cadence;
        bool exhausted = false;
        if (track_edge && solver.support_edge(opt.eps_supp) >= 0.9 * solver.state().grid.r_max) {
            if (doublings < opt.max_doublings) {
                solver.double_domain();
                ++doublings;
            } else {
                exhausted = true;
            }
        }
        if (due || exhausted) {
            record();
            t_last = solver.state().t;
            log_last = lg;
        }
        if (blown) {
            rep.termination = Termination::blowup_detected;
            break;
        }
        if (exhausted) {
            rep.termination = Termination::domain_exhausted;
            break;
        }
        if (final_step) {
            rep.termination = Termination::reached_t_end;
            break;
        }
    }
    rep.grid = solver.state().grid;
    if (rep.termination == Termination::blowup_detected) {
        try {
            const auto est = estimate_blowup_time(rep, similarity_exponents(prob).alpha);
            rep.blowup_time_estimate = est.time;
            rep.blowup_time_ci = est.ci;
        } catch (const NumericalFailure&) {
        }
    }
    return rep;
}

struct OrderingReport {
    double max_violation = 0.0;
    double worst_time = 0.0;
    double worst_radius = 0.0;
    bool pass = true;
};

/// max over recorded times and nodes of (u - v)_+ for two histories sharing
/// grid and cadence.
inline OrderingReport verify_ordering(const std::vector<RadialState>& lower, const std::vector<RadialState>& upper,
                                      double tol)
{
    if (lower.size() != upper.size())
        throw InvalidArgument("verify_ordering: histories have different cadence");
    OrderingReport rep;
    for (std::size_t k = 0; k < lower.size(); ++k) {
        const auto& a = lower[k];
        const auto& b = upper[k];
        if (!(a.grid == b.grid) || a.u.size() != b.u.size())
            throw InvalidArgument("verify_ordering: mismatched grids");
        if (std::abs(a.t - b.t) > 1e-12 * std::max(1.0, std::abs(a.t)))
            throw InvalidArgument("verify_ordering: mismatched record times");
        for (std::size_t i = 0; i < a.u.size(); ++i) {
            const double v = a.u[i] - b.u[i];
            if (v > rep.max_violation) {
                rep.max_violation = v;
                rep.worst_time = a.t;
                rep.worst_radius = a.grid.node(i);
            }
        }
    }
    rep.pass = rep.max_violation <= tol;
    return rep;
}

} // namespace blowuplab
