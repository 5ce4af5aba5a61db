#pragma once

// Named experiments that compose the solver, the self-similar constructions
// and the stationary profiles. Each returns machine-checked criteria; the
// verdict is PASS only when all of them hold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blowuplab/core.hpp"
#include "blowuplab/error.hpp"
#include "blowuplab/radial_solver.hpp"
#include "blowuplab/selfsimilar.hpp"
#include "blowuplab/stationary.hpp"

namespace blowuplab {

enum class Verdict { pass, fail, anomaly };

inline std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::anomaly: return "ANOMALY";
    }
    return "?";
}

struct Criterion {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ScenarioResult {
    std::string name;
    Problem problem;
    std::map<std::string, std::string> inputs;
    Verdict verdict = Verdict::pass;
    std::map<std::string, double> metrics;
    std::vector<Criterion> criteria;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, RunReport>> runs;
    std::vector<std::pair<std::string, SelfSimilarProfile>> profiles;
    std::vector<std::pair<std::string, StationaryProfile>> stationary;

    void check(std::string crit, bool ok, double value, double threshold, std::string detail = {})
    {
        criteria.push_back({std::move(crit), ok, value, threshold, std::move(detail)});
    }

    void anomaly(std::string note)
    {
        verdict = Verdict::anomaly;
        notes.push_back(std::move(note));
    }

    /// PASS iff every criterion passed, unless an anomaly was raised.
    void finalize()
    {
        if (verdict == Verdict::anomaly)
            return;
        verdict = std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; })
                      ? Verdict::pass
                      : Verdict::fail;
    }

    const Criterion* find(std::string_view crit) const
    {
        for (const auto& c : criteria)
            if (c.name == crit)
                return &c;
        return nullptr;
    }
};

struct ScenarioOptions {
    double r_max = 10.0;
    std::size_t cells = 2000;
    double u_cap = 1e6;
    double eps_supp = 1e-10;
    double t_end = 1e3;
    double cadence = 1e-2;
    double log_cadence = 0.02;
    int max_doublings = 6;
    double tol_factor = 10.0; ///< dominance tolerances are tol_factor · h
    double residual_tol = 1e-4; ///< profile residual bound, relative to 1 + max f^p
    ProfileOptions profile;
};

inline std::string_view scenario_names[] = {"threshold", "blowup", "fsp", "no_localization", "comparison"};

namespace detail {

inline EvolveOptions evolve_options(const ScenarioOptions& opt)
{
    EvolveOptions eo;
    eo.cadence = opt.cadence;
    eo.log_cadence = opt.log_cadence;
    eo.eps_supp = opt.eps_supp;
    eo.max_doublings = opt.max_doublings;
    return eo;
}

inline void require_nontrivial_compact(const InitialDataSpec& spec, const Problem& prob, const RadialGrid& grid,
                                       std::string_view scenario)
{
    validate(spec);
    if (!spec.compactly_supported())
        throw InvalidArgument(std::string(scenario) + ": initial data must be compactly supported");
    if (spec.kind == DataKind::table && spec.table.back().second > 0.0)
        throw InvalidArgument(std::string(scenario) + ": table data must vanish at its last radius");
    if (!(sup_norm(sample_initial_data(spec, prob, grid)) > 0.0))
        throw InvalidArgument(std::string(scenario) + ": initial data is identically zero");
}

inline std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string describe(const InitialDataSpec& s)
{
    switch (s.kind) {
    case DataKind::compact_bump: return "compact_bump(amplitude=" + fmt(s.amplitude) + ", radius=" + fmt(s.radius) + ")";
    case DataKind::threshold_tail: return "threshold_tail(c=" + fmt(s.tail_coeff) + ")";
    case DataKind::table: return "table(" + std::to_string(s.table.size()) + " rows)";
    }
    return "?";
}

inline std::size_t nearest_index(const std::vector<RadialState>& hist, double t)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < hist.size(); ++k)
        if (std::abs(hist[k].t - t) < std::abs(hist[best].t - t))
            best = k;
    return best;
}

} // namespace detail

/// Threshold-tail data c (1+r)^{-σ/(p-1)} for each c: the extrapolated
/// blow-up time must stay below 1.05 · c_eff^{-p}/(p-1), c_eff being the
/// tail coefficient r^{σ/(p-1)} u0 at the outermost node, and must
/// decrease strictly in c. c = 0 runs the unit bump instead and skips the
/// bound. The grid is widened (doubling r_max and cells) until the
/// stationary Dirichlet level on [0, r_max] exceeds 100 u_cap.
inline ScenarioResult run_threshold_scenario(const Problem& prob, std::vector<double> c_values,
                                             const ScenarioOptions& opt = {})
{
    require_superlinear(prob, "threshold scenario");
    detail::require(!c_values.empty(), "threshold scenario: c_values must be nonempty");
    std::sort(c_values.begin(), c_values.end());
    ScenarioResult res;
    res.name = "threshold";
    res.problem = prob;
    // The truncated Dirichlet problem has a globally attracting stationary
    // state whose level grows like r_max^{(σ+2)/(m-p)}; widen the domain at
    // fixed spacing until that level is far above u_cap.
    const auto unit = unit_stationary_profile(prob);
    const auto dirichlet_level = [&](double R) {
        return unit.origin_value() * std::pow(R / unit.first_zero, (prob.sigma + 2.0) / (prob.m - prob.p));
    };
    double r_max = opt.r_max;
    std::size_t cells = opt.cells;
    while (dirichlet_level(r_max) < 100.0 * opt.u_cap) {
        r_max *= 2.0;
        cells *= 2;
    }
    res.metrics["r_max"] = r_max;
    res.metrics["dirichlet_level"] = dirichlet_level(r_max);
    const auto grid = make_grid(r_max, cells);
    const double q = prob.sigma / (prob.p - 1.0);
    const double r_out = grid.node(grid.cells - 1);
    std::string list;
    for (double c : c_values)
        list += (list.empty() ? "" : ", ") + detail::fmt(c);
    res.inputs["c_values"] = "[" + list + "]";
    res.inputs["grid"] = detail::fmt(r_max) + "/" + std::to_string(cells);

    std::vector<std::pair<double, double>> times; // (c, T̂) for c > 0
    for (double c : c_values) {
        detail::require(c >= 0.0, "threshold scenario: c must be nonnegative");
        const std::string tag = "c=" + detail::fmt(c);
        const auto spec = c > 0.0 ? InitialDataSpec::threshold_tail(c) : InitialDataSpec::bump(1.0, 1.0);
        auto eo = detail::evolve_options(opt);
        const auto rep = evolve(prob, spec, grid, opt.t_end, opt.u_cap, eo);
        res.runs.emplace_back(tag, rep);
        const bool blew = rep.termination == Termination::blowup_detected && rep.blowup_time_estimate.has_value();
        res.check("blowup_detected[" + tag + "]", blew, blew ? 1.0 : 0.0, 1.0, std::string(to_string(rep.termination)));
        if (!blew)
            continue;
        const double T = *rep.blowup_time_estimate;
        res.metrics["T_hat[" + tag + "]"] = T;
        if (c == 0.0) {
            res.notes.push_back("c = 0 runs compact_bump(1, 1); the tail bound is skipped");
            continue;
        }
        const double c_eff = std::pow(r_out, q) * evaluate(spec, prob, r_out);
        const double bound = nonexistence_time_bound(c_eff, prob.p);
        res.metrics["c_eff[" + tag + "]"] = c_eff;
        res.metrics["bound[" + tag + "]"] = bound;
        res.metrics["tail_ode_time[" + tag + "]"] = tail_ode_blowup_time(c_eff, prob.p);
        res.check("T_hat_below_bound[" + tag + "]", T <= 1.05 * bound, T, 1.05 * bound);
        times.emplace_back(c, T);
    }
    if (times.size() >= 2) {
        bool decreasing = true;
        double worst = -1e300;
        for (std::size_t k = 1; k < times.size(); ++k) {
            decreasing = decreasing && times[k].second < times[k - 1].second;
            worst = std::max(worst, times[k].second - times[k - 1].second);
        }
        res.check("T_hat_strictly_decreasing", decreasing, worst, 0.0, "largest consecutive increment");
    }
    res.finalize();
    return res;
}

/// Compact data: blow-up on two grids with T̂ agreeing to 2%, and
/// dominance over the compact self-similar subsolution started at the
/// first recorded time τ0 whose support covers B(0, 2ξ2).
inline ScenarioResult run_blowup_scenario(const Problem& prob, const InitialDataSpec& spec,
                                          const ScenarioOptions& opt = {})
{
    validate(prob);
    const auto grid = make_grid(opt.r_max, opt.cells);
    detail::require_nontrivial_compact(spec, prob, grid, "blowup scenario");
    const auto ex = similarity_exponents(prob);
    ScenarioResult res;
    res.name = "blowup";
    res.problem = prob;
    res.inputs["data"] = detail::describe(spec);
    res.inputs["grid"] = detail::fmt(opt.r_max) + "/" + std::to_string(opt.cells);

    auto prof = find_compact_subsolution_profile(prob, opt.profile);
    const double xi1 = *prof.inner_interface, xi2 = *prof.outer_interface;
    const double fmax = prof.max_value();
    const auto resid = profile_residual(prof, opt.profile.f_floor);
    res.metrics["xi1"] = xi1;
    res.metrics["xi2"] = xi2;
    res.metrics["profile_max"] = fmax;
    res.metrics["profile_residual"] = resid.max_abs;
    res.profiles.emplace_back("subsolution", prof);
    const double resid_bound = opt.residual_tol * (1.0 + std::pow(fmax, prob.p));
    res.check("profile_residual", resid.max_abs < resid_bound, resid.max_abs, resid_bound);

    std::optional<double> tau0;
    double eps = 0.0;
    std::vector<RadialState> hist;
    auto eo = detail::evolve_options(opt);
    eo.on_record = [&](const RadialState& st) {
        if (!tau0 && support_radius(st, opt.eps_supp) >= 2.0 * xi2) {
            double lo = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < st.u.size() && st.grid.node(i) <= xi2; ++i)
                lo = std::min(lo, st.u[i]);
            if (lo > 0.0) {
                tau0 = st.t;
                eps = lo;
            }
        }
        if (tau0)
            hist.push_back(st);
    };
    const auto rep = evolve(prob, spec, grid, opt.t_end, opt.u_cap, eo);
    res.runs.emplace_back("h", rep);
    auto fine_opt = detail::evolve_options(opt);
    const auto rep2 = evolve(prob, spec, make_grid(opt.r_max, 2 * opt.cells), opt.t_end, opt.u_cap, fine_opt);
    res.runs.emplace_back("h/2", rep2);

    const double h = grid.spacing();
    const bool b1 = rep.termination == Termination::blowup_detected && rep.blowup_time_estimate;
    const bool b2 = rep2.termination == Termination::blowup_detected && rep2.blowup_time_estimate;
    res.check("blowup_detected[h]", b1, b1, 1.0, std::string(to_string(rep.termination)));
    res.check("blowup_detected[h/2]", b2, b2, 1.0, std::string(to_string(rep2.termination)));
    if (b1 && b2) {
        const double T1 = *rep.blowup_time_estimate, T2 = *rep2.blowup_time_estimate;
        res.metrics["T_hat[h]"] = T1;
        res.metrics["T_hat[h/2]"] = T2;
        const double rel = std::abs(T1 - T2) / T2;
        res.check("T_hat_refinement_2pct", rel <= 0.02, rel, 0.02);
    }

    res.check("support_covers_2xi2", tau0.has_value(), tau0.value_or(-1.0), 0.0,
              "first recorded time with support radius >= 2 xi2");
    if (tau0 && b1) {
        const double T0 = std::max(1.0, std::pow(fmax / eps, 1.0 / ex.alpha) * 1.01);
        const SelfSimilarFunction sub{prof, T0, *tau0};
        res.metrics["tau0"] = *tau0;
        res.metrics["epsilon"] = eps;
        res.metrics["T0"] = T0;
        const double t_last = rep.times.back();
        const double t_stop = std::min(t_last, *tau0 + T0);
        double worst = 0.0;
        int used = 0;
        for (int k = 1; k <= 5; ++k) {
            const double target = *tau0 + k / 6.0 * (t_stop - *tau0);
            const auto& st = hist[detail::nearest_index(hist, target)];
            if (!(st.t < *tau0 + T0))
                continue;
            ++used;
            for (std::size_t i = 0; i < st.u.size(); ++i)
                worst = std::max(worst, selfsimilar_eval(sub, st.grid.node(i), st.t) - st.u[i]);
            res.metrics["checkpoint_t[" + std::to_string(k) + "]"] = st.t;
        }
        res.metrics["dominance_violation"] = worst;
        res.check("subsolution_dominated_5_checkpoints", used == 5 && worst <= opt.tol_factor * h, worst,
                  opt.tol_factor * h, std::to_string(used) + " checkpoints");
        res.check("blowup_before_subsolution", *rep.blowup_time_estimate <= *tau0 + T0, *rep.blowup_time_estimate,
                  *tau0 + T0);
    }
    res.finalize();
    return res;
}

/// Compact data: at three checkpoints t0 the combined supersolution built
/// from (sup u(t0), ζ(t0)) must dominate the recorded states in
/// (t0, t0 + τ), and ζ must stay inside its support edge (one cell of
/// slack for the discrete edge).
inline ScenarioResult run_fsp_scenario(const Problem& prob, const InitialDataSpec& spec,
                                       const ScenarioOptions& opt = {})
{
    validate(prob);
    const auto grid = make_grid(opt.r_max, opt.cells);
    detail::require_nontrivial_compact(spec, prob, grid, "fsp scenario");
    ScenarioResult res;
    res.name = "fsp";
    res.problem = prob;
    res.inputs["data"] = detail::describe(spec);
    res.inputs["grid"] = detail::fmt(opt.r_max) + "/" + std::to_string(opt.cells);

    std::vector<RadialState> hist;
    auto eo = detail::evolve_options(opt);
    eo.on_record = [&](const RadialState& st) { hist.push_back(st); };
    const auto rep = evolve(prob, spec, grid, opt.t_end, opt.u_cap, eo);
    res.runs.emplace_back("h", rep);
    const double h = grid.spacing();

    bool finite = true;
    for (double z : rep.zeta)
        finite = finite && std::isfinite(z) && z < rep.grid.r_max;
    res.check("support_finite", finite, rep.zeta.empty() ? 0.0 : *std::max_element(rep.zeta.begin(), rep.zeta.end()),
              rep.grid.r_max);

    FspOptions fo;
    fo.profile = opt.profile;
    fo.interface_limit = estimate_interface_limit(prob, opt.profile);
    res.metrics["interface_limit"] = *fo.interface_limit;
    const double t_last = hist.back().t;
    for (int k = 1; k <= 3; ++k) {
        const std::string tag = std::to_string(k);
        const std::size_t i0 = detail::nearest_index(hist, k / 4.0 * t_last);
        const auto& s0 = hist[i0];
        const double sup0 = sup_norm(s0), z0 = support_radius(s0, opt.eps_supp);
        const auto fsp = build_fsp_supersolution(prob, sup0, std::max(z0, h), fo);
        SelfSimilarFunction fn = fsp.function;
        fn.t_offset = s0.t;
        res.metrics["t0[" + tag + "]"] = s0.t;
        res.metrics["tau[" + tag + "]"] = fsp.tau;
        res.metrics["xi0[" + tag + "]"] = *fn.profile.outer_interface;
        if (k == 1)
            res.profiles.emplace_back("combined", fn.profile);
        double worst = 0.0, edge_excess = -1e300;
        std::size_t samples = 0;
        for (std::size_t j = i0; j < hist.size() && hist[j].t < s0.t + fsp.tau; ++j) {
            const auto& st = hist[j];
            for (std::size_t i = 0; i < st.u.size(); ++i)
                worst = std::max(worst, st.u[i] - selfsimilar_eval(fn, st.grid.node(i), st.t));
            edge_excess =
                std::max(edge_excess, support_radius(st, opt.eps_supp) - selfsimilar_support_edge(fn, st.t));
            ++samples;
        }
        res.metrics["violation[" + tag + "]"] = worst;
        res.metrics["edge_excess[" + tag + "]"] = edge_excess;
        res.metrics["window_samples[" + tag + "]"] = static_cast<double>(samples);
        res.check("supersolution_dominates[" + tag + "]", samples >= 2 && worst <= opt.tol_factor * h, worst,
                  opt.tol_factor * h, std::to_string(samples) + " recorded states in the window");
        res.check("support_inside_edge[" + tag + "]", edge_excess <= h, edge_excess, h,
                  "max of zeta(t) minus the supersolution support edge");
    }
    res.finalize();
    return res;
}

/// Compact data evolved to blow-up with domain doubling: ζ recorded where
/// sup u first reaches 10^k (k = 1..5) must grow by a factor >= 2 without
/// decreasing by more than one cell, and u must cross the smallest
/// majorizing stationary profile of (sup u0, ζ(0)) before blow-up.
inline ScenarioResult run_no_localization_scenario(const Problem& prob, const InitialDataSpec& spec,
                                                   const ScenarioOptions& opt = {})
{
    require_superlinear(prob, "no_localization scenario");
    const auto grid = make_grid(opt.r_max, opt.cells);
    detail::require_nontrivial_compact(spec, prob, grid, "no_localization scenario");
    ScenarioResult res;
    res.name = "no_localization";
    res.problem = prob;
    res.inputs["data"] = detail::describe(spec);
    res.inputs["grid"] = detail::fmt(opt.r_max) + "/" + std::to_string(opt.cells);

    const auto u0 = sample_initial_data(spec, prob, grid);
    const double sup0 = sup_norm(u0), zeta0 = std::max(support_radius(u0, opt.eps_supp), grid.spacing());
    const auto unit = unit_stationary_profile(prob);
    const auto maj = majorizing_stationary(unit, sup0, zeta0);
    res.metrics["unit_D"] = unit.D;
    res.metrics["majorant_R"] = maj.first_zero;
    res.stationary.emplace_back("majorant", maj);

    std::vector<std::pair<int, double>> ladder; // (k, ζ)
    std::vector<double> ladder_t;
    std::optional<double> crossed;
    auto eo = detail::evolve_options(opt);
    eo.on_record = [&](const RadialState& st) {
        const double s = sup_norm(st);
        for (int k = 1; k <= 5; ++k) {
            const double level = std::pow(10.0, k);
            if (s >= level && level > sup0 && std::none_of(ladder.begin(), ladder.end(), [&](auto& e) { return e.first == k; })) {
                ladder.emplace_back(k, support_radius(st, opt.eps_supp));
                ladder_t.push_back(st.t);
            }
        }
        if (!crossed)
            for (std::size_t i = 0; i < st.u.size(); ++i)
                if (st.u[i] > maj(st.grid.node(i))) {
                    crossed = st.t;
                    break;
                }
    };
    const auto rep = evolve(prob, spec, grid, opt.t_end, opt.u_cap, eo);
    res.runs.emplace_back("h", rep);
    const double h = grid.spacing();
    const bool blew = rep.termination == Termination::blowup_detected;
    res.check("blowup_detected", blew, blew, 1.0, std::string(to_string(rep.termination)));
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        res.metrics["zeta[1e" + std::to_string(ladder[k].first) + "]"] = ladder[k].second;
        res.metrics["t[1e" + std::to_string(ladder[k].first) + "]"] = ladder_t[k];
    }
    if (ladder.size() < 3) {
        res.anomaly("fewer than 3 sup-norm ladder points before termination; increase u_cap");
    } else {
        const double growth = ladder.back().second / ladder.front().second;
        res.metrics["zeta_growth"] = growth;
        res.check("zeta_growth_factor_2", growth >= 2.0, growth, 2.0);
        double worst_drop = 0.0;
        for (std::size_t k = 1; k < ladder.size(); ++k)
            worst_drop = std::max(worst_drop, ladder[k - 1].second - ladder[k].second);
        res.check("zeta_nondecreasing", worst_drop <= h, worst_drop, h, "largest decrease between ladder points");
    }
    res.metrics["majorant_crossed_t"] = crossed.value_or(-1.0);
    res.check("majorant_crossed_before_blowup", crossed.has_value() && blew, crossed.value_or(-1.0),
              rep.times.back());
    res.finalize();
    return res;
}

struct PairedRun {
    std::vector<RadialState> lower;
    std::vector<RadialState> upper;
    Termination termination = Termination::reached_t_end;
};

/// Steps two solutions with a shared dt (the smaller stable step) and
/// records both at a shared cadence, until t_end or the first of them
/// reaches u_cap. Both domains double together when either support reaches
/// 0.9 r_max.
inline PairedRun evolve_pair(const Problem& prob, const InitialDataSpec& low, const InitialDataSpec& high,
                             const RadialGrid& grid, double t_end, double u_cap, double cadence,
                             int max_doublings = 6, double eps_supp = 1e-10)
{
    RadialSolver a(prob, sample_initial_data(low, prob, grid));
    RadialSolver b(prob, sample_initial_data(high, prob, grid));
    PairedRun out;
    out.lower.push_back(a.state());
    out.upper.push_back(b.state());
    const bool track_edge = std::max(a.support_edge(eps_supp), b.support_edge(eps_supp)) < 0.9 * grid.r_max;
    int doublings = 0;
    double t_last = 0.0;
    while (true) {
        double dt = std::min(a.stable_dt(), b.stable_dt());
        bool final_step = false;
        if (a.state().t + dt >= t_end) {
            dt = t_end - a.state().t;
            final_step = true;
        }
        a.step(dt);
        b.step(dt);
        const bool blown = a.state().blown_up || b.state().blown_up || a.max_value() >= u_cap || b.max_value() >= u_cap;
        bool exhausted = false;
        if (track_edge &&
            std::max(a.support_edge(eps_supp), b.support_edge(eps_supp)) >= 0.9 * a.state().grid.r_max) {
            if (doublings < max_doublings) {
                a.double_domain();
                b.double_domain();
                ++doublings;
            } else {
                exhausted = true;
            }
        }
        if (blown || exhausted || final_step || a.state().t - t_last >= cadence) {
            out.lower.push_back(a.state());
            out.upper.push_back(b.state());
            t_last = a.state().t;
        }
        if (blown) {
            out.termination = Termination::blowup_detected;
            break;
        }
        if (exhausted) {
            out.termination = Termination::domain_exhausted;
            break;
        }
        if (final_step)
            break;
    }
    return out;
}

/// Report rows rebuilt from recorded states (no blow-up time fit).
inline RunReport report_from_states(const Problem& prob, const std::vector<RadialState>& states, Termination term,
                                    double eps_supp)
{
    RunReport rep;
    rep.problem = prob;
    rep.grid = states.back().grid;
    rep.termination = term;
    for (const auto& st : states) {
        rep.times.push_back(st.t);
        rep.sup_norm.push_back(sup_norm(st));
        rep.mass.push_back(mass(st, prob.dim));
        rep.zeta.push_back(support_radius(st, eps_supp));
    }
    return rep;
}

/// Nested data on grids h and h/2 stepped in pairs: the ordering violation
/// max (u - v)_+ must stay below tol_factor · h and shrink to 0.5 ± 0.3 of
/// its coarse value under refinement. For p > 1 the tail weight
/// M(t) = max r^{σ/(p-1)} u over the outer decade [r_max/10, r_max] is
/// reported and must stay finite.
inline ScenarioResult run_comparison_scenario(const Problem& prob, const InitialDataSpec& low,
                                              const InitialDataSpec& high, const ScenarioOptions& opt = {})
{
    validate(prob);
    validate(low);
    validate(high);
    ScenarioResult res;
    res.name = "comparison";
    res.problem = prob;
    res.inputs["lower"] = detail::describe(low);
    res.inputs["upper"] = detail::describe(high);
    res.inputs["grid"] = detail::fmt(opt.r_max) + "/" + std::to_string(opt.cells);

    double v[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
        const auto grid = make_grid(opt.r_max, opt.cells << level);
        const auto s0 = sample_initial_data(low, prob, grid), s1 = sample_initial_data(high, prob, grid);
        for (std::size_t i = 0; i < s0.u.size(); ++i)
            if (s0.u[i] > s1.u[i])
                throw InvalidArgument("comparison scenario: lower data exceeds upper data at r = " +
                                      detail::fmt(grid.node(i)));
        const auto pair =
            evolve_pair(prob, low, high, grid, opt.t_end, opt.u_cap, opt.cadence, opt.max_doublings, opt.eps_supp);
        const auto ord = verify_ordering(pair.lower, pair.upper, opt.tol_factor * grid.spacing());
        const std::string tag = level == 0 ? "h" : "h/2";
        res.runs.emplace_back("lower[" + tag + "]", report_from_states(prob, pair.lower, pair.termination, opt.eps_supp));
        res.runs.emplace_back("upper[" + tag + "]", report_from_states(prob, pair.upper, pair.termination, opt.eps_supp));
        v[level] = ord.max_violation;
        res.metrics["violation[" + tag + "]"] = ord.max_violation;
        res.metrics["t_end[" + tag + "]"] = pair.lower.back().t;
        res.check("ordering[" + tag + "]", ord.pass, ord.max_violation, opt.tol_factor * grid.spacing());
        if (prob.p > 1.0) {
            const double q = prob.sigma / (prob.p - 1.0);
            double M = 0.0;
            bool finite = true;
            for (const auto* hist : {&pair.lower, &pair.upper})
                for (const auto& st : *hist)
                    for (std::size_t i = 0; i < st.u.size(); ++i) {
                        const double r = st.grid.node(i);
                        if (r < 0.1 * st.grid.r_max)
                            continue;
                        const double w = std::pow(r, q) * st.u[i];
                        finite = finite && std::isfinite(w);
                        M = std::max(M, w);
                    }
            res.metrics["tail_weight_max[" + tag + "]"] = M;
            res.check("tail_bound_finite[" + tag + "]", finite, M, 0.0);
        }
    }
    const bool halves = v[1] >= 0.35 * v[0] && v[1] <= 0.65 * v[0];
    res.check("violation_halves", halves, v[0] > 0.0 ? v[1] / v[0] : 0.0, 0.5,
              v[0] == 0.0 ? "violation is zero on both grids" : "ratio violation(h/2) / violation(h)");
    res.finalize();
    return res;
}

} // namespace blowuplab
