#pragma once

// Subcommand dispatch for the blowuplab tool.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "blowuplab/cli_io.hpp"

namespace blowuplab::io {

enum ExitCode : int { exit_ok = 0, exit_fail = 1, exit_usage = 2, exit_anomaly = 3 };

inline int exit_code(Verdict v)
{
    switch (v) {
    case Verdict::pass: return exit_ok;
    case Verdict::fail: return exit_fail;
    case Verdict::anomaly: return exit_anomaly;
    }
    return exit_fail;
}

/// Runs the scenario named in the config.
inline ScenarioResult run_scenario(const Config& c)
{
    const auto opt = scenario_options(c);
    if (c.scenario == "threshold")
        return run_threshold_scenario(c.problem, c.c_values, opt);
    if (c.scenario == "blowup")
        return run_blowup_scenario(c.problem, c.data, opt);
    if (c.scenario == "fsp")
        return run_fsp_scenario(c.problem, c.data, opt);
    if (c.scenario == "no_localization")
        return run_no_localization_scenario(c.problem, c.data, opt);
    if (c.scenario == "comparison") {
        if (!c.data_upper)
            throw ConfigError("data_upper", "required by the comparison scenario");
        return run_comparison_scenario(c.problem, c.data, *c.data_upper, opt);
    }
    if (c.scenario.empty())
        throw ConfigError("scenario", "required");
    throw ConfigError("scenario", "unknown scenario '" + c.scenario + "'");
}

inline void print_result(std::ostream& os, const ScenarioResult& r)
{
    os << r.name << ": " << to_string(r.verdict) << "\n";
    for (const auto& c : r.criteria)
        os << "  " << (c.passed ? "ok   " : "FAIL ") << c.name << " value=" << num17(c.value)
           << " threshold=" << num17(c.threshold) << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
    for (const auto& n : r.notes)
        os << "  note: " << n << "\n";
}

/// Thread cap for sweeps: BLOWUPLAB_THREADS if set to a positive integer,
/// otherwise the hardware concurrency.
inline unsigned sweep_threads()
{
    if (const char* env = std::getenv("BLOWUPLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Cartesian product of `key=v1,v2,...` parameter lists, as override lists.
inline std::vector<std::vector<std::string>> sweep_grid(const std::vector<std::string>& params)
{
    std::vector<std::vector<std::string>> out{{}};
    for (const auto& p : params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == p.size())
            throw ConfigError("", "sweep parameter must look like key=v1,v2,..., got '" + p + "'");
        const std::string key = p.substr(0, eq);
        std::vector<std::string> values;
        std::string rest = p.substr(eq + 1);
        std::size_t start = 0;
        while (true) {
            const auto comma = rest.find(',', start);
            values.push_back(rest.substr(start, comma - start));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        std::vector<std::vector<std::string>> next;
        for (const auto& base : out)
            for (const auto& v : values) {
                auto row = base;
                row.push_back(key + "=" + v);
                next.push_back(std::move(row));
            }
        out = std::move(next);
    }
    return out;
}

namespace detail {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
};

inline void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON config file")->required();
    sub->add_option("--out", c.out, "output directory (overrides the config)");
    sub->add_option("--override", c.overrides, "key=value, dotted keys, repeatable");
}

inline Config effective_config(const Common& c)
{
    Config cfg = load_config(c.config);
    for (const auto& kv : c.overrides)
        cfg = apply_override(cfg, kv);
    if (!c.out.empty())
        cfg.output = c.out;
    write_text(fs::path(cfg.output) / "config.json", echo_config(cfg));
    return cfg;
}

inline int cmd_run(const Config& cfg, std::ostream& os)
{
    EvolveOptions eo;
    eo.cadence = cfg.cadence;
    eo.eps_supp = cfg.eps_supp;
    eo.max_doublings = 6;
    std::vector<RadialState> states;
    eo.on_record = [&](const RadialState& s) { states.push_back(s); };
    const auto rep = evolve(cfg.problem, cfg.data, make_grid(cfg.r_max, cfg.cells), cfg.t_end, cfg.u_cap, eo);
    std::vector<RadialState> snaps;
    const std::size_t want = std::min<std::size_t>(11, states.size());
    for (std::size_t k = 0; k < want; ++k)
        snaps.push_back(states[want == 1 ? 0 : k * (states.size() - 1) / (want - 1)]);
    const fs::path dir(cfg.output);
    const auto paths = write_run_report(rep, dir);
    write_snapshots(snaps, dir);
    os << "termination " << to_string(rep.termination) << ", rows " << rep.rows();
    if (rep.blowup_time_estimate)
        os << ", T_hat " << num17(*rep.blowup_time_estimate);
    os << "\nwrote " << paths.csv.string() << "\n";
    return exit_ok;
}

struct ProfileArgs {
    std::string role = "subsolution_compact";
    double a = 1.0;
    double xi0 = 1.0;
    double sup = 1.0;
    double zeta = 1.0;
};

inline int cmd_profile(const Config& cfg, const ProfileArgs& args, std::ostream& os)
{
    const auto role = parse_profile_role(args.role);
    if (!role)
        throw ConfigError("role", "unknown profile role '" + args.role + "'");
    ProfileOptions po;
    po.f_floor = cfg.f_floor;
    SelfSimilarProfile prof;
    switch (*role) {
    case ProfileRole::subsolution_compact: prof = find_compact_subsolution_profile(cfg.problem, po); break;
    case ProfileRole::origin_regular: prof = integrate_profile_from_origin(cfg.problem, args.a, po); break;
    case ProfileRole::decreasing_interface:
        prof = find_decreasing_supersolution_profile(cfg.problem, args.xi0, po);
        break;
    case ProfileRole::combined_min: {
        FspOptions fo;
        fo.profile = po;
        const auto fsp = build_fsp_supersolution(cfg.problem, args.sup, args.zeta, fo);
        prof = fsp.function.profile;
        os << "tau " << num17(fsp.tau) << ", interface limit " << num17(fsp.interface_limit) << "\n";
        break;
    }
    }
    const auto paths = write_profile(prof, fs::path(cfg.output), "profile", cfg.f_floor);
    os << to_string(prof.role);
    if (prof.inner_interface)
        os << " xi1 " << num17(*prof.inner_interface);
    if (prof.outer_interface)
        os << " xi2 " << num17(*prof.outer_interface);
    os << "\nwrote " << paths.csv.string() << "\n";
    return exit_ok;
}

inline int cmd_stationary(const Config& cfg, std::optional<double> D, std::optional<double> R0, std::ostream& os)
{
    StationaryProfile prof;
    if (D)
        prof = integrate_stationary_profile(cfg.problem, *D);
    else {
        prof = unit_stationary_profile(cfg.problem);
        if (R0)
            prof = rescale_stationary(prof, *R0 / prof.first_zero);
    }
    const auto paths = write_stationary(prof, fs::path(cfg.output));
    os << "D " << num17(prof.D) << ", R0 " << num17(prof.first_zero) << ", W(0) " << num17(prof.origin_value())
       << "\nwrote " << paths.csv.string() << "\n";
    return exit_ok;
}

inline int cmd_phase(const Config& cfg, std::ostream& os)
{
    const auto orbit = phase_orbit_from_origin(cfg.problem);
    const auto fit = check_orbit_asymptotics(orbit);
    const fs::path dir(cfg.output);
    const auto paths = write_orbit(orbit, dir, "orbit", fit);
    const auto mapped = stationary_to_phase(unit_stationary_profile(cfg.problem));
    write_orbit(mapped, dir, "orbit_stationary");
    for (const auto& cp : phase_critical_points(cfg.problem))
        os << cp.name << " (" << num17(cp.Y) << ", " << num17(cp.Z) << ") " << to_string(cp.kind) << "\n";
    os << "slope " << num17(fit.slope) << " expected " << num17(fit.expected_slope) << "\nwrote " << paths.csv.string()
       << "\n";
    return exit_ok;
}

inline int cmd_verify(const Config& cfg, std::ostream& os)
{
    const auto res = run_scenario(cfg);
    const auto path = write_scenario_result(res, fs::path(cfg.output) / res.name);
    print_result(os, res);
    os << "wrote " << path.string() << "\n";
    return exit_code(res.verdict);
}

inline int cmd_sweep(const Config& base, const std::vector<std::string>& params, std::ostream& os)
{
    const auto grid = sweep_grid(params);
    std::vector<Config> configs;
    for (const auto& row : grid) {
        Config c = base;
        for (const auto& kv : row)
            c = apply_override(c, kv);
        configs.push_back(std::move(c));
    }
    struct Outcome {
        std::optional<Verdict> verdict;
        std::string error;
    };
    std::vector<Outcome> outcomes(configs.size());
    std::atomic<std::size_t> next{0};
    const fs::path dir(base.output);
    auto worker = [&] {
        for (std::size_t k; (k = next++) < configs.size();) {
            try {
                const auto res = run_scenario(configs[k]);
                const auto job = dir / ("job_" + std::to_string(k));
                write_text(job / "config.json", echo_config(configs[k]));
                write_scenario_result(res, job);
                outcomes[k].verdict = res.verdict;
            } catch (const std::exception& e) {
                outcomes[k].error = e.what();
            }
        }
    };
    const unsigned n = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(configs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();

    std::string summary = "job,overrides,verdict\n";
    bool any_fail = false, any_anomaly = false;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        std::string ov;
        for (const auto& kv : grid[k])
            ov += (ov.empty() ? "" : ";") + kv;
        const std::string verdict = outcomes[k].verdict ? std::string(to_string(*outcomes[k].verdict)) : "ERROR";
        summary += std::to_string(k) + ",\"" + ov + "\"," + verdict + "\n";
        os << "job " << k << " [" << ov << "] " << verdict
           << (outcomes[k].error.empty() ? "" : ": " + outcomes[k].error) << "\n";
        any_fail = any_fail || !outcomes[k].verdict || *outcomes[k].verdict == Verdict::fail;
        any_anomaly = any_anomaly || (outcomes[k].verdict && *outcomes[k].verdict == Verdict::anomaly);
    }
    write_text(dir / "summary.csv", summary);
    return any_fail ? exit_fail : any_anomaly ? exit_anomaly : exit_ok;
}

} // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 success/PASS,
/// 1 FAIL or numerical failure, 2 usage or config error, 3 ANOMALY.
inline int dispatch(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"blowuplab: porous medium diffusion with inhomogeneous reaction"};
    app.require_subcommand(1);
    detail::Common common;
    auto* run = app.add_subcommand("run", "evolve the configured initial data");
    auto* profile = app.add_subcommand("profile", "construct a self-similar profile");
    auto* stationary = app.add_subcommand("stationary", "stationary Dirichlet profile");
    auto* phase = app.add_subcommand("phase", "phase-plane orbit and critical points");
    auto* verify = app.add_subcommand("verify", "run the configured scenario");
    auto* sweep = app.add_subcommand("sweep", "run the scenario over parameter lists");
    for (auto* sub : {run, profile, stationary, phase, verify, sweep})
        detail::add_common(sub, common);

    detail::ProfileArgs pa;
    profile->add_option("--role", pa.role, "subsolution_compact, origin_regular, decreasing_interface, combined_min");
    profile->add_option("--a", pa.a, "origin value for origin_regular");
    profile->add_option("--xi0", pa.xi0, "interface for decreasing_interface");
    profile->add_option("--sup", pa.sup, "sup-norm for combined_min");
    profile->add_option("--zeta", pa.zeta, "support radius for combined_min");
    std::optional<double> D, R0;
    stationary->add_option("--D", D, "W(0)^{m-p}; default is the unit profile");
    stationary->add_option("--R0", R0, "rescale the unit profile to this first zero");
    std::vector<std::string> params;
    sweep->add_option("--param", params, "key=v1,v2,..., repeatable")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        os << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        os << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return exit_usage;
    }

    try {
        const Config cfg = detail::effective_config(common);
        if (run->parsed())
            return detail::cmd_run(cfg, os);
        if (profile->parsed())
            return detail::cmd_profile(cfg, pa, os);
        if (stationary->parsed())
            return detail::cmd_stationary(cfg, D, R0, os);
        if (phase->parsed())
            return detail::cmd_phase(cfg, os);
        if (verify->parsed())
            return detail::cmd_verify(cfg, os);
        return detail::cmd_sweep(cfg, params, os);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_fail;
    }
}

} // namespace blowuplab::io
