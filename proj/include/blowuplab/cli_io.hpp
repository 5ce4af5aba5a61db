#pragma once

// Configuration parsing and CSV/JSON writers.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blowuplab/core.hpp"
#include "blowuplab/error.hpp"
#include "blowuplab/radial_solver.hpp"
#include "blowuplab/scenarios.hpp"
#include "blowuplab/selfsimilar.hpp"
#include "blowuplab/stationary.hpp"

namespace blowuplab::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Bad config value; `field` is the dotted key.
class ConfigError : public InvalidArgument {
public:
    ConfigError(std::string field, const std::string& what)
        : InvalidArgument(field.empty() ? what : field + ": " + what), field_(std::move(field))
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct Config {
    Problem problem;
    double r_max = 10.0;
    std::size_t cells = 2000;
    InitialDataSpec data = InitialDataSpec::bump(1.0, 1.0);
    std::optional<InitialDataSpec> data_upper; ///< comparison scenario
    std::string scenario;
    std::vector<double> c_values{0.5, 1.0, 2.0};
    double u_cap = 1e6;
    double eps_supp = 1e-10;
    double f_floor = 1e-12;
    double residual_tol = 1e-4;
    double t_end = 1e3;
    double cadence = 1e-2;
    std::string output = "out";

    friend bool operator==(const Config&, const Config&) = default;
};

inline ScenarioOptions scenario_options(const Config& c)
{
    ScenarioOptions o;
    o.r_max = c.r_max;
    o.cells = c.cells;
    o.u_cap = c.u_cap;
    o.eps_supp = c.eps_supp;
    o.t_end = c.t_end;
    o.cadence = c.cadence;
    o.residual_tol = c.residual_tol;
    o.profile.f_floor = c.f_floor;
    return o;
}

namespace detail {

inline void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys)
{
    for (const auto& [k, v] : obj.items()) {
        bool known = false;
        for (auto key : keys)
            known = known || key == k;
        if (!known)
            throw ConfigError(where.empty() ? k : std::string(where) + "." + k, "unknown key");
    }
}

inline const json& object_at(const json& j, const std::string& field)
{
    if (!j.is_object())
        throw ConfigError(field, "expected an object");
    return j;
}

inline double number(const json& obj, const char* key, const std::string& prefix, double fallback)
{
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(field, "expected a number");
    return v.get<double>();
}

inline double positive(const json& obj, const char* key, const std::string& prefix, double fallback)
{
    const double v = number(obj, key, prefix, fallback);
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(prefix.empty() ? key : prefix + "." + key, "must be positive");
    return v;
}

inline InitialDataSpec parse_data(const json& j, const std::string& field)
{
    object_at(j, field);
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ConfigError(field + ".kind", "expected one of compact_bump, threshold_tail, table");
    const auto kind = parse_data_kind(j.at("kind").get<std::string>());
    if (!kind)
        throw ConfigError(field + ".kind", "expected one of compact_bump, threshold_tail, table");
    InitialDataSpec s;
    switch (*kind) {
    case DataKind::compact_bump:
        reject_unknown(j, field, {"kind", "amplitude", "radius"});
        s = InitialDataSpec::bump(number(j, "amplitude", field, 1.0), number(j, "radius", field, 1.0));
        if (s.amplitude < 0.0)
            throw ConfigError(field + ".amplitude", "must be nonnegative");
        if (!(s.radius > 0.0))
            throw ConfigError(field + ".radius", "must be positive");
        break;
    case DataKind::threshold_tail:
        reject_unknown(j, field, {"kind", "c"});
        s = InitialDataSpec::threshold_tail(number(j, "c", field, 1.0));
        if (s.tail_coeff < 0.0)
            throw ConfigError(field + ".c", "must be nonnegative");
        break;
    case DataKind::table: {
        reject_unknown(j, field, {"kind", "rows"});
        if (!j.contains("rows") || !j.at("rows").is_array())
            throw ConfigError(field + ".rows", "expected an array of [r, value] pairs");
        std::vector<std::pair<double, double>> rows;
        for (const auto& row : j.at("rows")) {
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
                throw ConfigError(field + ".rows", "expected an array of [r, value] pairs");
            rows.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        s = InitialDataSpec::from_table(std::move(rows));
        try {
            validate(s);
        } catch (const InvalidArgument& e) {
            throw ConfigError(field + ".rows", e.what());
        }
        break;
    }
    }
    return s;
}

inline json data_json(const InitialDataSpec& s)
{
    json j;
    j["kind"] = std::string(to_string(s.kind));
    switch (s.kind) {
    case DataKind::compact_bump:
        j["amplitude"] = s.amplitude;
        j["radius"] = s.radius;
        break;
    case DataKind::threshold_tail: j["c"] = s.tail_coeff; break;
    case DataKind::table:
        j["rows"] = json::array();
        for (const auto& [r, v] : s.table)
            j["rows"].push_back({r, v});
        break;
    }
    return j;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline json problem_json(const Problem& p)
{
    return json{{"m", p.m}, {"p", p.p}, {"sigma", p.sigma}, {"N", p.dim}};
}

/// Strict parse of a JSON config: unknown keys are rejected, missing keys
/// take defaults. Syntax errors carry line and column.
inline Config parse_config(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError("", "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                                  ": " + e.what());
    }
    if (!j.is_object())
        throw ConfigError("", "config must be a JSON object");
    detail::reject_unknown(j, "", {"problem", "grid", "data", "data_upper", "scenario", "c_values", "tolerances",
                                   "t_end", "cadence", "output"});
    Config c;
    if (!j.contains("problem"))
        throw ConfigError("problem", "required");
    {
        const auto& pj = detail::object_at(j.at("problem"), "problem");
        detail::reject_unknown(pj, "problem", {"m", "p", "sigma", "N"});
        for (const char* k : {"m", "p", "sigma", "N"})
            if (!pj.contains(k))
                throw ConfigError(std::string("problem.") + k, "required");
        c.problem.m = detail::number(pj, "m", "problem", 0.0);
        c.problem.p = detail::number(pj, "p", "problem", 0.0);
        c.problem.sigma = detail::number(pj, "sigma", "problem", 0.0);
        const auto& nj = pj.at("N");
        if (!nj.is_number_integer())
            throw ConfigError("problem.N", "expected an integer");
        c.problem.dim = nj.get<int>();
        if (!(c.problem.m > 1.0))
            throw ConfigError("m", "must exceed 1");
        if (!(c.problem.p >= 1.0 && c.problem.p < c.problem.m))
            throw ConfigError("p", "must satisfy 1 <= p < m");
        if (!(c.problem.sigma > 0.0))
            throw ConfigError("sigma", "must be positive");
        if (c.problem.dim < 1)
            throw ConfigError("N", "must be at least 1");
    }
    if (j.contains("grid")) {
        const auto& gj = detail::object_at(j.at("grid"), "grid");
        detail::reject_unknown(gj, "grid", {"r_max", "cells"});
        c.r_max = detail::positive(gj, "r_max", "grid", c.r_max);
        if (gj.contains("cells")) {
            if (!gj.at("cells").is_number_integer() || gj.at("cells").get<long long>() < 16)
                throw ConfigError("grid.cells", "expected an integer >= 16");
            c.cells = gj.at("cells").get<std::size_t>();
        }
    }
    if (j.contains("data"))
        c.data = detail::parse_data(j.at("data"), "data");
    if (j.contains("data_upper"))
        c.data_upper = detail::parse_data(j.at("data_upper"), "data_upper");
    if (j.contains("scenario")) {
        if (!j.at("scenario").is_string())
            throw ConfigError("scenario", "expected a string");
        c.scenario = j.at("scenario").get<std::string>();
        if (std::find(std::begin(scenario_names), std::end(scenario_names), c.scenario) == std::end(scenario_names))
            throw ConfigError("scenario", "unknown scenario '" + c.scenario + "'");
    }
    if (j.contains("c_values")) {
        const auto& cv = j.at("c_values");
        if (!cv.is_array() || cv.empty())
            throw ConfigError("c_values", "expected a nonempty array of numbers");
        c.c_values.clear();
        for (const auto& v : cv) {
            if (!v.is_number() || v.get<double>() < 0.0)
                throw ConfigError("c_values", "entries must be nonnegative numbers");
            c.c_values.push_back(v.get<double>());
        }
    }
    if (j.contains("tolerances")) {
        const auto& tj = detail::object_at(j.at("tolerances"), "tolerances");
        detail::reject_unknown(tj, "tolerances", {"u_cap", "eps_supp", "f_floor", "residual_tol"});
        c.u_cap = detail::positive(tj, "u_cap", "tolerances", c.u_cap);
        c.eps_supp = detail::positive(tj, "eps_supp", "tolerances", c.eps_supp);
        c.f_floor = detail::positive(tj, "f_floor", "tolerances", c.f_floor);
        c.residual_tol = detail::positive(tj, "residual_tol", "tolerances", c.residual_tol);
    }
    c.t_end = detail::positive(j, "t_end", "", c.t_end);
    c.cadence = detail::positive(j, "cadence", "", c.cadence);
    if (j.contains("output")) {
        if (!j.at("output").is_string() || j.at("output").get<std::string>().empty())
            throw ConfigError("output", "expected a nonempty string");
        c.output = j.at("output").get<std::string>();
    }
    return c;
}

inline json config_json(const Config& c)
{
    json j;
    j["problem"] = problem_json(c.problem);
    j["grid"] = {{"r_max", c.r_max}, {"cells", c.cells}};
    j["data"] = detail::data_json(c.data);
    if (c.data_upper)
        j["data_upper"] = detail::data_json(*c.data_upper);
    if (!c.scenario.empty())
        j["scenario"] = c.scenario;
    j["c_values"] = c.c_values;
    j["tolerances"] = {{"u_cap", c.u_cap}, {"eps_supp", c.eps_supp}, {"f_floor", c.f_floor},
                       {"residual_tol", c.residual_tol}};
    j["t_end"] = c.t_end;
    j["cadence"] = c.cadence;
    j["output"] = c.output;
    return j;
}

/// Effective config as JSON text; parse_config(echo_config(c)) == c.
inline std::string echo_config(const Config& c) { return config_json(c).dump(2) + "\n"; }

/// Applies `key=value` with a dotted key (e.g. `tolerances.u_cap=1e4`).
/// The value is read as JSON, falling back to a plain string.
inline Config apply_override(const Config& c, std::string_view kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("", "override must look like key=value, got '" + std::string(kv) + "'");
    const std::string key(kv.substr(0, eq));
    const std::string raw(kv.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;
    json j = config_json(c);
    json::json_pointer ptr;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        ptr /= key.substr(start, dot - start);
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    j[ptr] = value;
    return parse_config(j.dump());
}

inline Config load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Writers. Numbers in CSV use 17 significant digits.

inline std::string num17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw IoError("write failed: " + path.string());
}

inline std::string csv_text(const std::vector<std::string>& header, const std::vector<const std::vector<double>*>& cols)
{
    std::string s;
    for (std::size_t k = 0; k < header.size(); ++k)
        s += (k ? "," : "") + header[k];
    s += '\n';
    const std::size_t n = cols.empty() ? 0 : cols.front()->size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (k)
                s += ',';
            s += num17((*cols[k])[i]);
        }
        s += '\n';
    }
    return s;
}

struct Paths {
    fs::path csv;
    fs::path json;
};

inline json run_sidecar(const RunReport& rep)
{
    json j;
    j["termination"] = std::string(to_string(rep.termination));
    j["blowup_time_estimate"] = rep.blowup_time_estimate ? json(*rep.blowup_time_estimate) : json(nullptr);
    j["blowup_time_ci"] =
        rep.blowup_time_ci ? json::array({rep.blowup_time_ci->first, rep.blowup_time_ci->second}) : json(nullptr);
    j["problem"] = problem_json(rep.problem);
    j["grid"] = {{"r_max", rep.grid.r_max}, {"cells", rep.grid.cells}};
    return j;
}

/// `stem.csv` with columns t,sup_norm,mass,zeta and `stem.json`.
inline Paths write_run_report(const RunReport& rep, const fs::path& dir, const std::string& stem = "run")
{
    Paths p{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_text(p.csv, csv_text({"t", "sup_norm", "mass", "zeta"}, {&rep.times, &rep.sup_norm, &rep.mass, &rep.zeta}));
    write_text(p.json, run_sidecar(rep).dump(2) + "\n");
    return p;
}

/// Sidecar fields read back from JSON.
struct RunSidecar {
    Termination termination = Termination::reached_t_end;
    std::optional<double> blowup_time_estimate;
    std::optional<std::pair<double, double>> blowup_time_ci;
    Problem problem;
    RadialGrid grid;

    friend bool operator==(const RunSidecar&, const RunSidecar&) = default;
};

inline RunSidecar sidecar_of(const RunReport& rep)
{
    return {rep.termination, rep.blowup_time_estimate, rep.blowup_time_ci, rep.problem, rep.grid};
}

inline RunSidecar parse_run_sidecar(std::string_view text)
{
    try {
        const auto j = json::parse(text);
        RunSidecar s;
        const auto term = j.at("termination").get<std::string>();
        bool found = false;
        for (auto t : {Termination::reached_t_end, Termination::blowup_detected, Termination::domain_exhausted})
            if (to_string(t) == term) {
                s.termination = t;
                found = true;
            }
        if (!found)
            throw IoError("unknown termination '" + term + "'");
        if (!j.at("blowup_time_estimate").is_null())
            s.blowup_time_estimate = j.at("blowup_time_estimate").get<double>();
        if (!j.at("blowup_time_ci").is_null())
            s.blowup_time_ci = std::pair{j.at("blowup_time_ci")[0].get<double>(), j.at("blowup_time_ci")[1].get<double>()};
        const auto& pj = j.at("problem");
        s.problem = {pj.at("m").get<double>(), pj.at("p").get<double>(), pj.at("sigma").get<double>(),
                     pj.at("N").get<int>()};
        s.grid = {j.at("grid").at("r_max").get<double>(), j.at("grid").at("cells").get<std::size_t>()};
        return s;
    } catch (const json::exception& e) {
        throw IoError(std::string("run sidecar: ") + e.what());
    }
}

/// Long-format snapshots: one row per (t, r) with columns t,r,u.
inline fs::path write_snapshots(const std::vector<RadialState>& states, const fs::path& dir,
                                const std::string& stem = "snapshots")
{
    std::string s = "t,r,u\n";
    for (const auto& st : states)
        for (std::size_t i = 0; i < st.u.size(); ++i)
            s += num17(st.t) + "," + num17(st.grid.node(i)) + "," + num17(st.u[i]) + "\n";
    const auto path = dir / (stem + ".csv");
    write_text(path, s);
    return path;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// `stem.csv` with columns xi,f and a sidecar {role, xi1, xi2, a, D, problem}.
inline Paths write_profile(const SelfSimilarProfile& prof, const fs::path& dir, const std::string& stem = "profile",
                           double f_floor = 1e-12)
{
    Paths p{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_text(p.csv, csv_text({"xi", "f"}, {&prof.xi, &prof.f}));
    json j;
    j["role"] = std::string(to_string(prof.role));
    j["xi1"] = optional_json(prof.inner_interface);
    j["xi2"] = optional_json(prof.outer_interface);
    j["a"] = optional_json(prof.origin_value);
    j["D"] = nullptr;
    j["problem"] = problem_json(prof.problem);
    j["max_f"] = prof.max_value();
    if (prof.crossing)
        j["crossing"] = *prof.crossing;
    if (prof.asymptote_coeff)
        j["asymptote_coeff"] = *prof.asymptote_coeff;
    if (!prof.flux.empty()) {
        const auto r = profile_residual(prof, f_floor);
        j["residual"] = {{"max_abs", r.max_abs}, {"max_rel", r.max_rel}, {"checked", r.checked}};
    }
    write_text(p.json, j.dump(2) + "\n");
    return p;
}

/// `stem.csv` with columns r,W and a sidecar with D, R0 and the residual.
inline Paths write_stationary(const StationaryProfile& prof, const fs::path& dir, const std::string& stem = "stationary")
{
    Paths p{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_text(p.csv, csv_text({"r", "W"}, {&prof.r, &prof.W}));
    const auto res = stationary_residual(prof);
    json j;
    j["D"] = prof.D;
    j["R0"] = prof.first_zero;
    j["W0"] = prof.origin_value();
    j["problem"] = problem_json(prof.problem);
    j["residual"] = {{"max_abs", res.max_abs}, {"normalized", res.normalized}, {"checked", res.checked}};
    write_text(p.json, j.dump(2) + "\n");
    return p;
}

/// `stem.csv` with columns eta,Y,Z and a sidecar with the asymptotic fit
/// and the critical points.
inline Paths write_orbit(const PhaseOrbit& orbit, const fs::path& dir, const std::string& stem = "orbit",
                         const std::optional<OrbitFit>& fit = std::nullopt)
{
    Paths p{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_text(p.csv, csv_text({"eta", "Y", "Z"}, {&orbit.eta, &orbit.Y, &orbit.Z}));
    json j;
    j["problem"] = problem_json(orbit.problem);
    if (fit)
        j["fit"] = {{"slope", fit->slope}, {"expected_slope", fit->expected_slope}, {"K", fit->K},
                    {"theta", fit->theta}, {"samples", fit->samples}};
    j["critical_points"] = json::array();
    for (const auto& cp : phase_critical_points(orbit.problem))
        j["critical_points"].push_back({{"name", cp.name}, {"Y", cp.Y}, {"Z", cp.Z}, {"eig1", cp.eig1},
                                        {"eig2", cp.eig2}, {"kind", std::string(to_string(cp.kind))}});
    const auto res = phase_residual(orbit);
    j["residual"] = {{"max_rel", res.max_rel}, {"checked", res.checked}};
    write_text(p.json, j.dump(2) + "\n");
    return p;
}

inline json result_json(const ScenarioResult& r, const std::vector<std::string>& artifacts = {})
{
    json j;
    j["name"] = r.name;
    j["problem"] = problem_json(r.problem);
    j["inputs"] = json::object();
    for (const auto& [k, v] : r.inputs)
        j["inputs"][k] = v;
    j["verdict"] = std::string(to_string(r.verdict));
    j["metrics"] = json::object();
    for (const auto& [k, v] : r.metrics)
        j["metrics"][k] = v;
    j["criteria"] = json::array();
    for (const auto& c : r.criteria)
        j["criteria"].push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value},
                                 {"threshold", c.threshold}, {"detail", c.detail}});
    j["notes"] = r.notes;
    j["artifacts"] = artifacts;
    return j;
}

/// "lower[h/2]" -> "lower_h2", "c=0.5" -> "c_0.5".
inline std::string file_stem(const std::string& label)
{
    std::string out;
    for (char ch : label) {
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-')
            out += ch;
        else if (ch == '[' || ch == '=' || ch == ' ')
            out += '_';
    }
    return out;
}

/// Scenario directory: result.json plus the CSV/JSON pairs of every run and
/// profile it holds. Returns the path of result.json.
inline fs::path write_scenario_result(const ScenarioResult& r, const fs::path& dir)
{
    std::vector<std::string> artifacts;
    for (const auto& [label, rep] : r.runs) {
        const auto p = write_run_report(rep, dir, "run_" + file_stem(label));
        artifacts.push_back(p.csv.filename().string());
        artifacts.push_back(p.json.filename().string());
    }
    for (const auto& [label, prof] : r.profiles) {
        const auto p = write_profile(prof, dir, "profile_" + file_stem(label));
        artifacts.push_back(p.csv.filename().string());
        artifacts.push_back(p.json.filename().string());
    }
    for (const auto& [label, prof] : r.stationary) {
        const auto p = write_stationary(prof, dir, "stationary_" + file_stem(label));
        artifacts.push_back(p.csv.filename().string());
        artifacts.push_back(p.json.filename().string());
    }
    const auto path = dir / "result.json";
    write_text(path, result_json(r, artifacts).dump(2) + "\n");
    return path;
}

} // namespace blowuplab::io
