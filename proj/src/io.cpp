#include "harvest/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace harvest::io {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> lines(std::string_view text)
{
    std::vector<std::string_view> out;
    for (std::string_view line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!line.empty())
            out.push_back(line);
    }
    return out;
}

double parse_double(std::string_view s)
{
    const std::string buf(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size())
        throw std::runtime_error("csv: bad number '" + buf + "'");
    return v;
}

int parse_int(std::string_view s)
{
    const double v = parse_double(s);
    if (v != std::floor(v))
        throw std::runtime_error("csv: expected an integer");
    return static_cast<int>(v);
}

Scenario parse_scenario_field(std::string_view s)
{
    const auto sc = parse_scenario(s);
    if (!sc)
        throw std::runtime_error("csv: unknown scenario '" + std::string(s) + "'");
    return *sc;
}

// "rest" reads better than "inertial" in figure files.
std::string_view curve_name(Scenario s)
{
    return s == Scenario::Inertial ? std::string_view("rest") : to_string(s);
}

nlohmann::json manifest_object(const Manifest& m)
{
    return {{"command_line", m.command_line},
            {"tol", m.tol},
            {"grid", m.grid},
            {"tool_version", m.tool_version},
            {"wall_seconds", m.wall_seconds},
            {"jobs", m.jobs}};
}

} // namespace

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string record_csv_header()
{
    return "scenario,a_sigma,omega_sigma,l_sigma,p,re_x,im_x,abs_x,concurrence,p_err,x_err,status";
}

std::string record_csv_row(const obs::ObservableRecord& r)
{
    std::string row(to_string(r.scenario));
    for (double v : {r.cfg.a_sigma, r.cfg.omega_sigma, r.cfg.l_sigma, r.p_over_lambda2,
                     r.x_over_lambda2.real(), r.x_over_lambda2.imag(), std::abs(r.x_over_lambda2),
                     r.concurrence_over_lambda2, r.p_error, r.x_error}) {
        row += ',';
        row += format_double(v);
    }
    row += r.converged ? ",ok" : ",not_converged";
    return row;
}

std::string records_csv(const std::vector<obs::ObservableRecord>& rs)
{
    std::string out = record_csv_header() + "\n";
    for (const auto& r : rs)
        out += record_csv_row(r) + "\n";
    return out;
}

std::vector<obs::ObservableRecord> parse_records_csv(std::string_view text)
{
    const auto ls = lines(text);
    if (ls.empty() || ls.front() != record_csv_header())
        throw std::runtime_error("csv: missing or unexpected header");
    std::vector<obs::ObservableRecord> out;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = split(ls[i], ',');
        if (f.size() != 12)
            throw std::runtime_error("csv: expected 12 fields");
        obs::ObservableRecord r;
        r.scenario = parse_scenario_field(f[0]);
        r.cfg = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
        r.p_over_lambda2 = parse_double(f[4]);
        r.x_over_lambda2 = {parse_double(f[5]), parse_double(f[6])};
        // f[7] (abs_x) is derived
        r.concurrence_over_lambda2 = parse_double(f[8]);
        r.p_error = parse_double(f[9]);
        r.x_error = parse_double(f[10]);
        if (f[11] == "ok")
            r.converged = true;
        else if (f[11] == "not_converged")
            r.converged = false;
        else
            throw std::runtime_error("csv: bad status");
        out.push_back(r);
    }
    return out;
}

std::string_view to_string(RangeStatus s)
{
    switch (s) {
    case RangeStatus::Ok: return "ok";
    case RangeStatus::NoEntanglement: return "no_entanglement";
    case RangeStatus::BracketEscape: return "bracket_escape";
    case RangeStatus::Unverified: return "unverified";
    case RangeStatus::NotConverged: return "not_converged";
    }
    return "unknown";
}

std::optional<RangeStatus> parse_range_status(std::string_view s)
{
    for (RangeStatus st : {RangeStatus::Ok, RangeStatus::NoEntanglement, RangeStatus::BracketEscape,
                           RangeStatus::Unverified, RangeStatus::NotConverged})
        if (to_string(st) == s)
            return st;
    return std::nullopt;
}

std::string range_csv_header()
{
    return "scenario,a_sigma,omega_sigma,l_max,bracket_width,l_hi,scan_points,status";
}

std::string range_csv(const std::vector<RangeRow>& rows)
{
    std::string out = range_csv_header() + "\n";
    for (const RangeRow& r : rows) {
        out += to_string(r.scenario);
        for (double v : {r.a_sigma, r.omega_sigma, r.l_max, r.bracket_width, r.l_hi}) {
            out += ',';
            out += format_double(v);
        }
        out += ',' + std::to_string(r.scan_points);
        out += ',';
        out += to_string(r.status);
        out += '\n';
    }
    return out;
}

std::vector<RangeRow> parse_range_csv(std::string_view text)
{
    const auto ls = lines(text);
    if (ls.empty() || ls.front() != range_csv_header())
        throw std::runtime_error("csv: missing or unexpected header");
    std::vector<RangeRow> out;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = split(ls[i], ',');
        if (f.size() != 8)
            throw std::runtime_error("csv: expected 8 fields");
        RangeRow r;
        r.scenario = parse_scenario_field(f[0]);
        r.a_sigma = parse_double(f[1]);
        r.omega_sigma = parse_double(f[2]);
        r.l_max = parse_double(f[3]);
        r.bracket_width = parse_double(f[4]);
        r.l_hi = parse_double(f[5]);
        r.scan_points = parse_int(f[6]);
        const auto st = parse_range_status(f[7]);
        if (!st)
            throw std::runtime_error("csv: bad status");
        r.status = *st;
        out.push_back(r);
    }
    return out;
}

std::string manifest_json(const Manifest& m) { return manifest_object(m).dump(2) + "\n"; }

std::string records_json(const std::vector<obs::ObservableRecord>& rs, const Manifest& m)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rs) {
        arr.push_back({{"scenario", to_string(r.scenario)},
                       {"a_sigma", r.cfg.a_sigma},
                       {"omega_sigma", r.cfg.omega_sigma},
                       {"l_sigma", r.cfg.l_sigma},
                       {"p", r.p_over_lambda2},
                       {"re_x", r.x_over_lambda2.real()},
                       {"im_x", r.x_over_lambda2.imag()},
                       {"abs_x", std::abs(r.x_over_lambda2)},
                       {"concurrence", r.concurrence_over_lambda2},
                       {"p_err", r.p_error},
                       {"x_err", r.x_error},
                       {"status", r.converged ? "ok" : "not_converged"}});
    }
    return nlohmann::json{{"manifest", manifest_object(m)}, {"records", arr}}.dump(2) + "\n";
}

std::string range_json(const std::vector<RangeRow>& rows, const Manifest& m)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const RangeRow& r : rows) {
        arr.push_back({{"scenario", to_string(r.scenario)},
                       {"a_sigma", r.a_sigma},
                       {"omega_sigma", r.omega_sigma},
                       {"l_max", r.l_max},
                       {"bracket_width", r.bracket_width},
                       {"l_hi", r.l_hi},
                       {"scan_points", r.scan_points},
                       {"status", to_string(r.status)}});
    }
    return nlohmann::json{{"manifest", manifest_object(m)}, {"records", arr}}.dump(2) + "\n";
}

const std::vector<FigurePreset>& figure_presets()
{
    using range::SweepVar;
    // Only the fixed parameters are pinned; the swept ranges are ours.
    static const std::vector<FigurePreset> presets = {
        {"fig2a", PresetKind::Sweep, SweepVar::LSigma, 0.50, 0.01, 0.0, 0.1, 4.0, 100},
        {"fig2b", PresetKind::Sweep, SweepVar::LSigma, 0.50, 0.50, 0.0, 0.1, 4.0, 100},
        {"fig2c", PresetKind::Sweep, SweepVar::LSigma, 0.50, 2.00, 0.0, 0.1, 4.0, 100},
        {"fig3a", PresetKind::Sweep, SweepVar::ASigma, 0.0, 0.01, 0.50, 1e-4, 2.0, 100},
        {"fig3b", PresetKind::Sweep, SweepVar::ASigma, 0.0, 0.50, 0.50, 1e-4, 2.0, 100},
        {"fig3c", PresetKind::Sweep, SweepVar::ASigma, 0.0, 2.00, 0.50, 1e-4, 2.0, 100},
        {"fig4a", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 0.20, 0.0, 4.0, 100},
        {"fig4b", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 0.50, 0.0, 4.0, 100},
        {"fig4c", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 2.00, 0.0, 4.0, 100},
        {"fig5a", PresetKind::LMax, SweepVar::OmegaSigma, 0.01, 0.0, 0.0, 0.01, 4.0, 100},
        {"fig5b", PresetKind::LMax, SweepVar::OmegaSigma, 1.00, 0.0, 0.0, 0.01, 4.0, 100},
    };
    return presets;
}

std::optional<FigurePreset> find_preset(std::string_view name)
{
    for (const FigurePreset& p : figure_presets())
        if (p.name == name)
            return p;
    return std::nullopt;
}

const std::vector<Scenario>& figure_curves()
{
    static const std::vector<Scenario> curves = {Scenario::Parallel, Scenario::AntiParallel,
                                                 Scenario::Perpendicular, Scenario::Inertial};
    return curves;
}

std::string curve_stem(const FigurePreset& p, Scenario s)
{
    return p.name + "_" + std::string(curve_name(s));
}

void write_file(const std::string& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

} // namespace harvest::io
