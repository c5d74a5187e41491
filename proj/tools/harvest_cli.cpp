// harvest: command-line front end for the harvesting library.
//
//   harvest eval   --scenario S [--a-sigma A] --omega-sigma W --l-sigma L
//   harvest sweep  --scenario S --vary l_sigma --from 0.5 --to 2 --points 4 ...
//   harvest lmax   --scenario S --a-sigma A --omega-sigma 0.5,1,2
//   harvest figure fig2a [fig2b ...|all] --out DIR
//
// Exit codes: 0 ok, 1 bad arguments, 2 numerical failure.

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "harvest/io.hpp"
#include "harvest/observables.hpp"
#include "harvest/rangefinder.hpp"

namespace {

using namespace harvest;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a command may read. Flags fill these first; the config file
// only fills what is still empty.
struct Options {
    std::optional<std::string> scenario;
    std::optional<double> a_sigma;
    std::optional<double> omega_sigma;
    std::vector<double> omega_list;  // lmax only
    std::optional<double> l_sigma;
    std::optional<double> tol;
    std::optional<std::string> format;
    std::optional<std::string> out;
    std::optional<int> jobs;
    std::optional<std::string> config;
    std::optional<std::string> vary;
    std::optional<double> from;
    std::optional<double> to;
    std::optional<int> points;
    std::optional<double> l_hi;
    std::vector<std::string> presets;
};

double parse_number(std::string_view key, std::string_view text)
{
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        throw UsageError("config: '" + std::string(key) + "' needs a number, got '" +
                         std::string(text) + "'");
    return v;
}

int parse_count(std::string_view key, std::string_view text)
{
    int v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        throw UsageError("config: '" + std::string(key) + "' needs an integer");
    return v;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_list(std::string_view key, std::string_view text)
{
    std::vector<double> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_number(key, trim(item)));
    return out;
}

template <class T>
void fill(std::optional<T>& slot, T value)
{
    if (!slot)
        slot = std::move(value);
}

// `key = value` lines; '#' starts a comment. Keys are the long flag names,
// with '-' or '_'.
void apply_config(Options& o)
{
    if (!o.config)
        return;
    std::ifstream in(*o.config);
    if (!in)
        throw UsageError("cannot read config file " + *o.config);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        for (char& c : key)
            if (c == '_')
                c = '-';
        if (key == "scenario") fill(o.scenario, value);
        else if (key == "a-sigma") fill(o.a_sigma, parse_number(key, value));
        else if (key == "omega-sigma") {
            const auto list = parse_list(key, value);
            if (o.omega_list.empty() && !o.omega_sigma) {
                o.omega_list = list;
                if (list.size() == 1)
                    o.omega_sigma = list.front();
            }
        }
        else if (key == "l-sigma") fill(o.l_sigma, parse_number(key, value));
        else if (key == "tol") fill(o.tol, parse_number(key, value));
        else if (key == "format") fill(o.format, value);
        else if (key == "out") fill(o.out, value);
        else if (key == "jobs") fill(o.jobs, parse_count(key, value));
        else if (key == "vary") fill(o.vary, value);
        else if (key == "from") fill(o.from, parse_number(key, value));
        else if (key == "to") fill(o.to, parse_number(key, value));
        else if (key == "points") fill(o.points, parse_count(key, value));
        else if (key == "l-hi") fill(o.l_hi, parse_number(key, value));
        else
            throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
}

int resolve_jobs(const Options& o)
{
    if (o.jobs) {
        if (*o.jobs < 1)
            throw UsageError("--jobs must be at least 1");
        return *o.jobs;
    }
    if (const char* env = std::getenv("HARVEST_JOBS"); env && *env) {
        const int n = parse_count("HARVEST_JOBS", env);
        if (n < 1)
            throw UsageError("HARVEST_JOBS must be at least 1");
        return n;
    }
    return 0;  // machine parallelism
}

int effective_jobs(int jobs)
{
    return jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

double resolve_tol(const Options& o)
{
    const double tol = o.tol.value_or(obs::kDefaultTolerance);
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw UsageError("--tol must be positive");
    return tol;
}

bool want_json(const Options& o)
{
    const std::string f = o.format.value_or("csv");
    if (f == "csv")
        return false;
    if (f == "json")
        return true;
    throw UsageError("--format must be csv or json");
}

Scenario resolve_scenario(const Options& o)
{
    if (!o.scenario)
        throw UsageError("--scenario is required");
    const auto s = parse_scenario(*o.scenario);
    if (!s)
        throw UsageError("unknown scenario '" + *o.scenario + "'");
    return *s;
}

double resolve_acceleration(const Options& o, Scenario s)
{
    if (s == Scenario::Inertial)
        return o.a_sigma.value_or(0.0);
    if (!o.a_sigma)
        throw UsageError("--a-sigma is required for accelerated scenarios");
    if (!(*o.a_sigma > 0.0))
        throw UsageError("accelerated scenarios need --a-sigma > 0");
    return *o.a_sigma;
}

double required(const std::optional<double>& v, const char* flag)
{
    if (!v)
        throw UsageError(std::string(flag) + " is required");
    return *v;
}

void validate_config(const PhysicalConfig& cfg)
{
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void save(const std::string& path, std::string_view content)
{
    try {
        io::write_file(path, content);
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

void emit(const Options& o, const std::string& content, const io::Manifest& m, bool json)
{
    if (!o.out) {
        std::cout << content << std::flush;
        return;
    }
    save(*o.out, content);
    if (!json)
        save(*o.out + ".manifest.json", io::manifest_json(m));
}

class Progress {
public:
    explicit Progress(std::string label) : label_(std::move(label)) {}
    void operator()(int done, int total)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (done == total || done % 10 == 0)
            std::cerr << label_ << ' ' << done << '/' << total << '\n';
    }

private:
    std::string label_;
    std::mutex mutex_;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string echo(double v) { return io::format_double(v); }

std::string sweep_grid_echo(const range::SweepSpec& s)
{
    std::string g = "scenario=" + std::string(to_string(s.scenario)) + " vary=" +
           std::string(range::to_string(s.vary)) + " from=" + echo(s.from) + " to=" + echo(s.to) +
           " points=" + std::to_string(s.points);
    if (s.vary != range::SweepVar::ASigma)
        g += " a_sigma=" + echo(s.fixed.a_sigma);
    if (s.vary != range::SweepVar::OmegaSigma)
        g += " omega_sigma=" + echo(s.fixed.omega_sigma);
    if (s.vary != range::SweepVar::LSigma)
        g += " l_sigma=" + echo(s.fixed.l_sigma);
    return g;
}

std::string lmax_grid_echo(Scenario s, double a, const std::vector<double>& omegas,
                           const range::RangeOptions& r)
{
    std::string g = "scenario=" + std::string(to_string(s)) + " a_sigma=" + echo(a) + " omega_sigma=";
    for (std::size_t i = 0; i < omegas.size(); ++i)
        g += (i ? "," : "") + echo(omegas[i]);
    g += " l_lo=" + echo(r.l_lo) + " l_hi=" + echo(r.l_hi) + " scan_points=" +
         std::to_string(r.scan_points) + " max_scan_points=" + std::to_string(r.max_scan_points) +
         " bracket=" + echo(r.bracket);
    return g;
}

bool all_converged(const std::vector<obs::ObservableRecord>& rs)
{
    for (const auto& r : rs)
        if (!r.converged)
            return false;
    return true;
}

// ---------------------------------------------------------------------------

int cmd_eval(const Options& o, const std::string& cmdline)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = resolve_scenario(o);
    const PhysicalConfig cfg{resolve_acceleration(o, s), required(o.omega_sigma, "--omega-sigma"),
                             required(o.l_sigma, "--l-sigma")};
    validate_config(cfg);
    const double tol = resolve_tol(o);
    const bool json = want_json(o);

    const obs::ObservableRecord r = obs::evaluate(s, cfg, tol);
    io::Manifest m;
    m.command_line = cmdline;
    m.tol = tol;
    m.grid = "scenario=" + std::string(to_string(s)) + " a_sigma=" + echo(cfg.a_sigma) +
             " omega_sigma=" + echo(cfg.omega_sigma) + " l_sigma=" + echo(cfg.l_sigma);
    m.wall_seconds = seconds_since(t0);
    m.jobs = 1;
    emit(o, json ? io::records_json({r}, m) : io::records_csv({r}), m, json);
    if (!r.converged)
        throw NumericalError("quadrature did not converge");
    return kExitOk;
}

range::SweepSpec sweep_spec(const Options& o)
{
    range::SweepSpec spec;
    spec.scenario = resolve_scenario(o);
    if (!o.vary)
        throw UsageError("--vary is required");
    const auto v = range::parse_sweep_var(*o.vary);
    if (!v)
        throw UsageError("--vary must be l_sigma, a_sigma or omega_sigma");
    spec.vary = *v;
    spec.from = required(o.from, "--from");
    spec.to = required(o.to, "--to");
    spec.points = o.points.value_or(100);
    spec.tol = resolve_tol(o);
    spec.fixed.a_sigma = spec.vary == range::SweepVar::ASigma ? 1.0 : resolve_acceleration(o, spec.scenario);
    spec.fixed.omega_sigma =
        spec.vary == range::SweepVar::OmegaSigma ? 0.0 : required(o.omega_sigma, "--omega-sigma");
    spec.fixed.l_sigma = spec.vary == range::SweepVar::LSigma ? 1.0 : required(o.l_sigma, "--l-sigma");
    try {
        spec.validate();
        for (double x : range::grid(spec)) {
            const PhysicalConfig c = range::config_at(spec, x);
            c.validate();
            if (spec.scenario != Scenario::Inertial && !(c.a_sigma > 0.0))
                throw std::invalid_argument("accelerated scenarios need a_sigma > 0 at every grid point");
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return spec;
}

int cmd_sweep(const Options& o, const std::string& cmdline)
{
    const auto t0 = std::chrono::steady_clock::now();
    const range::SweepSpec spec = sweep_spec(o);
    const bool json = want_json(o);
    const int jobs = resolve_jobs(o);

    Progress progress("sweep");
    const auto rs = range::sweep(spec, jobs, std::ref(progress));
    io::Manifest m;
    m.command_line = cmdline;
    m.tol = spec.tol;
    m.grid = sweep_grid_echo(spec);
    m.wall_seconds = seconds_since(t0);
    m.jobs = effective_jobs(jobs);
    emit(o, json ? io::records_json(rs, m) : io::records_csv(rs), m, json);
    if (!all_converged(rs))
        throw NumericalError("some sweep points did not converge");
    return kExitOk;
}

// One L_max query. A bracket escape is retried with l_hi doubled a few times
// before it counts as a failure.
io::RangeRow lmax_row(Scenario s, double a, double omega, range::RangeOptions ropts)
{
    io::RangeRow row;
    row.scenario = s;
    row.a_sigma = a;
    row.omega_sigma = omega;
    for (int attempt = 0;; ++attempt) {
        row.l_hi = ropts.l_hi;
        try {
            const range::RangeResult r = range::l_max(s, a, omega, ropts);
            row.l_max = r.l_max_sigma;
            row.bracket_width = r.bracket_width;
            row.scan_points = r.scan_points;
            row.status = !r.converged ? io::RangeStatus::NotConverged
                         : !r.verified ? io::RangeStatus::Unverified
                                       : io::RangeStatus::Ok;
            return row;
        } catch (const range::NoEntanglementError&) {
            row.l_max = 0.0;
            row.scan_points = ropts.scan_points;
            row.status = io::RangeStatus::NoEntanglement;
            return row;
        } catch (const range::BracketEscapeError&) {
            if (attempt == 3) {
                row.l_max = ropts.l_hi;
                row.scan_points = ropts.scan_points;
                row.status = io::RangeStatus::BracketEscape;
                return row;
            }
            ropts.l_hi *= 2.0;
        }
    }
}

std::vector<io::RangeRow> lmax_rows(Scenario s, double a, const std::vector<double>& omegas,
                                    const range::RangeOptions& ropts, int jobs, Progress& progress)
{
    std::vector<io::RangeRow> rows(omegas.size());
    std::atomic<int> done{0};
    const int n = static_cast<int>(omegas.size());
    range::parallel_for(n, jobs, [&](int i) {
        rows[i] = lmax_row(s, a, omegas[i], ropts);
        progress(++done, n);
    });
    return rows;
}

void check_rows(const std::vector<io::RangeRow>& rows)
{
    for (const auto& r : rows) {
        if (r.status == io::RangeStatus::BracketEscape)
            throw NumericalError("L_max bracket escaped l_hi at omega_sigma = " + echo(r.omega_sigma));
        if (r.status == io::RangeStatus::NotConverged)
            throw NumericalError("quadrature did not converge at omega_sigma = " + echo(r.omega_sigma));
    }
}

int cmd_lmax(const Options& o, const std::string& cmdline)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = resolve_scenario(o);
    const double a = resolve_acceleration(o, s);
    std::vector<double> omegas = o.omega_list;
    if (omegas.empty() && o.omega_sigma)
        omegas = {*o.omega_sigma};
    if (o.from || o.to || o.points) {
        if (!omegas.empty())
            throw UsageError("give either --omega-sigma or --from/--to/--points, not both");
        range::SweepSpec g;
        g.vary = range::SweepVar::OmegaSigma;
        g.from = required(o.from, "--from");
        g.to = required(o.to, "--to");
        g.points = o.points.value_or(100);
        try {
            omegas = range::grid(g);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (omegas.empty())
        throw UsageError("--omega-sigma (or --from/--to/--points) is required");
    for (double w : omegas)
        validate_config({a, w, 1.0});

    range::RangeOptions ropts;
    ropts.tol = resolve_tol(o);
    if (o.l_hi) {
        if (!(*o.l_hi > ropts.l_lo))
            throw UsageError("--l-hi must exceed " + echo(ropts.l_lo));
        ropts.l_hi = *o.l_hi;
    }
    const bool json = want_json(o);
    const int jobs = resolve_jobs(o);

    Progress progress("lmax");
    const auto rows = lmax_rows(s, a, omegas, ropts, jobs, progress);
    io::Manifest m;
    m.command_line = cmdline;
    m.tol = ropts.tol;
    m.grid = lmax_grid_echo(s, a, omegas, ropts);
    m.wall_seconds = seconds_since(t0);
    m.jobs = effective_jobs(jobs);
    emit(o, json ? io::range_json(rows, m) : io::range_csv(rows), m, json);
    check_rows(rows);
    return kExitOk;
}

int cmd_figure(const Options& o, const std::string& cmdline)
{
    std::vector<io::FigurePreset> presets;
    for (const std::string& name : o.presets) {
        if (name == "all") {
            for (const auto& p : io::figure_presets())
                presets.push_back(p);
            continue;
        }
        const auto p = io::find_preset(name);
        if (!p)
            throw UsageError("unknown preset '" + name + "'");
        presets.push_back(*p);
    }
    if (presets.empty())
        throw UsageError("name at least one preset (fig2a ... fig5b, or all)");
    const double tol = resolve_tol(o);
    const int jobs = resolve_jobs(o);
    if (o.format && *o.format != "csv")
        throw UsageError("figure writes CSV only");
    const std::filesystem::path dir = o.out.value_or(".");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw UsageError("cannot create output directory " + dir.string());

    bool failed = false;
    for (const io::FigurePreset& p : presets) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string grids;
        for (Scenario s : io::figure_curves()) {
            const std::string stem = io::curve_stem(p, s);
            Progress progress(stem);
            std::string csv;
            if (p.kind == io::PresetKind::Sweep) {
                range::SweepSpec spec;
                spec.scenario = s;
                spec.vary = p.vary;
                spec.from = p.from;
                spec.to = p.to;
                spec.points = p.points;
                spec.fixed = {p.a_sigma, p.omega_sigma, p.l_sigma};
                spec.tol = tol;
                const auto rs = range::sweep(spec, jobs, std::ref(progress));
                failed = failed || !all_converged(rs);
                csv = io::records_csv(rs);
                grids += stem + ": " + sweep_grid_echo(spec) + "\n";
            } else {
                range::SweepSpec g;
                g.vary = range::SweepVar::OmegaSigma;
                g.from = p.from;
                g.to = p.to;
                g.points = p.points;
                const auto omegas = range::grid(g);
                range::RangeOptions ropts;
                ropts.tol = tol;
                const double a = s == Scenario::Inertial ? 0.0 : p.a_sigma;
                const auto rows = lmax_rows(s, a, omegas, ropts, jobs, progress);
                for (const auto& r : rows)
                    failed = failed || r.status == io::RangeStatus::BracketEscape ||
                             r.status == io::RangeStatus::NotConverged;
                csv = io::range_csv(rows);
                grids += stem + ": " + lmax_grid_echo(s, a, omegas, ropts) + "\n";
            }
            save((dir / (stem + ".csv")).string(), csv);
        }
        io::Manifest m;
        m.command_line = cmdline;
        m.tol = tol;
        m.grid = grids;
        m.wall_seconds = seconds_since(t0);
        m.jobs = effective_jobs(jobs);
        save((dir / (p.name + ".manifest.json")).string(), io::manifest_json(m));
    }
    if (failed)
        throw NumericalError("some curve points did not converge");
    return kExitOk;
}

// ---------------------------------------------------------------------------

void add_physics(CLI::App* sub, Options& o)
{
    sub->add_option("--scenario", o.scenario, "inertial|parallel|antiparallel|perpendicular");
    sub->add_option("--a-sigma", o.a_sigma, "proper acceleration times sigma");
    sub->add_option("--l-sigma", o.l_sigma, "separation over sigma");
}

void add_common(CLI::App* sub, Options& o)
{
    sub->add_option("--tol", o.tol, "absolute tolerance (default 1e-9)");
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_option("--config", o.config, "key = value file; flags take precedence");
}

std::string joined(int argc, char** argv)
{
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i)
            s += ' ';
        s += argv[i];
    }
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Entanglement harvesting observables for accelerated detectors"};
    app.require_subcommand(1);

    auto* eval = app.add_subcommand("eval", "evaluate one configuration");
    add_physics(eval, o);
    eval->add_option("--omega-sigma", o.omega_sigma, "energy gap times sigma");
    eval->add_option("--format", o.format, "csv|json");
    add_common(eval, o);

    auto* sweep = app.add_subcommand("sweep", "vary one parameter over a uniform grid");
    add_physics(sweep, o);
    sweep->add_option("--omega-sigma", o.omega_sigma, "energy gap times sigma");
    sweep->add_option("--vary", o.vary, "l_sigma|a_sigma|omega_sigma");
    sweep->add_option("--from", o.from, "first grid value");
    sweep->add_option("--to", o.to, "last grid value");
    sweep->add_option("--points", o.points, "grid points (default 100)");
    sweep->add_option("--format", o.format, "csv|json");
    sweep->add_option("--jobs", o.jobs, "worker threads (default HARVEST_JOBS or all cores)");
    add_common(sweep, o);

    auto* lmax = app.add_subcommand("lmax", "largest separation with positive concurrence");
    lmax->add_option("--scenario", o.scenario, "inertial|parallel|antiparallel|perpendicular");
    lmax->add_option("--a-sigma", o.a_sigma, "proper acceleration times sigma");
    lmax->add_option("--omega-sigma", o.omega_list, "comma-separated gaps")->delimiter(',');
    lmax->add_option("--from", o.from, "first gap of a uniform grid");
    lmax->add_option("--to", o.to, "last gap of a uniform grid");
    lmax->add_option("--points", o.points, "grid points (default 100)");
    lmax->add_option("--l-hi", o.l_hi, "upper end of the separation scan (default 12)");
    lmax->add_option("--format", o.format, "csv|json");
    lmax->add_option("--jobs", o.jobs, "worker threads (default HARVEST_JOBS or all cores)");
    add_common(lmax, o);

    auto* figure = app.add_subcommand("figure", "write the CSVs behind a figure preset");
    figure->add_option("presets", o.presets, "fig2a ... fig5b, or all")->required();
    figure->add_option("--tol", o.tol, "absolute tolerance (default 1e-9)");
    figure->add_option("--out", o.out, "output directory (default .)");
    figure->add_option("--jobs", o.jobs, "worker threads (default HARVEST_JOBS or all cores)");
    figure->add_option("--format", o.format, "csv");
    figure->add_option("--config", o.config, "key = value file; flags take precedence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const std::string cmdline = joined(argc, argv);
    try {
        apply_config(o);
        if (*eval)
            return cmd_eval(o, cmdline);
        if (*sweep)
            return cmd_sweep(o, cmdline);
        if (*lmax)
            return cmd_lmax(o, cmdline);
        return cmd_figure(o, cmdline);
    } catch (const UsageError& e) {
        std::cerr << "harvest: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "harvest: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "harvest: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "harvest: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "harvest: " << e.what() << '\n';
        return kExitNumerical;
    }
}
