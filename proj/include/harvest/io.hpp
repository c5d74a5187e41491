#ifndef HARVEST_IO_HPP
#define HARVEST_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "harvest/observables.hpp"
#include "harvest/rangefinder.hpp"

namespace harvest::io {

inline constexpr std::string_view kToolVersion = "1.0.0";

// scenario,a_sigma,omega_sigma,l_sigma,p,re_x,im_x,abs_x,concurrence,p_err,x_err,status
std::string record_csv_header();
std::string record_csv_row(const obs::ObservableRecord& r);
std::string records_csv(const std::vector<obs::ObservableRecord>& rs);
// Inverse of records_csv; std::runtime_error on malformed input.
std::vector<obs::ObservableRecord> parse_records_csv(std::string_view text);

enum class RangeStatus { Ok, NoEntanglement, BracketEscape, Unverified, NotConverged };
std::string_view to_string(RangeStatus s);
std::optional<RangeStatus> parse_range_status(std::string_view s);

struct RangeRow {
    Scenario scenario = Scenario::Inertial;
    double a_sigma = 0.0;
    double omega_sigma = 0.0;
    double l_max = 0.0;
    double bracket_width = 0.0;
    double l_hi = 0.0;
    int scan_points = 0;
    RangeStatus status = RangeStatus::Ok;
};

// scenario,a_sigma,omega_sigma,l_max,bracket_width,l_hi,scan_points,status
std::string range_csv_header();
std::string range_csv(const std::vector<RangeRow>& rows);
std::vector<RangeRow> parse_range_csv(std::string_view text);

// Shortest text that reads back to the same double is not required; a
// fixed 17 significant digits is, so output never depends on the platform's
// shortest-representation algorithm.
std::string format_double(double v);

struct Manifest {
    std::string command_line;
    double tol = obs::kDefaultTolerance;
    std::string grid;  // free-form echo of the sweep or scan settings
    std::string tool_version{kToolVersion};
    double wall_seconds = 0.0;
    int jobs = 1;
};

std::string manifest_json(const Manifest& m);
std::string records_json(const std::vector<obs::ObservableRecord>& rs, const Manifest& m);
std::string range_json(const std::vector<RangeRow>& rows, const Manifest& m);

// Figure presets: the fixed parameters of each curve family.
enum class PresetKind { Sweep, LMax };

struct FigurePreset {
    std::string name;
    PresetKind kind = PresetKind::Sweep;
    range::SweepVar vary = range::SweepVar::LSigma;
    double a_sigma = 0.0;
    double omega_sigma = 0.0;
    double l_sigma = 0.0;
    double from = 0.0;
    double to = 0.0;
    int points = 100;
};

const std::vector<FigurePreset>& figure_presets();
std::optional<FigurePreset> find_preset(std::string_view name);

// Curves drawn in every figure: the three accelerated scenarios and rest.
const std::vector<Scenario>& figure_curves();
// File stem for a curve, e.g. "fig2c_parallel" or "fig2c_rest".
std::string curve_stem(const FigurePreset& p, Scenario s);

void write_file(const std::string& path, std::string_view content);

} // namespace harvest::io

#endif // HARVEST_IO_HPP
