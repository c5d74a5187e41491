#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "harvest/io.hpp"

using namespace harvest;
using namespace harvest::io;

namespace {

std::vector<obs::ObservableRecord> some_records()
{
    std::vector<obs::ObservableRecord> rs;
    rs.push_back(obs::evaluate(Scenario::Inertial, {0.0, 0.0, 1.0}));
    rs.push_back(obs::evaluate(Scenario::Parallel, {0.5, 0.5, 0.5}));
    rs.push_back(obs::evaluate(Scenario::AntiParallel, {0.5, 2.0, 1.3}));
    rs.push_back(obs::evaluate(Scenario::Perpendicular, {1.0, 1.0, 2.0}));
    obs::ObservableRecord odd;
    odd.scenario = Scenario::Perpendicular;
    odd.cfg = {1e-300, -0.1, 7.0};
    odd.x_over_lambda2 = {-1.0 / 3.0, 5e-324};
    odd.p_over_lambda2 = 0.1;
    odd.converged = false;
    rs.push_back(odd);
    return rs;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("format_double prints 17 significant digits")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-10) == "-2.5000000000000002e-10");
    for (double v : {0.1, 1.0 / 3.0, 12.875796157736083, 5e-324, -1e308, 0.0})
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("record CSV header")
{
    CHECK(record_csv_header() ==
          "scenario,a_sigma,omega_sigma,l_sigma,p,re_x,im_x,abs_x,concurrence,p_err,x_err,status");
    const std::string csv = records_csv({});
    CHECK(csv == record_csv_header() + "\n");
}

TEST_CASE("record CSV round trips byte for byte")
{
    const auto rs = some_records();
    const std::string csv = records_csv(rs);
    const auto back = parse_records_csv(csv);
    REQUIRE(back.size() == rs.size());
    CHECK(records_csv(back) == csv);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(back[i].scenario == rs[i].scenario);
        CHECK(back[i].x_over_lambda2 == rs[i].x_over_lambda2);
        CHECK(back[i].p_over_lambda2 == rs[i].p_over_lambda2);
        CHECK(back[i].converged == rs[i].converged);
    }
    CHECK(csv.find("not_converged") != std::string::npos);
}

TEST_CASE("record CSV parser rejects malformed input")
{
    CHECK_THROWS_AS(parse_records_csv(""), std::runtime_error);
    CHECK_THROWS_AS(parse_records_csv("a,b\n"), std::runtime_error);
    const std::string h = record_csv_header() + "\n";
    CHECK_THROWS_AS(parse_records_csv(h + "inertial,0,0,1\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_records_csv(h + "sideways,0,0,1,0,0,0,0,0,0,0,ok\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_records_csv(h + "inertial,0,0,1,0,0,0,0,0,0,0,maybe\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_records_csv(h + "inertial,0,x,1,0,0,0,0,0,0,0,ok\n"), std::runtime_error);
    CHECK(parse_records_csv(h + "inertial,0,0,1,0,0,0,0,0,0,0,ok\r\n").size() == 1);
}

TEST_CASE("range CSV round trips byte for byte")
{
    std::vector<RangeRow> rows = {
        {Scenario::Inertial, 0.0, 0.01, 1.4854, 6.0e-5, 12.0, 80, RangeStatus::Ok},
        {Scenario::Parallel, 1.0, 3.0, 0.1 + 0.2, 1e-4, 12.0, 160, RangeStatus::Unverified},
        {Scenario::AntiParallel, 0.01, 4.0, 0.0, 0.0, 12.0, 640, RangeStatus::NoEntanglement},
        {Scenario::Perpendicular, 1.0, 0.5, 0.0, 0.0, 24.0, 80, RangeStatus::BracketEscape},
        {Scenario::Perpendicular, 1.0, 0.6, 2.0, 1e-4, 12.0, 80, RangeStatus::NotConverged},
    };
    const std::string csv = range_csv(rows);
    CHECK(csv.rfind(range_csv_header() + "\n", 0) == 0);
    const auto back = parse_range_csv(csv);
    REQUIRE(back.size() == rows.size());
    CHECK(range_csv(back) == csv);
    CHECK(back[1].l_max == 0.1 + 0.2);
    CHECK(back[2].status == RangeStatus::NoEntanglement);
    CHECK_THROWS_AS(parse_range_csv(range_csv_header() + "\ninertial,0,0,1,0,12,80,fine\n"),
                    std::runtime_error);
    CHECK_THROWS_AS(parse_range_csv(range_csv_header() + "\ninertial,0,0,1,0,12,80.5,ok\n"),
                    std::runtime_error);
}

TEST_CASE("range status names")
{
    for (RangeStatus s : {RangeStatus::Ok, RangeStatus::NoEntanglement, RangeStatus::BracketEscape,
                          RangeStatus::Unverified, RangeStatus::NotConverged})
        CHECK(parse_range_status(to_string(s)) == s);
    CHECK_FALSE(parse_range_status("OK").has_value());
}

TEST_CASE("JSON carries the same numbers as CSV")
{
    const auto rs = some_records();
    Manifest m;
    m.command_line = "harvest sweep --points 5";
    m.grid = "l_sigma 0.5..2 x5";
    m.jobs = 2;
    const auto j = nlohmann::json::parse(records_json(rs, m));
    CHECK(j["manifest"]["command_line"] == m.command_line);
    CHECK(j["manifest"]["tool_version"] == std::string(kToolVersion));
    CHECK(j["manifest"]["tol"].get<double>() == m.tol);
    const auto& arr = j["records"];
    REQUIRE(arr.size() == rs.size());
    const auto back = parse_records_csv(records_csv(rs));
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(arr[i]["scenario"] == std::string(to_string(rs[i].scenario)));
        CHECK(arr[i]["l_sigma"].get<double>() == back[i].cfg.l_sigma);
        CHECK(arr[i]["p"].get<double>() == back[i].p_over_lambda2);
        CHECK(arr[i]["re_x"].get<double>() == back[i].x_over_lambda2.real());
        CHECK(arr[i]["im_x"].get<double>() == back[i].x_over_lambda2.imag());
        CHECK(arr[i]["concurrence"].get<double>() == back[i].concurrence_over_lambda2);
        CHECK(arr[i]["status"] == (rs[i].converged ? "ok" : "not_converged"));
    }
}

TEST_CASE("range JSON and manifest JSON parse")
{
    const std::vector<RangeRow> rows = {{Scenario::Parallel, 1.0, 3.0, 2.5, 1e-4, 12.0, 80, RangeStatus::Ok}};
    const auto j = nlohmann::json::parse(range_json(rows, {}));
    CHECK(j["records"][0]["l_max"].get<double>() == 2.5);
    CHECK(j["records"][0]["scan_points"].get<int>() == 80);
    const auto mj = nlohmann::json::parse(manifest_json({}));
    for (const char* key : {"command_line", "tol", "grid", "tool_version", "wall_seconds", "jobs"})
        CHECK(mj.contains(key));
}

TEST_CASE("figure preset table")
{
    using range::SweepVar;
    struct Expected {
        const char* name;
        PresetKind kind;
        SweepVar vary;
        double a, omega, l;
    };
    // fig2*: a = 0.50, gaps 0.01 / 0.50 / 2.00, vs L
    // fig3*: L = 0.50, gaps 0.01 / 0.50 / 2.00, vs a
    // fig4*: a = 0.50, L = 0.20 / 0.50 / 2.00, vs gap
    // fig5*: a = 0.01 / 1.00, L_max vs gap
    const Expected expected[] = {
        {"fig2a", PresetKind::Sweep, SweepVar::LSigma, 0.50, 0.01, 0.0},
        {"fig2b", PresetKind::Sweep, SweepVar::LSigma, 0.50, 0.50, 0.0},
        {"fig2c", PresetKind::Sweep, SweepVar::LSigma, 0.50, 2.00, 0.0},
        {"fig3a", PresetKind::Sweep, SweepVar::ASigma, 0.0, 0.01, 0.50},
        {"fig3b", PresetKind::Sweep, SweepVar::ASigma, 0.0, 0.50, 0.50},
        {"fig3c", PresetKind::Sweep, SweepVar::ASigma, 0.0, 2.00, 0.50},
        {"fig4a", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 0.20},
        {"fig4b", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 0.50},
        {"fig4c", PresetKind::Sweep, SweepVar::OmegaSigma, 0.50, 0.0, 2.00},
        {"fig5a", PresetKind::LMax, SweepVar::OmegaSigma, 0.01, 0.0, 0.0},
        {"fig5b", PresetKind::LMax, SweepVar::OmegaSigma, 1.00, 0.0, 0.0},
    };
    REQUIRE(figure_presets().size() == std::size(expected));
    for (const Expected& c : expected) {
        INFO(c.name);
        const auto p = find_preset(c.name);
        REQUIRE(p.has_value());
        CHECK(p->kind == c.kind);
        CHECK(p->vary == c.vary);
        if (c.vary != SweepVar::ASigma)
            CHECK(p->a_sigma == c.a);
        if (c.vary != SweepVar::OmegaSigma)
            CHECK(p->omega_sigma == c.omega);
        if (c.kind == PresetKind::Sweep && c.vary != SweepVar::LSigma)
            CHECK(p->l_sigma == c.l);
        CHECK(p->points >= 100);
        CHECK(p->from < p->to);
    }
    CHECK_FALSE(find_preset("fig6").has_value());
    // a sweeps start close enough to zero to show the rest limit
    CHECK(find_preset("fig3a")->from <= 1e-3);
}

TEST_CASE("curve stems")
{
    const auto p = *find_preset("fig2c");
    CHECK(curve_stem(p, Scenario::Parallel) == "fig2c_parallel");
    CHECK(curve_stem(p, Scenario::AntiParallel) == "fig2c_antiparallel");
    CHECK(curve_stem(p, Scenario::Inertial) == "fig2c_rest");
    CHECK(figure_curves().size() == 4);
}

TEST_CASE("write_file writes exact bytes and reports failures")
{
    const auto dir = std::filesystem::temp_directory_path() / "harvest_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "x.csv";
    const std::string content = records_csv(some_records());
    write_file(path.string(), content);
    CHECK(slurp(path) == content);
    write_file(path.string(), "short\n");
    CHECK(slurp(path) == "short\n");
    CHECK_THROWS_AS(write_file((dir / "missing" / "x.csv").string(), "a"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
