#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "harvest/rangefinder.hpp"
#include "oracles.hpp"

using namespace harvest;
using namespace harvest::range;

namespace {

double f_rest(double omega, double l)
{
    return oracle::abs_x_rest(omega, l) - oracle::p_rest(omega);
}

// last sign change of |x_rest| - P_rest on a dense uniform scan, then bisection
double l_max_rest_oracle(double omega)
{
    const double lo = 0.02, hi = 12.0;
    const int n = 20000;
    double last = -1.0;
    double prev = f_rest(omega, lo);
    for (int i = 1; i <= n; ++i) {
        const double l = lo + (hi - lo) * i / n;
        const double v = f_rest(omega, l);
        if (prev > 0.0 && v <= 0.0)
            last = lo + (hi - lo) * (i - 1) / n;
        prev = v;
    }
    REQUIRE(last > 0.0);
    double a = last, b = last + (hi - lo) / n;
    while (b - a > 1e-9) {
        const double m = 0.5 * (a + b);
        (f_rest(omega, m) > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

} // namespace

TEST_CASE("sweep var names")
{
    CHECK(parse_sweep_var("l_sigma") == SweepVar::LSigma);
    CHECK(parse_sweep_var("a") == SweepVar::ASigma);
    CHECK(parse_sweep_var("omega-sigma") == SweepVar::OmegaSigma);
    CHECK_FALSE(parse_sweep_var("t").has_value());
    for (SweepVar v : {SweepVar::LSigma, SweepVar::ASigma, SweepVar::OmegaSigma})
        CHECK(parse_sweep_var(to_string(v)) == v);
}

TEST_CASE("SweepSpec validation")
{
    SweepSpec s;
    s.from = 1.0;
    s.to = 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.to = 2.0;
    s.points = 1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.points = 2;
    s.tol = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.tol = 1e-9;
    CHECK_NOTHROW(s.validate());
    s.to = NAN;
    CHECK_THROWS_AS(grid(s), std::invalid_argument);
}

TEST_CASE("grid is inclusive and uniform")
{
    SweepSpec s;
    s.from = 0.3;
    s.to = 1.5;
    s.points = 20;
    const auto g = grid(s);
    REQUIRE(g.size() == 20);
    CHECK(g.front() == 0.3);
    CHECK(g.back() == 1.5);
    for (std::size_t i = 1; i < g.size(); ++i)
        CHECK(g[i] - g[i - 1] == doctest::Approx(1.2 / 19).epsilon(1e-12));
}

TEST_CASE("config_at replaces only the swept field")
{
    SweepSpec s;
    s.fixed = {0.5, 2.0, 0.7};
    s.vary = SweepVar::ASigma;
    const PhysicalConfig c = config_at(s, 0.9);
    CHECK(c.a_sigma == 0.9);
    CHECK(c.omega_sigma == 2.0);
    CHECK(c.l_sigma == 0.7);
}

TEST_CASE("sweep: inertial concurrence decreases on [0.5, 2]")
{
    SweepSpec s;
    s.scenario = Scenario::Inertial;
    s.vary = SweepVar::LSigma;
    s.from = 0.5;
    s.to = 2.0;
    s.points = 4;
    s.fixed = {0.0, 0.0, 1.0};
    const auto rs = sweep(s);
    REQUIRE(rs.size() == 4);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double l = 0.5 + 0.5 * static_cast<double>(i);
        CHECK(rs[i].cfg.l_sigma == l);
        const double want = std::max(0.0, 2.0 * f_rest(0.0, l));
        CHECK(rs[i].concurrence_over_lambda2 == doctest::Approx(want).epsilon(1e-12));
    }
    // L = 1.5 and 2 lie past l_max (about 1.49), where C is exactly zero
    CHECK(rs[0].concurrence_over_lambda2 > rs[1].concurrence_over_lambda2);
    CHECK(rs[1].concurrence_over_lambda2 > 0.0);
    CHECK(rs[2].concurrence_over_lambda2 == 0.0);
    CHECK(rs[3].concurrence_over_lambda2 == 0.0);
    for (std::size_t i = 1; i < rs.size(); ++i)
        CHECK(rs[i].concurrence_over_lambda2 <= rs[i - 1].concurrence_over_lambda2);
}

TEST_CASE("sweep: two points are the endpoints")
{
    SweepSpec s;
    s.scenario = Scenario::Parallel;
    s.vary = SweepVar::OmegaSigma;
    s.from = 0.5;
    s.to = 1.0;
    s.points = 2;
    s.fixed = {0.5, 0.0, 0.5};
    const auto rs = sweep(s);
    REQUIRE(rs.size() == 2);
    const auto a = obs::evaluate(Scenario::Parallel, {0.5, 0.5, 0.5});
    const auto b = obs::evaluate(Scenario::Parallel, {0.5, 1.0, 0.5});
    CHECK(rs[0].concurrence_over_lambda2 == a.concurrence_over_lambda2);
    CHECK(rs[0].x_over_lambda2 == a.x_over_lambda2);
    CHECK(rs[1].concurrence_over_lambda2 == b.concurrence_over_lambda2);
    CHECK(rs[1].p_over_lambda2 == b.p_over_lambda2);
}

TEST_CASE("sweep: a from 1e-4 starts at the rest value")
{
    for (Scenario sc : {Scenario::Parallel, Scenario::AntiParallel, Scenario::Perpendicular}) {
        SweepSpec s;
        s.scenario = sc;
        s.vary = SweepVar::ASigma;
        s.from = 1e-4;
        s.to = 1.0;
        s.points = 3;
        s.fixed = {0.0, 0.5, 0.5};
        const auto rs = sweep(s);
        const auto rest = obs::evaluate(Scenario::Inertial, {0.0, 0.5, 0.5});
        INFO(to_string(sc));
        CHECK(rs.front().concurrence_over_lambda2 == doctest::Approx(rest.concurrence_over_lambda2).epsilon(1e-3));
        CHECK(rs.front().p_over_lambda2 == doctest::Approx(rest.p_over_lambda2).epsilon(1e-3));
    }
}

TEST_CASE("sweep output does not depend on the number of jobs")
{
    SweepSpec s;
    s.scenario = Scenario::AntiParallel;
    s.vary = SweepVar::LSigma;
    s.from = 0.2;
    s.to = 3.0;
    s.points = 9;
    s.fixed = {0.5, 0.5, 1.0};
    const auto one = sweep(s, 1);
    const auto four = sweep(s, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].x_over_lambda2 == four[i].x_over_lambda2);
        CHECK(one[i].p_over_lambda2 == four[i].p_over_lambda2);
        CHECK(one[i].concurrence_over_lambda2 == four[i].concurrence_over_lambda2);
    }
}

TEST_CASE("sweep progress callback counts every point")
{
    SweepSpec s;
    s.from = 0.5;
    s.to = 1.5;
    s.points = 5;
    int calls = 0, last = 0;
    sweep(s, 2, [&](int done, int total) {
        ++calls;
        last = done;
        CHECK(total == 5);
    });
    CHECK(calls == 5);
    CHECK(last == 5);
}

TEST_CASE("parallel_for visits each index once and rethrows")
{
    std::vector<int> hits(100, 0);
    parallel_for(100, 3, [&](int i) { ++hits[i]; });
    for (int h : hits)
        CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 2, [](int i) {
                        if (i == 7)
                            throw std::runtime_error("x");
                    }),
                    std::runtime_error);
}

TEST_CASE("l_max inertial at small gap against the closed-form scan")
{
    const double golden = 1.485423375940;  // l_max_rest_oracle(0.01), frozen
    CHECK(l_max_rest_oracle(0.01) == doctest::Approx(golden).epsilon(1e-9));
    const RangeResult r = l_max(Scenario::Inertial, 0.0, 0.01);
    CHECK(r.verified);
    CHECK(r.converged);
    CHECK(r.bracket_width <= 1e-4);
    CHECK(std::fabs(r.l_max_sigma - golden) <= r.bracket_width);
    CHECK(r.scan_points == 80);
}

TEST_CASE("l_max inertial on a gap grid against the closed-form scan")
{
    for (double w : {0.5, 1.0, 2.0, 3.0}) {
        const RangeResult r = l_max(Scenario::Inertial, 0.0, w);
        INFO("omega = " << w);
        CHECK(std::fabs(r.l_max_sigma - l_max_rest_oracle(w)) <= r.bracket_width);
    }
}

TEST_CASE("l_max boundary holds at twice the bracket width")
{
    struct Case {
        Scenario s;
        double a, w;
    };
    for (const Case& c : {Case{Scenario::Inertial, 0.0, 1.0}, Case{Scenario::Parallel, 1.0, 3.0},
                          Case{Scenario::AntiParallel, 0.5, 0.5}}) {
        const RangeResult r = l_max(c.s, c.a, c.w);
        INFO(to_string(c.s));
        CHECK(r.verified);
        auto f = [&](double l) {
            const PhysicalConfig cfg{c.a, c.w, l};
            return std::abs(obs::x_nonlocal(c.s, cfg).value) - obs::transition_probability(cfg).value.real();
        };
        if (c.s == Scenario::Inertial) {
            CHECK(f_rest(c.w, r.l_max_sigma - 2.0 * r.bracket_width) > 0.0);
            CHECK(f_rest(c.w, r.l_max_sigma + 2.0 * r.bracket_width) <= 0.0);
        } else {
            CHECK(f(r.l_max_sigma - 2.0 * r.bracket_width) > 0.0);
            CHECK(f(r.l_max_sigma + 2.0 * r.bracket_width) <= 0.0);
        }
    }
}

TEST_CASE("l_max at a = 1, gap 3: parallel beyond rest, the others short of it")
{
    const double rest = l_max(Scenario::Inertial, 0.0, 3.0).l_max_sigma;
    CHECK(l_max(Scenario::Parallel, 1.0, 3.0).l_max_sigma > rest);
    CHECK(l_max(Scenario::AntiParallel, 1.0, 3.0).l_max_sigma < rest);
    CHECK(l_max(Scenario::Perpendicular, 1.0, 3.0).l_max_sigma < rest);
}

TEST_CASE("inertial l_max mostly increases with the gap")
{
    const int n = 30;
    std::vector<double> lm;
    for (int i = 0; i < n; ++i)
        lm.push_back(l_max(Scenario::Inertial, 0.0, 0.01 + (3.0 - 0.01) * i / (n - 1)).l_max_sigma);
    int up = 0;
    for (int i = 1; i < n; ++i)
        up += lm[i] >= lm[i - 1];
    CHECK(up >= 0.9 * (n - 1));
}

TEST_CASE("l_max is deterministic")
{
    const RangeResult a = l_max(Scenario::Perpendicular, 1.0, 1.0);
    const RangeResult b = l_max(Scenario::Perpendicular, 1.0, 1.0);
    CHECK(a.l_max_sigma == b.l_max_sigma);
    CHECK(a.bracket_width == b.bracket_width);
    CHECK(a.evaluations == b.evaluations);
    RangeOptions o;
    o.jobs = 3;
    CHECK(l_max(Scenario::Perpendicular, 1.0, 1.0, o).l_max_sigma == a.l_max_sigma);
}

TEST_CASE("l_max errors")
{
    RangeOptions o;
    o.l_hi = 1.0;
    CHECK_THROWS_AS(l_max(Scenario::Inertial, 0.0, 0.01, o), BracketEscapeError);

    // Entanglement only below l_lo: nothing found on the scan.
    RangeOptions far;
    far.l_lo = 5.0;
    far.l_hi = 12.0;
    CHECK_THROWS_AS(l_max(Scenario::Inertial, 0.0, 0.01, far), NoEntanglementError);

    CHECK_THROWS_AS(l_max(Scenario::Parallel, 0.0, 1.0), std::invalid_argument);
    RangeOptions bad;
    bad.l_lo = 0.0;
    CHECK_THROWS_AS(l_max(Scenario::Inertial, 0.0, 1.0, bad), std::invalid_argument);
    bad = {};
    bad.scan_points = 1;
    CHECK_THROWS_AS(l_max(Scenario::Inertial, 0.0, 1.0, bad), std::invalid_argument);
    bad = {};
    bad.bracket = 0.0;
    CHECK_THROWS_AS(l_max(Scenario::Inertial, 0.0, 1.0, bad), std::invalid_argument);
}
