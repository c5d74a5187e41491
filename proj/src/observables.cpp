#include "harvest/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "harvest/specfun.hpp"

namespace harvest::obs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrtPi = 1.7724538509055160273;
// exp(-v^2) < 1e-18 for v beyond this.
constexpr double kProbabilityCutoff = 6.4378981;
// Roots closer than this to an x-window end push the end outward.
constexpr double kEdgeClearance = 0.01;
// Below this distance from a tangency the y-integrand is extrapolated.
constexpr double kDegenerateGap = 1e-11;
// Never bridge more than this fraction of a segment in the mapped variable.
constexpr double kBridgeFraction = 1e-5;
constexpr double kFeatureClearance = 1e-4;
// Relative floor for the x-integral, which grows without bound near y = L
// at small acceleration.
constexpr double kInnerRelTol = 1e-11;
// At large gaps the x-integral is a small remainder of an oscillating
// integrand; rounding in the integrand caps its accuracy relative to int |f|.
constexpr double kInnerNoiseFloor = 1e-12;

struct OuterSegment {
    double lo;
    double hi;
    bool singular_lo;
    bool singular_hi;
};

struct MappedPoint {
    double y;
    double jacobian;
    double gap;  // distance to the singular end, or +inf
    double t;
};

MappedPoint map_segment(const OuterSegment& seg, double t)
{
    const double w = seg.hi - seg.lo;
    if (!seg.singular_lo && !seg.singular_hi)
        return {seg.lo + w * t, w, std::numeric_limits<double>::infinity(), t};
    const double r = seg.singular_lo ? t : 1.0 - t;
    const double y = seg.singular_lo ? seg.lo + w * r * r : seg.hi - w * r * r;
    // y is rounded; the Jacobian must follow the gap actually represented,
    // or the 1/sqrt growth of the integrand turns the rounding into noise.
    const double gap = seg.singular_lo ? y - seg.lo : seg.hi - y;
    const double r_actual = std::sqrt(gap / w);
    return {y, 2.0 * w * r_actual, gap, r};
}

std::vector<OuterSegment> outer_segments(const kernels::Kernel& kernel, double y_max)
{
    struct Mark {
        double y;
        bool singular;
    };
    std::vector<Mark> marks;
    for (double y : kernel.feature_points(y_max))
        marks.push_back({y, false});
    for (double y : kernel.tangency_points(y_max, -kGaussianWindow, kGaussianWindow))
        marks.push_back({y, true});
    std::sort(marks.begin(), marks.end(), [](const Mark& m, const Mark& n) { return m.y < n.y; });

    std::vector<Mark> cleaned;
    for (const Mark& m : marks) {
        if (!(m.y > 0.0 && m.y < y_max))
            continue;
        if (!cleaned.empty() && m.y - cleaned.back().y <= 1e-12 * std::max(1.0, m.y)) {
            cleaned.back().singular = cleaned.back().singular || m.singular;
            continue;
        }
        cleaned.push_back(m);
    }

    // A kink right next to a singular end would leave a sliver segment whose
    // mapped variable cannot resolve the singularity; the kink is dropped.
    std::vector<Mark> kept;
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
        const Mark& m = cleaned[i];
        bool crowded = false;
        if (!m.singular) {
            const double clearance = kFeatureClearance * std::max(1.0, m.y);
            for (std::size_t j = 0; j < cleaned.size(); ++j)
                crowded = crowded || (cleaned[j].singular && std::abs(cleaned[j].y - m.y) < clearance);
        }
        if (!crowded)
            kept.push_back(m);
    }
    cleaned = std::move(kept);

    std::vector<OuterSegment> segments;
    double prev = 0.0;
    bool prev_singular = false;
    auto push = [&](double lo, double hi, bool slo, bool shi) {
        if (slo && shi) {
            const double mid = 0.5 * (lo + hi);
            segments.push_back({lo, mid, true, false});
            segments.push_back({mid, hi, false, true});
        } else {
            segments.push_back({lo, hi, slo, shi});
        }
    };
    for (const Mark& m : cleaned) {
        push(prev, m.y, prev_singular, m.singular);
        prev = m.y;
        prev_singular = m.singular;
    }
    push(prev, y_max, prev_singular, false);
    return segments;
}

} // namespace

double tolerance_scale(double omega_sigma)
{
    return std::max(std::exp(-omega_sigma * omega_sigma), 1e-10);
}

double transition_probability_rest(double omega_sigma)
{
    const double w = omega_sigma;
    return (std::exp(-w * w) - kSqrtPi * w * specfun::erfc_real(w)) / (4.0 * kPi);
}

double probability_integrand_shape(double s)
{
    s = std::abs(s);
    if (s < 0.25) {
        const double s2 = s * s;
        // Maclaurin series of 1/s^2 - csch^2 s.
        return 1.0 / 3.0 +
               s2 * (-1.0 / 15.0 +
                     s2 * (2.0 / 189.0 +
                           s2 * (-1.0 / 675.0 +
                                 s2 * (2.0 / 10395.0 +
                                       s2 * (-1382.0 / 58046625.0 + s2 * (4.0 / 1403325.0))))));
    }
    if (s > 20.0)
        return 1.0 / (s * s) - 4.0 * std::exp(-2.0 * s);
    const double sh = std::sinh(s);
    return 1.0 / (s * s) - 1.0 / (sh * sh);
}

quad::QuadratureResult transition_probability(const PhysicalConfig& cfg, double tol)
{
    cfg.validate();
    const double a = cfg.a_sigma;
    const double rest = transition_probability_rest(cfg.omega_sigma);
    if (a < kMinAcceleration) {
        quad::QuadratureResult r;
        r.value = rest;
        return r;
    }
    const double alpha = 1.0 / (a * a);
    const double beta = 2.0 * cfg.omega_sigma / a;
    const double coeff = a / (4.0 * std::pow(kPi, 1.5));
    auto f = [&](double s) -> Complex {
        return std::cos(s * beta) * std::exp(-s * s * alpha) * probability_integrand_shape(s);
    };
    const double inner_tol = tol * tolerance_scale(cfg.omega_sigma) / coeff;
    quad::QuadratureResult r = quad::integrate_semi_infinite(f, inner_tol, kProbabilityCutoff * a);
    r.value = coeff * r.value.real() + rest;
    r.abs_error_estimate *= coeff;
    return r;
}

Complex x_rest(const PhysicalConfig& cfg)
{
    cfg.validate();
    const double l = cfg.l_sigma;
    const Complex w = specfun::scaled_cerfc({-0.5 * l, 0.0});
    const double mag = std::exp(-cfg.omega_sigma * cfg.omega_sigma) / (4.0 * kSqrtPi * l);
    return Complex(0.0, -mag) * w;
}

quad::QuadratureResult x_inner(const kernels::Kernel& kernel, double omega_sigma, double y,
                               double tol)
{
    const kernels::Slice slice = kernel.at(y);
    const double search = kGaussianWindow + 1.0;

    struct Root {
        double x;
        double slope;
        double prefactor;
    };
    std::vector<Root> roots;
    for (int k = 0; k < slice.term_count(); ++k) {
        const quad::PoleSet ps = slice.roots(k, -search, search);
        for (std::size_t i = 0; i < ps.size(); ++i)
            roots.push_back({ps.locations()[i], ps.slopes()[i], kernel.prefactor(k)});
    }

    double lo = -kGaussianWindow;
    double hi = kGaussianWindow;
    for (int pass = 0; pass < 4; ++pass) {
        for (const Root& r : roots) {
            if (std::abs(r.x - lo) < kEdgeClearance)
                lo = r.x - 2.0 * kEdgeClearance;
            if (std::abs(r.x - hi) < kEdgeClearance)
                hi = r.x + 2.0 * kEdgeClearance;
        }
    }

    const double y_part = 0.25 * y * y;
    auto gauss = [&](double x) -> Complex {
        const double env = std::exp(-0.25 * x * x - y_part);
        const double phase = -omega_sigma * x;
        return {env * std::cos(phase), env * std::sin(phase)};
    };

    std::vector<quad::Pole> poles;
    Complex delta_sum{0.0, 0.0};
    for (const Root& r : roots) {
        if (r.x <= lo || r.x >= hi)
            continue;
        const Complex g = gauss(r.x);
        poles.push_back({r.x, r.prefactor * g / r.slope});
        delta_sum += r.prefactor * g / std::abs(r.slope);
    }

    auto f = [&](double x) -> Complex { return gauss(x) * slice.value(x); };
    quad::AdaptiveOptions opts;
    opts.rel_tol = kInnerRelTol;
    opts.abs_rel_floor = kInnerNoiseFloor;
    // The relative target refers to the whole inner value, delta part included.
    const double tol_eff = std::max(tol, kInnerRelTol * kPi * std::abs(delta_sum));
    quad::QuadratureResult res =
        quad::integrate_pv_residues(f, std::move(poles), lo, hi, tol_eff, opts);
    res.value += Complex(0.0, kPi) * delta_sum;
    return res;
}

quad::QuadratureResult x_nonlocal(Scenario scenario, const PhysicalConfig& cfg, double tol)
{
    if (scenario == Scenario::Parallel) {
        // Even in L: validate with |L|, the kernel itself accepts either sign.
        PhysicalConfig check = cfg;
        check.l_sigma = std::abs(cfg.l_sigma);
        check.validate();
    } else {
        cfg.validate();
    }
    if (!(tol > 0.0))
        throw std::invalid_argument("x_nonlocal: tolerance must be positive");
    if (scenario == Scenario::Inertial || cfg.a_sigma < kMinAcceleration) {
        PhysicalConfig rest = cfg;
        rest.l_sigma = std::abs(cfg.l_sigma);
        quad::QuadratureResult r;
        r.value = x_rest(rest);
        return r;
    }

    const kernels::Kernel kernel(scenario, cfg);
    const double y_max = kGaussianWindow;
    const std::vector<OuterSegment> segments = outer_segments(kernel, y_max);
    const double outer_tol = tol * tolerance_scale(cfg.omega_sigma);
    const double inner_tol = 0.1 * outer_tol;

    long inner_evals = 0;
    bool inner_ok = true;
    // The inner error enters the outer integral multiplied by the Jacobian,
    // so the inner tolerance is loosened where the Jacobian is small.
    auto mapped_value = [&](const OuterSegment& seg, double t) -> Complex {
        const MappedPoint mp = map_segment(seg, t);
        const double jac = std::max(mp.jacobian, 1e-12 * (seg.hi - seg.lo));
        const quad::QuadratureResult r =
            x_inner(kernel, cfg.omega_sigma, mp.y, inner_tol / jac);
        inner_evals += r.evaluations;
        inner_ok = inner_ok && r.converged;
        return mp.jacobian * r.value;
    };

    auto integrand = [&](double s) -> Complex {
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, s)),
                                             segments.size() - 1);
        const OuterSegment& seg = segments[k];
        const double t = s - static_cast<double>(k);
        const MappedPoint mp = map_segment(seg, t);
        const double gap_min =
            std::min(kDegenerateGap * std::max(1.0, seg.singular_lo ? seg.lo : seg.hi),
                     kBridgeFraction * kBridgeFraction * (seg.hi - seg.lo));
        if (mp.gap < gap_min) {
            // The mapped integrand is smooth in the local parameter; bridge
            // the last stretch before the double root linearly.
            const double r1 = std::sqrt(gap_min / (seg.hi - seg.lo));
            const double r2 = 2.0 * r1;
            const Complex v1 = mapped_value(seg, seg.singular_lo ? r1 : 1.0 - r1);
            const Complex v2 = mapped_value(seg, seg.singular_lo ? r2 : 1.0 - r2);
            return v1 + (mp.t - r1) * (v2 - v1) / (r2 - r1);
        }
        return mapped_value(seg, t);
    };

    std::vector<double> breaks(segments.size() + 1);
    for (std::size_t i = 0; i < breaks.size(); ++i)
        breaks[i] = static_cast<double>(i);
    // Where |X| is far above exp(-Omega^2) the scaled absolute tolerance is
    // needlessly strict; accept tol relative to |X| as well.
    quad::AdaptiveOptions opts;
    opts.rel_tol = tol;
    // Inner values carry kInnerRelTol relative error; with strong cancellation
    // in y nothing below that floor is reachable.
    opts.abs_rel_floor = 10.0 * kInnerRelTol;
    quad::QuadratureResult r = quad::integrate_finite(integrand, breaks, outer_tol, opts);
    r.value = -r.value;
    r.evaluations += inner_evals;
    r.converged = r.converged && inner_ok;
    return r;
}

double concurrence_from(double p, Complex x) { return 2.0 * std::max(0.0, std::abs(x) - p); }

ObservableRecord evaluate(Scenario scenario, const PhysicalConfig& cfg, double tol)
{
    ObservableRecord rec;
    rec.scenario = scenario;
    rec.cfg = cfg;
    quad::QuadratureResult p;
    if (scenario == Scenario::Inertial) {
        cfg.validate();
        p.value = transition_probability_rest(cfg.omega_sigma);
    } else {
        p = transition_probability(cfg, tol);
    }
    const quad::QuadratureResult x = x_nonlocal(scenario, cfg, tol);
    rec.p_over_lambda2 = p.value.real();
    rec.x_over_lambda2 = x.value;
    rec.concurrence_over_lambda2 = concurrence_from(rec.p_over_lambda2, rec.x_over_lambda2);
    rec.p_error = p.abs_error_estimate;
    rec.x_error = x.abs_error_estimate;
    rec.evaluations = p.evaluations + x.evaluations;
    rec.converged = p.converged && x.converged;
    return rec;
}

double concurrence(Scenario scenario, const PhysicalConfig& cfg, double tol)
{
    return evaluate(scenario, cfg, tol).concurrence_over_lambda2;
}

double resonance_gap(const PhysicalConfig& cfg)
{
    const double a = cfg.a_sigma;
    const double al = a * cfg.l_sigma;
    if (!(a > 0.0) || !std::isfinite(al))
        throw std::domain_error("resonance_gap: requires a_sigma > 0");
    if (!(al < 4.0))
        throw std::domain_error("resonance_gap: defined only for aL < 4");
    return std::acos(0.5 * (2.0 - al)) / a;
}

} // namespace harvest::obs
