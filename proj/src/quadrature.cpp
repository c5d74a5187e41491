#include "harvest/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace harvest::quad {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();
// Pole cores, relative to the room around each pole.
constexpr double kCoreFraction = 1e-3;

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
    9.95657163025808080735527280689003e-01, 9.73906528517171720077964012084452e-01,
    9.30157491355708226001207180059508e-01, 8.65063366688984510732096688423493e-01,
    7.80817726586416897063717578345042e-01, 6.79409568299024406234327365114874e-01,
    5.62757134668604683339000099272694e-01, 4.33395394129247190799265943165784e-01,
    2.94392862701460198131126603103866e-01, 1.48874338981631210884826001129720e-01,
    0.0};
constexpr std::array<double, 11> kWgk = {
    1.16946388673718742780643960621920e-02, 3.25581623079647274788189724593898e-02,
    5.47558965743519960313813002445801e-02, 7.50396748109199527670431409161900e-02,
    9.31254545836976055350654650833663e-02, 1.09387158802297641899210590325805e-01,
    1.23491976262065851077208245237864e-01, 1.34709217311473325928054001771707e-01,
    1.42775938577060080797094273138717e-01, 1.47739104901338491374841515972068e-01,
    1.49445554002916905664936468389821e-01};
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7, 9).
constexpr std::array<double, 5> kWg = {
    6.66713443086881375935688098933318e-02, 1.49451349150580593145776339657697e-01,
    2.19086362515982043995534934228163e-01, 2.69266719309996355091226921569469e-01,
    2.95524224714752870173892994651338e-01};

struct Panel {
    double a;
    double b;
    Complex value;
    double error;
    double resabs;
    int depth;
};

Panel gk21(const ComplexFn& f, double a, double b, int depth)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const Complex fc = f(center);
    Complex resk = fc * kWgk[10];
    Complex resg{0.0, 0.0};
    double resabs = std::abs(fc) * kWgk[10];
    std::array<Complex, 10> f1{}, f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        const Complex sum = f1[j] + f2[j];
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1)
            resg += kWg[j / 2] * sum;
    }
    const Complex mean = 0.5 * resk;
    double resasc = kWgk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

    const double ah = std::abs(half);
    Panel p{a, b, resk * half, std::abs((resk - resg) * half), resabs * ah, depth};
    resasc *= ah;
    if (resasc != 0.0 && p.error != 0.0)
        p.error = resasc * std::min(1.0, std::pow(200.0 * p.error / resasc, 1.5));
    if (p.resabs > kTiny / (50.0 * kEps))
        p.error = std::max(50.0 * kEps * p.resabs, p.error);
    if (!std::isfinite(p.error))
        p.error = std::numeric_limits<double>::infinity();
    return p;
}

struct ByError {
    bool operator()(const Panel& x, const Panel& y) const { return x.error < y.error; }
};

} // namespace

PoleSet::PoleSet(std::vector<double> locations, std::vector<double> slopes)
    : locations_(std::move(locations)), slopes_(std::move(slopes))
{
    if (locations_.size() != slopes_.size())
        throw std::invalid_argument("PoleSet: one slope per location required");
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        if (i > 0 && !(locations_[i] > locations_[i - 1]))
            throw std::invalid_argument("PoleSet: locations must be strictly increasing");
        if (!(std::abs(slopes_[i]) > 0.0))
            throw std::invalid_argument("PoleSet: zero slope (pole is not simple)");
    }
}

void PoleSet::add(double location, double slope)
{
    if (!locations_.empty() && !(location > locations_.back()))
        throw std::invalid_argument("PoleSet: locations must be strictly increasing");
    if (!(std::abs(slope) > 0.0))
        throw std::invalid_argument("PoleSet: zero slope (pole is not simple)");
    locations_.push_back(location);
    slopes_.push_back(slope);
}

double PoleSet::derivative_magnitude(std::size_t i) const { return std::abs(slopes_.at(i)); }

QuadratureResult integrate_finite(const ComplexFn& f, double lo, double hi, double tol,
                                  const AdaptiveOptions& opts)
{
    const std::array<double, 2> ends{lo, hi};
    return integrate_finite(f, ends, tol, opts);
}

QuadratureResult integrate_finite(const ComplexFn& f, std::span<const double> breakpoints,
                                  double tol, const AdaptiveOptions& opts)
{
    if (breakpoints.size() < 2)
        throw std::invalid_argument("integrate_finite: need at least two breakpoints");
    if (!(tol > 0.0))
        throw std::invalid_argument("integrate_finite: tolerance must be positive");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("integrate_finite: breakpoints must be strictly increasing");

    std::priority_queue<Panel, std::vector<Panel>, ByError> live;
    std::vector<Panel> done;
    QuadratureResult out;
    double total_error = 0.0;
    double total_resabs = 0.0;
    std::vector<Panel> initial;
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        Panel p = gk21(f, breakpoints[i - 1], breakpoints[i], 0);
        out.evaluations += 21;
        total_error += p.error;
        total_resabs += p.resabs;
        live.push(p);
        initial.push_back(p);
    }

    Complex total_value{0.0, 0.0};
    for (const Panel& p : initial)
        total_value += p.value;
    auto target = [&] {
        return std::max({tol, std::max(100.0 * kEps, opts.abs_rel_floor) * total_resabs, opts.rel_tol * std::abs(total_value)});
    };
    bool exhausted = false;
    while (total_error > target() && !live.empty()) {
        if (static_cast<int>(live.size() + done.size()) >= opts.max_panels) {
            exhausted = true;
            break;
        }
        Panel worst = live.top();
        live.pop();
        if (worst.depth >= opts.max_depth) {
            done.push_back(worst);
            continue;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        // Below ~100 ulps the nodes start to coincide with the panel ends.
        const double floor_width = 128.0 * kEps * std::max(std::abs(worst.a), std::abs(worst.b));
        if (worst.b - worst.a <= floor_width || !(mid > worst.a && mid < worst.b)) {
            done.push_back(worst);
            continue;
        }
        Panel left = gk21(f, worst.a, mid, worst.depth + 1);
        Panel right = gk21(f, mid, worst.b, worst.depth + 1);
        out.evaluations += 42;
        total_error += left.error + right.error - worst.error;
        total_resabs += left.resabs + right.resabs - worst.resabs;
        total_value += left.value + right.value - worst.value;
        live.push(left);
        live.push(right);
    }

    // Judged on the running totals the loop stopped on; the re-summed error
    // below can differ from them in the last bit.
    const bool met = std::isfinite(total_error) && total_error <= target();
    while (!live.empty()) {
        done.push_back(live.top());
        live.pop();
    }
    // Sum in position order so the result does not depend on heap layout.
    std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    total_error = 0.0;
    for (const Panel& p : done) {
        out.value += p.value;
        total_error += p.error;
    }
    out.abs_error_estimate = total_error;
    out.converged = !exhausted && met && std::isfinite(total_error);
    return out;
}

QuadratureResult integrate_semi_infinite(const ComplexFn& f, double tol,
                                         std::optional<double> cutoff,
                                         const AdaptiveOptions& opts)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("integrate_semi_infinite: tolerance must be positive");
    double upper = 0.0;
    long probes = 0;
    if (cutoff) {
        if (!(*cutoff > 0.0))
            throw std::invalid_argument("integrate_semi_infinite: cutoff must be positive");
        upper = *cutoff;
    } else {
        // Double x until |f| sampled on [x, 2x] is below tol * 1e-3 / x.
        constexpr int kSamples = 16;
        double x = 1.0;
        bool found = false;
        for (int attempt = 0; attempt < 60 && !found; ++attempt) {
            double peak = 0.0;
            for (int k = 0; k <= kSamples; ++k) {
                peak = std::max(peak, std::abs(f(x * (1.0 + static_cast<double>(k) / kSamples))));
                ++probes;
            }
            if (peak * x < tol * 1e-3)
                found = true;
            else
                x *= 2.0;
        }
        if (!found) {
            QuadratureResult bad;
            bad.converged = false;
            bad.abs_error_estimate = std::numeric_limits<double>::infinity();
            bad.evaluations = probes;
            return bad;
        }
        upper = x;
    }
    QuadratureResult r = integrate_finite(f, 0.0, upper, tol, opts);
    r.evaluations += probes;
    return r;
}

QuadratureResult integrate_pv_residues(const ComplexFn& f, std::vector<Pole> poles,
                                       double lo, double hi, double tol,
                                       const AdaptiveOptions& opts)
{
    if (!(lo < hi))
        throw std::invalid_argument("integrate_pv: need lo < hi");
    std::sort(poles.begin(), poles.end(),
              [](const Pole& p, const Pole& q) { return p.location < q.location; });

    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    std::vector<Pole> merged;
    for (const Pole& p : poles) {
        if (!(p.location > lo && p.location < hi))
            throw std::invalid_argument("integrate_pv: pole outside the open interval");
        if (p.location - lo <= 10.0 * kEps * scale || hi - p.location <= 10.0 * kEps * scale)
            throw std::invalid_argument("integrate_pv: pole within 10 eps of an end point");
        if (!merged.empty() && p.location - merged.back().location <= 1e-14 * scale)
            merged.back().residue += p.residue;
        else
            merged.push_back(p);
    }
    if (merged.empty())
        return integrate_finite(f, lo, hi, tol, opts);

    const std::size_t n = merged.size();
    std::vector<double> half_width(n);
    std::vector<double> edges;
    for (std::size_t r = 0; r < n; ++r) {
        const double x = merged[r].location;
        half_width[r] = std::min(x - lo, hi - x);
        edges.push_back(x - half_width[r]);
        edges.push_back(x + half_width[r]);
    }

    auto subtracted = [&](double x) -> Complex {
        Complex value = f(x);
        for (std::size_t r = 0; r < n; ++r) {
            const double d = x - merged[r].location;
            if (std::abs(d) < half_width[r])
                value -= merged[r].residue / d;
        }
        return value;
    };

    // Very close to a pole the subtraction is swamped by rounding in f, whose
    // zero is only known to a few ulps. A core of radius kCoreFraction times
    // the distance to the nearest obstacle is replaced by the integral of the
    // even interpolant through the remainder at +-rho and +-2 rho.
    std::vector<double> core(n, 0.0);
    QuadratureResult out;
    for (std::size_t r = 0; r < n; ++r) {
        const double x = merged[r].location;
        double room = std::min(1.0, half_width[r]);
        if (r > 0)
            room = std::min(room, x - merged[r - 1].location);
        if (r + 1 < n)
            room = std::min(room, merged[r + 1].location - x);
        const double rho = kCoreFraction * room;
        if (rho <= 256.0 * kEps * std::max(1.0, std::abs(x)))
            continue;
        core[r] = rho;
        const Complex near_sum = subtracted(x - rho) + subtracted(x + rho);
        const Complex far_sum = subtracted(x - 2.0 * rho) + subtracted(x + 2.0 * rho);
        out.value += rho * ((11.0 / 9.0) * near_sum - (2.0 / 9.0) * far_sum);
        out.evaluations += 4;
        edges.push_back(x - rho);
        edges.push_back(x + rho);
    }

    // Pole locations must survive as breakpoints; other cuts that crowd a
    // pole or each other are dropped.
    const double gap = 4.0 * kEps * scale;
    std::vector<double> breaks{lo, hi};
    for (const Pole& p : merged)
        breaks.push_back(p.location);
    std::sort(breaks.begin(), breaks.end());
    for (double c : edges) {
        if (!(c > lo && c < hi))
            continue;
        const auto it = std::lower_bound(breaks.begin(), breaks.end(), c);
        if (it != breaks.end() && *it - c <= gap)
            continue;
        if (it != breaks.begin() && c - *(it - 1) <= gap)
            continue;
        breaks.insert(it, c);
    }

    auto regularized = [&](double x) -> Complex {
        for (std::size_t r = 0; r < n; ++r)
            if (std::abs(x - merged[r].location) < core[r])
                return Complex{0.0, 0.0};
        const Complex value = subtracted(x);
        // A rounded denominator can vanish away from its computed zero.
        if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
            return Complex{0.0, 0.0};
        return value;
    };
    QuadratureResult body = integrate_finite(regularized, breaks, tol, opts);
    body.value += out.value;
    body.evaluations += out.evaluations;
    return body;
}

QuadratureResult integrate_pv(const ComplexFn& g, const RealFn& u, const PoleSet& poles,
                              double lo, double hi, double tol, const AdaptiveOptions& opts)
{
    std::vector<Pole> residues;
    residues.reserve(poles.size());
    long extra = 0;
    for (std::size_t i = 0; i < poles.size(); ++i) {
        const double x = poles.locations()[i];
        residues.push_back({x, g(x) / poles.slopes()[i]});
        ++extra;
    }
    QuadratureResult r = integrate_pv_residues([&](double x) { return g(x) / u(x); },
                                               std::move(residues), lo, hi, tol, opts);
    r.evaluations += extra;
    return r;
}

double bisect_root(const RealFn& g, double lo, double hi)
{
    double glo = g(lo);
    if (glo == 0.0)
        return lo;
    const double ghi = g(hi);
    if (ghi == 0.0)
        return hi;
    if ((glo > 0.0) == (ghi > 0.0))
        throw std::invalid_argument("bisect_root: end points do not bracket a sign change");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double gm = g(mid);
        if (gm == 0.0)
            return mid;
        if ((gm > 0.0) == (glo > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> bracket_roots(const RealFn& g, double lo, double hi, int scan_points)
{
    if (scan_points < 2)
        throw std::invalid_argument("bracket_roots: need at least two scan points");
    if (!(lo < hi))
        throw std::invalid_argument("bracket_roots: need lo < hi");
    std::vector<double> roots;
    const double step = (hi - lo) / (scan_points - 1);
    double x_prev = lo;
    double g_prev = g(lo);
    if (g_prev == 0.0)
        roots.push_back(lo);
    for (int i = 1; i < scan_points; ++i) {
        const double x = (i == scan_points - 1) ? hi : lo + i * step;
        const double gx = g(x);
        if (gx == 0.0) {
            roots.push_back(x);
        } else if (g_prev != 0.0 && (gx > 0.0) != (g_prev > 0.0)) {
            roots.push_back(bisect_root(g, x_prev, x));
        }
        x_prev = x;
        g_prev = gx;
    }
    return roots;
}

} // namespace harvest::quad
