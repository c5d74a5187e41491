#include "harvest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace harvest::kernels {

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr int kStationaryScan = 128;
constexpr int kTangencyGrid = 200;
// |h| below this fraction of its term size triggers the anchored form.
constexpr double kAnchorBand = 1e-3;
// Perpendicular roots are cached on [-kRootSpan, kRootSpan].
constexpr double kRootSpan = kGaussianWindow + 4.0;

double sq(double v) { return v * v; }

void require_accelerated(Scenario scenario, const PhysicalConfig& cfg)
{
    if (scenario == Scenario::Inertial)
        throw std::invalid_argument("kernels: the inertial scenario has no accelerated kernel");
    if (!std::isfinite(cfg.a_sigma) || !std::isfinite(cfg.l_sigma) || !std::isfinite(cfg.omega_sigma))
        throw std::invalid_argument("kernels: non-finite configuration");
    if (!(cfg.a_sigma > 0.0))
        throw std::invalid_argument("kernels: accelerated kernels require a_sigma > 0");
    if (scenario == Scenario::Parallel) {
        if (cfg.l_sigma == 0.0)
            throw std::invalid_argument("kernels: l_sigma must be non-zero");
    } else if (!(cfg.l_sigma > 0.0)) {
        throw std::invalid_argument("kernels: l_sigma must be positive");
    }
}

} // namespace

Kernel::Kernel(Scenario scenario, const PhysicalConfig& cfg)
    : scenario_(scenario), cfg_(cfg), a_(cfg.a_sigma), l_(cfg.l_sigma)
{
    require_accelerated(scenario, cfg);
}

double Kernel::prefactor(int term) const
{
    (void)term;
    switch (scenario_) {
    case Scenario::Parallel:
        return a_ * a_ / (32.0 * kPi2);
    case Scenario::AntiParallel:
        return a_ * a_ / (16.0 * kPi2);
    case Scenario::Perpendicular:
        return a_ * a_ / (8.0 * kPi2);
    case Scenario::Inertial:
        break;
    }
    throw std::logic_error("Kernel::prefactor: inertial scenario");
}

Slice::Slice(const Kernel& k, double y) : kernel_(&k), y_(y)
{
    const double a = k.a_;
    q_ = 0.5 * a * y;
    sinh_q_ = std::sinh(q_);
    exp_q_ = std::exp(q_);
    exp_mq_ = std::exp(-q_);
    const double half_al = 0.5 * a * k.l_;
    // 1 - c e^{-q} and 1 - c e^{q} with c = 1 - aL/2, free of cancellation at small a.
    antiparallel_f1_ = -std::expm1(-q_) + half_al * exp_mq_;
    antiparallel_f2_ = -std::expm1(q_) + half_al * exp_q_;
    if (antiparallel_f2_ < 0.0) {
        const double kappa = -antiparallel_f2_;  // c e^q - 1
        // acosh(1 + kappa)
        antiparallel_root_ = 2.0 / a * std::log1p(kappa + std::sqrt(kappa * (2.0 + kappa)));
    }
    parallel_c2_ = half_al * half_al;
    parallel_log_ = std::log(sinh_q_ / std::abs(half_al));

    if (k.scenario_ == Scenario::Perpendicular && y > 0.0) {
        const double al = a * k.l_;
        h_scale_ = al * al + 4.0 * sinh_q_ * sinh_q_;
        // x = -y is always a local minimum, with h = (aL - 2 sinh q)(aL + 2 sinh q).
        stationary_.push_back(-y);
        anchors_.push_back({-y, 0.0, -q_, (al - 2.0 * sinh_q_) * (al + 2.0 * sinh_q_),
                            sinh_q_ * sinh_q_});
        auto slope_plus = [this](double x) {
            const double a_ = kernel_->a_;
            const double al_ = a_ * kernel_->l_;
            const double p = 0.5 * a_ * x;
            const double cosh_diff = 2.0 * std::sinh(0.5 * (p + q_)) * std::sinh(0.5 * (p - q_));
            return 0.5 * a_ * (2.0 * al_ * std::sinh(p + q_) + 4.0 * cosh_diff * std::sinh(p));
        };
        for (double st : quad::bracket_roots(slope_plus, 0.0, y, kStationaryScan)) {
            if (!(st > 0.0 && st < y))
                continue;
            stationary_.push_back(st);
            const double h_eps = 1e-7 * std::max(1.0, y);
            if (slope_plus(st + h_eps) > slope_plus(st - h_eps)) {
                const double p = 0.5 * a * st;
                const double hs = 0.5 * (p + q_);
                const double hd = 0.5 * (p - q_);
                const double sd = std::sinh(hd);
                const double ss = std::sinh(hs);
                anchors_.push_back({st, hs, hd,
                                    al * al + 4.0 * al * ss * ss + 8.0 * sq(ss * sd) -
                                        4.0 * sinh_q_ * sinh_q_,
                                    sd * sd});
            }
        }
        // Roots of h_+ become anchors with h = 0: near each one h is then the
        // product of sinh(a (x - x_r) / 4) and a factor free of cancellation.
        plus_roots_ = perpendicular_plus_roots(-kRootSpan, kRootSpan);
        for (double r : plus_roots_) {
            const double p = 0.5 * a * r;
            const double hd = 0.5 * (p - q_);
            const double sd = std::sinh(hd);
            anchors_.push_back({r, 0.5 * (p + q_), hd, 0.0, sd * sd});
        }
    }
}

double Slice::antiparallel_vanishing(double x, double bump) const
{
    if (!antiparallel_root_)
        return bump + antiparallel_f2_;
    // bump(x) - bump(x_r) = 2 sinh(a (x + x_r) / 4) sinh(a (x - x_r) / 4)
    const double a = kernel_->a_;
    return 2.0 * std::sinh(0.25 * a * (x + *antiparallel_root_)) *
           std::sinh(0.25 * a * (x - *antiparallel_root_));
}

std::vector<double> Slice::perpendicular_plus_roots(double lo, double hi) const
{
    std::vector<double> edges{lo};
    for (double st : stationary_)
        if (st > lo && st < hi)
            edges.push_back(st);
    edges.push_back(hi);
    auto h = [this](double x) { return perpendicular_h_plus(x); };
    std::vector<double> found;
    double h_prev = h(edges.front());
    for (std::size_t i = 1; i < edges.size(); ++i) {
        const double h_next = h(edges[i]);
        if ((h_prev < 0.0) != (h_next < 0.0) && h_prev != 0.0 && h_next != 0.0)
            found.push_back(quad::bisect_root(h, edges[i - 1], edges[i]));
        h_prev = h_next;
    }
    return found;
}

const Slice::Anchor* Slice::nearest_anchor(double x) const
{
    const Anchor* best = nullptr;
    for (const Anchor& an : anchors_)
        if (!best || std::abs(x - an.x) < std::abs(x - best->x))
            best = &an;
    return best;
}

double Slice::perpendicular_h_plus(double x) const
{
    // h_+ = 3 + (aL-1)^2 - 4 cosh p cosh q - cosh 2q + cosh 2p + 2aL cosh(p + q),
    // rewritten with p = a x / 2, q = a y / 2 as
    //   a^2 L^2 + 4aL sinh^2((p+q)/2) + 8 sinh^2((p+q)/2) sinh^2((p-q)/2) - 4 sinh^2 q
    // so that the O(a^2) value is not the difference of O(1) terms.
    const double a = kernel_->a_;
    const double al = a * kernel_->l_;
    const double p = 0.5 * a * x;
    const double hs = 0.5 * (p + q_);
    const double hd = 0.5 * (p - q_);
    const double ss = std::sinh(hs);
    const double sd = std::sinh(hd);
    const double plain = al * al + 4.0 * al * ss * ss + 8.0 * sq(ss * sd) - 4.0 * sinh_q_ * sinh_q_;
    if (std::abs(plain) > kAnchorBand * h_scale_ || anchors_.empty())
        return plain;
    // sinh^2 A - sinh^2 B = sinh(A + B) sinh(A - B)
    const Anchor& an = *nearest_anchor(x);
    const double shift = std::sinh(0.25 * a * (x - an.x));
    const double sum_s = std::sinh(hs + an.half_sum);
    const double sum_d = std::sinh(hd + an.half_diff);
    return an.h + shift * (4.0 * al * sum_s + 8.0 * (ss * ss * sum_d + an.sinh2_diff * sum_s));
}

double Slice::perpendicular_h_plus_slope(double x) const
{
    const double a = kernel_->a_;
    const double al = a * kernel_->l_;
    const double p = 0.5 * a * x;
    const double hs = 0.5 * (p + q_);
    const double hd = 0.5 * (p - q_);
    const double ss = std::sinh(hs);
    const double sd = std::sinh(hd);
    // d/dp [2 (cosh p - cosh q)^2] = 4 (cosh p - cosh q) sinh p
    const double plain = 0.5 * a * (2.0 * al * std::sinh(p + q_) + 8.0 * ss * sd * std::sinh(p));
    if (anchors_.empty())
        return plain;
    const double h = al * al + 4.0 * al * ss * ss + 8.0 * sq(ss * sd) - 4.0 * sinh_q_ * sinh_q_;
    if (std::abs(h) > kAnchorBand * h_scale_)
        return plain;
    // Derivative of the anchored form; its leading term has no cancellation.
    const Anchor& an = *nearest_anchor(x);
    const double d = 0.25 * a * (x - an.x);
    const double sum_s = std::sinh(hs + an.half_sum);
    const double sum_d = std::sinh(hd + an.half_diff);
    const double bracket = 4.0 * al * sum_s + 8.0 * (ss * ss * sum_d + an.sinh2_diff * sum_s);
    const double cs = std::cosh(hs + an.half_sum);
    const double bracket_slope =
        4.0 * al * cs + 8.0 * (std::sinh(2.0 * hs) * sum_d + ss * ss * std::cosh(hd + an.half_diff) +
                               an.sinh2_diff * cs);
    return 0.25 * a * (std::cosh(d) * bracket + std::sinh(d) * bracket_slope);
}

int Slice::term_count() const { return kernel_->term_count(); }

double Slice::perpendicular_h(double x, int sign) const
{
    // h_-(x) = h_+(-x)
    return perpendicular_h_plus(sign > 0 ? x : -x);
}

double Slice::perpendicular_h_slope(double x, int sign) const
{
    return sign > 0 ? perpendicular_h_plus_slope(x) : -perpendicular_h_plus_slope(-x);
}

double Slice::denominator(int term, double x) const
{
    const double a = kernel_->a_;
    switch (kernel_->scenario_) {
    case Scenario::Parallel: {
        const double p = 0.5 * a * x;
        const double ra = -std::expm1(parallel_log_ - p);
        const double rb = -std::expm1(p + parallel_log_);
        const bool first = (term == 0) == (kernel_->l_ > 0.0);
        return parallel_c2_ * (first ? ra * (2.0 - rb) : (2.0 - ra) * rb);
    }
    case Scenario::AntiParallel: {
        const double sh = std::sinh(0.25 * a * x);
        const double bump = 2.0 * sh * sh;  // cosh p - 1
        return (bump + antiparallel_f1_) * antiparallel_vanishing(x, bump);
    }
    case Scenario::Perpendicular:
        return perpendicular_h(x, term == 0 ? +1 : -1);
    case Scenario::Inertial:
        break;
    }
    throw std::logic_error("Slice::denominator: inertial scenario");
}

double Slice::slope(int term, double x) const
{
    const double a = kernel_->a_;
    switch (kernel_->scenario_) {
    case Scenario::Parallel: {
        const double p = 0.5 * a * x;
        const double ra = -std::expm1(parallel_log_ - p);
        const double rb = -std::expm1(p + parallel_log_);
        const bool first = (term == 0) == (kernel_->l_ > 0.0);
        // d ra / dp = 1 - ra, d rb / dp = rb - 1
        if (first)
            return 0.5 * a * parallel_c2_ * ((1.0 - ra) * (2.0 - rb) + ra * (1.0 - rb));
        return 0.5 * a * parallel_c2_ * ((ra - 1.0) * rb + (2.0 - ra) * (rb - 1.0));
    }
    case Scenario::AntiParallel: {
        const double sh = std::sinh(0.25 * a * x);
        const double bump = 2.0 * sh * sh;
        return 0.5 * a * std::sinh(0.5 * a * x) *
               (bump + antiparallel_f1_ + antiparallel_vanishing(x, bump));
    }
    case Scenario::Perpendicular:
        return perpendicular_h_slope(x, term == 0 ? +1 : -1);
    case Scenario::Inertial:
        break;
    }
    throw std::logic_error("Slice::slope: inertial scenario");
}

double Slice::value(double x) const
{
    // Same arithmetic as denominator(), sharing the transcendental calls
    // between the terms of a scenario.
    const double a = kernel_->a_;
    const double pref = kernel_->prefactor(0);
    switch (kernel_->scenario_) {
    case Scenario::Parallel: {
        const double p = 0.5 * a * x;
        const double ra = -std::expm1(parallel_log_ - p);
        const double rb = -std::expm1(p + parallel_log_);
        return pref / parallel_c2_ * (1.0 / (ra * (2.0 - rb)) + 1.0 / ((2.0 - ra) * rb));
    }
    case Scenario::AntiParallel: {
        const double sh = std::sinh(0.25 * a * x);
        const double bump = 2.0 * sh * sh;
        return pref / ((bump + antiparallel_f1_) * antiparallel_vanishing(x, bump));
    }
    case Scenario::Perpendicular: {
        const double al = a * kernel_->l_;
        const double p = 0.5 * a * x;
        const double s_plus = std::sinh(0.5 * (p + q_));
        const double s_minus = std::sinh(0.5 * (p - q_));
        // Same operation order as perpendicular_h_plus, which is consulted
        // only where cancellation would make this inaccurate.
        const double quartic = 8.0 * sq(s_plus * s_minus);
        const double shift = 4.0 * sinh_q_ * sinh_q_;
        double h_plus = al * al + 4.0 * al * s_plus * s_plus + quartic - shift;
        double h_minus = al * al + 4.0 * al * s_minus * s_minus + quartic - shift;
        if (std::abs(h_plus) <= kAnchorBand * h_scale_)
            h_plus = perpendicular_h_plus(x);
        if (std::abs(h_minus) <= kAnchorBand * h_scale_)
            h_minus = perpendicular_h_plus(-x);
        return pref * (1.0 / h_plus + 1.0 / h_minus);
    }
    case Scenario::Inertial:
        break;
    }
    throw std::logic_error("Slice::value: inertial scenario");
}

std::vector<double> Slice::perpendicular_stationary(double x_lo, double x_hi) const
{
    // Stationary points of h_+ in x: always x = -y (a local minimum), plus at
    // most a max/min pair inside (0, y). h_+' > 0 everywhere else.
    std::vector<double> points;
    for (double st : stationary_)
        if (st > x_lo && st < x_hi)
            points.push_back(st);
    return points;
}

quad::PoleSet Slice::roots(int term, double x_lo, double x_hi) const
{
    quad::PoleSet poles;
    const double a = kernel_->a_;
    auto keep = [&](double x) {
        if (x <= x_lo || x >= x_hi)
            return;
        const double s = slope(term, x);
        if (s != 0.0)
            poles.add(x, s);
    };

    switch (kernel_->scenario_) {
    case Scenario::Parallel: {
        if (sinh_q_ <= 0.0)
            break;
        const bool first = (term == 0) == (kernel_->l_ > 0.0);
        keep((first ? 2.0 : -2.0) * parallel_log_ / a);
        break;
    }
    case Scenario::AntiParallel: {
        if (!antiparallel_root_ || !(antiparallel_f1_ > 0.0))
            break;
        keep(-*antiparallel_root_);
        keep(*antiparallel_root_);
        break;
    }
    case Scenario::Perpendicular: {
        // h_-(x) = h_+(-x): take h_+ roots on the mirrored window and reflect.
        const int sign = term == 0 ? +1 : -1;
        const double lo = sign > 0 ? x_lo : -x_hi;
        const double hi = sign > 0 ? x_hi : -x_lo;
        std::vector<double> found;
        if (lo >= -kRootSpan && hi <= kRootSpan) {
            for (double r : plus_roots_)
                if (r > lo && r < hi)
                    found.push_back(r);
        } else {
            found = perpendicular_plus_roots(lo, hi);
        }
        if (sign < 0) {
            for (double& r : found)
                r = -r;
            std::reverse(found.begin(), found.end());
        }
        for (double r : found)
            if (poles.empty() || r > poles.locations().back())
                keep(r);
        break;
    }
    case Scenario::Inertial:
        break;
    }
    return poles;
}

int Kernel::perpendicular_root_count(double y, double x_lo, double x_hi) const
{
    // Negative local minima of h_+ inside (0, y); the minimum at x = -y is
    // handled analytically.
    const Slice s = at(y);
    int count = 0;
    const double lo = std::max(0.0, x_lo);
    const double hi = std::min(y, x_hi);
    if (!(hi > lo))
        return 0;
    for (double st : s.perpendicular_stationary(lo, hi)) {
        if (st <= lo || st >= hi)
            continue;
        const double curvature = s.perpendicular_h_slope(st + 1e-7, +1) -
                                 s.perpendicular_h_slope(st - 1e-7, +1);
        if (curvature > 0.0 && s.perpendicular_h(st, +1) < 0.0)
            ++count;
    }
    return count;
}

std::vector<double> Kernel::tangency_points(double y_max, double x_lo, double x_hi) const
{
    std::vector<double> points;
    if (scenario_ == Scenario::AntiParallel) {
        if (auto th = kernel_threshold_antiparallel(cfg_); th && *th < y_max)
            points.push_back(*th);
    } else if (scenario_ == Scenario::Perpendicular) {
        // The minimum of h_+ at x = -y touches zero where sinh(a y / 2) = aL / 2.
        const double y1 = 2.0 / a_ * std::asinh(0.5 * a_ * l_);
        if (y1 < y_max && -y1 > x_lo)
            points.push_back(y1);
        // Interior minima inside (0, y): locate count changes on a grid.
        auto count = [&](double y) { return perpendicular_root_count(y, x_lo, x_hi); };
        double y_prev = 0.0;
        int c_prev = 0;
        for (int i = 1; i <= kTangencyGrid; ++i) {
            const double y = y_max * i / kTangencyGrid;
            const int c = count(y);
            if (c != c_prev) {
                double lo = y_prev, hi = y;
                while (hi - lo > 1e-13 * std::max(1.0, hi)) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi)
                        break;
                    if (count(mid) == c_prev)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double yc = 0.5 * (lo + hi);
                if (yc > 0.0 && yc < y_max)
                    points.push_back(yc);
            }
            y_prev = y;
            c_prev = c;
        }
        std::sort(points.begin(), points.end());
    }
    return points;
}

std::vector<double> Kernel::feature_points(double y_max) const
{
    std::vector<double> points;
    const double abs_l = std::abs(l_);
    if (abs_l < y_max)
        points.push_back(abs_l);
    if (scenario_ == Scenario::Parallel) {
        // Roots of both terms cross x = 0 where sinh(a y / 2) = a|L| / 2.
        const double yc = 2.0 / a_ * std::asinh(0.5 * a_ * abs_l);
        if (yc < y_max)
            points.push_back(yc);
    }
    std::sort(points.begin(), points.end());
    return points;
}

std::vector<KernelTerm> kernel_terms(Scenario scenario, const PhysicalConfig& cfg)
{
    auto kernel = std::make_shared<Kernel>(scenario, cfg);
    std::vector<KernelTerm> terms;
    for (int k = 0; k < kernel->term_count(); ++k) {
        terms.push_back({kernel->prefactor(k), [kernel, k](double x, double y) {
                             return kernel->at(y).denominator(k, x);
                         }});
    }
    return terms;
}

std::vector<quad::PoleSet> kernel_roots(Scenario scenario, const PhysicalConfig& cfg, double y,
                                        double x_lo, double x_hi)
{
    if (!(y > 0.0))
        throw std::invalid_argument("kernel_roots: y must be positive");
    const Kernel kernel(scenario, cfg);
    const Slice slice = kernel.at(y);
    const double scale = kernel.a() * kernel.a();
    std::vector<quad::PoleSet> out;
    for (int k = 0; k < kernel.term_count(); ++k) {
        quad::PoleSet poles = slice.roots(k, x_lo, x_hi);
        for (std::size_t i = 0; i < poles.size(); ++i)
            if (poles.derivative_magnitude(i) < 1e-12 * scale)
                throw DegenerateRootError("kernel_roots: near-double root; subdivide in y instead");
        if (scenario == Scenario::AntiParallel && poles.empty()) {
            // A double root exactly at x = 0 (y on the threshold) has zero slope.
            if (auto th = kernel_threshold_antiparallel(cfg);
                th && std::abs(y - *th) <= 1e-15 * std::max(1.0, *th))
                throw DegenerateRootError("kernel_roots: y sits on the anti-parallel threshold");
        }
        out.push_back(std::move(poles));
    }
    return out;
}

std::optional<double> kernel_threshold_antiparallel(const PhysicalConfig& cfg)
{
    if (!(cfg.a_sigma > 0.0))
        throw std::invalid_argument("kernel_threshold_antiparallel: a_sigma must be positive");
    const double half_al = 0.5 * cfg.a_sigma * cfg.l_sigma;
    if (!(half_al > 0.0) || half_al >= 1.0)
        return std::nullopt;
    return 2.0 / cfg.a_sigma * -std::log1p(-half_al);
}

double kernel_sum(Scenario scenario, const PhysicalConfig& cfg, double x, double y)
{
    const Kernel kernel(scenario, cfg);
    return kernel.at(y).value(x);
}

} // namespace harvest::kernels
