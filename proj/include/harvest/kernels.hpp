#ifndef HARVEST_KERNELS_HPP
#define HARVEST_KERNELS_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "harvest/config.hpp"
#include "harvest/quadrature.hpp"

namespace harvest::kernels {

// One additive term prefactor / (u(x, y) - i eps) of a symmetrized Wightman
// kernel, in the variables x = tau + tau', y = tau - tau' (y > 0).
struct KernelTerm {
    double prefactor;
    std::function<double(double x, double y)> denominator;
};

class DegenerateRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Kernel;

// The kernel restricted to a fixed y. Cheap to construct; holds the
// y-dependent hyperbolic factors.
class Slice {
public:
    double y() const { return y_; }
    int term_count() const;
    double denominator(int term, double x) const;
    // d u / d x at fixed y.
    double slope(int term, double x) const;
    // Simple zeros of one term's denominator on (x_lo, x_hi), with slopes.
    quad::PoleSet roots(int term, double x_lo, double x_hi) const;
    // sum_k prefactor_k / u_k(x), the kernel away from its light-cone zeros.
    double value(double x) const;

private:
    friend class Kernel;
    Slice(const Kernel& k, double y);

    // Local minimum of h_+ used as an expansion point: near a double root the
    // value is rebuilt as h(x_m) + [h(x) - h(x_m)] with the bracket in
    // product form, so rounding stays relative to the local size of h.
    struct Anchor {
        double x;
        double half_sum;   // (p_m + q) / 2
        double half_diff;  // (p_m - q) / 2
        double h;
        double sinh2_diff;
    };

    double perpendicular_h(double x, int sign) const;
    double perpendicular_h_slope(double x, int sign) const;
    double perpendicular_h_plus(double x) const;
    double perpendicular_h_plus_slope(double x) const;
    const Anchor* nearest_anchor(double x) const;
    std::vector<double> perpendicular_plus_roots(double lo, double hi) const;
    double antiparallel_vanishing(double x, double bump) const;
    std::vector<double> perpendicular_stationary(double x_lo, double x_hi) const;

    const Kernel* kernel_;
    double y_;
    double q_;        // a y / 2
    double sinh_q_;
    double exp_q_;
    double exp_mq_;
    double antiparallel_f1_;  // 1 - c e^{-q}
    double antiparallel_f2_;  // 1 - c e^{q}
    // Parallel: with c = aL/2 and l = ln(sinh q / |c|) the two terms are
    // c^2 r_a (2 - r_b) and c^2 (2 - r_a) r_b, r_a = 1 - e^{l - p},
    // r_b = 1 - e^{p + l}; each vanishing factor carries its own zero.
    double parallel_c2_ = 0.0;
    double parallel_log_ = 0.0;
    // Perpendicular only: stationary points of h_+ (sorted), its minima, and
    // the size of the individual terms of h.
    std::vector<double> stationary_;
    std::vector<Anchor> anchors_;
    std::vector<double> plus_roots_;
    // Anti-parallel: x_r > 0 with cosh(a x_r / 2) = c e^q, when it exists.
    std::optional<double> antiparallel_root_;
    double h_scale_ = 0.0;
};

// Scenario kinematics for one configuration. For the parallel scenario a
// negative l_sigma is accepted (the kernel is even in L); the other
// scenarios require l_sigma > 0.
class Kernel {
public:
    Kernel(Scenario scenario, const PhysicalConfig& cfg);

    Scenario scenario() const { return scenario_; }
    const PhysicalConfig& config() const { return cfg_; }
    double a() const { return a_; }
    double l() const { return l_; }
    int term_count() const { return scenario_ == Scenario::AntiParallel ? 1 : 2; }
    double prefactor(int term) const;

    Slice at(double y) const { return Slice(*this, y); }

    // y values where some denominator acquires a double zero in x on
    // [x_lo, x_hi] (roots appear or merge). The y-integrand has inverse
    // square-root singularities there. Sorted, inside (0, y_max).
    std::vector<double> tangency_points(double y_max, double x_lo, double x_hi) const;

    // y values where the integrand has kinks or narrow features worth a
    // breakpoint but no singularity. Sorted, inside (0, y_max).
    std::vector<double> feature_points(double y_max) const;

private:
    friend class Slice;
    int perpendicular_root_count(double y, double x_lo, double x_hi) const;

    Scenario scenario_;
    PhysicalConfig cfg_;
    double a_;
    double l_;
};

std::vector<KernelTerm> kernel_terms(Scenario scenario, const PhysicalConfig& cfg);

// Per-term zeros in x at fixed y over the window [x_lo, x_hi] (defaults to the
// Gaussian truncation window). Throws DegenerateRootError when a slope at a
// root falls below 1e-12 a^2 (the natural scale of every denominator).
std::vector<quad::PoleSet> kernel_roots(Scenario scenario, const PhysicalConfig& cfg, double y,
                                        double x_lo = -kGaussianWindow,
                                        double x_hi = kGaussianWindow);

// y_th = (2/a) ln(1/(1 - aL/2)) for 0 < aL < 2, where the anti-parallel
// denominator first touches zero (at x = 0); nothing for aL >= 2.
std::optional<double> kernel_threshold_antiparallel(const PhysicalConfig& cfg);

// sum_k prefactor_k / u_k at one point (real part of the kernel off the
// light cone).
double kernel_sum(Scenario scenario, const PhysicalConfig& cfg, double x, double y);

} // namespace harvest::kernels

#endif // HARVEST_KERNELS_HPP
