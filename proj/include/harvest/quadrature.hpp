#ifndef HARVEST_QUADRATURE_HPP
#define HARVEST_QUADRATURE_HPP

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace harvest::quad {

using Complex = std::complex<double>;
using ComplexFn = std::function<Complex(double)>;
using RealFn = std::function<double(double)>;

struct QuadratureResult {
    Complex value{};
    double abs_error_estimate = 0.0;
    long evaluations = 0;
    bool converged = true;

    QuadratureResult& operator+=(const QuadratureResult& other)
    {
        value += other.value;
        abs_error_estimate += other.abs_error_estimate;
        evaluations += other.evaluations;
        converged = converged && other.converged;
        return *this;
    }
};

struct AdaptiveOptions {
    // A panel is never bisected more than this many times.
    int max_depth = 60;
    // Hard cap on live panels; hitting it yields converged = false.
    int max_panels = 4000;
    // Also accept an error below rel_tol * |integral|.
    double rel_tol = 0.0;
    // Noise floor relative to the integral of |f|, for integrands that are
    // themselves only known to some relative accuracy.
    double abs_rel_floor = 0.0;
};

// Simple zeros of some u(x) inside an integration interval, with the signed
// slope u'(x_r) at each one. Locations strictly increasing.
class PoleSet {
public:
    PoleSet() = default;
    PoleSet(std::vector<double> locations, std::vector<double> slopes);

    void add(double location, double slope);

    const std::vector<double>& locations() const { return locations_; }
    const std::vector<double>& slopes() const { return slopes_; }
    double derivative_magnitude(std::size_t i) const;
    std::size_t size() const { return locations_.size(); }
    bool empty() const { return locations_.empty(); }

private:
    std::vector<double> locations_;
    std::vector<double> slopes_;
};

// A simple pole of an integrand f: f(x) ~ residue / (x - location).
struct Pole {
    double location;
    Complex residue;
};

// Adaptive 21-point Gauss-Kronrod with global bisection of the worst panel.
// `tol` is absolute. When the requested tolerance sits below the rounding
// floor of the integrand (100 eps * integral of |f|), the floor is used instead
// and converged refers to that.
QuadratureResult integrate_finite(const ComplexFn& f, double lo, double hi, double tol,
                                  const AdaptiveOptions& opts = {});

// Same, with the interval pre-split at the sorted `breakpoints` (first and
// last entries are the interval ends). The integrand may be discontinuous at
// breakpoints; it is never evaluated there.
QuadratureResult integrate_finite(const ComplexFn& f, std::span<const double> breakpoints,
                                  double tol, const AdaptiveOptions& opts = {});

// Integral over [0, inf). With `cutoff` given, the tail beyond it is taken as
// negligible; otherwise a cutoff is located by probing |f| on doubling
// intervals until it falls below tol * 1e-3 / x.
QuadratureResult integrate_semi_infinite(const ComplexFn& f, double tol,
                                         std::optional<double> cutoff = std::nullopt,
                                         const AdaptiveOptions& opts = {});

// Cauchy principal value of the integral of g/u over [lo, hi], where u has
// exactly the simple zeros listed in `poles`.
//
// Around each pole a symmetric window is fitted inside [lo, hi]; inside it
// the singular part g(x_r) / (u'(x_r) (x - x_r)) is subtracted (its principal
// value over the window is zero) and the smooth remainder is integrated
// adaptively together with the far field. Windows may overlap. A small core
// around each pole, where the subtraction is all rounding, is integrated from
// an even interpolant of the remainder instead.
//
// Throws std::invalid_argument if a pole is outside (lo, hi) or within
// 10 eps of an end point.
QuadratureResult integrate_pv(const ComplexFn& g, const RealFn& u, const PoleSet& poles,
                              double lo, double hi, double tol,
                              const AdaptiveOptions& opts = {});

// Residue form of integrate_pv: principal value of the integral of f, which
// has the listed simple poles. Poles closer than ~1e-14 relative are merged.
QuadratureResult integrate_pv_residues(const ComplexFn& f, std::vector<Pole> poles,
                                       double lo, double hi, double tol,
                                       const AdaptiveOptions& opts = {});

// All sign changes of g sampled on `scan_points` uniform points of [lo, hi],
// each refined by bisection down to adjacent doubles.
// Roots of even multiplicity and pairs of roots closer than the scan spacing
// are not detected.
std::vector<double> bracket_roots(const RealFn& g, double lo, double hi, int scan_points);

// Bisection on a bracket [lo, hi] with g(lo) * g(hi) <= 0.
double bisect_root(const RealFn& g, double lo, double hi);

} // namespace harvest::quad

#endif // HARVEST_QUADRATURE_HPP
