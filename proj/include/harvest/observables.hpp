#ifndef HARVEST_OBSERVABLES_HPP
#define HARVEST_OBSERVABLES_HPP

#include <complex>

#include "harvest/config.hpp"
#include "harvest/kernels.hpp"
#include "harvest/quadrature.hpp"

// Leading-order harvesting observables, all reported per lambda^2 with
// sigma = 1.
namespace harvest::obs {

using Complex = std::complex<double>;

inline constexpr double kDefaultTolerance = 1e-9;

struct ObservableRecord {
    Scenario scenario = Scenario::Inertial;
    PhysicalConfig cfg{};
    double p_over_lambda2 = 0.0;
    Complex x_over_lambda2{};
    double concurrence_over_lambda2 = 0.0;
    double p_error = 0.0;
    double x_error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

// Absolute tolerances are multiplied by this before being handed to the
// integrators: every observable carries an overall exp(-Omega^2) for large
// gaps, so a fixed absolute tolerance would lose all significance there.
double tolerance_scale(double omega_sigma);

// (1/4 pi) [exp(-Omega^2) - sqrt(pi) Omega erfc(Omega)]
double transition_probability_rest(double omega_sigma);

// Excitation probability of one uniformly accelerated detector; identical
// for both detectors and all three acceleration scenarios. Falls back to the
// rest value below kMinAcceleration. The value is real.
quad::QuadratureResult transition_probability(const PhysicalConfig& cfg,
                                              double tol = kDefaultTolerance);

// 1/s^2 - 1/sinh^2 s, continuous at s = 0 with value 1/3.
double probability_integrand_shape(double s);

// Non-local term for detectors at rest, evaluated through w(-L/2) so that
// it stays finite for any separation.
Complex x_rest(const PhysicalConfig& cfg);

// The x-integral at fixed y of exp(-(x^2+y^2)/4 - i Omega x) times the
// kernel, with 1/(u - i eps) = PV(1/u) + i pi delta(u).
quad::QuadratureResult x_inner(const kernels::Kernel& kernel, double omega_sigma, double y,
                               double tol);

// X/lambda^2 = -int_0^inf dy x_inner(y). Inertial dispatches to x_rest, as
// does any a_sigma below kMinAcceleration.
quad::QuadratureResult x_nonlocal(Scenario scenario, const PhysicalConfig& cfg,
                                  double tol = kDefaultTolerance);

// 2 max(0, |X| - P) for identical detectors.
double concurrence_from(double p, Complex x);

double concurrence(Scenario scenario, const PhysicalConfig& cfg, double tol = kDefaultTolerance);

ObservableRecord evaluate(Scenario scenario, const PhysicalConfig& cfg,
                          double tol = kDefaultTolerance);

// arccos((2 - aL)/2) / a for the anti-parallel geometry; std::domain_error
// unless a > 0 and aL < 4.
double resonance_gap(const PhysicalConfig& cfg);

} // namespace harvest::obs

#endif // HARVEST_OBSERVABLES_HPP
