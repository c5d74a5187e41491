#ifndef HARVEST_SPECFUN_HPP
#define HARVEST_SPECFUN_HPP

#include <complex>

namespace harvest::specfun {

using Complex = std::complex<double>;

double erf_real(double x);

// Non-negative; stays representable (no flush to zero) up to x ~ 27.
double erfc_real(double x);

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) on the closed upper half plane.
//
// Evaluated with the Poppe-Wijers scheme (truncated Taylor series near the
// origin, Laplace continued fraction with Gautschi's convergence acceleration
// elsewhere). On the real axis the real part is returned as exp(-x^2) exactly,
// and w(-x) = conj(w(x)) holds bitwise.
//
// Throws std::domain_error for Im(z) < 0.
Complex scaled_cerfc(Complex z);

} // namespace harvest::specfun

#endif // HARVEST_SPECFUN_HPP
