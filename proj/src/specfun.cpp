#include "harvest/specfun.hpp"

#include <cmath>
#include <stdexcept>

namespace harvest::specfun {

double erf_real(double x) { return std::erf(x); }

double erfc_real(double x) { return std::erfc(x); }

Complex scaled_cerfc(Complex z)
{
    const double xi = z.real();
    const double yi = z.imag();
    if (!std::isfinite(xi) || !std::isfinite(yi))
        throw std::domain_error("scaled_cerfc: non-finite argument");
    if (yi < 0.0)
        throw std::domain_error("scaled_cerfc: Im(z) < 0 is outside the supported domain");

    constexpr double two_over_sqrt_pi = 1.12837916709551257388;

    const double xabs = std::abs(xi);
    const double yabs = yi;
    const double xs = xabs / 6.3;
    const double ys = yabs / 4.4;
    double qrho = xs * xs + ys * ys;
    const double xquad = xabs * xabs - yabs * yabs;
    const double yquad = 2.0 * xabs * yabs;

    double u = 0.0;
    double v = 0.0;

    if (qrho < 0.085264) {
        // Maclaurin series of erf, then multiply by exp(-z^2).
        qrho = (1.0 - 0.85 * ys) * std::sqrt(qrho);
        const int n = static_cast<int>(std::lround(6.0 + 72.0 * qrho));
        int j = 2 * n + 1;
        double xsum = 1.0 / j;
        double ysum = 0.0;
        for (int i = n; i >= 1; --i) {
            j -= 2;
            const double xaux = (xsum * xquad - ysum * yquad) / i;
            ysum = (xsum * yquad + ysum * xquad) / i;
            xsum = xaux + 1.0 / j;
        }
        const double u1 = -two_over_sqrt_pi * (xsum * yabs + ysum * xabs) + 1.0;
        const double v1 = two_over_sqrt_pi * (xsum * xabs - ysum * yabs);
        const double daux = std::exp(-xquad);
        const double u2 = daux * std::cos(yquad);
        const double v2 = -daux * std::sin(yquad);
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        double h = 0.0;
        int kapn = 0;
        int nu = 0;
        if (qrho > 1.0) {
            qrho = std::sqrt(qrho);
            nu = static_cast<int>(3.0 + 1442.0 / (26.0 * qrho + 77.0));
        } else {
            qrho = (1.0 - ys) * std::sqrt(1.0 - qrho);
            h = 1.88 * qrho;
            kapn = static_cast<int>(std::lround(7.0 + 34.0 * qrho));
            nu = static_cast<int>(std::lround(16.0 + 26.0 * qrho));
        }
        const double h2 = 2.0 * h;
        const bool use_taylor = h > 0.0;
        double qlambda = use_taylor ? std::pow(h2, kapn) : 0.0;

        double rx = 0.0, ry = 0.0, sx = 0.0, sy = 0.0;
        for (int n = nu; n >= 0; --n) {
            const double np1 = n + 1;
            double tx = yabs + h + np1 * rx;
            const double ty = xabs - np1 * ry;
            const double c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if (use_taylor && n <= kapn) {
                tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if (use_taylor) {
            u = two_over_sqrt_pi * sx;
            v = two_over_sqrt_pi * sy;
        } else {
            u = two_over_sqrt_pi * rx;
            v = two_over_sqrt_pi * ry;
        }
        if (yabs == 0.0)
            u = std::exp(-xabs * xabs);
    }

    if (xi < 0.0)
        v = -v;
    return {u, v};
}

} // namespace harvest::specfun
