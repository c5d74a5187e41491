#ifndef HARVEST_TESTS_EPS_ORACLE_HPP
#define HARVEST_TESTS_EPS_ORACLE_HPP

// Brute-force X with the i*epsilon kept finite: the printed denominators are
// evaluated directly and sum_k c_k (u_k + i eps) / (u_k^2 + eps^2) is
// integrated in two dimensions with Boost's Gauss-Kronrod. Shares nothing
// with the library beyond PhysicalConfig.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "harvest/config.hpp"

namespace oracle {

using Complex = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kWindow = 12.875796157736083;

struct Term {
    double coeff;
    std::function<double(double, double)> u;
};

inline std::vector<Term> printed_terms(harvest::Scenario s, double a, double l)
{
    using std::cosh;
    using std::exp;
    using std::sinh;
    std::vector<Term> t;
    switch (s) {
    case harvest::Scenario::Parallel: {
        const double c = a * a / (32.0 * kPi * kPi);
        t.push_back({c, [=](double x, double y) {
                         const double sy = sinh(0.5 * a * y);
                         return (0.5 * a * l - exp(-0.5 * a * x) * sy) * (0.5 * a * l + exp(0.5 * a * x) * sy);
                     }});
        t.push_back({c, [=](double x, double y) {
                         const double sy = sinh(0.5 * a * y);
                         return (0.5 * a * l + exp(-0.5 * a * x) * sy) * (0.5 * a * l - exp(0.5 * a * x) * sy);
                     }});
        break;
    }
    case harvest::Scenario::AntiParallel: {
        const double c = a * a / (16.0 * kPi * kPi);
        t.push_back({c, [=](double x, double y) {
                         const double m = 0.5 * l * a - 1.0;
                         const double ch = cosh(0.5 * x * a);
                         return (exp(-0.5 * y * a) * m + ch) * (exp(0.5 * y * a) * m + ch);
                     }});
        break;
    }
    case harvest::Scenario::Perpendicular: {
        const double c = a * a / (8.0 * kPi * kPi);
        for (double sign : {1.0, -1.0}) {
            t.push_back({c, [=](double x, double y) {
                             return 3.0 + (a * l - 1.0) * (a * l - 1.0)
                                    - 4.0 * cosh(0.5 * a * x) * cosh(0.5 * a * y) - cosh(a * y)
                                    + cosh(a * x) + 2.0 * a * l * cosh(0.5 * a * (x + sign * y));
                         }});
        }
        break;
    }
    default:
        break;
    }
    return t;
}

// Points where |u| is locally smallest on a uniform scan: refined zeros at
// sign changes, refined minima of |u| elsewhere. Narrow eps-peaks sit there.
inline std::vector<double> near_zeros(const std::function<double(double)>& u, double lo, double hi,
                                      int n)
{
    std::vector<double> xs(n + 1), us(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = lo + (hi - lo) * i / n;
        us[i] = u(xs[i]);
    }
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        if ((us[i] < 0.0) != (us[i + 1] < 0.0)) {
            std::uintmax_t it = 100;
            const auto r = boost::math::tools::toms748_solve(
                u, xs[i], xs[i + 1], us[i], us[i + 1],
                [](double p, double q) { return std::abs(q - p) <= 1e-15 * std::max(1.0, std::abs(p)); }, it);
            out.push_back(0.5 * (r.first + r.second));
        }
    }
    for (int i = 1; i < n; ++i) {
        const double m = std::abs(us[i]);
        if (m < std::abs(us[i - 1]) && m < std::abs(us[i + 1]) && (us[i - 1] < 0.0) == (us[i] < 0.0) &&
            (us[i + 1] < 0.0) == (us[i] < 0.0)) {
            const auto r = boost::math::tools::brent_find_minima([&](double x) { return std::abs(u(x)); },
                                                                 xs[i - 1], xs[i + 1], 50);
            out.push_back(r.first);
        }
    }
    return out;
}

// Integrand width of 1/(u - i eps) around a near-zero c of u.
inline double peak_width(const std::function<double(double)>& u, double c, double eps)
{
    const double h = 1e-5;
    const double d1 = std::abs(u(c + h) - u(c - h)) / (2.0 * h);
    const double d2 = std::abs(u(c + h) - 2.0 * u(c) + u(c - h)) / (h * h);
    const double w = eps / std::max({d1, std::sqrt(eps * d2), 1e-300});
    return std::min(w, 1.0);
}

struct Piece {
    double a, b;
    Complex value;
    double error, l1;
};

template <class F>
Piece gk31(F& f, double a, double b)
{
    Piece p{a, b, {}, 0.0, 0.0};
    p.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &p.error, &p.l1);
    // Boost 1.74 reports the non-adaptive error on [-1, 1]; rescale.
    p.error *= 0.5 * (b - a);
    return p;
}

template <class F>
Complex refine(F& f, const Piece& p, double tol, int depth)
{
    // Below ~1e-14 of its own |f| a panel is at rounding level.
    if (p.error <= std::max(tol, 1e-14 * p.l1) || depth == 0)
        return p.value;
    const double m = 0.5 * (p.a + p.b);
    return refine(f, gk31(f, p.a, m), 0.5 * tol, depth - 1) +
           refine(f, gk31(f, m, p.b), 0.5 * tol, depth - 1);
}

// Sum over consecutive cuts; accuracy rel_tol relative to the integral of |f|.
template <class F>
Complex integrate_cuts(F f, const std::vector<double>& cuts, double rel_tol, int depth)
{
    std::vector<Piece> pieces;
    double l1 = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        pieces.push_back(gk31(f, cuts[i - 1], cuts[i]));
        l1 += pieces.back().l1;
    }
    const double tol = rel_tol * l1 / std::max<std::size_t>(1, pieces.size());
    Complex sum{0.0, 0.0};
    for (const Piece& p : pieces)
        sum += refine(f, p, tol, depth);
    return sum;
}

// Inner x integral at fixed y, with breakpoints around every eps-peak.
inline Complex inner(const std::vector<Term>& terms, double omega, double y, double eps, double rel_tol)
{
    std::vector<double> cuts{-kWindow, kWindow};
    for (const Term& t : terms) {
        const std::function<double(double)> u = [&](double x) { return t.u(x, y); };
        for (double c : near_zeros(u, -kWindow - 1.0, kWindow + 1.0, 600)) {
            const double w = peak_width(u, c, eps);
            for (double k : {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0}) {
                const double p = c + k * w;
                if (p > -kWindow && p < kWindow)
                    cuts.push_back(p);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto f = [&](double x) {
        Complex k{0.0, 0.0};
        for (const Term& t : terms) {
            const double u = t.u(x, y);
            k += t.coeff * Complex(u, eps) / (u * u + eps * eps);
        }
        const double env = std::exp(-0.25 * (x * x + y * y));
        return env * Complex(std::cos(omega * x), -std::sin(omega * x)) * k;
    };
    return integrate_cuts(f, cuts, rel_tol, 24);
}

// Number of near-zeros of all terms at fixed y; changes where a root pair
// appears or merges.
inline int zero_count(const std::vector<Term>& terms, double y)
{
    int n = 0;
    for (const Term& t : terms) {
        const std::function<double(double)> u = [&](double x) { return t.u(x, y); };
        double prev = u(-kWindow - 1.0);
        for (int i = 1; i <= 600; ++i) {
            const double cur = u(-kWindow - 1.0 + (2.0 * kWindow + 2.0) * i / 600);
            n += (prev < 0.0) != (cur < 0.0);
            prev = cur;
        }
    }
    return n;
}

// y values where the root structure changes, located by scanning y and
// bisecting on the root count.
inline std::vector<double> tangencies(const std::vector<Term>& terms, double y_max)
{
    std::vector<double> out;
    const int n = 800;
    double y0 = 1e-9;
    int c0 = zero_count(terms, y0);
    for (int i = 1; i <= n; ++i) {
        const double y1 = y_max * i / n;
        const int c1 = zero_count(terms, y1);
        if (c1 != c0) {
            double p = y0, q = y1;
            while (q - p > 1e-13 * std::max(1.0, q)) {
                const double m = 0.5 * (p + q);
                if (zero_count(terms, m) == c0)
                    p = m;
                else
                    q = m;
            }
            out.push_back(0.5 * (p + q));
        }
        y0 = y1;
        c0 = c1;
    }
    return out;
}

// X at finite eps. y_cuts are extra outer breakpoints (kinks such as y = L);
// root onsets are found here and padded with eps-scale breakpoints.
inline Complex x_eps(harvest::Scenario s, const harvest::PhysicalConfig& cfg, double eps,
                     std::vector<double> y_cuts, double rel_tol = 1e-8)
{
    const auto terms = printed_terms(s, cfg.a_sigma, cfg.l_sigma);
    std::vector<double> cuts{0.0, kWindow};
    for (double yc : y_cuts)
        cuts.push_back(yc);
    for (double yt : tangencies(terms, kWindow))
        for (double k : {-1e3, -1e2, -10.0, -1.0, 0.0, 1.0, 10.0, 1e2, 1e3})
            cuts.push_back(yt + k * eps);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [](double y) { return y < 0.0 || y > kWindow; }),
               cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto g = [&](double y) { return inner(terms, cfg.omega_sigma, y, eps, 0.1 * rel_tol); };
    return -integrate_cuts(g, cuts, rel_tol, 16);
}

// Linear-in-eps extrapolation from eps1 > eps2.
inline Complex extrapolate(Complex x1, double eps1, Complex x2, double eps2)
{
    return x2 + (x2 - x1) * (eps2 / (eps1 - eps2));
}

// quadratic Lagrange through three eps values, evaluated at eps = 0
inline Complex extrapolate(const Complex (&x)[3], const double (&e)[3])
{
    Complex sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i)
                w *= e[j] / (e[j] - e[i]);
        sum += w * x[i];
    }
    return sum;
}

} // namespace oracle

#endif
