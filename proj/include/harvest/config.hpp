#ifndef HARVEST_CONFIG_HPP
#define HARVEST_CONFIG_HPP

#include <optional>
#include <string>
#include <string_view>

namespace harvest {

// Detector/field parameters in units of the switching duration sigma, which
// is set to 1 internally: a = a_sigma, Omega = omega_sigma, L = l_sigma.
struct PhysicalConfig {
    double a_sigma = 0.0;
    double omega_sigma = 0.0;
    double l_sigma = 1.0;

    // Throws std::invalid_argument unless all fields are finite, a_sigma >= 0
    // and l_sigma > 0.
    void validate() const;
};

enum class Scenario { Inertial, Parallel, AntiParallel, Perpendicular };

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

// Below this acceleration the accelerated formulas dispatch to the closed
// forms for detectors at rest.
inline constexpr double kMinAcceleration = 1e-6;

// Half-width of the Gaussian integration window: exp(-x^2/4) < 1e-18 beyond.
inline constexpr double kGaussianWindow = 12.875796157736083;

} // namespace harvest

#endif // HARVEST_CONFIG_HPP
