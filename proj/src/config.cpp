#include "harvest/config.hpp"

#include <cmath>
#include <stdexcept>

namespace harvest {

void PhysicalConfig::validate() const
{
    if (!std::isfinite(a_sigma) || !std::isfinite(omega_sigma) || !std::isfinite(l_sigma))
        throw std::invalid_argument("PhysicalConfig: all parameters must be finite");
    if (a_sigma < 0.0)
        throw std::invalid_argument("PhysicalConfig: a_sigma must be non-negative");
    if (!(l_sigma > 0.0))
        throw std::invalid_argument("PhysicalConfig: l_sigma must be positive");
}

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::Inertial: return "inertial";
    case Scenario::Parallel: return "parallel";
    case Scenario::AntiParallel: return "antiparallel";
    case Scenario::Perpendicular: return "perpendicular";
    }
    return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name)
{
    if (name == "inertial" || name == "rest")
        return Scenario::Inertial;
    if (name == "parallel")
        return Scenario::Parallel;
    if (name == "antiparallel" || name == "anti-parallel")
        return Scenario::AntiParallel;
    if (name == "perpendicular")
        return Scenario::Perpendicular;
    return std::nullopt;
}

} // namespace harvest
