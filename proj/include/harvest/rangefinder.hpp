#ifndef HARVEST_RANGEFINDER_HPP
#define HARVEST_RANGEFINDER_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "harvest/config.hpp"
#include "harvest/observables.hpp"

namespace harvest::range {

enum class SweepVar { LSigma, ASigma, OmegaSigma };

std::string_view to_string(SweepVar v);
std::optional<SweepVar> parse_sweep_var(std::string_view name);

struct SweepSpec {
    Scenario scenario = Scenario::Inertial;
    SweepVar vary = SweepVar::LSigma;
    double from = 0.0;
    double to = 1.0;
    int points = 2;
    // The swept field of `fixed` is ignored.
    PhysicalConfig fixed{};
    double tol = obs::kDefaultTolerance;

    // std::invalid_argument unless from < to, points >= 2, tol > 0.
    void validate() const;
};

// Inclusive uniform grid; the endpoints are exactly `from` and `to`.
std::vector<double> grid(const SweepSpec& spec);
PhysicalConfig config_at(const SweepSpec& spec, double value);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. jobs <= 0 means the
// machine's parallelism. fn must only touch slot i of any shared output.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

// One record per grid point, in grid order. Points that fail to converge
// keep converged = false; points with invalid configs rethrow.
std::vector<obs::ObservableRecord> sweep(const SweepSpec& spec, int jobs = 1,
                                         const std::function<void(int, int)>& progress = {});

struct RangeResult {
    double l_max_sigma = 0.0;
    double bracket_width = 0.0;
    long evaluations = 0;
    // Scan density actually used (80 unless re-entrant cells forced more).
    int scan_points = 0;
    // f(l_max - w) > 0 and f(l_max + w) <= 0 checked by direct evaluation.
    bool verified = false;
    bool converged = true;
};

struct RangeOptions {
    double l_lo = 0.02;
    double l_hi = 12.0;
    int scan_points = 80;
    int max_scan_points = 640;
    double bracket = 1e-4;
    double tol = obs::kDefaultTolerance;
    int jobs = 1;
};

class NoEntanglementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BracketEscapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Largest separation with |X| > P: geometric scan for the last sign change
// of |X| - P, then bisection.
RangeResult l_max(Scenario scenario, double a_sigma, double omega_sigma,
                  const RangeOptions& opts = {});

} // namespace harvest::range

#endif // HARVEST_RANGEFINDER_HPP
