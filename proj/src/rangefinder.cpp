#include "harvest/rangefinder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace harvest::range {

std::string_view to_string(SweepVar v)
{
    switch (v) {
    case SweepVar::LSigma: return "l_sigma";
    case SweepVar::ASigma: return "a_sigma";
    case SweepVar::OmegaSigma: return "omega_sigma";
    }
    return "unknown";
}

std::optional<SweepVar> parse_sweep_var(std::string_view name)
{
    if (name == "l_sigma" || name == "l-sigma" || name == "l")
        return SweepVar::LSigma;
    if (name == "a_sigma" || name == "a-sigma" || name == "a")
        return SweepVar::ASigma;
    if (name == "omega_sigma" || name == "omega-sigma" || name == "omega")
        return SweepVar::OmegaSigma;
    return std::nullopt;
}

void SweepSpec::validate() const
{
    if (!std::isfinite(from) || !std::isfinite(to) || !(from < to))
        throw std::invalid_argument("sweep: need finite from < to");
    if (points < 2)
        throw std::invalid_argument("sweep: need at least two points");
    if (!(tol > 0.0))
        throw std::invalid_argument("sweep: tolerance must be positive");
}

std::vector<double> grid(const SweepSpec& spec)
{
    spec.validate();
    std::vector<double> g(static_cast<std::size_t>(spec.points));
    const double step = (spec.to - spec.from) / (spec.points - 1);
    for (int i = 0; i < spec.points; ++i)
        g[i] = spec.from + step * i;
    g.back() = spec.to;
    return g;
}

PhysicalConfig config_at(const SweepSpec& spec, double value)
{
    PhysicalConfig cfg = spec.fixed;
    switch (spec.vary) {
    case SweepVar::LSigma: cfg.l_sigma = value; break;
    case SweepVar::ASigma: cfg.a_sigma = value; break;
    case SweepVar::OmegaSigma: cfg.omega_sigma = value; break;
    }
    return cfg;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn)
{
    if (n <= 0)
        return;
    if (jobs <= 0)
        jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, n);
    if (jobs == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back(worker);
    for (std::thread& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::vector<obs::ObservableRecord> sweep(const SweepSpec& spec, int jobs,
                                         const std::function<void(int, int)>& progress)
{
    const std::vector<double> g = grid(spec);
    std::vector<obs::ObservableRecord> out(g.size());
    std::atomic<int> done{0};
    std::mutex progress_mutex;
    parallel_for(static_cast<int>(g.size()), jobs, [&](int i) {
        out[i] = obs::evaluate(spec.scenario, config_at(spec, g[i]), spec.tol);
        const int d = ++done;
        if (progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            progress(d, static_cast<int>(g.size()));
        }
    });
    return out;
}

namespace {

// Geometric grid with n points on [lo, hi], endpoints exact.
std::vector<double> geometric(double lo, double hi, int n)
{
    std::vector<double> g(static_cast<std::size_t>(n));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::exp(ratio * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// Evaluates the scan from the top down, in batches of `jobs`, until the
// first positive point and its lower neighbour are known. Points below that
// cannot affect the last sign change. Returns the index of the last positive
// point, or -1.
int scan_down(const std::vector<double>& g, std::map<double, double>& cache, int jobs,
              const std::function<double(double)>& f)
{
    const int n = static_cast<int>(g.size());
    int last = -1;
    int i = n - 1;
    while (i >= 0) {
        std::vector<int> batch;
        for (int k = i; k >= 0 && static_cast<int>(batch.size()) < std::max(1, jobs); --k)
            if (!cache.count(g[k]))
                batch.push_back(k);
        std::vector<double> values(batch.size());
        parallel_for(static_cast<int>(batch.size()), jobs,
                     [&](int b) { values[b] = f(g[batch[b]]); });
        for (std::size_t b = 0; b < batch.size(); ++b)
            cache[g[batch[b]]] = values[b];
        // Walk down through whatever is now known.
        while (i >= 0 && cache.count(g[i])) {
            if (last >= 0)
                return last;
            if (cache[g[i]] > 0.0)
                last = i;
            --i;
        }
    }
    return last;
}

// The positive point sits alone between two non-positive neighbours: a
// window narrower than the scan spacing may be hiding nearby.
bool isolated(const std::vector<double>& g, const std::map<double, double>& cache, int last)
{
    if (last <= 0)
        return false;
    return !(cache.at(g[last - 1]) > 0.0);
}

} // namespace

RangeResult l_max(Scenario scenario, double a_sigma, double omega_sigma, const RangeOptions& opts)
{
    if (!(opts.l_lo > 0.0) || !(opts.l_hi > opts.l_lo))
        throw std::invalid_argument("l_max: need 0 < l_lo < l_hi");
    if (opts.scan_points < 2 || opts.max_scan_points < opts.scan_points)
        throw std::invalid_argument("l_max: bad scan density");
    if (!(opts.bracket > 0.0) || !(opts.tol > 0.0))
        throw std::invalid_argument("l_max: bracket and tolerance must be positive");

    PhysicalConfig base{a_sigma, omega_sigma, 1.0};
    base.validate();
    if (scenario != Scenario::Inertial && !(a_sigma > 0.0))
        throw std::invalid_argument("l_max: accelerated scenarios need a_sigma > 0");

    RangeResult res;
    // P does not depend on the separation.
    double p = 0.0;
    if (scenario == Scenario::Inertial) {
        p = obs::transition_probability_rest(omega_sigma);
    } else {
        const quad::QuadratureResult pr = obs::transition_probability(base, opts.tol);
        p = pr.value.real();
        res.evaluations += pr.evaluations;
        res.converged = res.converged && pr.converged;
    }

    std::mutex tally;
    auto f = [&](double l) {
        PhysicalConfig cfg = base;
        cfg.l_sigma = l;
        const quad::QuadratureResult x = obs::x_nonlocal(scenario, cfg, opts.tol);
        std::lock_guard<std::mutex> lock(tally);
        res.evaluations += x.evaluations;
        res.converged = res.converged && x.converged;
        return std::abs(x.value) - p;
    };

    std::map<double, double> cache;
    int n = opts.scan_points;
    std::vector<double> g = geometric(opts.l_lo, opts.l_hi, n);
    cache[g.back()] = f(g.back());
    if (cache[g.back()] > 0.0)
        throw BracketEscapeError("l_max: concurrence still positive at l_hi; raise l_hi");
    int last = scan_down(g, cache, opts.jobs, f);
    while (isolated(g, cache, last) && 2 * (n - 1) + 1 <= opts.max_scan_points) {
        // Doubling a geometric grid reproduces the old points exactly.
        n = 2 * (n - 1) + 1;
        g = geometric(opts.l_lo, opts.l_hi, n);
        last = scan_down(g, cache, opts.jobs, f);
    }
    res.scan_points = n;
    if (last < 0)
        throw NoEntanglementError("l_max: no harvesting anywhere on the scan");

    double lo = g[last];
    double hi = g[last + 1];
    while (hi - lo > opts.bracket) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    res.l_max_sigma = 0.5 * (lo + hi);
    res.bracket_width = hi - lo;
    const double below = f(std::max(0.5 * opts.l_lo, res.l_max_sigma - res.bracket_width));
    const double above = f(res.l_max_sigma + res.bracket_width);
    res.verified = below > 0.0 && above <= 0.0;
    return res;
}

} // namespace harvest::range
