#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "projmon/types.hpp"

namespace projmon {

// Monte Carlo settings for the limit-law simulations. `grid` is the number
// of grid steps per unit time (step 1/grid); a closed-end run over [0, T]
// therefore uses about grid*T steps. Replications are independent and each
// derives its own seed from `seed`, so results do not depend on `threads`.
struct SimConfig {
    std::size_t reps = 100000;
    std::size_t grid = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

// R realizations of sup_{delta/(1+delta) <= t <= 1} |B(t)| / t^gamma with B
// a standard Brownian motion simulated by Gaussian increments on [0, 1].
std::vector<double> simulate_openend_sup(double gamma, double delta, const SimConfig& cfg);

// R realizations of sup_{delta <= t <= T} |B1(t) - t*B2(1)| / w(t) with
// w(t) = (1+t)(t/(1+t))^gamma, or w == 1 under the flat weighting. B1 is a
// Brownian motion on [0, T], B2(1) an independent standard normal.
std::vector<double> simulate_closedend_sup(double gamma, double delta, double T,
                                           const SimConfig& cfg,
                                           BoundaryWeighting weighting = BoundaryWeighting::paper);

// Post-change drift shape for the local-alternative limit. `delta_fn` must
// be evaluable on [0, T - theta_break].
struct LocalAlternativeSpec {
    double theta_break = 0;  // change location, in (delta, T)
    std::function<double(double)> delta_fn;
    double T = 0;
};

// Fraction of R replications whose drifted supremum
//   sup_{delta <= t <= T} |B1(t) - t*B2(1) + 1_{t>=theta} int_0^{t-theta} Delta| / w(t)
// exceeds c. The drift integral uses trapezoidal quadrature on the grid.
double simulate_power(const LocalAlternativeSpec& spec, double gamma, double delta, double c,
                      const SimConfig& cfg);

// Empirical (1-alpha) quantile, "higher" order-statistic rule:
// the ceil((1-alpha)*R)-th smallest sample value.
double quantile_higher(std::span<const double> sample, double alpha);

// Doubles the grid resolution of a Brownian path (values on a uniform grid
// with step h, path[0] = B(0)) by sampling conditional midpoints. Existing
// grid values are preserved, so discrete suprema are nondecreasing.
std::vector<double> refine_brownian_path(std::span<const double> path, double h,
                                         std::uint64_t seed);

// One quantile table entry with Monte Carlo provenance.
struct CritEntry {
    double gamma = 0;
    double delta = 0;
    std::optional<double> T;  // nullopt = open-end
    double alpha = 0;
    BoundaryWeighting weighting = BoundaryWeighting::paper;
    double c = 0;
    std::size_t reps = 0;
    std::size_t grid = 0;
    std::uint64_t seed = 0;
};

// Lookup table (gamma, delta, horizon, alpha) -> critical value, with
// simulate-on-miss semantics and JSON persistence.
class CriticalValueTable {
public:
    std::optional<CritEntry> lookup(double gamma, double delta, std::optional<double> T,
                                    double alpha,
                                    BoundaryWeighting weighting = BoundaryWeighting::paper) const;

    // Returns the cached critical value or simulates one sample, inserts
    // every requested alpha from it, and returns the entry for `alpha`.
    CritEntry get_or_simulate(const BoundaryConfig& boundary, double alpha, const SimConfig& cfg);

    // Same, for several levels off one simulated sample.
    std::vector<CritEntry> get_or_simulate_many(const BoundaryConfig& boundary,
                                                std::span<const double> alphas,
                                                const SimConfig& cfg);

    void insert(const CritEntry& e);
    const std::vector<CritEntry>& entries() const { return entries_; }

    std::string to_json() const;
    static CriticalValueTable from_json(const std::string& text);
    static CriticalValueTable load(const std::string& path);  // empty table if absent
    void save(const std::string& path) const;

private:
    std::vector<CritEntry> entries_;
};

// Critical value for a boundary configuration at level alpha, simulated
// with `cfg` (convenience wrapper used by the monitor when no table is
// supplied).
double critical_value(const BoundaryConfig& boundary, double alpha, const SimConfig& cfg);

}  // namespace projmon
