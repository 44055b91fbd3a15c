#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace projmon {

// Bandwidth rule for the long-run variance estimator: b = floor(m^rho)
// unless overridden, clamped to [2, m/2].
struct LrvConfig {
    double rho = 0.4;  // in (0, 1/2)
    std::optional<std::size_t> b_override;

    void validate() const;
    std::size_t bandwidth(std::size_t m) const;
};

// Long-run variance of a scalar series from overlapping blocks: the
// variance of the m-b+1 scaled block sums S_j(b) = b^{-1/2} * sum of the b
// values starting at j+1, centered at their mean. Strictly positive on
// non-degenerate input; throws on (numerically) constant block sums.
double lrv_estimate(std::span<const double> values, const LrvConfig& cfg = {});

// Two-pass reference implementation used to cross-check the sliding-window
// production path. Recomputes every block sum from scratch.
double lrv_estimate_twopass(std::span<const double> values, const LrvConfig& cfg = {});

}  // namespace projmon
