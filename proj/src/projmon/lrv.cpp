#include "projmon/lrv.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "projmon/common.hpp"

namespace projmon {

void LrvConfig::validate() const {
    if (!(rho > 0.0 && rho < 0.5)) throw_invalid("lrv rho must lie in (0, 0.5)");
}

std::size_t LrvConfig::bandwidth(std::size_t m) const {
    validate();
    if (m < 4) throw_invalid("lrv needs m >= 4");
    std::size_t b = b_override ? *b_override
                               : static_cast<std::size_t>(std::floor(std::pow(double(m), rho)));
    if (b_override && *b_override >= m) throw_invalid("lrv bandwidth override must be < m");
    b = std::max<std::size_t>(2, std::min(b, m / 2));
    return b;
}

namespace {

// Kahan-compensated accumulator for the sliding window sum.
struct Kahan {
    double sum = 0, comp = 0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

double block_variance(const std::vector<double>& s) {
    const double n = static_cast<double>(s.size());
    Kahan mean_acc;
    for (double v : s) mean_acc.add(v);
    const double mean = mean_acc.sum / n;
    Kahan var_acc;
    for (double v : s) var_acc.add((v - mean) * (v - mean));
    const double var = var_acc.sum / n;
    if (var <= 1e-13 * (1.0 + mean * mean)) {
        throw_domain("degenerate long-run variance (all block sums equal)");
    }
    return var;
}

}  // namespace

double lrv_estimate(std::span<const double> values, const LrvConfig& cfg) {
    const std::size_t m = values.size();
    const std::size_t b = cfg.bandwidth(m);
    const double inv_sqrt_b = 1.0 / std::sqrt(static_cast<double>(b));

    std::vector<double> blocks(m - b + 1);
    Kahan window;
    for (std::size_t i = 0; i < b; ++i) window.add(values[i]);
    blocks[0] = window.sum * inv_sqrt_b;
    for (std::size_t j = 1; j + b <= m; ++j) {
        window.add(-values[j - 1]);
        window.add(values[j + b - 1]);
        blocks[j] = window.sum * inv_sqrt_b;
    }
    return block_variance(blocks);
}

double lrv_estimate_twopass(std::span<const double> values, const LrvConfig& cfg) {
    const std::size_t m = values.size();
    const std::size_t b = cfg.bandwidth(m);
    const double inv_sqrt_b = 1.0 / std::sqrt(static_cast<double>(b));

    std::vector<double> blocks(m - b + 1);
    for (std::size_t j = 0; j + b <= m; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < b; ++i) s += values[j + i];
        blocks[j] = s * inv_sqrt_b;
    }
    return block_variance(blocks);
}

}  // namespace projmon
