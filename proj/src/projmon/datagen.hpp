#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>

#include "projmon/stream.hpp"

namespace projmon {

enum class InnovationKind { normal, student_t };

// Truncated moving-average Y_t = sum_{l=0}^{l_max} c_l A_l eta_{t-l} in
// physical form, with c_0 = 1, c_l = l^{-beta} for l >= 1, fixed seeded
// mixing matrices A_l (rows unit l2 norm) and i.i.d. innovations.
struct VectorMaSpec {
    std::size_t d = 5;
    double beta = 3.0;  // > 2
    std::size_t l_max = 4;
    InnovationKind innovation = InnovationKind::normal;
    double df = 8.0;  // student-t only; > 4

    void validate() const;
};

// Lipschitz time-modulation of a stationary MA core: mean curve
// mu_j(u) = mean_amp * sin(2 pi (u + j/d)) and scale 1 + scale_amp * u,
// sampled at u = t/n.
struct LocallyStationarySpec {
    VectorMaSpec core;
    double mean_amp = 1.0;
    double scale_amp = 0.5;
};

// I.i.d. N(0, sigma0) switching to N(0, sigma_a) for t > k_star.
struct CovarianceBreakSpec {
    Eigen::MatrixXd sigma0;
    Eigen::MatrixXd sigma_a;
    std::size_t k_star = 0;
};

// Built-in regression scenario: three regressors (the first drives the
// response, the laws and the link change at t = 2000 and t = 4000) plus a
// response column. Noise levels 0.1 / 0.05 are variances by default.
struct Regression63Spec {
    bool noise_as_stddev = false;
};

struct GeneratorSpec {
    std::variant<VectorMaSpec, LocallyStationarySpec, CovarianceBreakSpec, Regression63Spec> kind;
    std::size_t n = 0;
    std::uint64_t seed = 1;
};

ObservationStream generate(const GeneratorSpec& spec);
ObservationStream generate_regression63(std::uint64_t seed, std::size_t n = 50000,
                                        bool noise_as_stddev = false);

// JSON form used by the C API and the CLI:
// {"kind": "vectorma"|"locally-stationary"|"covbreak"|"regression63",
//  "n": ..., "seed": ..., kind-specific fields...}
GeneratorSpec generator_from_json(const std::string& text);

// Deterministic building blocks, exposed so dependence diagnostics can
// evaluate the data map on coupled innovation windows.
Eigen::MatrixXd vectorma_mixing(const VectorMaSpec& spec, std::size_t lag, std::uint64_t seed);

// window[l] is the innovation at lag l (window[0] = eta_t); needs
// window.size() == l_max + 1.
Eigen::VectorXd vectorma_eval(const VectorMaSpec& spec, std::span<const Eigen::VectorXd> window,
                              std::uint64_t seed);

// Same map with the locally stationary modulation at time fraction u.
Eigen::VectorXd locally_stationary_eval(const LocallyStationarySpec& spec, double u,
                                        std::span<const Eigen::VectorXd> window,
                                        std::uint64_t seed);

}  // namespace projmon
