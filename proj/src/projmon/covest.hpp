#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace projmon {

// Training-sample mean, second-moment and covariance estimates. The
// identity Sigma = M - mu*mu' holds by construction up to rounding.
struct MomentEstimates {
    Eigen::VectorXd mu;
    Eigen::MatrixXd second_moment;  // (1/m) sum Y Y'
    Eigen::MatrixXd covariance;     // (1/m) sum (Y-mu)(Y-mu)'
    std::size_t m = 0;
};

MomentEstimates estimate_moments(const Eigen::Ref<const Eigen::MatrixXd>& rows);

enum class ThresholdKind { hard, lasso, scad };

// Threshold selection: a fixed level, or the rate rule t = C_th * d^{4/q} / sqrt(m).
struct FixedThreshold {
    double value = 0;
};
struct RateThreshold {
    double c_th = 1.0;
    double q = 8.0;  // moment order, > 4
};

struct ThresholdRule {
    ThresholdKind kind = ThresholdKind::lasso;
    std::variant<FixedThreshold, RateThreshold> level = FixedThreshold{0.0};
    double scad_a = 3.7;  // > 2
    bool exempt_diagonal = true;

    void validate() const;
    // Resolves the threshold value; d and m are only used by the rate rule.
    double resolve(std::size_t d, std::size_t m) const;
};

// Scalar thresholding operator (pure elementwise form).
double threshold_scalar(double x, double t, ThresholdKind kind, double scad_a = 3.7);

// Elementwise application to a symmetric matrix; symmetry is preserved
// exactly. Diagonal entries are kept untouched when rule.exempt_diagonal.
Eigen::MatrixXd apply_threshold(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                const ThresholdRule& rule, std::size_t m = 0);

// Largest absolute eigenvalue of a symmetric matrix by power iteration with
// a Rayleigh quotient convergence test (relative tolerance 1e-10); falls
// back to a full symmetric eigendecomposition if the iteration stalls.
double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& a);

// Uniformity-class parameters: bounded variances (<= M), row-wise l_r
// quasi-norms (<= s0) and, optionally, smallest eigenvalue >= eps0.
struct UniformityClassParams {
    double r = 0;       // in [0, 1); r = 0 counts nonzero entries
    double s0 = 0;
    double M = 0;
    std::optional<double> eps0;
};

struct MembershipReport {
    bool is_member = false;
    std::vector<std::size_t> rows_over_s0;  // 1-based row indices
    std::vector<std::size_t> diag_over_M;   // 1-based
    std::optional<double> lambda_min;       // set when eps0 was checked
    bool eigenvalue_ok = true;
};

MembershipReport membership_check(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                  const UniformityClassParams& params);

// Evaluates both sides of the thresholding error bound
//   ||S_t(Gamma) - Sigma||_op <= 2 t^{1-r} s0
//       + ||Gamma-Sigma||_inf (#{|Gamma_ij - Sigma_ij| > (1-gamma_split) t}
//                              + s0/(gamma_split t)^r + 2 s0/t^r)
// using the pure elementwise operator. Sigma must satisfy the (r, s0, M)
// class conditions.
struct BoundCheckResult {
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
};

BoundCheckResult threshold_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& gamma_mat,
                                       const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                       const UniformityClassParams& params, double t,
                                       double gamma_split,
                                       ThresholdKind kind = ThresholdKind::lasso,
                                       double scad_a = 3.7);

// Inverse of a (near-)SPD matrix. If lambda_min < eps0/2 a ridge
// eps0/2 - lambda_min is added to the diagonal first; `jitter` reports the
// adjustment.
struct PrecisionEstimate {
    Eigen::MatrixXd inverse;
    bool jittered = false;
    double jitter = 0;
};

PrecisionEstimate precision_estimate(const Eigen::Ref<const Eigen::MatrixXd>& sigma, double eps0);

// Data-driven C_th: random 2-fold splits, pick the constant minimizing the
// average held-out operator-norm discrepancy of the thresholded estimate.
double select_cth(const Eigen::Ref<const Eigen::MatrixXd>& rows, const ThresholdRule& rule,
                  const std::vector<double>& candidates, std::uint64_t seed,
                  int n_splits = 20);

// Dense row-major CSV and compact symmetric JSON {"d": d, "triu": [...]}.
std::string matrix_to_csv(const Eigen::Ref<const Eigen::MatrixXd>& a);
Eigen::MatrixXd matrix_from_csv(const std::string& text);
std::string symmetric_to_json(const Eigen::Ref<const Eigen::MatrixXd>& a);
Eigen::MatrixXd symmetric_from_json(const std::string& text);

}  // namespace projmon
