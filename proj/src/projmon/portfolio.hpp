#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "projmon/types.hpp"

namespace projmon {

// Global minimum-variance weights w = P1 / (1'P1) from a precision matrix,
// renormalized so the entries sum to one.
ProjectionVector min_variance_portfolio(const Eigen::Ref<const Eigen::MatrixXd>& precision);

// Markowitz weights with w'1 = 1 and w'mu = mu0: the unique combination
// a*P1 + b*Pmu solving the associated 2x2 system.
ProjectionVector target_return_portfolio(const Eigen::Ref<const Eigen::MatrixXd>& precision,
                                         const Eigen::Ref<const Eigen::VectorXd>& mu, double mu0);

// Zeroes entries outside the (1-based) index set and records it as support.
ProjectionVector restrict_support(const ProjectionVector& v,
                                  const std::vector<std::size_t>& support_1based);

// l1 norm of the weights (total long + short magnitude).
double gross_exposure(const ProjectionVector& v);

// Named plug-in forms v = f(precision, mean) implementing the estimated
// projection interface. Registered: "minvar" and "precision-mean"
// (w = P*mu normalized to sum one).
using PlugInFn =
    std::function<ProjectionVector(const Eigen::Ref<const Eigen::MatrixXd>&,
                                   const Eigen::Ref<const Eigen::VectorXd>&)>;
const std::map<std::string, PlugInFn>& plugin_registry();

// Portfolio output record used by the JSON surface. The exposure cap is
// diagnostic: it is compared against the gross exposure, never enforced.
struct PortfolioResult {
    ProjectionVector weights;
    std::string kind;
    double gross_exposure = 0;
    std::optional<double> exposure_cap;
    double residual_budget = 0;   // |w'1 - 1|
    double residual_return = 0;   // |w'mu - mu0|, target-return only
    std::string to_json() const;
};

}  // namespace projmon
