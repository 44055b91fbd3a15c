#include "projmon/portfolio.hpp"

#include <cmath>

#include "json.hpp"
#include "projmon/common.hpp"

namespace projmon {

ProjectionVector min_variance_portfolio(const Eigen::Ref<const Eigen::MatrixXd>& precision) {
    if (precision.rows() != precision.cols()) throw_invalid("precision matrix must be square");
    const Eigen::VectorXd p1 = precision * Eigen::VectorXd::Ones(precision.rows());
    const double denom = p1.sum();
    if (!(denom > 0.0)) throw_domain("1'P1 <= 0: precision input is not positive definite");
    Eigen::VectorXd w = p1 / denom;
    w /= w.sum();  // final renormalization
    return ProjectionVector::dense({w.data(), w.data() + w.size()});
}

ProjectionVector target_return_portfolio(const Eigen::Ref<const Eigen::MatrixXd>& precision,
                                         const Eigen::Ref<const Eigen::VectorXd>& mu, double mu0) {
    if (precision.rows() != precision.cols()) throw_invalid("precision matrix must be square");
    if (mu.size() != precision.rows()) throw_invalid("mean vector dimension mismatch");
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(precision.rows());
    const Eigen::VectorXd p1 = precision * ones;
    const Eigen::VectorXd pmu = precision * mu;
    const double A = ones.dot(p1);
    const double B = ones.dot(pmu);
    const double C = mu.dot(pmu);
    const double det = A * C - B * B;
    if (!(A > 0.0)) throw_domain("1'P1 <= 0: precision input is not positive definite");
    if (std::abs(det) <= 1e-12 * std::max(1.0, A * C)) {
        throw_domain("degenerate target-return constraint (mean proportional to ones)");
    }
    // solve [A B; B C] (a, b)' = (1, mu0)'
    const double a = (C - B * mu0) / det;
    const double b = (A * mu0 - B) / det;
    Eigen::VectorXd w = a * p1 + b * pmu;
    return ProjectionVector::dense({w.data(), w.data() + w.size()});
}

ProjectionVector restrict_support(const ProjectionVector& v,
                                  const std::vector<std::size_t>& support_1based) {
    if (support_1based.empty()) throw_invalid("restrict_support: empty index set");
    ProjectionVector out = v;
    std::vector<std::size_t> zero_based;
    zero_based.reserve(support_1based.size());
    std::vector<bool> keep(v.dim(), false);
    for (std::size_t j : support_1based) {
        if (j < 1 || j > v.dim()) throw_invalid("restrict_support: index out of range");
        keep[j - 1] = true;
        zero_based.push_back(j - 1);
    }
    for (std::size_t j = 0; j < out.dim(); ++j) {
        if (!keep[j]) out.entries[j] = 0.0;
    }
    out.support = zero_based;
    return out;
}

double gross_exposure(const ProjectionVector& v) { return v.l1_norm(); }

const std::map<std::string, PlugInFn>& plugin_registry() {
    static const std::map<std::string, PlugInFn> registry = {
        {"minvar",
         [](const Eigen::Ref<const Eigen::MatrixXd>& p,
            const Eigen::Ref<const Eigen::VectorXd>&) { return min_variance_portfolio(p); }},
        {"precision-mean",
         [](const Eigen::Ref<const Eigen::MatrixXd>& p,
            const Eigen::Ref<const Eigen::VectorXd>& mu) {
             Eigen::VectorXd w = p * mu;
             const double s = w.sum();
             if (std::abs(s) <= 1e-300) throw_domain("precision-mean plug-in: weights sum to 0");
             w /= s;
             return ProjectionVector::dense({w.data(), w.data() + w.size()});
         }},
    };
    return registry;
}

std::string PortfolioResult::to_json() const {
    nlohmann::json j;
    j["weights"] = weights.entries;
    j["kind"] = kind;
    j["gross_exposure"] = gross_exposure;
    if (exposure_cap) {
        j["exposure_cap"] = *exposure_cap;
        j["exposure_within_cap"] = gross_exposure <= *exposure_cap;
    }
    j["constraints_residuals"] = {{"budget", residual_budget}, {"return", residual_return}};
    return j.dump();
}

}  // namespace projmon
