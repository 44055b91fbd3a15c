#include "projmon/covest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/rng.hpp"

namespace projmon {

MomentEstimates estimate_moments(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    const std::size_t m = static_cast<std::size_t>(rows.rows());
    if (m < 2) throw_invalid("moment estimation needs at least 2 observations");
    if (!rows.allFinite()) throw_invalid("moment estimation: non-finite input");
    MomentEstimates est;
    est.m = m;
    est.mu = rows.colwise().mean();
    Eigen::MatrixXd mm = (rows.transpose() * rows) / static_cast<double>(m);
    est.second_moment = 0.5 * (mm + mm.transpose());
    Eigen::MatrixXd cov = est.second_moment - est.mu * est.mu.transpose();
    est.covariance = 0.5 * (cov + cov.transpose());
    return est;
}

void ThresholdRule::validate() const {
    if (kind == ThresholdKind::scad && !(scad_a > 2.0)) throw_invalid("SCAD requires a > 2");
    if (const auto* f = std::get_if<FixedThreshold>(&level)) {
        if (!(f->value >= 0.0)) throw_invalid("threshold must be >= 0");
    } else {
        const auto& r = std::get<RateThreshold>(level);
        if (!(r.q > 4.0)) throw_invalid("rate threshold requires q > 4");
        if (!(r.c_th > 0.0)) throw_invalid("rate threshold requires C_th > 0");
    }
}

double ThresholdRule::resolve(std::size_t d, std::size_t m) const {
    validate();
    if (const auto* f = std::get_if<FixedThreshold>(&level)) return f->value;
    const auto& r = std::get<RateThreshold>(level);
    if (m < 1) throw_invalid("rate threshold needs the sample size m");
    return r.c_th * std::pow(static_cast<double>(d), 4.0 / r.q) /
           std::sqrt(static_cast<double>(m));
}

double threshold_scalar(double x, double t, ThresholdKind kind, double scad_a) {
    const double ax = std::abs(x);
    switch (kind) {
        case ThresholdKind::hard:
            // keep at |x| >= t (estimator convention; ties have measure zero)
            return ax >= t ? x : 0.0;
        case ThresholdKind::lasso:
            return ax > t ? (x > 0 ? ax - t : -(ax - t)) : 0.0;
        case ThresholdKind::scad: {
            const double a = scad_a;
            if (ax <= 2.0 * t) return ax > t ? (x > 0 ? ax - t : -(ax - t)) : 0.0;
            if (ax <= a * t) return ((a - 1.0) * x - (x > 0 ? 1.0 : -1.0) * a * t) / (a - 2.0);
            return x;
        }
    }
    return x;
}

Eigen::MatrixXd apply_threshold(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                const ThresholdRule& rule, std::size_t m) {
    if (sigma.rows() != sigma.cols()) throw_invalid("apply_threshold: matrix must be square");
    const std::size_t d = static_cast<std::size_t>(sigma.rows());
    const double t = rule.resolve(d, m);
    Eigen::MatrixXd out(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        out(i, i) = rule.exempt_diagonal ? sigma(i, i)
                                         : threshold_scalar(sigma(i, i), t, rule.kind, rule.scad_a);
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = threshold_scalar(sigma(i, j), t, rule.kind, rule.scad_a);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

double spectral_norm(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    if (a.rows() != a.cols()) throw_invalid("spectral_norm: matrix must be square");
    if (!a.allFinite()) throw_invalid("spectral_norm: non-finite entries");
    const Eigen::Index d = a.rows();
    if (d == 0) return 0.0;
    if (d == 1) return std::abs(a(0, 0));

    // Deterministic start with uneven coordinates so it is not orthogonal
    // to the leading eigenvector for typical inputs.
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = 1.0 + 0.37 * static_cast<double>(i % 7);
    v.normalize();

    constexpr int kMaxIter = 1000;
    constexpr double kRelTol = 1e-10;
    double lambda_prev = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        Eigen::VectorXd w = a * v;
        const double lambda = v.dot(w);  // Rayleigh quotient at the current iterate
        // accept only a settled quotient that is an actual eigenpair; a
        // stalled quotient (eigenvalues of equal magnitude, opposite sign)
        // has a large residual and falls through to the dense solver
        if (it > 0 && std::abs(lambda - lambda_prev) <= kRelTol * std::max(1.0, std::abs(lambda)) &&
            (w - lambda * v).norm() <= 1e-8 * std::max(1.0, std::abs(lambda))) {
            return std::abs(lambda);
        }
        lambda_prev = lambda;
        const double norm = w.norm();
        if (norm == 0.0) break;  // iterate fell into the null space; let the solver decide
        v = w / norm;
    }
    // Stalled (e.g. eigenvalues of equal magnitude and opposite sign).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double row_lr_norm(const Eigen::Ref<const Eigen::MatrixXd>& sigma, Eigen::Index i, double r) {
    double s = 0;
    for (Eigen::Index j = 0; j < sigma.cols(); ++j) {
        const double a = std::abs(sigma(i, j));
        if (r == 0.0) {
            s += (a != 0.0) ? 1.0 : 0.0;
        } else {
            s += std::pow(a, r);
        }
    }
    return s;
}

}  // namespace

MembershipReport membership_check(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                  const UniformityClassParams& params) {
    if (sigma.rows() != sigma.cols()) throw_invalid("membership_check: matrix must be square");
    if (!(params.r >= 0.0 && params.r < 1.0)) throw_invalid("uniformity class needs r in [0, 1)");
    MembershipReport rep;
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
        if (sigma(i, i) > params.M) rep.diag_over_M.push_back(static_cast<std::size_t>(i) + 1);
        if (row_lr_norm(sigma, i, params.r) > params.s0) {
            rep.rows_over_s0.push_back(static_cast<std::size_t>(i) + 1);
        }
    }
    if (params.eps0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
        rep.lambda_min = es.eigenvalues().minCoeff();
        rep.eigenvalue_ok = *rep.lambda_min >= *params.eps0;
    }
    rep.is_member = rep.diag_over_M.empty() && rep.rows_over_s0.empty() && rep.eigenvalue_ok;
    return rep;
}

BoundCheckResult threshold_bound_check(const Eigen::Ref<const Eigen::MatrixXd>& gamma_mat,
                                       const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                       const UniformityClassParams& params, double t,
                                       double gamma_split, ThresholdKind kind, double scad_a) {
    if (!(t > 0.0)) throw_invalid("threshold bound check needs t > 0");
    if (!(gamma_split > 0.0 && gamma_split < 1.0)) {
        throw_invalid("gamma_split must lie in (0, 1)");
    }
    if (gamma_mat.rows() != sigma.rows() || gamma_mat.cols() != sigma.cols()) {
        throw_invalid("threshold bound check: dimension mismatch");
    }
    auto membership = membership_check(sigma, params);
    if (!membership.is_member) {
        throw_invalid("sigma violates the uniformity class conditions");
    }

    ThresholdRule pure;
    pure.kind = kind;
    pure.scad_a = scad_a;
    pure.level = FixedThreshold{t};
    pure.exempt_diagonal = false;

    BoundCheckResult res;
    res.lhs = spectral_norm(apply_threshold(gamma_mat, pure) - sigma);

    const Eigen::MatrixXd diff = gamma_mat - sigma;
    const double max_abs = diff.cwiseAbs().maxCoeff();
    double count = 0;
    const double cut = (1.0 - gamma_split) * t;
    for (Eigen::Index i = 0; i < diff.rows(); ++i) {
        for (Eigen::Index j = 0; j < diff.cols(); ++j) {
            if (std::abs(diff(i, j)) > cut) count += 1.0;
        }
    }
    const double r = params.r;
    const double s0 = params.s0;
    res.rhs = 2.0 * std::pow(t, 1.0 - r) * s0 +
              max_abs * (count + s0 / std::pow(gamma_split * t, r) + 2.0 * s0 / std::pow(t, r));
    res.holds = res.lhs <= res.rhs + 1e-9;
    return res;
}

PrecisionEstimate precision_estimate(const Eigen::Ref<const Eigen::MatrixXd>& sigma, double eps0) {
    if (sigma.rows() != sigma.cols()) throw_invalid("precision_estimate: matrix must be square");
    if (!sigma.allFinite()) throw_invalid("precision_estimate: non-finite entries");
    if (!(eps0 > 0.0)) throw_invalid("precision_estimate needs eps0 > 0");
    const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const double lambda_min = es.eigenvalues().minCoeff();

    PrecisionEstimate out;
    Eigen::MatrixXd work = sym;
    if (lambda_min < eps0 / 2.0) {
        out.jittered = true;
        out.jitter = eps0 / 2.0 - lambda_min;
        work.diagonal().array() += out.jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() != Eigen::Success) {
        throw_domain("precision_estimate: factorization failed");
    }
    out.inverse = llt.solve(Eigen::MatrixXd::Identity(sym.rows(), sym.cols()));
    out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
    return out;
}

double select_cth(const Eigen::Ref<const Eigen::MatrixXd>& rows, const ThresholdRule& rule,
                  const std::vector<double>& candidates, std::uint64_t seed, int n_splits) {
    if (candidates.empty()) throw_invalid("select_cth: no candidates");
    const auto* rate = std::get_if<RateThreshold>(&rule.level);
    if (!rate) throw_invalid("select_cth applies to the rate threshold rule");
    const Eigen::Index m = rows.rows();
    if (m < 8) throw_invalid("select_cth needs at least 8 rows");

    std::vector<double> score(candidates.size(), 0.0);
    Rng rng = make_rng(seed);
    std::vector<Eigen::Index> idx(m);
    for (Eigen::Index i = 0; i < m; ++i) idx[i] = i;
    for (int split = 0; split < n_splits; ++split) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const Eigen::Index half = m / 2;
        Eigen::MatrixXd a(half, rows.cols()), b(m - half, rows.cols());
        for (Eigen::Index i = 0; i < half; ++i) a.row(i) = rows.row(idx[i]);
        for (Eigen::Index i = half; i < m; ++i) b.row(i - half) = rows.row(idx[i]);
        const Eigen::MatrixXd cov_a = estimate_moments(a).covariance;
        const Eigen::MatrixXd cov_b = estimate_moments(b).covariance;
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            ThresholdRule cand = rule;
            cand.level = RateThreshold{candidates[ci], rate->q};
            const Eigen::MatrixXd th =
                apply_threshold(cov_a, cand, static_cast<std::size_t>(half));
            score[ci] += spectral_norm(th - cov_b);
        }
    }
    std::size_t best = 0;
    for (std::size_t ci = 1; ci < candidates.size(); ++ci) {
        if (score[ci] < score[best]) best = ci;
    }
    return candidates[best];
}

std::string matrix_to_csv(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    std::ostringstream out;
    out.precision(17);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << a(i, j);
        }
        out << '\n';
    }
    return out.str();
}

Eigen::MatrixXd matrix_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw_io("matrix CSV: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw_io("matrix CSV: empty input");
    Eigen::MatrixXd a(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
    }
    return a;
}

std::string symmetric_to_json(const Eigen::Ref<const Eigen::MatrixXd>& a) {
    if (a.rows() != a.cols()) throw_invalid("symmetric_to_json: matrix must be square");
    nlohmann::json j;
    j["d"] = a.rows();
    std::vector<double> triu;
    triu.reserve(static_cast<std::size_t>(a.rows() * (a.rows() + 1) / 2));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index jj = i; jj < a.cols(); ++jj) triu.push_back(a(i, jj));
    }
    j["triu"] = triu;
    return j.dump();
}

Eigen::MatrixXd symmetric_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw_io("symmetric matrix JSON: invalid");
    const Eigen::Index d = j.at("d").get<Eigen::Index>();
    const auto triu = j.at("triu").get<std::vector<double>>();
    if (triu.size() != static_cast<std::size_t>(d * (d + 1) / 2)) {
        throw_io("symmetric matrix JSON: triu length mismatch");
    }
    Eigen::MatrixXd a(d, d);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index jj = i; jj < d; ++jj) {
            a(i, jj) = triu[k];
            a(jj, i) = triu[k];
            ++k;
        }
    }
    return a;
}

}  // namespace projmon
