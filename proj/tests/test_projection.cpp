#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "projmon/common.hpp"
#include "projmon/portfolio.hpp"
#include "projmon/rng.hpp"

using namespace projmon;

namespace {

Eigen::MatrixXd random_spd(int d, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
    }
    return a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(d, d);
}

double variance_of(const ProjectionVector& w, const Eigen::MatrixXd& sigma) {
    Eigen::Map<const Eigen::VectorXd> wv(w.entries.data(), w.entries.size());
    return wv.dot(sigma * wv);
}

}  // namespace

TEST_CASE("minimum variance: identity and diagonal cases") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    auto w = min_variance_portfolio(eye);
    for (double x : w.entries) CHECK(x == doctest::Approx(0.25));

    // Sigma = diag(1,4) -> precision diag(1, 1/4) -> weights (0.8, 0.2)
    Eigen::MatrixXd prec = Eigen::Vector2d(1.0, 0.25).asDiagonal();
    auto w2 = min_variance_portfolio(prec);
    CHECK(w2.entries[0] == doctest::Approx(0.8));
    CHECK(w2.entries[1] == doctest::Approx(0.2));
}

TEST_CASE("minimum variance weights are invariant to precision scaling") {
    Eigen::MatrixXd p = random_spd(6, 3).inverse();
    auto w1 = min_variance_portfolio(p);
    auto w2 = min_variance_portfolio((7.5 * p).eval());
    for (std::size_t i = 0; i < w1.dim(); ++i) {
        CHECK(w1.entries[i] == doctest::Approx(w2.entries[i]).epsilon(1e-13));
    }
}

TEST_CASE("target return: closed-form cases") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd mu(2);
    mu << 1, 0;
    auto w = target_return_portfolio(eye, mu, 0.5);
    CHECK(w.entries[0] == doctest::Approx(0.5));
    CHECK(w.entries[1] == doctest::Approx(0.5));
}

TEST_CASE("the natural target return reduces to minimum variance") {
    Eigen::MatrixXd sigma = random_spd(5, 11);
    Eigen::MatrixXd prec = sigma.inverse();
    Eigen::VectorXd mu(5);
    mu << 0.1, -0.2, 0.3, 0.05, 0.0;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
    const double mu0 = ones.dot(prec * mu) / ones.dot(prec * ones);
    auto mv = min_variance_portfolio(prec);
    auto tr = target_return_portfolio(prec, mu, mu0);
    for (int i = 0; i < 5; ++i) {
        CHECK(tr.entries[i] == doctest::Approx(mv.entries[i]).epsilon(1e-12));
    }
}

TEST_CASE("constraints hold to 1e-10 and random candidates never beat the solution") {
    Rng rng = make_rng(5);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 5;
        Eigen::MatrixXd sigma = random_spd(d, 100 + rep);
        Eigen::MatrixXd prec = sigma.inverse();
        Eigen::VectorXd mu(d);
        for (int i = 0; i < d; ++i) mu(i) = nd(rng);
        const double mu0 = 0.1;

        auto w = target_return_portfolio(prec, mu, mu0);
        Eigen::Map<const Eigen::VectorXd> wv(w.entries.data(), d);
        CHECK(std::abs(wv.sum() - 1.0) < 1e-10);
        CHECK(std::abs(wv.dot(mu) - mu0) < 1e-10);
        const double best = variance_of(w, sigma);

        // candidates satisfying both constraints: w + null-space perturbations
        Eigen::MatrixXd constraints(2, d);
        constraints.row(0).setOnes();
        constraints.row(1) = mu.transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(constraints);
        const Eigen::MatrixXd null_basis = lu.kernel();
        for (int cand = 0; cand < 1000; ++cand) {
            Eigen::VectorXd coef(null_basis.cols());
            for (int i = 0; i < coef.size(); ++i) coef(i) = nd(rng);
            const Eigen::VectorXd v = wv + null_basis * coef;
            CHECK(v.dot(sigma * v) >= best - 1e-9);
        }

        auto mv = min_variance_portfolio(prec);
        const double best_mv = variance_of(mv, sigma);
        Eigen::Map<const Eigen::VectorXd> mvv(mv.entries.data(), d);
        for (int cand = 0; cand < 1000; ++cand) {
            Eigen::VectorXd u(d);
            for (int i = 0; i < d; ++i) u(i) = nd(rng);
            Eigen::VectorXd v = mvv + (u.array() - u.mean()).matrix();  // keeps the sum at 1
            CHECK(v.dot(sigma * v) >= best_mv - 1e-9);
        }
    }
}

TEST_CASE("a mean proportional to ones makes the target constraint degenerate") {
    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd mu = 2.0 * Eigen::VectorXd::Ones(3);
    CHECK_THROWS_WITH_AS(target_return_portfolio(prec, mu, 0.5),
                         doctest::Contains("degenerate"), Error);
}

TEST_CASE("support restriction zeroes complements and shrinks exposure") {
    ProjectionVector v = ProjectionVector::dense({1, 2, 3});
    auto full = restrict_support(v, {1, 2, 3});
    CHECK(full.entries == v.entries);

    auto only2 = restrict_support(v, {2});
    CHECK(only2.entries == std::vector<double>{0, 2, 0});
    REQUIRE(only2.support.has_value());
    CHECK(only2.support->size() == 1);
    CHECK(only2.support_consistent());
    CHECK(gross_exposure(only2) <= gross_exposure(v));

    CHECK_THROWS_AS(restrict_support(v, {}), Error);
    CHECK_THROWS_AS(restrict_support(v, {4}), Error);
}

TEST_CASE("gross exposure is the l1 norm") {
    CHECK(gross_exposure(ProjectionVector::dense({0.8, 0.2})) == doctest::Approx(1.0));
    CHECK(gross_exposure(ProjectionVector::dense({1.5, -0.5})) == doctest::Approx(2.0));
    CHECK(gross_exposure(ProjectionVector::dense(std::vector<double>(10, 0.1))) ==
          doctest::Approx(1.0));
}

TEST_CASE("plug-in registry exposes the named forms") {
    const auto& reg = plugin_registry();
    REQUIRE(reg.count("minvar") == 1);
    REQUIRE(reg.count("precision-mean") == 1);

    Eigen::MatrixXd prec = random_spd(4, 21).inverse();
    Eigen::VectorXd mu(4);
    mu << 0.3, 0.1, -0.2, 0.4;
    auto direct = min_variance_portfolio(prec);
    auto via_reg = reg.at("minvar")(prec, mu);
    CHECK(direct.entries == via_reg.entries);

    auto pm = reg.at("precision-mean")(prec, mu);
    double sum = 0;
    for (double x : pm.entries) sum += x;
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("portfolio JSON carries weights, exposure and residuals") {
    PortfolioResult res;
    res.weights = ProjectionVector::dense({0.6, 0.4});
    res.kind = "minvar";
    res.gross_exposure = 1.0;
    res.residual_budget = 1e-16;
    auto text = res.to_json();
    CHECK(text.find("\"weights\"") != std::string::npos);
    CHECK(text.find("\"gross_exposure\"") != std::string::npos);
    CHECK(text.find("\"constraints_residuals\"") != std::string::npos);
}

TEST_CASE("estimated weights approach the oracle as the sample grows") {
    // sparse banded design; plug-in chain: thresholded covariance ->
    // precision -> minimum-variance weights
    const int d = 8;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) {
        sigma(i, i + 1) = 0.4;
        sigma(i + 1, i) = 0.4;
    }
    auto oracle = min_variance_portfolio(sigma.inverse());
    Eigen::Map<const Eigen::VectorXd> ow(oracle.entries.data(), d);

    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    const Eigen::MatrixXd chol = llt.matrixL();

    std::vector<double> med_err;
    for (int m : {250, 1000, 4000}) {
        std::vector<double> errs;
        for (int rep = 0; rep < 20; ++rep) {
            Rng rng = make_rng(derive_seed(999, m, rep));
            std::normal_distribution<double> nd;
            Eigen::MatrixXd x(m, d);
            Eigen::VectorXd z(d);
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < d; ++j) z(j) = nd(rng);
                x.row(i) = (chol * z).transpose();
            }
            auto est = estimate_moments(x);
            ThresholdRule rule;
            rule.kind = ThresholdKind::hard;
            rule.level = RateThreshold{1.0, 8.0};
            const Eigen::MatrixXd th = apply_threshold(est.covariance, rule, m);
            auto prec = precision_estimate(th, 1e-6);
            auto w = min_variance_portfolio(prec.inverse);
            Eigen::Map<const Eigen::VectorXd> wv(w.entries.data(), d);
            errs.push_back((wv - ow).norm());
        }
        std::sort(errs.begin(), errs.end());
        med_err.push_back(errs[errs.size() / 2]);
    }
    CHECK(med_err[1] < med_err[0]);
    CHECK(med_err[2] < med_err[1]);
}
