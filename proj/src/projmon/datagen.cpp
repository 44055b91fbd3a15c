#include "projmon/datagen.hpp"

#include <cmath>
#include <deque>
#include <numbers>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/covest.hpp"
#include "projmon/rng.hpp"

namespace projmon {

void VectorMaSpec::validate() const {
    if (d < 1) throw_invalid("generator needs d >= 1");
    if (!(beta > 2.0)) throw_invalid("coefficient decay requires beta > 2");
    if (innovation == InnovationKind::student_t && !(df > 4.0)) {
        throw_invalid("student-t innovations need df > 4");
    }
}

namespace {

double draw_innovation(Rng& rng, InnovationKind kind, double df) {
    if (kind == InnovationKind::student_t) {
        std::student_t_distribution<double> t(df);
        return t(rng);
    }
    std::normal_distribution<double> n;
    return n(rng);
}

Eigen::VectorXd draw_innovation_vec(Rng& rng, std::size_t d, InnovationKind kind, double df) {
    Eigen::VectorXd v(d);
    for (std::size_t j = 0; j < d; ++j) v(j) = draw_innovation(rng, kind, df);
    return v;
}

double lag_coefficient(std::size_t lag, double beta) {
    return lag == 0 ? 1.0 : std::pow(static_cast<double>(lag), -beta);
}

}  // namespace

Eigen::MatrixXd vectorma_mixing(const VectorMaSpec& spec, std::size_t lag, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, seed_tag::mixing, lag));
    std::normal_distribution<double> n;
    Eigen::MatrixXd a(spec.d, spec.d);
    for (std::size_t i = 0; i < spec.d; ++i) {
        for (std::size_t j = 0; j < spec.d; ++j) a(i, j) = n(rng);
    }
    for (std::size_t i = 0; i < spec.d; ++i) {
        const double norm = a.row(i).norm();
        if (norm > 0) a.row(i) /= norm;
    }
    return a;
}

Eigen::VectorXd vectorma_eval(const VectorMaSpec& spec, std::span<const Eigen::VectorXd> window,
                              std::uint64_t seed) {
    spec.validate();
    if (window.size() != spec.l_max + 1) throw_invalid("innovation window size mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(spec.d);
    for (std::size_t lag = 0; lag <= spec.l_max; ++lag) {
        y += lag_coefficient(lag, spec.beta) * (vectorma_mixing(spec, lag, seed) * window[lag]);
    }
    return y;
}

Eigen::VectorXd locally_stationary_eval(const LocallyStationarySpec& spec, double u,
                                        std::span<const Eigen::VectorXd> window,
                                        std::uint64_t seed) {
    Eigen::VectorXd z = vectorma_eval(spec.core, window, seed);
    const std::size_t d = spec.core.d;
    Eigen::VectorXd y(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double phase = u + static_cast<double>(j) / static_cast<double>(d);
        const double mu = spec.mean_amp * std::sin(2.0 * std::numbers::pi * phase);
        const double scale = 1.0 + spec.scale_amp * u;
        y(j) = mu + scale * z(j);
    }
    return y;
}

namespace {

// Shared driver for the MA-based generators: maintains the innovation ring
// buffer and applies `emit` at each time step.
template <typename Emit>
void run_ma(const VectorMaSpec& spec, std::size_t n, std::uint64_t seed, Emit&& emit) {
    spec.validate();
    std::vector<Eigen::MatrixXd> mixing;
    mixing.reserve(spec.l_max + 1);
    std::vector<double> coeff(spec.l_max + 1);
    for (std::size_t lag = 0; lag <= spec.l_max; ++lag) {
        mixing.push_back(vectorma_mixing(spec, lag, seed));
        coeff[lag] = lag_coefficient(lag, spec.beta);
    }
    Rng rng = make_rng(derive_seed(seed, seed_tag::datagen));
    // window.front() = current innovation, window[l] = lag-l innovation
    std::deque<Eigen::VectorXd> window;
    for (std::size_t l = 0; l <= spec.l_max; ++l) {
        window.push_back(draw_innovation_vec(rng, spec.d, spec.innovation, spec.df));
    }
    for (std::size_t t = 1; t <= n; ++t) {
        window.push_front(draw_innovation_vec(rng, spec.d, spec.innovation, spec.df));
        window.pop_back();
        Eigen::VectorXd y = Eigen::VectorXd::Zero(spec.d);
        for (std::size_t lag = 0; lag <= spec.l_max; ++lag) {
            y += coeff[lag] * (mixing[lag] * window[lag]);
        }
        emit(t, y);
    }
}

}  // namespace

ObservationStream generate(const GeneratorSpec& spec) {
    if (spec.n < 1) throw_invalid("generator needs n >= 1");
    ObservationStream out;

    if (const auto* ma = std::get_if<VectorMaSpec>(&spec.kind)) {
        out.dim = ma->d;
        out.data.reserve(spec.n * ma->d);
        run_ma(*ma, spec.n, spec.seed, [&](std::size_t, const Eigen::VectorXd& y) {
            out.data.insert(out.data.end(), y.data(), y.data() + y.size());
        });
        return out;
    }

    if (const auto* ls = std::get_if<LocallyStationarySpec>(&spec.kind)) {
        const std::size_t d = ls->core.d;
        out.dim = d;
        out.data.reserve(spec.n * d);
        const double n_d = static_cast<double>(spec.n);
        run_ma(ls->core, spec.n, spec.seed, [&](std::size_t t, const Eigen::VectorXd& z) {
            const double u = static_cast<double>(t) / n_d;
            for (std::size_t j = 0; j < d; ++j) {
                const double phase = u + static_cast<double>(j) / static_cast<double>(d);
                const double mu = ls->mean_amp * std::sin(2.0 * std::numbers::pi * phase);
                out.data.push_back(mu + (1.0 + ls->scale_amp * u) * z(j));
            }
        });
        return out;
    }

    if (const auto* cb = std::get_if<CovarianceBreakSpec>(&spec.kind)) {
        const Eigen::Index d = cb->sigma0.rows();
        if (cb->sigma0.cols() != d || cb->sigma_a.rows() != d || cb->sigma_a.cols() != d) {
            throw_invalid("covariance break: matrices must be square and equal-sized");
        }
        Eigen::LLT<Eigen::MatrixXd> l0(cb->sigma0), la(cb->sigma_a);
        if (l0.info() != Eigen::Success || la.info() != Eigen::Success) {
            throw_invalid("covariance break: matrices must be positive definite");
        }
        const Eigen::MatrixXd chol0 = l0.matrixL();
        const Eigen::MatrixXd chola = la.matrixL();
        out.dim = static_cast<std::size_t>(d);
        out.data.reserve(spec.n * out.dim);
        Rng rng = make_rng(derive_seed(spec.seed, seed_tag::datagen));
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(d);
        for (std::size_t t = 1; t <= spec.n; ++t) {
            for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
            Eigen::VectorXd y = (t <= cb->k_star ? chol0 : chola) * z;
            out.data.insert(out.data.end(), y.data(), y.data() + y.size());
        }
        return out;
    }

    const auto& rg = std::get<Regression63Spec>(spec.kind);
    return generate_regression63(spec.seed, spec.n, rg.noise_as_stddev);
}

ObservationStream generate_regression63(std::uint64_t seed, std::size_t n, bool noise_as_stddev) {
    ObservationStream out;
    out.dim = 3;
    out.data.reserve(n * 3);
    out.response.reserve(n);
    Rng rng = make_rng(derive_seed(seed, seed_tag::datagen));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> um(-0.5, 0.5);
    std::normal_distribution<double> normal;
    const double sd1 = noise_as_stddev ? 0.1 : std::sqrt(0.1);
    const double sd2 = noise_as_stddev ? 0.05 : std::sqrt(0.05);
    constexpr double pi = std::numbers::pi;
    for (std::size_t t = 1; t <= n; ++t) {
        const double x = t < 2000 ? um(rng) : u01(rng);
        const double x2 = u01(rng);
        const double x3 = u01(rng);
        double z;
        if (t < 4000) {
            z = std::cos(10.0 * pi * x) + sd1 * normal(rng);
        } else {
            z = std::cos(4.0 * pi * x) + sd2 * normal(rng);
        }
        out.data.push_back(x);
        out.data.push_back(x2);
        out.data.push_back(x3);
        out.response.push_back(z);
    }
    return out;
}

namespace {

Eigen::MatrixXd matrix_from_spec(const nlohmann::json& j, std::size_t d) {
    if (j.is_number()) {
        return j.get<double>() * Eigen::MatrixXd::Identity(d, d);
    }
    return symmetric_from_json(j.dump());
}

}  // namespace

GeneratorSpec generator_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw_io("generator spec: invalid JSON");
    GeneratorSpec spec;
    try {
        spec.n = j.at("n").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{1});
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "vectorma" || kind == "locally-stationary") {
            VectorMaSpec ma;
            ma.d = j.value("d", std::size_t{5});
            ma.beta = j.value("beta", 3.0);
            ma.l_max = j.value("l_max", std::size_t{4});
            if (j.value("innovation", std::string("normal")) == std::string("t")) {
                ma.innovation = InnovationKind::student_t;
                ma.df = j.value("df", 8.0);
            }
            if (kind == "vectorma") {
                spec.kind = ma;
            } else {
                LocallyStationarySpec ls;
                ls.core = ma;
                ls.mean_amp = j.value("mean_amp", 1.0);
                ls.scale_amp = j.value("scale_amp", 0.5);
                spec.kind = ls;
            }
        } else if (kind == "covbreak") {
            CovarianceBreakSpec cb;
            const std::size_t d = j.value("d", std::size_t{5});
            cb.sigma0 = j.contains("sigma0") ? matrix_from_spec(j["sigma0"], d)
                                             : Eigen::MatrixXd::Identity(d, d).eval();
            cb.sigma_a = j.contains("sigma_a") ? matrix_from_spec(j["sigma_a"], d)
                                               : (4.0 * Eigen::MatrixXd::Identity(d, d)).eval();
            cb.k_star = j.at("k_star").get<std::size_t>();
            spec.kind = cb;
        } else if (kind == "regression63") {
            Regression63Spec rg;
            rg.noise_as_stddev = j.value("noise_as_stddev", false);
            spec.kind = rg;
        } else {
            throw_invalid("unknown generator kind '" + kind + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw_io(std::string("generator spec: ") + e.what());
    }
    return spec;
}

}  // namespace projmon
