#include "projmon/projmon.h"

#include <cstring>
#include <new>
#include <string>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/covest.hpp"
#include "projmon/critval.hpp"
#include "projmon/datagen.hpp"
#include "projmon/detector.hpp"
#include "projmon/portfolio.hpp"
#include "projmon/rollover.hpp"
#include "projmon/stream.hpp"
#include "projmon/types.hpp"

using nlohmann::json;

struct projmon_stream {
    projmon::ObservationStream s;
};

struct projmon_monitor {
    projmon::MonitorState state;
};

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

int map_error(const projmon::Error& e) {
    switch (e.kind()) {
        case projmon::ErrorKind::invalid:
            return set_error(PROJMON_ERR_INVALID, e.what());
        case projmon::ErrorKind::domain:
            return set_error(PROJMON_ERR_DOMAIN, e.what());
        case projmon::ErrorKind::io:
            return set_error(PROJMON_ERR_IO, e.what());
    }
    return set_error(PROJMON_ERR_INTERNAL, e.what());
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const projmon::Error& e) {
        return map_error(e);
    } catch (const json::exception& e) {
        return set_error(PROJMON_ERR_INVALID, e.what());
    } catch (const std::exception& e) {
        return set_error(PROJMON_ERR_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

json parse_json(const char* text, const char* what) {
    if (!text) projmon::throw_invalid(std::string(what) + ": null JSON");
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) projmon::throw_invalid(std::string(what) + ": malformed JSON");
    return j;
}

projmon::ThresholdRule threshold_from_json(const json& j) {
    projmon::ThresholdRule rule;
    const std::string kind = j.value("kind", std::string("lasso"));
    if (kind == "hard") {
        rule.kind = projmon::ThresholdKind::hard;
    } else if (kind == "lasso") {
        rule.kind = projmon::ThresholdKind::lasso;
    } else if (kind == "scad") {
        rule.kind = projmon::ThresholdKind::scad;
    } else {
        projmon::throw_invalid("unknown threshold kind '" + kind + "'");
    }
    rule.scad_a = j.value("scad_a", 3.7);
    rule.exempt_diagonal = j.value("exempt_diagonal", true);
    if (j.contains("t")) {
        rule.level = projmon::FixedThreshold{j["t"].get<double>()};
    } else {
        rule.level = projmon::RateThreshold{j.value("C_th", 1.0), j.value("q", 8.0)};
    }
    rule.validate();
    return rule;
}

projmon::BoundaryConfig boundary_from_json(const json& j) {
    projmon::BoundaryConfig b;
    b.gamma = j.value("gamma", 0.25);
    b.delta = j.value("delta", 0.1);
    if (j.contains("horizon") && !j["horizon"].is_string()) {
        b.horizon = projmon::HorizonKind::closed_end;
        b.T = j["horizon"].get<double>();
    }
    if (j.value("weighting", std::string("paper")) == std::string("flat")) {
        b.weighting = projmon::BoundaryWeighting::flat;
    }
    b.validate();
    return b;
}

projmon::SimConfig sim_from_json(const json& j) {
    projmon::SimConfig cfg;
    if (j.contains("sim")) {
        const json& s = j["sim"];
        cfg.reps = s.value("reps", cfg.reps);
        cfg.grid = s.value("grid", cfg.grid);
        cfg.seed = s.value("seed", cfg.seed);
        cfg.threads = s.value("threads", cfg.threads);
    }
    return cfg;
}

projmon::LrvConfig lrv_from_json(const json& j) {
    projmon::LrvConfig cfg;
    if (j.contains("lrv")) {
        const json& l = j["lrv"];
        cfg.rho = l.value("rho", cfg.rho);
        if (l.contains("b")) cfg.b_override = l["b"].get<std::size_t>();
    }
    return cfg;
}

Eigen::MatrixXd stream_rows(const projmon::ObservationStream& s, std::size_t m) {
    const std::size_t use = m == 0 ? s.rows() : m;
    if (use > s.rows()) projmon::throw_invalid("requested more rows than the stream has");
    Eigen::MatrixXd x(use, s.dim);
    for (std::size_t i = 0; i < use; ++i) {
        auto row = s.row(i);
        for (std::size_t j = 0; j < s.dim; ++j) x(i, j) = row[j];
    }
    return x;
}

// Runs the estimation chain (moments -> optional thresholding -> precision
// -> named portfolio form) on the first m rows.
projmon::ProjectionVector estimate_projection(const json& spec,
                                              const projmon::ObservationStream& s,
                                              std::size_t m) {
    Eigen::MatrixXd x = stream_rows(s, m);
    projmon::MomentEstimates est = projmon::estimate_moments(x);
    Eigen::MatrixXd sigma = est.covariance;
    if (spec.contains("threshold")) {
        sigma = projmon::apply_threshold(sigma, threshold_from_json(spec["threshold"]),
                                         static_cast<std::size_t>(x.rows()));
    }
    const double eps0 = spec.value("eps0", 1e-6);
    projmon::PrecisionEstimate prec = projmon::precision_estimate(sigma, eps0);

    const std::string kind = spec.value("estimator", std::string("minvar"));
    if (kind == "minvar") {
        return projmon::min_variance_portfolio(prec.inverse);
    }
    if (kind == "target") {
        if (!spec.contains("mu0")) projmon::throw_invalid("target estimator needs mu0");
        return projmon::target_return_portfolio(prec.inverse, est.mu, spec["mu0"].get<double>());
    }
    const auto& registry = projmon::plugin_registry();
    auto it = registry.find(kind);
    if (it == registry.end()) projmon::throw_invalid("unknown estimator '" + kind + "'");
    return it->second(prec.inverse, est.mu);
}

json critval_entry_json(const projmon::CritEntry& e) {
    json j;
    j["gamma"] = e.gamma;
    j["delta"] = e.delta;
    j["horizon"] = e.T ? json(*e.T) : json("open-end");
    j["alpha"] = e.alpha;
    j["weighting"] = projmon::to_string(e.weighting);
    j["c"] = e.c;
    j["R"] = e.reps;
    j["N"] = e.grid;
    j["seed"] = e.seed;
    return j;
}

}  // namespace

extern "C" {

const char* projmon_version(void) { return "0.1.0"; }

const char* projmon_last_error(void) { return g_last_error.c_str(); }

void projmon_free_string(char* s) { delete[] s; }

int projmon_stream_from_csv(const char* path, projmon_stream** out) {
    return guarded([&] {
        if (!path || !out) projmon::throw_invalid("null argument");
        auto* h = new projmon_stream{projmon::read_csv(path)};
        *out = h;
        return PROJMON_OK;
    });
}

int projmon_stream_from_buffer(const double* data, size_t rows, size_t dim,
                               const double* response, projmon_stream** out) {
    return guarded([&] {
        if (!data || !out || dim == 0) projmon::throw_invalid("null argument");
        auto* h = new projmon_stream{};
        h->s.dim = dim;
        h->s.data.assign(data, data + rows * dim);
        if (response) h->s.response.assign(response, response + rows);
        *out = h;
        return PROJMON_OK;
    });
}

int projmon_stream_generate(const char* spec_json, projmon_stream** out) {
    return guarded([&] {
        if (!out) projmon::throw_invalid("null argument");
        auto spec = projmon::generator_from_json(parse_json(spec_json, "generator spec").dump());
        auto* h = new projmon_stream{projmon::generate(spec)};
        *out = h;
        return PROJMON_OK;
    });
}

int projmon_stream_info(const projmon_stream* s, size_t* rows, size_t* dim, int* has_response) {
    return guarded([&] {
        if (!s) projmon::throw_invalid("null stream");
        if (rows) *rows = s->s.rows();
        if (dim) *dim = s->s.dim;
        if (has_response) *has_response = s->s.has_response() ? 1 : 0;
        return PROJMON_OK;
    });
}

int projmon_stream_data(const projmon_stream* s, const double** data, const double** response) {
    return guarded([&] {
        if (!s) projmon::throw_invalid("null stream");
        if (data) *data = s->s.data.data();
        if (response) *response = s->s.has_response() ? s->s.response.data() : nullptr;
        return PROJMON_OK;
    });
}

int projmon_stream_to_csv(const projmon_stream* s, const char* path) {
    return guarded([&] {
        if (!s || !path) projmon::throw_invalid("null argument");
        projmon::write_csv(s->s, path);
        return PROJMON_OK;
    });
}

int projmon_stream_validate(const projmon_stream* s, char** report_json) {
    return guarded([&] {
        if (!s || !report_json) projmon::throw_invalid("null argument");
        *report_json = dup_string(projmon::validate_stream(s->s).to_json());
        return PROJMON_OK;
    });
}

void projmon_stream_free(projmon_stream* s) { delete s; }

int projmon_critval(const char* request_json, const char* table_path, char** result_json) {
    return guarded([&] {
        if (!result_json) projmon::throw_invalid("null argument");
        json req = parse_json(request_json, "critval request");
        projmon::BoundaryConfig boundary = boundary_from_json(req);
        std::vector<double> alphas;
        if (req.contains("alpha") && req["alpha"].is_array()) {
            alphas = req["alpha"].get<std::vector<double>>();
        } else {
            alphas.push_back(req.value("alpha", 0.05));
        }
        projmon::SimConfig cfg;
        cfg.reps = req.value("reps", cfg.reps);
        cfg.grid = req.value("grid", cfg.grid);
        cfg.seed = req.value("seed", cfg.seed);
        cfg.threads = req.value("threads", cfg.threads);

        projmon::CriticalValueTable table;
        if (table_path) table = projmon::CriticalValueTable::load(table_path);
        const std::size_t before = table.entries().size();
        std::vector<projmon::CritEntry> entries = table.get_or_simulate_many(boundary, alphas, cfg);
        if (table_path && table.entries().size() != before) table.save(table_path);
        if (entries.size() == 1) {
            *result_json = dup_string(critval_entry_json(entries.front()).dump());
        } else {
            json arr = json::array();
            for (const auto& e : entries) arr.push_back(critval_entry_json(e));
            *result_json = dup_string(arr.dump());
        }
        return PROJMON_OK;
    });
}

int projmon_critval_sample(const char* request_json, double* out, size_t len) {
    return guarded([&] {
        if (!out) projmon::throw_invalid("null argument");
        json req = parse_json(request_json, "critval request");
        projmon::BoundaryConfig boundary = boundary_from_json(req);
        projmon::SimConfig cfg;
        cfg.reps = req.value("reps", cfg.reps);
        cfg.grid = req.value("grid", cfg.grid);
        cfg.seed = req.value("seed", cfg.seed);
        cfg.threads = req.value("threads", cfg.threads);
        if (len != cfg.reps) projmon::throw_invalid("buffer length must equal reps");
        std::vector<double> sample =
            boundary.horizon == projmon::HorizonKind::closed_end
                ? projmon::simulate_closedend_sup(boundary.gamma, boundary.delta, boundary.T, cfg,
                                                  boundary.weighting)
                : projmon::simulate_openend_sup(boundary.gamma, boundary.delta, cfg);
        std::memcpy(out, sample.data(), sample.size() * sizeof(double));
        return PROJMON_OK;
    });
}

int projmon_covest(const char* request_json, const projmon_stream* s, char** result_json) {
    return guarded([&] {
        if (!s || !result_json) projmon::throw_invalid("null argument");
        json req = parse_json(request_json, "covest request");
        Eigen::MatrixXd x = stream_rows(s->s, req.value("m", std::size_t{0}));
        projmon::MomentEstimates est = projmon::estimate_moments(x);
        json res;
        res["d"] = s->s.dim;
        res["m"] = est.m;
        res["mu"] = std::vector<double>(est.mu.data(), est.mu.data() + est.mu.size());
        res["sigma"] = json::parse(projmon::symmetric_to_json(est.covariance));
        res["second_moment"] = json::parse(projmon::symmetric_to_json(est.second_moment));
        if (req.contains("threshold")) {
            projmon::ThresholdRule rule = threshold_from_json(req["threshold"]);
            Eigen::MatrixXd th = projmon::apply_threshold(est.covariance, rule, est.m);
            res["sigma_thresholded"] = json::parse(projmon::symmetric_to_json(th));
            res["threshold"] = rule.resolve(s->s.dim, est.m);
        }
        *result_json = dup_string(res.dump());
        return PROJMON_OK;
    });
}

int projmon_portfolio(const char* request_json, const projmon_stream* s, char** result_json) {
    return guarded([&] {
        if (!s || !result_json) projmon::throw_invalid("null argument");
        json req = parse_json(request_json, "portfolio request");
        const std::string kind = req.value("kind", std::string("minvar"));
        json spec = req;
        spec["estimator"] = kind;
        projmon::ProjectionVector w =
            estimate_projection(spec, s->s, req.value("m", std::size_t{0}));

        Eigen::MatrixXd x = stream_rows(s->s, req.value("m", std::size_t{0}));
        projmon::MomentEstimates est = projmon::estimate_moments(x);
        projmon::PortfolioResult out;
        out.weights = w;
        out.kind = kind;
        out.gross_exposure = projmon::gross_exposure(w);
        double sum = 0, ret = 0;
        for (std::size_t j = 0; j < w.dim(); ++j) {
            sum += w.entries[j];
            ret += w.entries[j] * est.mu(static_cast<Eigen::Index>(j));
        }
        out.residual_budget = std::abs(sum - 1.0);
        out.residual_return = req.contains("mu0") ? std::abs(ret - req["mu0"].get<double>()) : 0.0;
        if (req.contains("exposure_cap")) out.exposure_cap = req["exposure_cap"].get<double>();
        *result_json = dup_string(out.to_json());
        return PROJMON_OK;
    });
}

int projmon_monitor_create(const char* config_json, const projmon_stream* training,
                           projmon_monitor** out) {
    return guarded([&] {
        if (!training || !out) projmon::throw_invalid("null argument");
        json cfg = parse_json(config_json, "monitor config");
        projmon::ObservationStream s = training->s;
        s.train_len = cfg.value("m", std::size_t{0});
        if (s.train_len < 2) projmon::throw_invalid("monitor config needs m >= 2");

        projmon::MonitorSetup setup;
        setup.boundary = boundary_from_json(cfg);
        setup.kind = cfg.value("kind", std::string("projection")) == std::string("residual")
                         ? projmon::DetectorKind::residual
                         : projmon::DetectorKind::projection;
        setup.lrv = lrv_from_json(cfg);

        if (!cfg.contains("v")) projmon::throw_invalid("monitor config needs v");
        if (cfg["v"].is_array()) {
            setup.v = projmon::ProjectionVector::dense(cfg["v"].get<std::vector<double>>());
        } else {
            setup.v = estimate_projection(cfg["v"], s, s.train_len);
        }

        if (cfg.contains("c")) {
            setup.c = cfg["c"].get<double>();
        } else {
            const double alpha = cfg.value("alpha", 0.05);
            projmon::SimConfig sim = sim_from_json(cfg);
            if (cfg.contains("table")) {
                auto table = projmon::CriticalValueTable::load(cfg["table"].get<std::string>());
                const std::size_t before = table.entries().size();
                setup.c = table.get_or_simulate(setup.boundary, alpha, sim).c;
                if (table.entries().size() != before) {
                    table.save(cfg["table"].get<std::string>());
                }
            } else {
                setup.c = projmon::critical_value(setup.boundary, alpha, sim);
            }
        }

        auto* h = new projmon_monitor{projmon::train_monitor(s, setup)};
        *out = h;
        return PROJMON_OK;
    });
}

int projmon_monitor_state(const projmon_monitor* mon, char** state_json) {
    return guarded([&] {
        if (!mon || !state_json) projmon::throw_invalid("null argument");
        *state_json = dup_string(mon->state.to_json());
        return PROJMON_OK;
    });
}

int projmon_monitor_restore(const char* state_json, projmon_monitor** out) {
    return guarded([&] {
        if (!state_json || !out) projmon::throw_invalid("null argument");
        auto* h = new projmon_monitor{projmon::MonitorState::from_json(state_json)};
        *out = h;
        return PROJMON_OK;
    });
}

int projmon_monitor_step(projmon_monitor* mon, const double* y, size_t dim,
                         const double* response, char** event_json) {
    return guarded([&] {
        if (!mon || !y) projmon::throw_invalid("null argument");
        std::optional<double> z;
        if (response) z = *response;
        projmon::StepOutcome out = projmon::monitor_step(mon->state, {y, dim}, z);
        if (event_json) {
            switch (out.status) {
                case projmon::StepOutcome::Status::signal:
                    *event_json = dup_string(out.event->to_json());
                    break;
                case projmon::StepOutcome::Status::terminal:
                    *event_json = dup_string(json{{"terminal", true}}.dump());
                    break;
                case projmon::StepOutcome::Status::frozen:
                    *event_json = dup_string(json{{"frozen", true}}.dump());
                    break;
                default:
                    *event_json = nullptr;
            }
        }
        return PROJMON_OK;
    });
}

int projmon_monitor_run(projmon_monitor* mon, const projmon_stream* s, char** report_jsonl,
                        char** summary_json) {
    return guarded([&] {
        if (!mon || !s) projmon::throw_invalid("null argument");
        projmon::RunReport report = projmon::run_monitor(mon->state, s->s);
        if (report_jsonl) *report_jsonl = dup_string(report.to_jsonl());
        if (summary_json) {
            json j;
            j["signal_time"] =
                report.signal ? json(report.signal->time) : json(nullptr);
            j["c"] = mon->state.c;
            j["sigma0_hat"] = mon->state.sigma0_hat;
            j["m"] = mon->state.m;
            j["truncated"] = report.truncated;
            j["terminal"] = report.terminal;
            *summary_json = dup_string(j.dump());
        }
        return PROJMON_OK;
    });
}

void projmon_monitor_free(projmon_monitor* mon) { delete mon; }

int projmon_rollover_run(const char* config_json, const projmon_stream* s, char** episodes_jsonl,
                         char** trajectory_csv) {
    return guarded([&] {
        if (!s) projmon::throw_invalid("null argument");
        json cfg = parse_json(config_json, "rollover config");
        projmon::RolloverConfig rc;
        rc.m = cfg.value("m", std::size_t{1000});
        rc.boundary = projmon::BoundaryConfig::open(cfg.value("gamma", 0.25),
                                                    cfg.value("delta", 0.1));
        rc.alpha = cfg.value("alpha", 0.05);
        rc.c_override = cfg.value("c", 0.0);
        rc.critval_sim = sim_from_json(cfg);
        rc.lrv = lrv_from_json(cfg);
        rc.train_cfg.epochs = cfg.value("epochs", 100);
        rc.train_cfg.batch = cfg.value("batch", 32);
        rc.train_cfg.val_split = cfg.value("val_split", 0.2);
        rc.retrain = cfg.value("retrain", true);
        rc.seed = cfg.value("seed", std::uint64_t{1});
        if (cfg.contains("hidden")) {
            rc.hidden = cfg["hidden"].get<std::vector<std::size_t>>();
        }

        projmon::EpisodeLog log;
        if (cfg.contains("table")) {
            auto table = projmon::CriticalValueTable::load(cfg["table"].get<std::string>());
            const std::size_t before = table.entries().size();
            log = projmon::rollover_monitor(s->s, rc, &table);
            if (table.entries().size() != before) table.save(cfg["table"].get<std::string>());
        } else {
            log = projmon::rollover_monitor(s->s, rc);
        }
        if (episodes_jsonl) *episodes_jsonl = dup_string(log.to_jsonl());
        if (trajectory_csv) *trajectory_csv = dup_string(log.trajectory_csv());
        return PROJMON_OK;
    });
}

}  // extern "C"
