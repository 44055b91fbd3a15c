#include "projmon/rollover.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/detector.hpp"
#include "projmon/rng.hpp"

namespace projmon {

namespace {

MonitorState make_state(const Eigen::VectorXd& beta, const std::vector<double>& series,
                        std::size_t m, const BoundaryConfig& boundary, DetectorKind kind,
                        double c, const LrvConfig& lrv) {
    MonitorState st;
    st.v_hat = ProjectionVector::dense({beta.data(), beta.data() + beta.size()});
    st.m = m;
    st.boundary = boundary;
    st.kind = kind;
    st.c = c;
    double sum = 0;
    for (double v : series) sum += v;
    st.train_sum = sum;
    st.sigma0_hat = std::sqrt(lrv_estimate(series, lrv));
    return st;
}

}  // namespace

EpisodeLog rollover_monitor(const ObservationStream& stream, const RolloverConfig& cfg,
                            CriticalValueTable* table) {
    cfg.boundary.validate();
    if (!stream.has_response()) throw_invalid("rollover monitoring needs a response column");
    const std::size_t n = stream.rows();
    const std::size_t m = cfg.m;
    if (m < 2 || n < m) throw_invalid("insufficient training data (need m observations)");

    double c = cfg.c_override;
    if (!(c > 0)) {
        if (table) {
            c = table->get_or_simulate(cfg.boundary, cfg.alpha, cfg.critval_sim).c;
        } else {
            c = critical_value(cfg.boundary, cfg.alpha, cfg.critval_sim);
        }
    }

    EpisodeLog log;
    const double sqrt_m = std::sqrt(static_cast<double>(m));
    std::size_t start = 0;  // 0-based index of the first training row
    int episode_no = 0;

    while (true) {
        if (start + m > n) {
            if (episode_no == 0) throw_invalid("insufficient training data (need m observations)");
            log.truncated_tail = true;
            break;
        }
        ++episode_no;

        // fresh training sample [start, start+m)
        Eigen::MatrixXd x(m, stream.dim);
        Eigen::VectorXd z(m);
        for (std::size_t i = 0; i < m; ++i) {
            auto row = stream.row(start + i);
            for (std::size_t j = 0; j < stream.dim; ++j) x(i, j) = row[j];
            z(i) = stream.response[start + i];
        }
        EpisodeRecord rec;
        rec.episode = episode_no;
        rec.train_start = start + 1;
        rec.train_end = start + m;
        rec.monitor_start = start + m + static_cast<std::size_t>(cfg.boundary.start_index(m));
        rec.c = c;

        TrainConfig tcfg = cfg.train_cfg;
        tcfg.seed = derive_seed(cfg.seed, seed_tag::train_init, episode_no);
        MonitorState proj, res;
        TrainResult trained;
        try {
            MlpModel init = MlpModel::init(stream.dim, cfg.hidden, Activation::relu, tcfg.seed);
            trained = train(init, x, z, tcfg);

            // frozen training-series statistics for both detectors
            std::vector<double> proj_series(m), res_series(m);
            for (std::size_t i = 0; i < m; ++i) {
                MlpForward fw = trained.model.forward(x.row(i).transpose());
                proj_series[i] = fw.y * fw.y;  // (beta' f_H)^2
                const double r = z(i) - fw.y;
                res_series[i] = r * r;
            }
            proj = make_state(trained.model.beta, proj_series, m, cfg.boundary,
                              DetectorKind::projection, c, cfg.lrv);
            res = make_state(trained.model.beta, res_series, m, cfg.boundary,
                             DetectorKind::residual, c, cfg.lrv);
        } catch (const Error& e) {
            rec.error = e.what();
            log.episodes.push_back(std::move(rec));
            break;  // the protocol cannot continue without a working episode
        }
        rec.sigma_projection = proj.sigma0_hat;
        rec.sigma_residual = res.sigma0_hat;
        rec.model = trained.model;

        std::size_t row = start + m;
        std::optional<SignalEvent> first_signal;
        while (row < n) {
            const long t_abs = static_cast<long>(row) + 1;
            MlpForward fw = trained.model.forward(
                Eigen::Map<const Eigen::VectorXd>(stream.row(row).data(), stream.dim));
            const double zt = stream.response[row];

            const std::span<const double> feat{fw.features.data(),
                                               static_cast<std::size_t>(fw.features.size())};
            StepOutcome po = monitor_step(proj, feat);
            StepOutcome ro = monitor_step(res, feat, zt);
            ++row;

            TrajectoryPoint tp;
            bool have_row = false;
            auto fill = [&](const StepOutcome& o, const MonitorState& st, double& d, double& b) {
                double stat = 0, bound = 0;
                if (o.event) {
                    stat = o.event->stat;
                    bound = o.event->bound;
                } else if (o.stat) {
                    stat = *o.stat;
                    bound = *o.bound;
                } else {
                    return;
                }
                d = stat * st.sigma0_hat / sqrt_m;
                b = bound * st.sigma0_hat / sqrt_m;
                have_row = true;
            };
            fill(po, proj, tp.d_proj, tp.b_proj);
            fill(ro, res, tp.d_res, tp.b_res);
            if (have_row) {
                tp.t = t_abs;
                tp.k = std::max(proj.k, res.k);
                tp.episode = episode_no;
                log.trajectory.push_back(tp);
            }

            auto absolute = [&](SignalEvent ev) {
                ev.time = t_abs;  // event times are absolute stream indices
                return ev;
            };
            if (po.event && !rec.signal_projection) rec.signal_projection = absolute(*po.event);
            if (ro.event && !rec.signal_residual) rec.signal_residual = absolute(*ro.event);
            if (!first_signal) {
                if (po.event) {
                    first_signal = rec.signal_projection;  // projection wins ties
                } else if (ro.event) {
                    first_signal = rec.signal_residual;
                }
                if (first_signal && cfg.retrain) break;
            }
            if (!cfg.retrain && proj.signaled() && res.signaled()) break;
        }
        rec.ending_signal = first_signal;
        log.episodes.push_back(std::move(rec));

        if (!cfg.retrain || !first_signal) break;  // ran to stream end
        start = static_cast<std::size_t>(first_signal->time);  // discard through the signal
    }
    return log;
}

namespace {

nlohmann::json event_json(const std::optional<SignalEvent>& ev) {
    if (!ev) return nullptr;
    return nlohmann::json{{"k", ev->k},
                          {"time", ev->time},
                          {"stat", ev->stat},
                          {"bound", ev->bound},
                          {"kind", to_string(ev->kind)}};
}

}  // namespace

std::string EpisodeLog::to_jsonl() const {
    std::ostringstream out;
    for (const auto& e : episodes) {
        nlohmann::json j;
        j["episode"] = e.episode;
        j["train_start"] = e.train_start;
        j["train_end"] = e.train_end;
        j["monitor_start"] = e.monitor_start;
        j["c"] = e.c;
        j["sigma_projection"] = e.sigma_projection;
        j["sigma_residual"] = e.sigma_residual;
        j["signal"] = event_json(e.ending_signal);
        j["signal_projection"] = event_json(e.signal_projection);
        j["signal_residual"] = event_json(e.signal_residual);
        if (e.error) j["error"] = *e.error;
        out << j.dump() << '\n';
    }
    if (truncated_tail) {
        out << nlohmann::json{{"note", "stream ended before a full retraining window"}}.dump()
            << '\n';
    }
    return out.str();
}

std::string EpisodeLog::trajectory_csv() const {
    std::ostringstream out;
    out.precision(12);
    out << "t,k,episode,d_proj,b_proj,d_res,b_res\n";
    for (const auto& p : trajectory) {
        out << p.t << ',' << p.k << ',' << p.episode << ',' << p.d_proj << ',' << p.b_proj << ','
            << p.d_res << ',' << p.b_res << '\n';
    }
    return out.str();
}

}  // namespace projmon
