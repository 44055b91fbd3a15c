#include "projmon/detector.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "projmon/common.hpp"

namespace projmon {

double boundary_g(std::size_t m, long k, double gamma) {
    if (m < 1) throw_invalid("boundary_g needs m >= 1");
    if (k < 1) throw_invalid("boundary_g needs k >= 1");
    if (!(gamma >= 0.0 && gamma < 0.5)) throw_invalid("gamma must lie in [0, 0.5)");
    const double md = static_cast<double>(m);
    const double kd = static_cast<double>(k);
    return std::sqrt(md) * ((md + kd) / md) * std::pow(kd / (md + kd), gamma);
}

double boundary_value(const BoundaryConfig& cfg, std::size_t m, long k) {
    if (cfg.weighting == BoundaryWeighting::flat) {
        return std::sqrt(static_cast<double>(m));
    }
    return boundary_g(m, k, cfg.gamma);
}

double detector_Q(double train_sum, double mon_sum, std::size_t m, long k) {
    if (m < 1) throw_invalid("detector_Q needs m >= 1");
    if (k < 1) throw_invalid("detector_Q needs k >= 1");
    return std::abs(mon_sum - (static_cast<double>(k) / static_cast<double>(m)) * train_sum);
}

namespace {

double projected_value(const MonitorState& state, std::span<const double> y,
                       std::optional<double> z) {
    if (y.size() != state.v_hat.dim()) {
        throw_invalid("monitor_step: observation dimension mismatch");
    }
    double proj = 0;
    for (std::size_t j = 0; j < y.size(); ++j) proj += state.v_hat.entries[j] * y[j];
    double value;
    if (state.kind == DetectorKind::residual) {
        if (!z) throw_invalid("monitor_step: residual detector needs a response value");
        const double r = *z - proj;
        value = r * r;
    } else {
        value = proj * proj;
    }
    if (!std::isfinite(value)) throw_domain("monitor_step: non-finite projected value");
    return value;
}

}  // namespace

StepOutcome monitor_step(MonitorState& state, std::span<const double> y, std::optional<double> z) {
    StepOutcome out;
    if (state.signaled()) {
        out.status = StepOutcome::Status::frozen;
        return out;
    }
    if (state.boundary.horizon == HorizonKind::closed_end &&
        state.k >= state.boundary.end_index(state.m)) {
        out.status = StepOutcome::Status::terminal;
        return out;
    }

    const double value = projected_value(state, y, z);
    state.k += 1;
    state.mon_sum += value;

    if (state.k >= state.boundary.start_index(state.m)) {
        const double q = detector_Q(state.train_sum, state.mon_sum, state.m, state.k);
        const double stat = q / state.sigma0_hat;
        const double bound = state.c * boundary_value(state.boundary, state.m, state.k);
        out.stat = stat;
        out.bound = bound;
        if (stat > bound) {
            state.signaled_at = state.k;
            SignalEvent ev;
            ev.k = state.k;
            ev.time = static_cast<long>(state.m) + state.k;
            ev.stat = stat;
            ev.bound = bound;
            ev.kind = state.kind;
            out.event = ev;
            out.status = StepOutcome::Status::signal;
            return out;
        }
    }
    out.status = StepOutcome::Status::advanced;
    return out;
}

MonitorState train_monitor(const ObservationStream& s, const MonitorSetup& setup) {
    setup.boundary.validate();
    const std::size_t m = s.train_len;
    if (m < 2) throw_invalid("training needs m >= 2");
    if (s.rows() < m) throw_invalid("stream has fewer than m observations");
    if (setup.v.dim() != s.dim) throw_invalid("projection vector dimension mismatch");
    if (!(setup.c > 0.0) && !std::isinf(setup.c)) {
        throw_invalid("critical value must be positive");
    }
    if (setup.kind == DetectorKind::residual && !s.has_response()) {
        throw_invalid("residual detector needs a response column");
    }

    MonitorState state;
    state.v_hat = setup.v;
    state.m = m;
    state.boundary = setup.boundary;
    state.kind = setup.kind;
    state.c = setup.c;

    std::vector<double> series(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto y = s.row(i);
        double proj = 0;
        for (std::size_t j = 0; j < s.dim; ++j) proj += setup.v.entries[j] * y[j];
        if (setup.kind == DetectorKind::residual) {
            const double r = s.response[i] - proj;
            series[i] = r * r;
        } else {
            series[i] = proj * proj;
        }
        if (!std::isfinite(series[i])) {
            throw_domain("training: non-finite projected value at t=" + std::to_string(i + 1));
        }
    }
    double sum = 0;
    for (double v : series) sum += v;
    state.train_sum = sum;
    state.sigma0_hat = std::sqrt(lrv_estimate(series, setup.lrv));
    return state;
}

RunReport run_monitor(MonitorState& state, const ObservationStream& s) {
    RunReport report;
    const std::size_t m = state.m;
    std::size_t row = m + static_cast<std::size_t>(state.k);
    const bool closed = state.boundary.horizon == HorizonKind::closed_end;
    const long k_end = closed ? state.boundary.end_index(m) : 0;

    while (row < s.rows()) {
        std::optional<double> z;
        if (state.kind == DetectorKind::residual) {
            if (!s.has_response()) throw_invalid("residual detector needs a response column");
            z = s.response[row];
        }
        StepOutcome out;
        try {
            out = monitor_step(state, s.row(row), z);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (t=" + std::to_string(row + 1) + ")");
        }
        if (out.status == StepOutcome::Status::terminal ||
            out.status == StepOutcome::Status::frozen) {
            break;
        }
        ++row;
        if (out.status == StepOutcome::Status::signal) {
            report.signal = out.event;
            return report;
        }
        if (out.stat) report.trajectory.push_back({state.k, *out.stat, *out.bound});
    }
    if (closed) {
        if (state.k >= k_end) {
            report.terminal = true;
        } else {
            report.truncated = true;  // stream ended before the horizon
        }
    } else {
        report.truncated = row >= s.rows();
    }
    return report;
}

RunReport run_closed_end(const ObservationStream& s, const MonitorSetup& setup,
                         MonitorState* out_state) {
    MonitorState state = train_monitor(s, setup);
    RunReport report = run_monitor(state, s);
    if (out_state) *out_state = state;
    return report;
}

std::string RunReport::to_jsonl() const {
    std::ostringstream out;
    for (const auto& row : trajectory) {
        nlohmann::json j{{"k", row.k}, {"stat", row.stat}, {"bound", row.bound}};
        out << j.dump() << '\n';
    }
    if (signal) out << signal->to_json() << '\n';
    return out.str();
}

}  // namespace projmon
