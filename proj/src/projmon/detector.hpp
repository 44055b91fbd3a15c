#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "projmon/lrv.hpp"
#include "projmon/stream.hpp"
#include "projmon/types.hpp"

namespace projmon {

// Weighted boundary g(m,k) = sqrt(m) * ((m+k)/m) * (k/(m+k))^gamma.
double boundary_g(std::size_t m, long k, double gamma);

// Boundary actually compared against, including the weighting choice
// (flat: g(m,k) = sqrt(m)).
double boundary_value(const BoundaryConfig& cfg, std::size_t m, long k);

// Q(m,k) = |mon_sum - (k/m) * train_sum|.
double detector_Q(double train_sum, double mon_sum, std::size_t m, long k);

struct StepOutcome {
    enum class Status {
        advanced,  // observation consumed, no signal
        signal,    // observation consumed, boundary crossed
        terminal,  // closed-end horizon exhausted; observation not consumed
        frozen,    // state already signaled; observation not consumed
    };
    Status status = Status::advanced;
    std::optional<SignalEvent> event;
    // Detector trajectory row for this step; present once k reaches the
    // monitoring start index.
    std::optional<double> stat;
    std::optional<double> bound;
};

// Consumes one observation: increments k and adds the projected square
// (v'y)^2 — or the squared residual (z - v'y)^2 — to the monitoring sum,
// then tests the boundary once k >= ceil(m*delta).
StepOutcome monitor_step(MonitorState& state, std::span<const double> y,
                         std::optional<double> z = std::nullopt);

// Everything needed to freeze a monitor from a training block.
struct MonitorSetup {
    ProjectionVector v;
    BoundaryConfig boundary;
    DetectorKind kind = DetectorKind::projection;
    double c = 0;
    LrvConfig lrv;
};

// Builds the frozen MonitorState from rows [1, m] of the stream: training
// partial sum and the long-run standard deviation of the projected-squares
// (or squared-residual) series.
MonitorState train_monitor(const ObservationStream& s, const MonitorSetup& setup);

struct TrajectoryRow {
    long k = 0;
    double stat = 0;
    double bound = 0;
};

struct RunReport {
    std::vector<TrajectoryRow> trajectory;
    std::optional<SignalEvent> signal;
    bool truncated = false;  // stream ended before the closed-end horizon
    bool terminal = false;   // closed-end horizon fully examined, no signal

    std::string to_jsonl() const;
};

// Replays monitor_step over the monitoring window starting after row
// m + state.k of the stream; stops at a signal, the closed-end horizon, or
// the end of the stream. Errors carry the offending 1-based time index.
RunReport run_monitor(MonitorState& state, const ObservationStream& s);

// Train-then-monitor convenience for closed-end (and open-end) runs.
RunReport run_closed_end(const ObservationStream& s, const MonitorSetup& setup,
                         MonitorState* out_state = nullptr);

}  // namespace projmon
