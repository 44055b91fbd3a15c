#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "projmon/critval.hpp"
#include "projmon/lrv.hpp"
#include "projmon/mlp.hpp"
#include "projmon/stream.hpp"
#include "projmon/types.hpp"

namespace projmon {

// Train-monitor-retrain protocol: fit the network on m observations, run
// the projection detector (v = output weights, on the hidden-feature
// stream) and the residual detector (squared prediction errors) side by
// side, and on the first signal discard everything up to it, retrain on
// the next m observations and restart.
struct RolloverConfig {
    std::size_t m = 1000;
    BoundaryConfig boundary = BoundaryConfig::open(0.25, 0.1);
    double alpha = 0.05;
    double c_override = 0;  // > 0: use this critical value, skip simulation
    SimConfig critval_sim;
    LrvConfig lrv;
    TrainConfig train_cfg;
    std::vector<std::size_t> hidden = {4, 2};
    bool retrain = true;  // false: single episode, both detectors run to the end
    std::uint64_t seed = 1;
};

struct EpisodeRecord {
    int episode = 0;
    std::size_t train_start = 0;  // 1-based, inclusive
    std::size_t train_end = 0;
    std::size_t monitor_start = 0;  // first boundary-evaluated time index
    double c = 0;
    double sigma_projection = 0;
    double sigma_residual = 0;
    std::optional<SignalEvent> signal_projection;  // event times are absolute (t)
    std::optional<SignalEvent> signal_residual;
    std::optional<SignalEvent> ending_signal;  // first signal; absent = ran to stream end
    // set when the episode could not monitor (training diverged, or the
    // trained network produced a degenerate monitored series); the protocol
    // stops at such an episode
    std::optional<std::string> error;
    MlpModel model;
};

// One row per boundary-evaluated step. Following the display convention,
// d_* = Q/sqrt(m) and b_* = c*sigma*g(m,k)/sqrt(m), so d > b exactly at a
// signal.
struct TrajectoryPoint {
    long t = 0;
    long k = 0;
    int episode = 0;
    double d_proj = 0, b_proj = 0;
    double d_res = 0, b_res = 0;
};

struct EpisodeLog {
    std::vector<EpisodeRecord> episodes;
    std::vector<TrajectoryPoint> trajectory;
    bool truncated_tail = false;  // a retraining window did not fit before stream end

    std::string to_jsonl() const;
    std::string trajectory_csv() const;
};

EpisodeLog rollover_monitor(const ObservationStream& stream, const RolloverConfig& cfg,
                            CriticalValueTable* table = nullptr);

}  // namespace projmon
