#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace projmon {

// Projection vector with optional sparsity bookkeeping. When `support` is
// present, entries outside it are exactly zero.
struct ProjectionVector {
    std::vector<double> entries;
    std::optional<std::vector<std::size_t>> support;  // 0-based indices
    std::optional<double> sparsity_s;                 // diagnostics only
    std::optional<double> rate_rd;                    // diagnostics only

    std::size_t dim() const { return entries.size(); }
    double l1_norm() const;
    double l2_norm() const;
    bool support_consistent() const;

    static ProjectionVector dense(std::vector<double> w);
};

enum class HorizonKind { open_end, closed_end };
enum class BoundaryWeighting { paper, flat };

// Boundary/horizon configuration of a monitoring run. The flat weighting
// (g == 1 up to the sqrt(m) scale) is only admissible for closed-end runs.
struct BoundaryConfig {
    double gamma = 0.25;
    double delta = 0.1;
    HorizonKind horizon = HorizonKind::open_end;
    double T = 0.0;  // closed-end only
    BoundaryWeighting weighting = BoundaryWeighting::paper;

    void validate() const;
    // First monitoring index at which the boundary is evaluated: ceil(m*delta), at least 1.
    long start_index(std::size_t m) const;
    // Last evaluated index for closed-end runs: floor(m*T). The window
    // [start,end] may be empty (end < start) when T == delta and m*delta
    // is not an integer.
    long end_index(std::size_t m) const;  // closed-end only

    static BoundaryConfig open(double gamma, double delta);
    static BoundaryConfig closed(double gamma, double delta, double T,
                                 BoundaryWeighting w = BoundaryWeighting::paper);
};

enum class DetectorKind { projection, residual };

struct SignalEvent {
    long k = 0;        // monitoring index at signal
    long time = 0;     // m + k
    double stat = 0;   // Q / sigma0_hat
    double bound = 0;  // c * g(m,k)
    DetectorKind kind = DetectorKind::projection;

    std::string to_json() const;
};

// Frozen training-phase quantities plus the running monitoring sums.
// Single-writer: exactly one consumer advances k/mon_sum.
struct MonitorState {
    ProjectionVector v_hat;
    double sigma0_hat = 0;  // long-run standard deviation, > 0
    double train_sum = 0;   // sum over the training sample of projected squares
    std::size_t m = 0;      // training length
    long k = 0;             // monitoring index, increments by 1 per observation
    double mon_sum = 0;
    double c = 0;  // critical value
    std::optional<long> signaled_at;
    BoundaryConfig boundary;
    DetectorKind kind = DetectorKind::projection;

    bool signaled() const { return signaled_at.has_value(); }

    std::string to_json() const;
    static MonitorState from_json(const std::string& text);
};

const char* to_string(DetectorKind k);
const char* to_string(BoundaryWeighting w);

}  // namespace projmon
