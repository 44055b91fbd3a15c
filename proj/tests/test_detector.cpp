#include <cmath>
#include <limits>

#include "doctest.h"
#include "projmon/common.hpp"
#include "projmon/detector.hpp"
#include "projmon/rng.hpp"

using namespace projmon;

namespace {

ObservationStream gaussian_stream(std::size_t n, std::size_t d, std::size_t m,
                                  std::uint64_t seed, double scale_after = 1.0,
                                  std::size_t change_row = SIZE_MAX) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> nd;
    ObservationStream s;
    s.dim = d;
    s.train_len = m;
    s.data.resize(n * d);
    for (std::size_t t = 0; t < n; ++t) {
        const double scale = t >= change_row ? scale_after : 1.0;
        for (std::size_t j = 0; j < d; ++j) s.data[t * d + j] = scale * nd(rng);
    }
    return s;
}

MonitorSetup basic_setup(double c, DetectorKind kind = DetectorKind::projection) {
    MonitorSetup setup;
    setup.v = ProjectionVector::dense({1, 0, 0});
    setup.boundary = BoundaryConfig::closed(0.25, 0.1, 2.0);
    setup.kind = kind;
    setup.c = c;
    return setup;
}

}  // namespace

TEST_CASE("boundary function values") {
    CHECK(boundary_g(100, 100, 0.0) == doctest::Approx(20.0));
    CHECK(boundary_g(100, 100, 0.25) == doctest::Approx(20.0 * std::pow(0.5, 0.25)));
    CHECK(boundary_g(100, 100, 0.25) == doctest::Approx(16.8179).epsilon(1e-4));
    CHECK(boundary_g(400, 40, 0.0) == doctest::Approx(22.0));
}

TEST_CASE("boundary grows strictly in k") {
    for (double gamma : {0.0, 0.25, 0.45}) {
        double prev = 0;
        for (long k = 1; k <= 500; ++k) {
            const double g = boundary_g(200, k, gamma);
            CHECK(g > prev);
            prev = g;
        }
    }
}

TEST_CASE("boundary rejects out-of-domain arguments") {
    CHECK_THROWS_AS(boundary_g(100, 0, 0.25), Error);
    CHECK_THROWS_AS(boundary_g(0, 1, 0.25), Error);
    CHECK_THROWS_AS(boundary_g(100, 1, 0.5), Error);
}

TEST_CASE("flat weighting boundary is sqrt(m)") {
    BoundaryConfig b = BoundaryConfig::closed(0.25, 0.1, 2.0, BoundaryWeighting::flat);
    CHECK(boundary_value(b, 400, 123) == doctest::Approx(20.0));
}

TEST_CASE("detector statistic: cancellation and arithmetic") {
    CHECK(detector_Q(100.0, 50.0, 100, 50) == 0.0);
    CHECK(detector_Q(100.0, 75.0, 100, 50) == doctest::Approx(25.0));
}

TEST_CASE("a level step of size delta accumulates Q = k * delta") {
    // constant pre-change level 1, step up by 0.5 from the first monitored point
    const std::size_t m = 100;
    double train_sum = 0;
    for (std::size_t i = 0; i < m; ++i) train_sum += 1.0;
    double mon_sum = 0;
    double q_at_40 = 0;
    for (long k = 1; k <= 40; ++k) {
        mon_sum += 1.5;
        q_at_40 = detector_Q(train_sum, mon_sum, m, k);
    }
    CHECK(q_at_40 == doctest::Approx(40 * 0.5));
}

TEST_CASE("an infinite critical value never signals") {
    auto s = gaussian_stream(900, 3, 300, 1);
    auto setup = basic_setup(std::numeric_limits<double>::infinity());
    MonitorState st;
    auto rep = run_closed_end(s, setup, &st);
    CHECK_FALSE(rep.signal.has_value());
    CHECK_FALSE(st.signaled());
    CHECK(st.k == 600);  // floor(m*T)
    CHECK(rep.terminal);
}

TEST_CASE("monitor_step validates inputs") {
    auto s = gaussian_stream(900, 3, 300, 2);
    auto st = train_monitor(s, basic_setup(10.0));
    std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_WITH_AS(monitor_step(st, wrong), doctest::Contains("dimension"), Error);

    auto res_setup = basic_setup(10.0, DetectorKind::residual);
    ObservationStream with_z = s;
    with_z.response.assign(s.rows(), 0.5);
    auto res_st = train_monitor(with_z, res_setup);
    std::vector<double> y{0.1, 0.2, 0.3};
    CHECK_THROWS_WITH_AS(monitor_step(res_st, y), doctest::Contains("response"), Error);
    CHECK_NOTHROW(monitor_step(res_st, y, 0.4));

    // non-finite projection is a domain error
    auto st2 = train_monitor(s, basic_setup(10.0));
    std::vector<double> inf_y{std::numeric_limits<double>::infinity(), 0, 0};
    CHECK_THROWS_AS(monitor_step(st2, inf_y), Error);
}

TEST_CASE("training validates the stream against the setup") {
    auto s = gaussian_stream(900, 3, 300, 3);
    auto setup = basic_setup(10.0);
    setup.v = ProjectionVector::dense({1, 0});
    CHECK_THROWS_AS(train_monitor(s, setup), Error);

    auto short_stream = gaussian_stream(100, 3, 300, 3);
    CHECK_THROWS_AS(train_monitor(short_stream, basic_setup(10.0)), Error);

    CHECK_THROWS_AS(train_monitor(s, basic_setup(10.0, DetectorKind::residual)), Error);
}

TEST_CASE("steps are no-ops after a signal and past the closed-end horizon") {
    auto s = gaussian_stream(900, 3, 300, 4, 6.0, 400);  // strong change right after start
    auto setup = basic_setup(2.0);
    MonitorState st;
    auto rep = run_closed_end(s, setup, &st);
    REQUIRE(rep.signal.has_value());
    CHECK(st.signaled());
    const long k_at_signal = st.k;
    std::vector<double> y{1.0, 0.0, 0.0};
    auto out = monitor_step(st, y);
    CHECK(out.status == StepOutcome::Status::frozen);
    CHECK(st.k == k_at_signal);
    CHECK(*st.signaled_at == k_at_signal);

    // horizon exhaustion: fresh monitor, feed past floor(mT)
    auto calm = gaussian_stream(1200, 3, 300, 5);
    MonitorState st2;
    run_closed_end(calm, basic_setup(std::numeric_limits<double>::infinity()), &st2);
    auto out2 = monitor_step(st2, y);
    CHECK(out2.status == StepOutcome::Status::terminal);
    CHECK(st2.k == 600);
}

TEST_CASE("signal index respects the monitoring start ceil(m*delta)") {
    // huge immediate change: the first evaluated step signals
    auto s = gaussian_stream(900, 3, 300, 6, 20.0, 300);
    auto setup = basic_setup(0.5);
    auto rep = run_closed_end(s, setup);
    REQUIRE(rep.signal.has_value());
    CHECK(rep.signal->k == 30);  // ceil(300 * 0.1)
    CHECK(rep.signal->time == 330);
    CHECK(rep.signal->stat > rep.signal->bound);
}

TEST_CASE("T = delta with fractional m*delta yields an empty run") {
    auto s = gaussian_stream(300, 3, 100, 7);
    auto setup = basic_setup(1.0);
    setup.boundary = BoundaryConfig::closed(0.25, 0.095, 0.095);
    auto rep = run_closed_end(s, setup);
    CHECK(rep.trajectory.empty());
    CHECK_FALSE(rep.signal.has_value());
}

TEST_CASE("a short stream truncates the closed-end run and reports it") {
    auto s = gaussian_stream(500, 3, 300, 8);  // horizon needs 300 + 600 rows
    auto rep = run_closed_end(s, basic_setup(100.0));
    CHECK(rep.truncated);
    CHECK_FALSE(rep.terminal);
    CHECK(rep.trajectory.back().k == 200);
}

TEST_CASE("identical state and observation produce identical outcomes") {
    auto s = gaussian_stream(900, 3, 300, 9);
    auto st1 = train_monitor(s, basic_setup(3.0));
    auto st2 = train_monitor(s, basic_setup(3.0));
    std::vector<double> y{0.7, -0.1, 0.4};
    for (int i = 0; i < 50; ++i) {
        auto a = monitor_step(st1, y);
        auto b = monitor_step(st2, y);
        CHECK(a.status == b.status);
        CHECK(st1.mon_sum == st2.mon_sum);
        CHECK(st1.k == st2.k);
    }
}

TEST_CASE("replaying from a serialized checkpoint reproduces the trajectory tail") {
    auto s = gaussian_stream(900, 3, 300, 10, 2.0, 500);
    auto setup = basic_setup(2.5);

    MonitorState full_state = train_monitor(s, setup);
    RunReport full = run_monitor(full_state, s);

    // drive a twin through the first 120 monitoring rows, checkpoint, restore
    MonitorState part = train_monitor(s, setup);
    for (std::size_t row = 300; row < 420; ++row) {
        monitor_step(part, s.row(row));
    }
    MonitorState restored = MonitorState::from_json(part.to_json());
    RunReport tail = run_monitor(restored, s);

    // the tail of the full trajectory equals the restored run
    REQUIRE(full.trajectory.size() > tail.trajectory.size());
    const std::size_t offset = full.trajectory.size() - tail.trajectory.size();
    for (std::size_t i = 0; i < tail.trajectory.size(); ++i) {
        CHECK(tail.trajectory[i].k == full.trajectory[offset + i].k);
        CHECK(tail.trajectory[i].stat == full.trajectory[offset + i].stat);
        CHECK(tail.trajectory[i].bound == full.trajectory[offset + i].bound);
    }
    REQUIRE(full.signal.has_value());
    REQUIRE(tail.signal.has_value());
    CHECK(tail.signal->k == full.signal->k);
    CHECK(tail.signal->stat == full.signal->stat);
}

TEST_CASE("doubling every observation leaves the standardized trajectory unchanged") {
    auto s = gaussian_stream(900, 3, 300, 11, 2.0, 600);
    ObservationStream scaled = s;
    for (auto& v : scaled.data) v *= 2.0;  // exact in binary

    auto setup = basic_setup(2.5);
    auto rep1 = run_closed_end(s, setup);
    auto rep2 = run_closed_end(scaled, setup);
    REQUIRE(rep1.trajectory.size() == rep2.trajectory.size());
    for (std::size_t i = 0; i < rep1.trajectory.size(); ++i) {
        CHECK(rep1.trajectory[i].stat == rep2.trajectory[i].stat);
        CHECK(rep1.trajectory[i].bound == rep2.trajectory[i].bound);
    }
    CHECK(rep1.signal.has_value() == rep2.signal.has_value());
    if (rep1.signal) CHECK(rep1.signal->k == rep2.signal->k);
}

TEST_CASE("run report serializes one record per step plus a flagged signal") {
    auto s = gaussian_stream(900, 3, 300, 12, 8.0, 450);
    auto rep = run_closed_end(s, basic_setup(2.0));
    REQUIRE(rep.signal.has_value());
    const std::string jsonl = rep.to_jsonl();
    CHECK(jsonl.find("\"signal\":true") != std::string::npos);
    // one line per trajectory row plus the signal line
    std::size_t lines = 0;
    for (char ch : jsonl) lines += ch == '\n';
    CHECK(lines == rep.trajectory.size() + 1);
}

TEST_CASE("a calibrated open-end monitor rarely signals on stable streams") {
    #include "projmon/critval.hpp"
    // the statistic stays under the level-0.05 boundary over 10*m steps for
    // nearly all seeds (the limit law caps the infinite-horizon rate at 5%)
    SimConfig sim;
    sim.reps = 20000;
    sim.grid = 2000;
    sim.seed = 123;
    sim.threads = 2;
    BoundaryConfig boundary = BoundaryConfig::open(0.25, 0.1);
    const double c = critical_value(boundary, 0.05, sim);

    const std::size_t m = 300;
    int quiet = 0;
    const int seeds = 300;
    for (int rep = 0; rep < seeds; ++rep) {
        auto s = gaussian_stream(m + 10 * m, 3, m, derive_seed(321, 5, rep));
        MonitorSetup setup;
        setup.v = ProjectionVector::dense({1, 0, 0});
        setup.boundary = boundary;
        setup.c = c;
        auto rep_out = run_closed_end(s, setup);
        if (!rep_out.signal) ++quiet;
    }
    CHECK(double(quiet) / seeds >= 0.92);
}
