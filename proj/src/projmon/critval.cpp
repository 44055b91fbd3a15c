#include "projmon/critval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/rng.hpp"

namespace projmon {

void SimConfig::validate() const {
    if (reps < 1) throw_invalid("reps must be >= 1");
    if (grid < 100) throw_invalid("grid must be >= 100 steps per unit time");
}

namespace {

unsigned resolve_threads(unsigned requested, std::size_t reps) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, reps));
}

// Runs fn(rep, rng) for rep = 0..reps-1, partitioned over threads. Each
// replication seeds its own generator, so the partition does not affect
// results.
template <typename Fn>
void for_each_replication(const SimConfig& cfg, Fn&& fn) {
    const unsigned nthreads = resolve_threads(cfg.threads, cfg.reps);
    if (nthreads <= 1) {
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            Rng rng = make_rng(derive_seed(cfg.seed, seed_tag::critval_rep, r));
            fn(r, rng);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned w = 0; w < nthreads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t r = w; r < cfg.reps; r += nthreads) {
                Rng rng = make_rng(derive_seed(cfg.seed, seed_tag::critval_rep, r));
                fn(r, rng);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> simulate_openend_sup(double gamma, double delta, const SimConfig& cfg) {
    cfg.validate();
    if (!(gamma >= 0.0 && gamma < 0.5)) throw_invalid("gamma must lie in [0, 0.5)");
    if (!(delta > 0.0)) throw_invalid("delta must be positive");

    const std::size_t n = cfg.grid;
    const double h = 1.0 / static_cast<double>(n);
    const double lo = delta / (1.0 + delta);
    const std::size_t i0 = std::max<long>(1, ceil_index(lo * static_cast<double>(n)));
    if (i0 > n) throw_invalid("delta/(1+delta) exceeds 1; no grid point to evaluate");

    // t^-gamma weights on the evaluated part of the grid.
    std::vector<double> weight(n - i0 + 1);
    for (std::size_t i = i0; i <= n; ++i) {
        weight[i - i0] = std::pow(static_cast<double>(i) * h, -gamma);
    }

    std::vector<double> sups(cfg.reps);
    const double sqrt_h = std::sqrt(h);
    for_each_replication(cfg, [&](std::size_t rep, Rng& rng) {
        std::normal_distribution<double> normal;
        double b = 0.0;
        double sup = 0.0;
        for (std::size_t i = 1; i < i0; ++i) b += sqrt_h * normal(rng);
        for (std::size_t i = i0; i <= n; ++i) {
            b += sqrt_h * normal(rng);
            const double v = std::abs(b) * weight[i - i0];
            if (v > sup) sup = v;
        }
        sups[rep] = sup;
    });
    return sups;
}

namespace {

struct ClosedEndGrid {
    std::size_t i0 = 0, i1 = 0;     // evaluated index range, inclusive
    double h = 0;
    std::vector<double> t;          // t[i - i0]
    std::vector<double> inv_w;      // 1 / w(t)
};

ClosedEndGrid make_closedend_grid(double gamma, double delta, double T, std::size_t grid,
                                  BoundaryWeighting weighting) {
    if (!(gamma >= 0.0 && gamma < 0.5)) throw_invalid("gamma must lie in [0, 0.5)");
    if (!(delta > 0.0)) throw_invalid("delta must be positive");
    if (!(T >= delta)) throw_invalid("closed-end horizon requires T >= delta");

    ClosedEndGrid g;
    g.h = 1.0 / static_cast<double>(grid);
    g.i0 = std::max<long>(1, ceil_index(delta * static_cast<double>(grid)));
    g.i1 = std::max<long>(g.i0, floor_index(T * static_cast<double>(grid)));
    g.t.resize(g.i1 - g.i0 + 1);
    g.inv_w.resize(g.t.size());
    for (std::size_t i = g.i0; i <= g.i1; ++i) {
        const double t = static_cast<double>(i) * g.h;
        g.t[i - g.i0] = t;
        const double w = weighting == BoundaryWeighting::flat
                             ? 1.0
                             : (1.0 + t) * std::pow(t / (1.0 + t), gamma);
        g.inv_w[i - g.i0] = 1.0 / w;
    }
    return g;
}

// Walks one path of B1(t) - t*B2(1) (+ optional drift) over the grid and
// returns the weighted supremum.
template <bool with_drift>
double closedend_path_sup(const ClosedEndGrid& g, Rng& rng, const std::vector<double>& drift) {
    std::normal_distribution<double> normal;
    const double z2 = normal(rng);
    const double sqrt_h = std::sqrt(g.h);
    double b1 = 0.0;
    for (std::size_t i = 1; i < g.i0; ++i) b1 += sqrt_h * normal(rng);
    double sup = 0.0;
    for (std::size_t i = g.i0; i <= g.i1; ++i) {
        b1 += sqrt_h * normal(rng);
        const std::size_t idx = i - g.i0;
        double x = b1 - g.t[idx] * z2;
        if constexpr (with_drift) x += drift[idx];
        const double v = std::abs(x) * g.inv_w[idx];
        if (v > sup) sup = v;
    }
    return sup;
}

}  // namespace

std::vector<double> simulate_closedend_sup(double gamma, double delta, double T,
                                           const SimConfig& cfg, BoundaryWeighting weighting) {
    cfg.validate();
    const ClosedEndGrid g = make_closedend_grid(gamma, delta, T, cfg.grid, weighting);
    std::vector<double> sups(cfg.reps);
    const std::vector<double> no_drift;
    for_each_replication(cfg, [&](std::size_t rep, Rng& rng) {
        sups[rep] = closedend_path_sup<false>(g, rng, no_drift);
    });
    return sups;
}

double simulate_power(const LocalAlternativeSpec& spec, double gamma, double delta, double c,
                      const SimConfig& cfg) {
    cfg.validate();
    if (!(c > 0.0)) throw_invalid("critical value must be positive");
    if (!spec.delta_fn) throw_invalid("local alternative needs a drift function");
    if (!(spec.theta_break > delta && spec.theta_break < spec.T)) {
        throw_invalid("change location must lie in (delta, T)");
    }
    const ClosedEndGrid g = make_closedend_grid(gamma, delta, spec.T, cfg.grid,
                                                BoundaryWeighting::paper);

    // 1_{t >= theta} * int_0^{t-theta} Delta(s) ds by cumulative trapezoids
    // on the simulation grid.
    std::vector<double> drift(g.t.size(), 0.0);
    const double theta = spec.theta_break;
    double integral = 0.0;
    double prev_x = 0.0;
    double prev_f = spec.delta_fn(0.0);
    if (!std::isfinite(prev_f)) throw_domain("drift function returned a non-finite value");
    bool started = false;
    for (std::size_t idx = 0; idx < g.t.size(); ++idx) {
        const double t = g.t[idx];
        if (t < theta) continue;
        const double x = t - theta;
        if (!started) {
            // first grid point at or past theta: integrate from 0 to x
            started = true;
            const double f = spec.delta_fn(x);
            if (!std::isfinite(f)) throw_domain("drift function returned a non-finite value");
            integral = 0.5 * (prev_f + f) * x;
            prev_x = x;
            prev_f = f;
        } else {
            const double f = spec.delta_fn(x);
            if (!std::isfinite(f)) throw_domain("drift function returned a non-finite value");
            integral += 0.5 * (prev_f + f) * (x - prev_x);
            prev_x = x;
            prev_f = f;
        }
        drift[idx] = integral;
    }

    std::vector<double> sups(cfg.reps);
    for_each_replication(cfg, [&](std::size_t rep, Rng& rng) {
        sups[rep] = closedend_path_sup<true>(g, rng, drift);
    });
    std::size_t rejections = 0;
    for (double s : sups) {
        if (s > c) ++rejections;
    }
    return static_cast<double>(rejections) / static_cast<double>(cfg.reps);
}

double quantile_higher(std::span<const double> sample, double alpha) {
    if (sample.empty()) throw_invalid("quantile of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw_invalid("alpha must lie in (0, 1)");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double r = static_cast<double>(sorted.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * r - 1e-12));
    rank = std::min(std::max<std::size_t>(rank, 1), sorted.size());
    return sorted[rank - 1];
}

std::vector<double> refine_brownian_path(std::span<const double> path, double h,
                                         std::uint64_t seed) {
    if (path.size() < 2) throw_invalid("path refinement needs at least two grid values");
    if (!(h > 0.0)) throw_invalid("grid step must be positive");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    const double mid_sd = std::sqrt(h / 4.0);
    std::vector<double> out(2 * path.size() - 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        out[2 * i] = path[i];
        out[2 * i + 1] = 0.5 * (path[i] + path[i + 1]) + mid_sd * normal(rng);
    }
    out.back() = path.back();
    return out;
}

std::optional<CritEntry> CriticalValueTable::lookup(double gamma, double delta,
                                                    std::optional<double> T, double alpha,
                                                    BoundaryWeighting weighting) const {
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    for (const auto& e : entries_) {
        if (!near(e.gamma, gamma) || !near(e.delta, delta) || !near(e.alpha, alpha)) continue;
        if (e.weighting != weighting) continue;
        if (e.T.has_value() != T.has_value()) continue;
        if (e.T && !near(*e.T, *T)) continue;
        return e;
    }
    return std::nullopt;
}

void CriticalValueTable::insert(const CritEntry& e) {
    entries_.push_back(e);
}

CritEntry CriticalValueTable::get_or_simulate(const BoundaryConfig& boundary, double alpha,
                                              const SimConfig& cfg) {
    return get_or_simulate_many(boundary, {&alpha, 1}, cfg).front();
}

std::vector<CritEntry> CriticalValueTable::get_or_simulate_many(const BoundaryConfig& boundary,
                                                                std::span<const double> alphas,
                                                                const SimConfig& cfg) {
    boundary.validate();
    if (alphas.empty()) throw_invalid("no alpha levels requested");
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw_invalid("alpha must lie in (0, 1)");
    }
    std::optional<double> T;
    if (boundary.horizon == HorizonKind::closed_end) T = boundary.T;

    bool any_missing = false;
    for (double a : alphas) {
        if (!lookup(boundary.gamma, boundary.delta, T, a, boundary.weighting)) {
            any_missing = true;
            break;
        }
    }
    std::vector<double> sample;
    if (any_missing) {
        sample = T ? simulate_closedend_sup(boundary.gamma, boundary.delta, *T, cfg,
                                            boundary.weighting)
                   : simulate_openend_sup(boundary.gamma, boundary.delta, cfg);
    }
    std::vector<CritEntry> out;
    for (double a : alphas) {
        if (auto hit = lookup(boundary.gamma, boundary.delta, T, a, boundary.weighting)) {
            out.push_back(*hit);
            continue;
        }
        CritEntry e;
        e.gamma = boundary.gamma;
        e.delta = boundary.delta;
        e.T = T;
        e.alpha = a;
        e.weighting = boundary.weighting;
        e.c = quantile_higher(sample, a);
        e.reps = cfg.reps;
        e.grid = cfg.grid;
        e.seed = cfg.seed;
        insert(e);
        out.push_back(e);
    }
    return out;
}

double critical_value(const BoundaryConfig& boundary, double alpha, const SimConfig& cfg) {
    CriticalValueTable t;
    return t.get_or_simulate(boundary, alpha, cfg).c;
}

std::string CriticalValueTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json j;
        j["gamma"] = e.gamma;
        j["delta"] = e.delta;
        j["horizon"] = e.T ? nlohmann::json(*e.T) : nlohmann::json("open-end");
        j["alpha"] = e.alpha;
        j["weighting"] = to_string(e.weighting);
        j["c"] = e.c;
        j["R"] = e.reps;
        j["N"] = e.grid;
        j["seed"] = e.seed;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

CriticalValueTable CriticalValueTable::from_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) throw_io("critical value table: invalid JSON");
    CriticalValueTable t;
    for (const auto& j : arr) {
        try {
            CritEntry e;
            e.gamma = j.at("gamma").get<double>();
            e.delta = j.at("delta").get<double>();
            if (!j.at("horizon").is_string()) e.T = j["horizon"].get<double>();
            e.alpha = j.at("alpha").get<double>();
            e.weighting = j.value("weighting", std::string("paper")) == std::string("flat")
                              ? BoundaryWeighting::flat
                              : BoundaryWeighting::paper;
            e.c = j.at("c").get<double>();
            e.reps = j.at("R").get<std::size_t>();
            e.grid = j.at("N").get<std::size_t>();
            e.seed = j.at("seed").get<std::uint64_t>();
            t.insert(e);
        } catch (const nlohmann::json::exception& ex) {
            throw_io(std::string("critical value table: ") + ex.what());
        }
    }
    return t;
}

CriticalValueTable CriticalValueTable::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return CriticalValueTable{};
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_json(buf.str());
}

void CriticalValueTable::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open '" + path + "' for writing");
    f << to_json() << '\n';
    if (!f) throw_io("write failed for '" + path + "'");
}

}  // namespace projmon
