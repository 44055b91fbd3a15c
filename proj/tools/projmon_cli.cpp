// projmon command-line tool. Talks to the core exclusively through the
// shared library's C interface; all heavy lifting happens behind it.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "projmon/projmon.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

int exit_code_for(int status) {
    switch (status) {
        case PROJMON_OK:
            return kExitOk;
        case PROJMON_ERR_IO:
            return kExitIo;
        default:
            return kExitInvalid;
    }
}

// Fails the whole command on the first C-API error.
struct CApiError {
    int exit_code;
    std::string message;
};

void check(int status) {
    if (status != PROJMON_OK) {
        throw CApiError{exit_code_for(status), projmon_last_error()};
    }
}

std::string take_string(char* s) {
    if (!s) return {};
    std::string out(s);
    projmon_free_string(s);
    return out;
}

struct StreamHandle {
    projmon_stream* ptr = nullptr;
    ~StreamHandle() { projmon_stream_free(ptr); }
};

struct MonitorHandle {
    projmon_monitor* ptr = nullptr;
    ~MonitorHandle() { projmon_monitor_free(ptr); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CApiError{kExitIo, "cannot open '" + path + "' for writing"};
    f << content;
    if (!f) throw CApiError{kExitIo, "write failed for '" + path + "'"};
}

// Shared flag bundles ------------------------------------------------

struct ThresholdFlags {
    std::string kind;  // empty = no thresholding
    double c_th = 1.0;
    double q = 8.0;
    std::optional<double> fixed_t;
    double scad_a = 3.7;

    void attach(CLI::App* cmd) {
        cmd->add_option("--threshold", kind, "Threshold kind: hard, lasso or scad")
            ->check(CLI::IsMember({"hard", "lasso", "scad"}));
        cmd->add_option("--Cth", c_th, "Constant of the rate threshold C_th d^{4/q}/sqrt(m)");
        cmd->add_option("--q", q, "Moment order q (> 4) of the rate threshold");
        cmd->add_option("--t", fixed_t, "Fixed threshold value (overrides the rate rule)");
        cmd->add_option("--scad-a", scad_a, "SCAD shape parameter (> 2)");
    }
    bool enabled() const { return !kind.empty(); }
    json to_json() const {
        json j{{"kind", kind}, {"scad_a", scad_a}};
        if (fixed_t) {
            j["t"] = *fixed_t;
        } else {
            j["C_th"] = c_th;
            j["q"] = q;
        }
        return j;
    }
};

struct SimFlags {
    std::size_t reps = 100000;
    std::size_t grid = 10000;

    void attach(CLI::App* cmd) {
        cmd->add_option("--reps", reps, "Monte Carlo replications");
        cmd->add_option("--grid", grid, "Grid steps per unit time");
    }
};

struct LrvFlags {
    double rho = 0.4;
    std::optional<std::size_t> b;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lrv-rho", rho, "Bandwidth exponent: b = floor(m^rho)");
        cmd->add_option("--lrv-b", b, "Bandwidth override");
    }
    json to_json() const {
        json j{{"rho", rho}};
        if (b) j["b"] = *b;
        return j;
    }
};

// kind-specific datagen flags
struct DatagenFlags {
    std::string kind = "vectorma";
    std::size_t d = 5;
    std::size_t n = 1000;
    double beta = 3.0;
    std::size_t l_max = 4;
    std::string innovation = "normal";
    double df = 8.0;
    double mean_amp = 1.0;
    double scale_amp = 0.5;
    std::size_t k_star = 0;
    double sigma0_scale = 1.0;
    double sigma_a_scale = 4.0;
    bool noise_as_stddev = false;
};

std::string dense_csv_from_triu(const json& sym) {
    const std::size_t d = sym.at("d").get<std::size_t>();
    const auto triu = sym.at("triu").get<std::vector<double>>();
    std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            a[i][j] = triu[k];
            a[j][i] = triu[k];
            ++k;
        }
    }
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (j) out << ',';
            out << a[i][j];
        }
        out << '\n';
    }
    return out.str();
}

std::string trajectory_jsonl_to_csv(const std::string& jsonl) {
    std::ostringstream out;
    out.precision(17);
    out << "k,stat,bound,signal\n";
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        out << j.at("k").get<long>() << ',' << j.at("stat").get<double>() << ','
            << j.at("bound").get<double>() << ',' << (j.value("signal", false) ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential monitoring of projected second moments"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name
    app.set_config("--config", "", "Plain-text key=value configuration file");
    app.allow_config_extras(false);

    std::uint64_t seed = 1;
    std::string out_path;
    std::string format = "jsonl";
    app.add_option("--seed", seed, "Root seed; all randomness derives from it")
        ->capture_default_str();
    app.add_option("--out", out_path, "Output path or prefix");
    app.add_option("--format", format, "Output format for trajectories/matrices")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    // ---------------- datagen ----------------
    auto* cmd_datagen = app.add_subcommand("datagen", "Generate a synthetic stream as CSV");
    DatagenFlags dg;
    cmd_datagen->add_option("--kind", dg.kind, "Generator kind")
        ->check(CLI::IsMember({"vectorma", "locally-stationary", "covbreak", "regression63"}));
    cmd_datagen->add_option("--d", dg.d, "Dimension");
    cmd_datagen->add_option("--n", dg.n, "Number of observations");
    cmd_datagen->add_option("--beta", dg.beta, "MA coefficient decay (> 2)");
    cmd_datagen->add_option("--l-max", dg.l_max, "MA order cap");
    cmd_datagen->add_option("--innovation", dg.innovation, "normal or t")
        ->check(CLI::IsMember({"normal", "t"}));
    cmd_datagen->add_option("--df", dg.df, "Student-t degrees of freedom (> 4)");
    cmd_datagen->add_option("--mean-amp", dg.mean_amp, "Mean curve amplitude");
    cmd_datagen->add_option("--scale-amp", dg.scale_amp, "Scale curve slope");
    cmd_datagen->add_option("--k-star", dg.k_star, "Covariance break time");
    cmd_datagen->add_option("--sigma0-scale", dg.sigma0_scale, "Pre-break covariance scale");
    cmd_datagen->add_option("--sigma-a-scale", dg.sigma_a_scale, "Post-break covariance scale");
    cmd_datagen->add_flag("--noise-as-stddev", dg.noise_as_stddev,
                          "Read the regression noise levels as standard deviations");

    // ---------------- critval ----------------
    auto* cmd_critval =
        app.add_subcommand("critval", "Simulate limit-law critical values");
    cmd_critval->add_subcommand("simulate", "")->silent();  // `critval simulate ...` alias
    double cv_gamma = 0.25, cv_delta = 0.1;
    std::vector<double> cv_alpha{0.05};
    std::optional<double> cv_T;
    bool cv_flat = false, cv_defaults = false;
    std::string cv_table;
    SimFlags cv_sim;
    cmd_critval->add_option("--gamma", cv_gamma, "Boundary weight exponent in [0, 0.5)");
    cmd_critval->add_option("--delta", cv_delta, "Monitoring start fraction (> 0)");
    cmd_critval->add_option("--T", cv_T, "Closed-end horizon (omit for open-end)");
    cmd_critval->add_flag("--flat", cv_flat, "Flat boundary weighting (closed-end only)");
    cmd_critval->add_option("--alpha", cv_alpha, "Significance level(s)")->expected(-1);
    cmd_critval->add_option("--table", cv_table, "JSON table used as a cache");
    cmd_critval->add_flag("--defaults", cv_defaults,
                          "Build the default table grid: gamma {0,0.25,0.45} x delta "
                          "{0.05,0.1,0.25} x alpha {0.01,0.05,0.1}, open-end and T in {2,4}");
    cv_sim.attach(cmd_critval);

    // ---------------- monitor ----------------
    auto* cmd_monitor = app.add_subcommand("monitor", "Monitor a CSV stream offline");
    std::string mon_input, mon_v, mon_v_file, mon_estimator, mon_kind = "projection";
    std::string mon_table;
    std::size_t mon_m = 0;
    double mon_gamma = 0.25, mon_delta = 0.1, mon_alpha = 0.05;
    std::optional<double> mon_T, mon_c, mon_mu0;
    double mon_eps0 = 1e-6;
    bool mon_flat = false;
    ThresholdFlags mon_threshold;
    LrvFlags mon_lrv;
    SimFlags mon_sim;
    cmd_monitor->add_option("--input", mon_input, "Input CSV stream")->required();
    cmd_monitor->add_option("--m", mon_m, "Training length")->required();
    cmd_monitor->add_option("--gamma", mon_gamma, "Boundary weight exponent");
    cmd_monitor->add_option("--delta", mon_delta, "Monitoring start fraction");
    cmd_monitor->add_option("--T", mon_T, "Closed-end horizon (omit for open-end)");
    cmd_monitor->add_flag("--flat", mon_flat, "Flat boundary weighting (closed-end only)");
    cmd_monitor->add_option("--alpha", mon_alpha, "Significance level");
    cmd_monitor->add_option("--c", mon_c, "Explicit critical value (skips simulation)");
    cmd_monitor->add_option("--kind", mon_kind, "projection or residual")
        ->check(CLI::IsMember({"projection", "residual"}));
    cmd_monitor->add_option("--v", mon_v, "Inline projection vector, comma-separated");
    cmd_monitor->add_option("--v-file", mon_v_file, "JSON file with {\"entries\":[...]}");
    cmd_monitor->add_option("--estimator", mon_estimator,
                            "Estimate v from the training block: minvar, target, precision-mean");
    cmd_monitor->add_option("--mu0", mon_mu0, "Target return (estimator=target)");
    cmd_monitor->add_option("--eps0", mon_eps0, "Eigenvalue floor for the precision step");
    cmd_monitor->add_option("--table", mon_table, "Critical-value table cache");
    mon_threshold.attach(cmd_monitor);
    mon_lrv.attach(cmd_monitor);
    mon_sim.attach(cmd_monitor);

    // ---------------- covest ----------------
    auto* cmd_covest = app.add_subcommand("covest", "Estimate and threshold covariance matrices");
    std::string cov_input;
    std::size_t cov_m = 0;
    ThresholdFlags cov_threshold;
    cmd_covest->add_option("--input", cov_input, "Input CSV stream")->required();
    cmd_covest->add_option("--m", cov_m, "Rows to use (0 = all)");
    cov_threshold.attach(cmd_covest);

    // ---------------- portfolio ----------------
    auto* cmd_portfolio = app.add_subcommand("portfolio", "Construct projection portfolios");
    std::string pf_input, pf_kind = "minvar";
    std::size_t pf_m = 0;
    std::optional<double> pf_mu0;
    double pf_eps0 = 1e-6;
    ThresholdFlags pf_threshold;
    cmd_portfolio->add_option("--input", pf_input, "Input CSV of returns")->required();
    cmd_portfolio->add_option("--kind", pf_kind, "minvar, target or precision-mean");
    cmd_portfolio->add_option("--m", pf_m, "Rows to use (0 = all)");
    cmd_portfolio->add_option("--mu0", pf_mu0, "Target return (kind=target)");
    cmd_portfolio->add_option("--eps0", pf_eps0, "Eigenvalue floor for the precision step");
    std::optional<double> pf_cap;
    cmd_portfolio->add_option("--exposure-cap", pf_cap,
                              "Gross-exposure cap, reported against ||w||_1 (not enforced)");
    pf_threshold.attach(cmd_portfolio);

    // ---------------- experiment63 ----------------
    auto* cmd_exp = app.add_subcommand(
        "experiment63", "Concept-drift experiment on the regression63 scenario");
    std::size_t exp_m = 1000, exp_n = 50000, exp_sweep = 1;
    double exp_gamma = 0.25, exp_delta = 0.1, exp_alpha = 0.05;
    std::optional<double> exp_c;
    bool exp_no_retrain = false, exp_dump_data = false, exp_noise_sd = false;
    std::string exp_table;
    SimFlags exp_sim;
    LrvFlags exp_lrv;
    cmd_exp->add_option("--m", exp_m, "Training length");
    cmd_exp->add_option("--n", exp_n, "Stream length");
    cmd_exp->add_option("--gamma", exp_gamma, "Boundary weight exponent");
    cmd_exp->add_option("--delta", exp_delta, "Monitoring start fraction");
    cmd_exp->add_option("--alpha", exp_alpha, "Significance level");
    cmd_exp->add_option("--c", exp_c, "Explicit critical value (skips simulation)");
    cmd_exp->add_flag("--no-retrain", exp_no_retrain, "Single episode; report both detectors");
    cmd_exp->add_flag("--dump-data", exp_dump_data, "Also write the generated stream CSV");
    cmd_exp->add_flag("--noise-as-stddev", exp_noise_sd,
                      "Read the scenario noise levels as standard deviations");
    cmd_exp->add_option("--sweep", exp_sweep, "Run this many consecutive seeds");
    cmd_exp->add_option("--table", exp_table, "Critical-value table cache");
    exp_sim.attach(cmd_exp);
    exp_lrv.attach(cmd_exp);

    CLI11_PARSE(app, argc, argv);

    try {
        // ---------------- datagen ----------------
        if (cmd_datagen->parsed()) {
            // the bundled drift scenario defaults to its full length
            if (dg.kind == "regression63" && cmd_datagen->count("--n") == 0) dg.n = 50000;
            json spec{{"kind", dg.kind}, {"n", dg.n}, {"seed", seed}, {"d", dg.d}};
            if (dg.kind == "vectorma" || dg.kind == "locally-stationary") {
                spec["beta"] = dg.beta;
                spec["l_max"] = dg.l_max;
                spec["innovation"] = dg.innovation == "t" ? "t" : "normal";
                spec["df"] = dg.df;
                if (dg.kind == "locally-stationary") {
                    spec["mean_amp"] = dg.mean_amp;
                    spec["scale_amp"] = dg.scale_amp;
                }
            } else if (dg.kind == "covbreak") {
                spec["k_star"] = dg.k_star ? dg.k_star : dg.n / 2;
                spec["sigma0"] = dg.sigma0_scale;
                spec["sigma_a"] = dg.sigma_a_scale;
            } else if (dg.kind == "regression63") {
                spec["noise_as_stddev"] = dg.noise_as_stddev;
            }
            StreamHandle s;
            check(projmon_stream_generate(spec.dump().c_str(), &s.ptr));
            if (out_path.empty()) throw CApiError{kExitInvalid, "datagen needs --out"};
            check(projmon_stream_to_csv(s.ptr, out_path.c_str()));
            std::cout << "wrote " << out_path << "\n";
            return kExitOk;
        }

        // ---------------- critval ----------------
        if (cmd_critval->parsed()) {
            const char* table = cv_table.empty() ? nullptr : cv_table.c_str();
            if (cv_defaults) {
                if (cv_table.empty()) throw CApiError{kExitInvalid, "--defaults needs --table"};
                const std::vector<double> alphas{0.01, 0.05, 0.1};
                for (double gamma : {0.0, 0.25, 0.45}) {
                    for (double delta : {0.05, 0.1, 0.25}) {
                        for (double T : {0.0, 2.0, 4.0}) {  // 0 = open-end
                            json req{{"gamma", gamma},     {"delta", delta},
                                     {"alpha", alphas},    {"reps", cv_sim.reps},
                                     {"grid", cv_sim.grid}, {"seed", seed}};
                            if (T > 0) req["horizon"] = T;
                            char* result = nullptr;
                            check(projmon_critval(req.dump().c_str(), table, &result));
                            std::cout << take_string(result) << "\n" << std::flush;
                        }
                    }
                }
                std::cout << "table written to " << cv_table << "\n";
                return kExitOk;
            }
            json req{{"gamma", cv_gamma}, {"delta", cv_delta},
                     {"alpha", cv_alpha.size() == 1 ? json(cv_alpha[0]) : json(cv_alpha)},
                     {"reps", cv_sim.reps}, {"grid", cv_sim.grid}, {"seed", seed}};
            if (cv_T) req["horizon"] = *cv_T;
            if (cv_flat) req["weighting"] = "flat";
            char* result = nullptr;
            check(projmon_critval(req.dump().c_str(), table, &result));
            const std::string text = take_string(result);
            if (!out_path.empty()) write_file(out_path, text + "\n");
            json res = json::parse(text);
            if (res.is_array()) {
                for (const auto& e : res) {
                    std::cout << "alpha=" << e.at("alpha").get<double>() << "  c="
                              << e.at("c").get<double>() << "\n";
                }
            } else {
                std::cout << "c = " << res.at("c").get<double>() << "\n";
            }
            std::cout << text << "\n";
            return kExitOk;
        }

        // ---------------- monitor ----------------
        if (cmd_monitor->parsed()) {
            StreamHandle s;
            check(projmon_stream_from_csv(mon_input.c_str(), &s.ptr));

            json cfg{{"m", mon_m},         {"gamma", mon_gamma}, {"delta", mon_delta},
                     {"alpha", mon_alpha}, {"kind", mon_kind},
                     {"sim", {{"reps", mon_sim.reps}, {"grid", mon_sim.grid}, {"seed", seed}}},
                     {"lrv", mon_lrv.to_json()}};
            if (mon_T) cfg["horizon"] = *mon_T;
            if (mon_flat) cfg["weighting"] = "flat";
            if (mon_c) cfg["c"] = *mon_c;
            if (!mon_table.empty()) cfg["table"] = mon_table;

            std::string v_source;
            if (!mon_v.empty()) {
                std::vector<double> entries;
                std::istringstream in(mon_v);
                std::string tok;
                while (std::getline(in, tok, ',')) entries.push_back(std::stod(tok));
                cfg["v"] = entries;
                v_source = "inline";
            } else if (!mon_v_file.empty()) {
                std::ifstream f(mon_v_file);
                if (!f) throw CApiError{kExitIo, "cannot open '" + mon_v_file + "'"};
                json vj = json::parse(f, nullptr, false);
                if (vj.is_discarded() || !vj.contains("entries")) {
                    throw CApiError{kExitInvalid, "v file needs {\"entries\": [...]}"};
                }
                cfg["v"] = vj["entries"];
                v_source = "file:" + mon_v_file;
            } else if (!mon_estimator.empty()) {
                json est{{"estimator", mon_estimator}, {"eps0", mon_eps0}};
                if (mon_mu0) est["mu0"] = *mon_mu0;
                if (mon_threshold.enabled()) est["threshold"] = mon_threshold.to_json();
                cfg["v"] = est;
                v_source = "estimator:" + mon_estimator;
            } else {
                throw CApiError{kExitInvalid, "monitor needs --v, --v-file or --estimator"};
            }

            MonitorHandle mon;
            check(projmon_monitor_create(cfg.dump().c_str(), s.ptr, &mon.ptr));
            char* report = nullptr;
            char* summary = nullptr;
            check(projmon_monitor_run(mon.ptr, s.ptr, &report, &summary));
            const std::string report_text = take_string(report);
            json summary_j = json::parse(take_string(summary));
            summary_j["v_source"] = v_source;

            const std::string prefix = out_path.empty() ? "monitor" : out_path;
            if (format == "csv") {
                write_file(prefix + ".trajectory.csv", trajectory_jsonl_to_csv(report_text));
            } else {
                write_file(prefix + ".trajectory.jsonl", report_text);
            }
            write_file(prefix + ".summary.json", summary_j.dump(2) + "\n");
            std::cout << summary_j.dump(2) << "\n";
            return kExitOk;
        }

        // ---------------- covest ----------------
        if (cmd_covest->parsed()) {
            StreamHandle s;
            check(projmon_stream_from_csv(cov_input.c_str(), &s.ptr));
            json req{{"m", cov_m}};
            if (cov_threshold.enabled()) req["threshold"] = cov_threshold.to_json();
            char* result = nullptr;
            check(projmon_covest(req.dump().c_str(), s.ptr, &result));
            json res = json::parse(take_string(result));
            const std::string prefix = out_path.empty() ? "covest" : out_path;
            if (format == "csv") {
                write_file(prefix + ".sigma.csv", dense_csv_from_triu(res["sigma"]));
                if (res.contains("sigma_thresholded")) {
                    write_file(prefix + ".sigma_thresholded.csv",
                               dense_csv_from_triu(res["sigma_thresholded"]));
                }
            } else {
                write_file(prefix + ".json", res.dump(2) + "\n");
            }
            std::cout << "d=" << res["d"] << " m=" << res["m"];
            if (res.contains("threshold")) std::cout << " t=" << res["threshold"];
            std::cout << "\n";
            return kExitOk;
        }

        // ---------------- portfolio ----------------
        if (cmd_portfolio->parsed()) {
            StreamHandle s;
            check(projmon_stream_from_csv(pf_input.c_str(), &s.ptr));
            json req{{"kind", pf_kind}, {"m", pf_m}, {"eps0", pf_eps0}};
            if (pf_mu0) req["mu0"] = *pf_mu0;
            if (pf_cap) req["exposure_cap"] = *pf_cap;
            if (pf_threshold.enabled()) req["threshold"] = pf_threshold.to_json();
            char* result = nullptr;
            check(projmon_portfolio(req.dump().c_str(), s.ptr, &result));
            const std::string text = take_string(result);
            if (!out_path.empty()) write_file(out_path, text + "\n");
            std::cout << text << "\n";
            return kExitOk;
        }

        // ---------------- experiment63 ----------------
        if (cmd_exp->parsed()) {
            const std::string prefix = out_path.empty() ? "experiment63" : out_path;
            std::ostringstream sweep;
            sweep << "seed,episode,train_start,train_end,signal_time,signal_kind,delay\n";
            for (std::size_t run = 0; run < exp_sweep; ++run) {
                const std::uint64_t run_seed = seed + run;
                json gen{{"kind", "regression63"},
                         {"n", exp_n},
                         {"seed", run_seed},
                         {"noise_as_stddev", exp_noise_sd}};
                StreamHandle s;
                check(projmon_stream_generate(gen.dump().c_str(), &s.ptr));

                json cfg{{"m", exp_m},       {"gamma", exp_gamma}, {"delta", exp_delta},
                         {"alpha", exp_alpha}, {"seed", run_seed},
                         {"retrain", !exp_no_retrain},
                         {"sim", {{"reps", exp_sim.reps}, {"grid", exp_sim.grid}, {"seed", seed}}},
                         {"lrv", exp_lrv.to_json()}};
                if (exp_c) cfg["c"] = *exp_c;
                if (!exp_table.empty()) cfg["table"] = exp_table;

                char* episodes = nullptr;
                char* trajectory = nullptr;
                check(projmon_rollover_run(cfg.dump().c_str(), s.ptr, &episodes, &trajectory));
                const std::string episodes_text = take_string(episodes);
                const std::string trajectory_text = take_string(trajectory);

                const std::string tag = exp_sweep > 1 ? "." + std::to_string(run_seed) : "";
                write_file(prefix + tag + ".episodes.jsonl", episodes_text);
                write_file(prefix + tag + ".trajectory.csv", trajectory_text);
                if (exp_dump_data) {
                    const std::string data_path = prefix + tag + ".data.csv";
                    check(projmon_stream_to_csv(s.ptr, data_path.c_str()));
                }

                std::istringstream in(episodes_text);
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    json e = json::parse(line);
                    if (!e.contains("episode")) continue;
                    sweep << run_seed << ',' << e["episode"] << ',' << e["train_start"] << ','
                          << e["train_end"] << ',';
                    if (!e["signal"].is_null()) {
                        const long t = e["signal"]["time"].get<long>();
                        sweep << t << ',' << e["signal"]["kind"].get<std::string>() << ',';
                        if (t > 4000) {
                            sweep << (t - 4000);
                        } else if (t > 2000) {
                            sweep << (t - 2000);
                        }
                    } else {
                        sweep << ",,";
                    }
                    sweep << '\n';
                }
                std::cout << "seed " << run_seed << ":\n" << episodes_text;
            }
            if (exp_sweep > 1) write_file(prefix + ".sweep.csv", sweep.str());
            return kExitOk;
        }
    } catch (const CApiError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitOk;
}
