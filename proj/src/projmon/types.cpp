#include "projmon/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "projmon/common.hpp"

namespace projmon {

double ProjectionVector::l1_norm() const {
    double s = 0;
    for (double v : entries) s += std::abs(v);
    return s;
}

double ProjectionVector::l2_norm() const {
    double s = 0;
    for (double v : entries) s += v * v;
    return std::sqrt(s);
}

bool ProjectionVector::support_consistent() const {
    if (!support) return true;
    std::set<std::size_t> in(support->begin(), support->end());
    for (std::size_t j = 0; j < entries.size(); ++j) {
        if (!in.count(j) && entries[j] != 0.0) return false;
    }
    return true;
}

ProjectionVector ProjectionVector::dense(std::vector<double> w) {
    ProjectionVector v;
    v.entries = std::move(w);
    return v;
}

void BoundaryConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 0.5)) throw_invalid("gamma must lie in [0, 0.5)");
    if (!(delta > 0.0)) throw_invalid("delta must be positive");
    if (horizon == HorizonKind::closed_end) {
        if (!(T >= delta)) throw_invalid("closed-end horizon requires T >= delta");
    } else if (weighting == BoundaryWeighting::flat) {
        throw_invalid("flat weighting requires a closed-end horizon");
    }
}

long BoundaryConfig::start_index(std::size_t m) const {
    return std::max<long>(1, ceil_index(static_cast<double>(m) * delta));
}

long BoundaryConfig::end_index(std::size_t m) const {
    return floor_index(static_cast<double>(m) * T);
}

BoundaryConfig BoundaryConfig::open(double gamma, double delta) {
    BoundaryConfig b;
    b.gamma = gamma;
    b.delta = delta;
    b.horizon = HorizonKind::open_end;
    b.validate();
    return b;
}

BoundaryConfig BoundaryConfig::closed(double gamma, double delta, double T, BoundaryWeighting w) {
    BoundaryConfig b;
    b.gamma = gamma;
    b.delta = delta;
    b.horizon = HorizonKind::closed_end;
    b.T = T;
    b.weighting = w;
    b.validate();
    return b;
}

const char* to_string(DetectorKind k) {
    return k == DetectorKind::projection ? "projection" : "residual";
}

const char* to_string(BoundaryWeighting w) {
    return w == BoundaryWeighting::paper ? "paper" : "flat";
}

std::string SignalEvent::to_json() const {
    nlohmann::json j{{"signal", true}, {"k", k},          {"time", time},
                     {"stat", stat},   {"bound", bound},  {"kind", to_string(kind)}};
    return j.dump();
}

namespace {

nlohmann::json projection_to_json(const ProjectionVector& v) {
    nlohmann::json j;
    j["entries"] = v.entries;
    if (v.support) j["support"] = *v.support;
    if (v.sparsity_s) j["s"] = *v.sparsity_s;
    if (v.rate_rd) j["r_d"] = *v.rate_rd;
    return j;
}

ProjectionVector projection_from_json(const nlohmann::json& j) {
    ProjectionVector v;
    v.entries = j.at("entries").get<std::vector<double>>();
    if (j.contains("support")) v.support = j["support"].get<std::vector<std::size_t>>();
    if (j.contains("s")) v.sparsity_s = j["s"].get<double>();
    if (j.contains("r_d")) v.rate_rd = j["r_d"].get<double>();
    return v;
}

nlohmann::json boundary_to_json(const BoundaryConfig& b) {
    nlohmann::json j;
    j["gamma"] = b.gamma;
    j["delta"] = b.delta;
    if (b.horizon == HorizonKind::open_end) {
        j["horizon"] = "open-end";
    } else {
        j["horizon"] = b.T;
    }
    j["weighting"] = to_string(b.weighting);
    return j;
}

BoundaryConfig boundary_from_json(const nlohmann::json& j) {
    BoundaryConfig b;
    b.gamma = j.at("gamma").get<double>();
    b.delta = j.at("delta").get<double>();
    if (j.at("horizon").is_string()) {
        b.horizon = HorizonKind::open_end;
    } else {
        b.horizon = HorizonKind::closed_end;
        b.T = j.at("horizon").get<double>();
    }
    if (j.value("weighting", std::string("paper")) == std::string("flat")) {
        b.weighting = BoundaryWeighting::flat;
    }
    b.validate();
    return b;
}

}  // namespace

std::string MonitorState::to_json() const {
    nlohmann::json j;
    j["v_hat"] = projection_to_json(v_hat);
    j["sigma0_hat"] = sigma0_hat;
    j["train_sum"] = train_sum;
    j["m"] = m;
    j["k"] = k;
    j["mon_sum"] = mon_sum;
    j["c"] = c;
    j["signaled_at"] = signaled_at ? nlohmann::json(*signaled_at) : nlohmann::json(nullptr);
    j["boundary"] = boundary_to_json(boundary);
    j["kind"] = to_string(kind);
    return j.dump();
}

MonitorState MonitorState::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw_io("invalid monitor state JSON");
    MonitorState s;
    try {
        s.v_hat = projection_from_json(j.at("v_hat"));
        s.sigma0_hat = j.at("sigma0_hat").get<double>();
        s.train_sum = j.at("train_sum").get<double>();
        s.m = j.at("m").get<std::size_t>();
        s.k = j.at("k").get<long>();
        s.mon_sum = j.at("mon_sum").get<double>();
        s.c = j.at("c").get<double>();
        if (!j.at("signaled_at").is_null()) s.signaled_at = j["signaled_at"].get<long>();
        s.boundary = boundary_from_json(j.at("boundary"));
        s.kind = j.value("kind", std::string("projection")) == std::string("residual")
                     ? DetectorKind::residual
                     : DetectorKind::projection;
    } catch (const nlohmann::json::exception& e) {
        throw_io(std::string("monitor state JSON: ") + e.what());
    }
    return s;
}

}  // namespace projmon
