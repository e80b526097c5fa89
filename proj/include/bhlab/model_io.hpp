#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bhlab/errors.hpp"
#include "bhlab/harness.hpp"
#include "bhlab/model.hpp"

namespace bhlab {

// ---- files and fingerprints ----

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("short write to " + path);
}

// FNV-1a over the canonical (key-sorted) dump, as 16 hex digits
inline std::string fingerprint(const nlohmann::json& j) {
    const std::string bytes = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- model schema ----

inline nlohmann::json offspring_to_json(const OffspringLaw& law) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Outcome& o : law.outcomes()) arr.push_back({{"k1", o.k1}, {"k2", o.k2}, {"p", o.p}});
    return arr;
}

inline nlohmann::json sv_to_json(const SlowlyVarying& ell) {
    if (const auto* k = std::get_if<ConstantSV>(&ell))
        return {{"family", "constant"}, {"c", k->c}};
    const auto& lp = std::get<LogPowerSV>(ell);
    return {{"family", "log_power"}, {"c", lp.c}, {"p", lp.p}};
}

inline nlohmann::json model_to_json(const BranchingModel& m) {
    nlohmann::json j;
    j["offspring1"] = offspring_to_json(m.offspring1);
    j["offspring2"] = offspring_to_json(m.offspring2);
    if (const auto* e = std::get_if<Exponential>(&m.life1))
        j["life1"] = {{"family", "exponential"}, {"rate", e->rate}};
    else {
        const auto& u = std::get<Uniform>(m.life1);
        j["life1"] = {{"family", "uniform"}, {"a", u.a}, {"b", u.b}};
    }
    j["life2"] = {{"beta", m.life2.beta}, {"t0", m.life2.t0}, {"ell", sv_to_json(m.life2.ell)}};
    return j;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return *it;
}

inline OffspringLaw offspring_from_json(const nlohmann::json& arr) {
    if (!arr.is_array() || arr.empty())
        throw std::invalid_argument("offspring law must be a nonempty array");
    std::vector<Outcome> outs;
    outs.reserve(arr.size());
    for (const auto& o : arr)
        outs.push_back({field(o, "k1").get<int>(), field(o, "k2").get<int>(),
                        field(o, "p").get<double>()});
    return OffspringLaw(std::move(outs));
}

inline SlowlyVarying sv_from_json(const nlohmann::json& j) {
    const std::string family = field(j, "family").get<std::string>();
    if (family == "constant") return ConstantSV{field(j, "c").get<double>()};
    if (family == "log_power")
        return LogPowerSV{field(j, "c").get<double>(), field(j, "p").get<double>()};
    throw std::invalid_argument("unknown slowly varying family: " + family);
}

inline LightTail light_from_json(const nlohmann::json& j) {
    const std::string family = field(j, "family").get<std::string>();
    if (family == "exponential") return Exponential{field(j, "rate").get<double>()};
    if (family == "uniform")
        return Uniform{field(j, "a").get<double>(), field(j, "b").get<double>()};
    throw std::invalid_argument("unknown type-1 lifetime family: " + family);
}

} // namespace detail

inline BranchingModel model_from_json(const nlohmann::json& j) {
    try {
        const auto& l2 = detail::field(j, "life2");
        return BranchingModel{detail::offspring_from_json(detail::field(j, "offspring1")),
                              detail::offspring_from_json(detail::field(j, "offspring2")),
                              detail::light_from_json(detail::field(j, "life1")),
                              ParetoTail{detail::field(l2, "beta").get<double>(),
                                         detail::field(l2, "t0").get<double>(),
                                         detail::sv_from_json(detail::field(l2, "ell"))}};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model schema: ") + e.what());
    }
}

inline BranchingModel load_model(const std::string& path) {
    return model_from_json(read_json_file(path));
}

// ---- experiment schema ----

struct LoadedExperiment {
    BranchingModel model;
    ExperimentConfig config;
};

namespace detail {

inline std::vector<SchedulePoint> schedule_from_json(const nlohmann::json& j,
                                                     const DerivedConstants& c) {
    std::vector<SchedulePoint> sched;
    if (j.is_array()) {
        for (const auto& p : j)
            sched.push_back({field(p, "N").get<double>(), field(p, "t").get<double>()});
    } else if (j.is_object()) {
        const std::string target = field(j, "target").get<std::string>();
        const double value = field(j, "value").get<double>();
        for (const auto& n : field(j, "N")) {
            const double N = n.get<double>();
            double t = 0.0;
            if (target == "mu2_over_N") t = time_at_mu2_ratio(c, N, value);
            else if (target == "R_over_N") t = time_at_R_ratio(c, N, value);
            else if (target == "z12_r") t = time_at_z12_rate(c, N, value);
            else throw std::invalid_argument("unknown schedule target: " + target);
            if (!std::isfinite(t))
                throw std::invalid_argument("schedule target unreachable at N = " + std::to_string(N));
            sched.push_back({N, t});
        }
    } else {
        throw std::invalid_argument("schedule must be an array or a curve object");
    }
    if (sched.empty()) throw std::invalid_argument("empty schedule");
    for (const SchedulePoint& p : sched)
        if (!(p.N >= 1.0) || !(p.t >= 0.0))
            throw std::invalid_argument("schedule points need N >= 1 and t >= 0");
    return sched;
}

} // namespace detail

// Reads an experiment config; the model path inside it is resolved relative
// to the config file. The fingerprint covers both documents, so a report can
// be traced to the exact inputs that produced it.
inline LoadedExperiment load_experiment(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    try {
        const std::string model_ref = detail::field(j, "model").get<std::string>();
        std::filesystem::path mp(model_ref);
        if (mp.is_relative()) mp = std::filesystem::path(path).parent_path() / mp;
        const nlohmann::json mj = read_json_file(mp.string());
        BranchingModel model = model_from_json(mj);
        const DerivedConstants c = derive_constants(model);

        ExperimentConfig cfg;
        cfg.theorem = theorem_from_string(detail::field(j, "theorem").get<std::string>());
        if (j.contains("beta") && j["beta"].get<double>() != model.life2.beta)
            throw std::invalid_argument("config beta disagrees with the model");
        cfg.schedule = detail::schedule_from_json(detail::field(j, "schedule"), c);
        for (const auto& p : detail::field(j, "points")) {
            LimitScenario sc;
            sc.lambda1 = p.value("lambda1", 0.0);
            sc.lambda2 = p.value("lambda2", 0.0);
            sc.s = p.value("s", 1.0);
            cfg.points.push_back(sc);
        }
        if (cfg.points.empty()) throw std::invalid_argument("no scenario points");
        cfg.replicates = detail::field(j, "replicates").get<std::uint64_t>();
        cfg.seed = detail::field(j, "seed").get<std::uint64_t>();
        if (j.contains("tolerance")) {
            cfg.tol.z = j["tolerance"].value("z", cfg.tol.z);
            cfg.tol.bias = j["tolerance"].value("bias", cfg.tol.bias);
        }
        cfg.event_budget = j.value("event_budget", cfg.event_budget);
        cfg.psi_gamma = j.value("psi_gamma", cfg.psi_gamma);
        if (j.contains("ofun")) {
            cfg.ofun_h = j["ofun"].value("h", cfg.ofun_h);
            cfg.ofun_horizon = j["ofun"].value("horizon", cfg.ofun_horizon);
        }
        if (j.contains("thresholds")) {
            cfg.thresholds.lo = j["thresholds"].value("lo", cfg.thresholds.lo);
            cfg.thresholds.hi = j["thresholds"].value("hi", cfg.thresholds.hi);
        }
        nlohmann::json both;
        both["config"] = j;
        both["model"] = mj;
        cfg.hash = fingerprint(both);
        return LoadedExperiment{std::move(model), std::move(cfg)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("experiment schema: ") + e.what());
    }
}

// ---- report serialization ----

inline nlohmann::json report_to_json(const Report& rep) {
    nlohmann::json j;
    j["theorem"] = to_string(rep.theorem);
    j["beta"] = rep.beta;
    j["config_hash"] = rep.config_hash;
    j["pass"] = rep.pass;
    j["trend_ok"] = rep.trend_ok;
    j["runtime_seconds"] = rep.runtime_seconds;
    j["warnings"] = rep.warnings;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : rep.rows)
        j["rows"].push_back({{"N", r.N},
                             {"t", r.t},
                             {"lambda1", r.lambda1},
                             {"lambda2", r.lambda2},
                             {"s", r.s},
                             {"r", r.r},
                             {"a1", r.a1},
                             {"a2", r.a2},
                             {"empirical", r.empirical},
                             {"stderr", r.se},
                             {"predicted", r.predicted},
                             {"gap", r.gap},
                             {"pass", r.pass}});
    j["points"] = nlohmann::json::array();
    for (const PointDiagnostics& p : rep.points) {
        nlohmann::json d{{"N", p.N},
                         {"t", p.t},
                         {"trunc_fraction", p.trunc_fraction},
                         {"stage", to_string(p.stage)},
                         {"mapped", to_string(p.mapped)}};
        if (p.type1_fraction >= 0.0) {
            d["type1_fraction"] = p.type1_fraction;
            d["type1_bound"] = p.type1_bound;
        }
        j["points"].push_back(d);
    }
    return j;
}

inline std::string report_to_csv(const Report& rep) {
    std::string out = "theorem,beta,N,t,lambda1,lambda2,empirical,stderr,predicted,gap,pass\n";
    char line[512];
    for (const ReportRow& r : rep.rows) {
        std::snprintf(line, sizeof line,
                      "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      to_string(rep.theorem), rep.beta, r.N, r.t, r.lambda1, r.lambda2, r.empirical,
                      r.se, r.predicted, r.gap, r.pass ? 1 : 0);
        out += line;
    }
    return out;
}

} // namespace bhlab
