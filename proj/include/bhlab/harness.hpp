#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bhlab/errors.hpp"
#include "bhlab/limits.hpp"
#include "bhlab/regimes.hpp"
#include "bhlab/sim.hpp"

namespace bhlab {

// ---- empirical Laplace transform ----

struct LaplaceEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t used = 0; // non-truncated samples
};

// Mean and standard error of exp(-l1 a1 z1 - l2 a2 z2) over the usable
// samples. Terms with a zero count contribute exactly 1 even when the
// matching rate is infinite (pgf points with s = 0).
inline LaplaceEstimate empirical_laplace(const std::vector<PopulationSample>& samples, double a1,
                                         double a2, double l1, double l2) {
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw std::invalid_argument("scalings must be positive");
    if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw std::invalid_argument("rates must be nonnegative");
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t n = 0;
    for (const PopulationSample& p : samples) {
        if (p.truncated) continue;
        const double e1 = p.z1 > 0 ? l1 * a1 * static_cast<double>(p.z1) : 0.0;
        const double e2 = p.z2 > 0 ? l2 * a2 * static_cast<double>(p.z2) : 0.0;
        const double x = std::exp(-(e1 + e2));
        sum += x;
        sumsq += x * x;
        ++n;
    }
    if (n == 0) throw EmptyRun("no usable samples");
    const double mean = sum / static_cast<double>(n);
    const double var = std::fmax(0.0, sumsq / static_cast<double>(n) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

// ---- per-theorem scalings ----

// Normalizations applied to the raw counts before the Laplace transform, and
// the finite-size stand-in for the statement's rate constant r.
struct PointScaling {
    double a1 = 1.0;
    double a2 = 1.0;
    double r = 1.0;
};

inline PointScaling theorem_scaling(TheoremId id, const DerivedConstants& c, double N, double t,
                                    double psi_gamma) {
    PointScaling ps;
    switch (id) {
        case TheoremId::T1:
            ps.a1 = c.mu2(t) / N;
            ps.a2 = 1.0 / N;
            break;
        case TheoremId::C1:
        case TheoremId::T3:
            ps.a2 = 1.0 / N;
            break;
        case TheoremId::T2:
            ps.a2 = 1.0 / N;
            ps.r = N / c.mu2(t);
            break;
        case TheoremId::T4:
            ps.a2 = 1.0 / c.R(t);
            ps.r = N / c.R(t);
            break;
        case TheoremId::T5:
            ps.a1 = c.mu2(t) / (c.mu1 * c.R(t));
            ps.a2 = 1.0 / c.R(t);
            ps.r = N / c.R(t);
            break;
        case TheoremId::T6: {
            if (!(psi_gamma > 0.0 && psi_gamma < c.beta))
                throw std::invalid_argument("psi exponent must lie in (0, beta)");
            const double psi = std::pow(t, -psi_gamma);
            ps.a2 = c.u[1] * psi;
            ps.r = N * std::sqrt(c.v[1] * c.u[1] * psi * c.tail2(t) / c.B);
            break;
        }
        case TheoremId::Z12:
            ps.r = N * std::sqrt(c.v[1] * c.u[1] * c.tail2(t) / c.B);
            break;
    }
    return ps;
}

// ---- schedule helpers ----

// Observation times hitting a prescribed ratio at population size N. All
// three reuse the boundary-curve inversion; infinity means the ratio is
// unreachable in double range.

inline double time_at_mu2_ratio(const DerivedConstants& c, double N, double rho) {
    if (!(N >= 1.0) || !(rho > 0.0)) throw std::invalid_argument("need N >= 1 and rho > 0");
    return detail::invert_level([&](double t) { return c.mu2(t); }, 1e-9, rho * N);
}

inline double time_at_R_ratio(const DerivedConstants& c, double N, double rho) {
    if (!(N >= 1.0) || !(rho > 0.0)) throw std::invalid_argument("need N >= 1 and rho > 0");
    if (!(rho * N > 1.0)) throw std::invalid_argument("R(t) never drops below 1");
    return detail::invert_level([&](double t) { return c.R(t); }, c.life2.t0, rho * N);
}

inline double time_at_z12_rate(const DerivedConstants& c, double N, double r) {
    if (!(N >= 1.0) || !(r > 0.0)) throw std::invalid_argument("need N >= 1 and r > 0");
    // z12 rate r at time t means g3_level(t) = N / r
    return detail::invert_level([&](double t) { return g3_level(c, t); }, c.life2.t0, N / r);
}

// ---- experiment configuration ----

struct SchedulePoint {
    double N = 1.0;
    double t = 0.0;
};

struct TolerancePolicy {
    double z = 4.0;     // stderr multiple
    double bias = 0.03; // absolute floor for deterministic error
};

struct ExperimentConfig {
    TheoremId theorem = TheoremId::T1;
    std::vector<SchedulePoint> schedule; // ordered toward the limit
    std::vector<LimitScenario> points;   // transform arguments; r is filled per schedule point
    std::uint64_t replicates = 10000;
    std::uint64_t seed = 1;
    TolerancePolicy tol;
    std::uint64_t event_budget = 10'000'000;
    double psi_gamma = -1.0;     // T6 normalization psi(t) = t^{-gamma}; negative means beta/2
    double ofun_h = 0.25;        // T2: lattice step and one-sided horizon for O(s)
    double ofun_horizon = 512.0;
    RatioThresholds thresholds;
    std::string hash; // config fingerprint, filled by the loader
};

struct ReportRow {
    double N = 0.0;
    double t = 0.0;
    double lambda1 = 0.0; // Laplace rates actually applied (for pgf points, -ln s)
    double lambda2 = 0.0;
    double s = 1.0;
    double r = 1.0;
    double a1 = 1.0;
    double a2 = 1.0;
    double empirical = 0.0;
    double se = 0.0;
    double predicted = 0.0;
    double gap = 0.0;
    bool pass = false;
};

struct PointDiagnostics {
    double N = 0.0;
    double t = 0.0;
    double trunc_fraction = 0.0;
    Stage stage = Stage::Early;
    RegimeTheorem mapped = RegimeTheorem::T1;
    double type1_fraction = -1.0; // P(Z1 > 0) estimate where the limit forgets type 1
    double type1_bound = -1.0;
};

struct Report {
    TheoremId theorem = TheoremId::T1;
    double beta = 0.0;
    std::string config_hash;
    std::vector<ReportRow> rows; // schedule-major, scenario-minor
    std::vector<PointDiagnostics> points;
    std::vector<std::string> warnings;
    double runtime_seconds = 0.0;
    bool trend_ok = true;
    bool pass = false;
};

namespace detail {

inline bool regime_matches(TheoremId id, const RegimeLabel& label) {
    switch (id) {
        case TheoremId::T1: return label.theorem == RegimeTheorem::T1;
        case TheoremId::C1: return label.stage == Stage::Early;
        case TheoremId::T2: return label.theorem == RegimeTheorem::T2;
        case TheoremId::T3: return label.theorem == RegimeTheorem::T3;
        case TheoremId::T4: return label.theorem == RegimeTheorem::T4;
        case TheoremId::T5: return label.theorem == RegimeTheorem::T5;
        case TheoremId::T6: return label.theorem == RegimeTheorem::T6;
        case TheoremId::Z12: return label.theorem == RegimeTheorem::Z12;
    }
    return false;
}

// whether the statement sends the rescaled type-1 count to zero
inline bool forgets_type1(TheoremId id) {
    return id == TheoremId::C1 || id == TheoremId::T3 || id == TheoremId::T4 ||
           id == TheoremId::T6;
}

} // namespace detail

// ---- experiment driver ----

// Runs the schedule, compares empirical transforms against the predicted
// limits, and applies the acceptance policy: every scenario must pass at the
// final schedule point within max(z * se, bias), gaps may not zig-zag more
// than once along the schedule, and truncation above 1% voids a point.
inline Report run_experiment(const BranchingModel& model, const ExperimentConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.schedule.empty()) throw std::invalid_argument("empty schedule");
    if (cfg.points.empty()) throw std::invalid_argument("no scenario points");
    const DerivedConstants c = derive_constants(model);
    const QuadraticForm q(model);
    const double psi_gamma = cfg.psi_gamma < 0.0 ? 0.5 * c.beta : cfg.psi_gamma;

    for (const LimitScenario& sc : cfg.points) {
        if (!(sc.lambda1 >= 0.0) || !(sc.lambda2 >= 0.0) || !(sc.s >= 0.0 && sc.s <= 1.0))
            throw std::invalid_argument("scenario outside its domain");
        if (cfg.theorem == TheoremId::Z12 && (sc.lambda1 != 0.0 || sc.lambda2 != 0.0))
            throw std::invalid_argument("Z12 scenarios are pgf points; use s");
        if (cfg.theorem == TheoremId::T2 && sc.lambda1 != 0.0)
            throw std::invalid_argument("T2 tracks type 1 through s, not lambda1");
    }

    // limit ingredients sized to cover every scenario
    ThetaSolution theta;
    HSolution hsol;
    std::map<double, OFunctional> ofun;
    LimitInputs inputs;
    if (cfg.theorem == TheoremId::T4) {
        double need = 1.0;
        for (const LimitScenario& sc : cfg.points)
            need = std::fmax(need, std::pow(sc.lambda2, 1.0 / c.beta));
        ThetaOptions opt;
        opt.Lambda = need * 1.0000001;
        theta = solve_theta(c, q, opt);
        inputs.theta = &theta;
    } else if (cfg.theorem == TheoremId::T5) {
        const double p = 1.0 / (2.0 * c.beta - 1.0);
        HOptions opt;
        for (const LimitScenario& sc : cfg.points) {
            if (sc.lambda1 == 0.0) continue;
            opt.Theta = std::fmax(opt.Theta, std::pow(sc.lambda1, p) * 1.0000001);
            opt.Lambda =
                std::fmax(opt.Lambda, sc.lambda2 * std::pow(sc.lambda1, -c.beta * p) * 1.0000001);
        }
        hsol = solve_H(c, q, opt);
        inputs.H = &hsol;
    } else if (cfg.theorem == TheoremId::T2) {
        for (const LimitScenario& sc : cfg.points)
            if (!ofun.count(sc.s)) ofun.emplace(sc.s, o_functional(model, cfg.ofun_h, sc.s, cfg.ofun_horizon));
        if (!ofun.count(1.0)) ofun.emplace(1.0, o_functional(model, cfg.ofun_h, 1.0, cfg.ofun_horizon));
    }

    Report rep;
    rep.theorem = cfg.theorem;
    rep.beta = c.beta;
    rep.config_hash = cfg.hash;

    const auto warn = [&](const std::string& msg) { rep.warnings.push_back(msg); };

    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const SchedulePoint& sp = cfg.schedule[i];
        const RegimeLabel label = classify_regime(c, sp.N, sp.t, cfg.thresholds);
        if (label.stage == Stage::Extinction && cfg.theorem != TheoremId::Z12) {
            std::ostringstream os;
            os << "schedule point (N=" << sp.N << ", t=" << sp.t
               << ") is past extinction; no nondegenerate limit applies";
            throw RegimeMismatch(os.str());
        }
        if (!detail::regime_matches(cfg.theorem, label)) {
            std::ostringstream os;
            os << "point (N=" << sp.N << ", t=" << sp.t << ") classifies as " << to_string(label.stage)
               << "/" << to_string(label.theorem) << ", not " << to_string(cfg.theorem);
            warn(os.str());
        }

        SimConfig sim;
        sim.N = std::llround(sp.N);
        sim.t = sp.t;
        sim.replicates = cfg.replicates;
        sim.seed = cfg.seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL;
        sim.event_budget = cfg.event_budget;
        const BatchResult batch = simulate_batch(model, sim);

        const PointScaling ps = theorem_scaling(cfg.theorem, c, sp.N, sp.t, psi_gamma);

        // degenerate-argument identity: both sides must give exactly 1
        const LaplaceEstimate at_zero = empirical_laplace(batch.samples, ps.a1, ps.a2, 0.0, 0.0);
        LimitScenario zero;
        zero.r = ps.r;
        LimitInputs zero_in = inputs;
        if (cfg.theorem == TheoremId::T2) zero_in.O = &ofun.at(1.0);
        if (at_zero.value != 1.0 || at_zero.se != 0.0 ||
            predict_limit(cfg.theorem, c, zero, zero_in) != 1.0)
            throw Error("transform identity at zero rates violated");

        PointDiagnostics diag;
        diag.N = sp.N;
        diag.t = sp.t;
        diag.stage = label.stage;
        diag.mapped = label.theorem;
        diag.trunc_fraction =
            static_cast<double>(batch.truncated) / static_cast<double>(cfg.replicates);
        bool point_valid = true;
        if (diag.trunc_fraction > 0.01) {
            std::ostringstream os;
            os << "truncation fraction " << diag.trunc_fraction << " at (N=" << sp.N
               << ", t=" << sp.t << ") exceeds 1%; point voided";
            warn(os.str());
            point_valid = false;
        }
        if (detail::forgets_type1(cfg.theorem)) {
            std::size_t alive = 0;
            for (const PopulationSample& p : batch.samples)
                if (!p.truncated && p.z1 > 0) ++alive;
            diag.type1_fraction = static_cast<double>(alive) / static_cast<double>(at_zero.used);
            // vanishing rate plus a Poisson noise floor for the estimate itself
            diag.type1_bound = std::fmin(
                1.0, 5.0 * sp.N / c.mu2(sp.t) + 3.0 / static_cast<double>(at_zero.used));
            if (diag.type1_fraction > diag.type1_bound) {
                std::ostringstream os;
                os << "type-1 survival fraction " << diag.type1_fraction << " at (N=" << sp.N
                   << ", t=" << sp.t << ") above its vanishing bound " << diag.type1_bound;
                warn(os.str());
            }
        }
        rep.points.push_back(diag);

        for (const LimitScenario& sc : cfg.points) {
            ReportRow row;
            row.N = sp.N;
            row.t = sp.t;
            row.s = sc.s;
            row.r = ps.r;
            row.a1 = ps.a1;
            row.a2 = ps.a2;
            row.lambda1 = cfg.theorem == TheoremId::T2 ? -std::log(sc.s) : sc.lambda1;
            row.lambda2 = cfg.theorem == TheoremId::Z12 ? -std::log(sc.s) : sc.lambda2;
            const LaplaceEstimate est =
                empirical_laplace(batch.samples, ps.a1, ps.a2, row.lambda1, row.lambda2);
            row.empirical = est.value;
            row.se = est.se;
            LimitScenario eval = sc;
            eval.r = ps.r;
            LimitInputs in = inputs;
            if (cfg.theorem == TheoremId::T2) in.O = &ofun.at(sc.s);
            row.predicted = predict_limit(cfg.theorem, c, eval, in);
            row.gap = std::fabs(row.empirical - row.predicted);
            row.pass =
                point_valid && row.gap <= std::fmax(cfg.tol.z * row.se, cfg.tol.bias);
            rep.rows.push_back(row);
        }
    }

    // the gap trajectory of each scenario may invert at most once: sampling
    // noise can break strict decay, a persistent zig-zag means a wrong limit
    const std::size_t npts = cfg.points.size();
    for (std::size_t j = 0; j < npts; ++j) {
        std::size_t inversions = 0;
        for (std::size_t i = 0; i + 1 < cfg.schedule.size(); ++i) {
            if (rep.rows[(i + 1) * npts + j].gap > rep.rows[i * npts + j].gap) ++inversions;
        }
        if (inversions > 1) {
            rep.trend_ok = false;
            std::ostringstream os;
            os << "gap trend for scenario " << j << " inverts " << inversions << " times";
            warn(os.str());
        }
    }

    bool final_ok = true;
    for (std::size_t j = 0; j < npts; ++j)
        final_ok = final_ok && rep.rows[(cfg.schedule.size() - 1) * npts + j].pass;
    rep.pass = rep.trend_ok && final_ok;
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

} // namespace bhlab
