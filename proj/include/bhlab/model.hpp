#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bhlab/errors.hpp"
#include "bhlab/lifetime.hpp"
#include "bhlab/linalg.hpp"
#include "bhlab/offspring.hpp"

namespace bhlab {

// Two-type age-dependent branching process: type 1 has a light-tailed
// lifetime, type 2 a regularly varying tail with index beta in (0, 1].
struct BranchingModel {
    OffspringLaw offspring1;
    OffspringLaw offspring2;
    LightTail life1;
    ParetoTail life2;
};

inline Mat2 mean_offspring_matrix(const BranchingModel& model) {
    const Vec2 m1 = model.offspring1.mean();
    const Vec2 m2 = model.offspring2.mean();
    return {m1[0], m1[1], m2[0], m2[1]};
}

inline double perron_root(const Mat2& M) {
    const double tr = M(0, 0) + M(1, 1);
    const double disc = (M(0, 0) - M(1, 1)) * (M(0, 0) - M(1, 1)) + 4.0 * M(0, 1) * M(1, 0);
    return 0.5 * (tr + std::sqrt(std::fmax(disc, 0.0)));
}

// Left/right eigenvectors of a critical mean matrix, normalized so that
// v 1 = 1 and v u = 1 with u, v > 0.
struct PerronPair {
    Vec2 u;
    Vec2 v;
};

inline PerronPair perron_eigenvectors(const Mat2& M, double tol = 1e-9) {
    const double rho = perron_root(M);
    if (std::fabs(rho - 1.0) > tol) {
        std::ostringstream os;
        os << "mean matrix is not critical: perron root " << rho;
        throw NonCriticalMatrix(os.str());
    }
    Vec2 u{M(0, 1), 1.0 - M(0, 0)};
    Vec2 v{M(1, 0), 1.0 - M(0, 0)};
    if (u[0] <= 0.0 || u[1] <= 0.0 || v[0] <= 0.0 || v[1] <= 0.0) {
        throw NonCriticalMatrix("critical mean matrix lacks strictly positive eigenvectors");
    }
    v = v / (v[0] + v[1]);
    u = u / dot(v, u);
    return {u, v};
}

// B = (1/2) sum_{i,j,k} v_i b^i_{jk} u_j u_k with b^i_{jk} the second
// derivatives of the offspring pgfs at 1.
inline double constant_B(const BranchingModel& model, const PerronPair& eig) {
    double B = 0.0;
    const OffspringLaw* laws[2] = {&model.offspring1, &model.offspring2};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                B += eig.v[i] * laws[i]->second_factorial(j, k) * eig.u[j] * eig.u[k];
    return 0.5 * B;
}

inline double gamma_beta(double beta) {
    if (!(beta > 0.0) || beta > 1.0) {
        std::ostringstream os;
        os << "tail index " << beta << " outside (0, 1]";
        throw BetaOutOfRange(os.str());
    }
    if (beta == 1.0) return 1.0;
    constexpr double pi = 3.141592653589793238462643383279502884;
    return std::sin(pi * beta) / (pi * beta * (1.0 - beta));
}

// Renewal-limit matrix D. With mu2 = mu2(inf):
//   mu2 = inf:   D = u^T v / (v2 u2)
//   mu2 < inf:   D = mu2 u^T v / (v1 mu1 u1 + v2 mu2 u2)
// written out through the mean matrix below.
inline Mat2 matrix_D_from(const Mat2& M, double mu1, double mu2_inf) {
    const double m11 = M(0, 0), m12 = M(0, 1), m21 = M(1, 0), m22 = M(1, 1);
    if (std::isfinite(mu2_inf)) {
        const double scale = mu2_inf / ((1.0 - m22) * mu1 + (1.0 - m11) * mu2_inf);
        return {(1.0 - m22) * scale, m12 * scale, m21 * scale, (1.0 - m11) * scale};
    }
    return {(1.0 - m22) / (1.0 - m11), m12 / (1.0 - m11), m21 / (1.0 - m11), 1.0};
}

inline Mat2 matrix_D(const BranchingModel& model) {
    return matrix_D_from(mean_offspring_matrix(model), mu_total(model.life1), mu2_total(model.life2));
}

// Everything downstream needs these together; computed once per model.
struct DerivedConstants {
    Mat2 M;
    Vec2 u;
    Vec2 v;
    double B = 0.0;
    Mat2 D;
    double beta = 0.0;
    double gamma = 0.0; // gamma_beta
    double mu1 = 0.0;
    ParetoTail life2;

    double tail2(double t) const { return bhlab::tail(life2, t); }
    double mu2(double t) const { return mu2_partial(life2, t); }
    double R(double t) const { return ratio_R(life2, t); }
};

inline DerivedConstants derive_constants(const BranchingModel& model) {
    DerivedConstants c;
    c.M = mean_offspring_matrix(model);
    const PerronPair eig = perron_eigenvectors(c.M);
    c.u = eig.u;
    c.v = eig.v;
    c.B = constant_B(model, eig);
    c.D = matrix_D(model);
    c.beta = model.life2.beta;
    c.gamma = gamma_beta(c.beta);
    c.mu1 = mu_total(model.life1);
    c.life2 = model.life2;
    return c;
}

// ---- validation ----

struct Condition {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<Condition> conditions;

    bool pass() const {
        for (const Condition& c : conditions)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline void check_offspring_probs(const OffspringLaw& law, const char* name,
                                  std::vector<Condition>& out) {
    const double err = std::fabs(law.total_probability() - 1.0);
    out.push_back({name, err <= 1e-12, err, "|sum p - 1|"});
}

// The heavy tail must be a genuine tail: ell(t) t^{-beta} nonincreasing and
// <= 1 from t0 on. Scanned on a geometric grid; analytic families only drift
// out of monotonicity when the log-power exponent is large and positive.
inline Condition check_tail_monotone(const ParetoTail& p) {
    double prev = tail(p, p.t0);
    bool ok = prev <= 1.0 + 1e-12;
    double worst = prev;
    for (double t = p.t0; t < p.t0 * 1e9 && ok; t *= 1.05) {
        const double cur = tail(p, t * 1.05);
        if (cur > prev * (1.0 + 1e-12)) ok = false;
        worst = cur;
        prev = cur;
    }
    return {"Tail2Monotone", ok, worst, "1-G2 nonincreasing and <= 1 past t0"};
}

// Density-bound check: sup over a log grid of
// [G2(t+d) - G2(t)] / (d ell(t) t^{-beta-1}) should stay bounded.
inline Condition check_density_bound(const ParetoTail& p) {
    double worst = 0.0;
    for (double t = 4.0 * p.t0; t < p.t0 * 1e8; t *= 1.6) {
        for (double d : {0.1 * t, 0.01 * t}) {
            const double inc = tail(p, t) - tail(p, t + d);
            const double bound = d * sv_eval(p.ell, t) * std::pow(t, -p.beta - 1.0);
            if (bound > 0.0) worst = std::fmax(worst, inc / bound);
        }
    }
    return {"DensityBound", worst <= 10.0, worst, "increment / (d ell(t) t^{-beta-1})"};
}

} // namespace detail

// Reports every model-level condition instead of throwing, so a caller can
// display all failures at once.
inline ValidationReport validate_model(const BranchingModel& model) {
    ValidationReport rep;
    detail::check_offspring_probs(model.offspring1, "OffspringProbs1", rep.conditions);
    detail::check_offspring_probs(model.offspring2, "OffspringProbs2", rep.conditions);

    const Mat2 M = mean_offspring_matrix(model);
    const double rho = perron_root(M);
    rep.conditions.push_back({"PerronRootOne", std::fabs(rho - 1.0) <= 1e-9, rho, "perron root"});

    const Mat2 M2 = M * M;
    bool pos = true;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) pos = pos && (M(i, j) + M2(i, j) > 0.0);
    rep.conditions.push_back({"Indecomposable", pos, pos ? 1.0 : 0.0, "M + M^2 entrywise positive"});

    const double beta = model.life2.beta;
    rep.conditions.push_back({"TailIndexRange", beta > 0.0 && beta <= 1.0, beta, "beta in (0,1]"});

    bool Bpos = false;
    double B = 0.0;
    if (std::fabs(rho - 1.0) <= 1e-9 && pos) {
        try {
            B = constant_B(model, perron_eigenvectors(M));
            Bpos = B > 0.0;
        } catch (const NonCriticalMatrix&) {
            Bpos = false;
        }
    }
    rep.conditions.push_back({"PositiveB", Bpos, B, "B > 0 (quadratic limit laws degenerate at 0)"});

    rep.conditions.push_back(detail::check_tail_monotone(model.life2));

    if (beta <= 0.5) {
        rep.conditions.push_back(detail::check_density_bound(model.life2));
    } else {
        rep.conditions.push_back({"DensityBound", true, 0.0, "not required for beta > 1/2"});
    }
    return rep;
}

} // namespace bhlab
