#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bhlab/model.hpp"

namespace bhlab {

// Boundary curves of the (N, t) plane. g1, g2, g3 are the inverses in t of
// the level functions below:
//
//   g1_level(t) = (1-beta) t^beta / ell(t)      (t / mu2(t) for beta = 1)
//   g2_level(t) = t^{1-beta} ell(t) / (1-beta)  (mu2(t)     for beta = 1)
//   g3_level(t) = sqrt(B / (v2 u2 (1 - G2(t))))
//
// R(t)/N, mu2(t)/N and the z12 scale N sqrt(v2 u2 (1-G2(t)) / B) are of
// order one exactly when t crosses g1(N), g2(N), g3(N) respectively.

inline double g1_level(const DerivedConstants& c, double t) {
    if (c.beta == 1.0) return ratio_R(c.life2, t);
    return (1.0 - c.beta) * std::pow(t, c.beta) / sv_eval(c.life2.ell, t);
}

inline double g2_level(const DerivedConstants& c, double t) {
    if (c.beta == 1.0) return mu2_partial(c.life2, t);
    return std::pow(t, 1.0 - c.beta) * sv_eval(c.life2.ell, t) / (1.0 - c.beta);
}

inline double g3_level(const DerivedConstants& c, double t) {
    return std::sqrt(c.B / (c.v[1] * c.u[1] * tail(c.life2, t)));
}

struct GBoundaries {
    double g1 = 0.0;
    double g2 = 0.0;
    double g3 = 0.0;
};

namespace detail {

// Invert an increasing level function: geometric expansion then bisection on
// a log scale. Levels growing past every double return infinity.
template <typename F>
double invert_level(F&& level, double t_lo, double N) {
    double lo = t_lo;
    double hi = 2.0 * t_lo + 1.0;
    while (level(hi) < N) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = std::sqrt(lo * hi);
        (level(mid) < N ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

// A log-power factor can make a level function dip before its power part
// takes over; bisection must start past that knee.
inline double level_knee(const LogPowerSV& lp, double growth_power) {
    if (lp.p <= 0.0 || growth_power <= 0.0) return 0.0;
    return std::exp(lp.p / growth_power);
}

} // namespace detail

inline GBoundaries g_thresholds(const DerivedConstants& c, double N) {
    if (!(N >= 1.0)) throw std::invalid_argument("population size below 1");
    GBoundaries g;
    const double b = c.beta;
    const double t0 = c.life2.t0;
    if (const auto* k = std::get_if<ConstantSV>(&c.life2.ell)) {
        if (b < 1.0) {
            g.g1 = std::pow(N * k->c / (1.0 - b), 1.0 / b);
            g.g2 = std::pow(N * (1.0 - b) / k->c, 1.0 / (1.0 - b));
        } else {
            g.g1 = detail::invert_level([&](double t) { return g1_level(c, t); }, t0, N);
            // mu2(t) = t0 + c ln(t/t0); overflows to infinity for large N
            g.g2 = t0 * std::exp((N - t0) / k->c);
        }
        g.g3 = std::pow(N * N * c.v[1] * c.u[1] * k->c / c.B, 1.0 / b);
        return g;
    }
    const auto& lp = std::get<LogPowerSV>(c.life2.ell);
    const double lo1 = std::fmax(t0, b < 1.0 ? detail::level_knee(lp, b) : 0.0);
    const double lo2 = std::fmax(
        t0, b < 1.0 && lp.p < 0.0 ? std::exp(-lp.p / (1.0 - b)) : 0.0);
    const double lo3 = std::fmax(t0, detail::level_knee(lp, b));
    g.g1 = detail::invert_level([&](double t) { return g1_level(c, t); }, lo1, N);
    g.g2 = detail::invert_level([&](double t) { return g2_level(c, t); }, lo2, N);
    g.g3 = detail::invert_level([&](double t) { return g3_level(c, t); }, lo3, N);
    return g;
}

// ---- stage and theorem classification ----

enum class Stage { Early, Intermediate, Final, Extinction };

enum class RegimeTheorem { T1, T2, T3, T4, T5, T6, Z12, OpenCase };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Early: return "Early";
        case Stage::Intermediate: return "Intermediate";
        case Stage::Final: return "Final";
        default: return "Extinction";
    }
}

inline const char* to_string(RegimeTheorem t) {
    switch (t) {
        case RegimeTheorem::T1: return "T1";
        case RegimeTheorem::T2: return "T2";
        case RegimeTheorem::T3: return "T3";
        case RegimeTheorem::T4: return "T4";
        case RegimeTheorem::T5: return "T5";
        case RegimeTheorem::T6: return "T6";
        case RegimeTheorem::Z12: return "Z12";
        default: return "OpenCase";
    }
}

// Finite-size surrogate for a limit: below lo reads as "-> 0", above hi as
// "-> infinity", in between as a finite positive limit.
struct RatioThresholds {
    double lo = 0.1;
    double hi = 10.0;
};

struct RegimeLabel {
    Stage stage = Stage::Early;
    RegimeTheorem theorem = RegimeTheorem::T1;
    bool type1_open = false; // limit of the type-2 count known, absence of type 1 unproved
    double r_over_N = 0.0;   // R(t) / N
    double mu2_over_N = 0.0; // mu2(t) / N
    double tail_mass = 0.0;  // N (1 - G2(t))
    double z12_r = 0.0;      // N sqrt(v2 u2 (1 - G2(t)) / B)
};

// Maps a finite (N, t) point to the evolutionary stage and the statement
// describing it. R(t)/N drives the stage; mu2(t)/N splits the early stage
// for beta <= 1/2; the z12 scale takes over near and past g3.
//
// Known gaps are reported rather than hidden: beta = 1/2 with the
// stage ratio finite, the whole final band below g3 at beta = 1, and the
// type-1 question for beta > 2/3 (type1_open on the T6 label there).
inline RegimeLabel classify_regime(const DerivedConstants& c, double N, double t,
                                   RatioThresholds th = {}) {
    if (!(th.lo < 1.0 && 1.0 < th.hi)) {
        throw std::invalid_argument("ratio thresholds must satisfy lo < 1 < hi");
    }
    if (!(N >= 1.0) || !(t >= 0.0)) {
        throw std::invalid_argument("classification needs N >= 1 and t >= 0");
    }
    RegimeLabel out;
    const double tl = c.tail2(t);
    out.r_over_N = c.R(t) / N;
    out.mu2_over_N = c.mu2(t) / N;
    out.tail_mass = N * tl;
    out.z12_r = N * std::sqrt(c.v[1] * c.u[1] * tl / c.B);

    enum Tri { Zero, Fin, Inf };
    const auto tri = [&](double x) { return x < th.lo ? Zero : (x > th.hi ? Inf : Fin); };
    const Tri rr = tri(out.r_over_N);
    const Tri rm = tri(out.mu2_over_N);
    const Tri x3 = tri(out.z12_r);

    if (x3 == Zero) {
        out.stage = Stage::Extinction;
        out.theorem = RegimeTheorem::Z12;
        return out;
    }
    if (x3 == Fin) {
        out.stage = Stage::Final;
        out.theorem = RegimeTheorem::Z12;
        return out;
    }

    const double b = c.beta;
    if (rr == Zero) {
        out.stage = Stage::Early;
        if (b > 0.5) {
            out.theorem = RegimeTheorem::T1;
        } else {
            out.theorem = rm == Zero   ? RegimeTheorem::T1
                          : rm == Fin ? RegimeTheorem::T2
                                      : RegimeTheorem::T3;
        }
    } else if (rr == Fin) {
        out.stage = Stage::Intermediate;
        if (b < 0.5) {
            out.theorem = RegimeTheorem::T4;
        } else if (b == 0.5) {
            out.theorem = rm == Inf ? RegimeTheorem::T4 : RegimeTheorem::OpenCase;
        } else {
            out.theorem = RegimeTheorem::T5;
        }
    } else {
        out.stage = Stage::Final;
        if (b == 1.0) {
            out.theorem = RegimeTheorem::OpenCase;
        } else {
            out.theorem = RegimeTheorem::T6;
            const auto* lp = std::get_if<LogPowerSV>(&c.life2.ell);
            const bool ell_diverges = lp && lp->p > 0.0;
            out.type1_open = b > 2.0 / 3.0 || (b == 2.0 / 3.0 && !ell_diverges);
        }
    }
    return out;
}

} // namespace bhlab
