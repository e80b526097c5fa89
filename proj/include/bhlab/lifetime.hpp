#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include "bhlab/errors.hpp"
#include "bhlab/quad.hpp"

namespace bhlab {

// ---- slowly varying factors for the heavy tail ----

struct ConstantSV {
    double c = 1.0;
};

// ell(t) = c * (ln(e + t))^p
struct LogPowerSV {
    double c = 1.0;
    double p = 0.0;
};

using SlowlyVarying = std::variant<ConstantSV, LogPowerSV>;

inline double sv_eval(const SlowlyVarying& ell, double t) {
    if (const auto* k = std::get_if<ConstantSV>(&ell)) return k->c;
    const auto& lp = std::get<LogPowerSV>(ell);
    return lp.c * std::pow(std::log(std::exp(1.0) + t), lp.p);
}

// ---- light-tailed laws for type 1 ----

struct Exponential {
    double rate = 1.0;
};

struct Uniform {
    double a = 0.0;
    double b = 1.0;
};

using LightTail = std::variant<Exponential, Uniform>;

// ---- heavy tail for type 2: 1 - G(t) = ell(t) t^{-beta} for t >= t0 ----
//
// Below t0 the tail is identically 1 (so G may jump at t0 when
// ell(t0) t0^{-beta} < 1; there is never an atom at 0).

struct ParetoTail {
    double beta = 0.5;
    double t0 = 1.0;
    SlowlyVarying ell = ConstantSV{1.0};
};

// ---- cdf / tail / quantile ----

inline double tail(const Exponential& e, double t) { return t <= 0.0 ? 1.0 : std::exp(-e.rate * t); }

inline double tail(const Uniform& u, double t) {
    if (t <= u.a) return 1.0;
    if (t >= u.b) return 0.0;
    return (u.b - t) / (u.b - u.a);
}

inline double tail(const ParetoTail& p, double t) {
    if (t < p.t0) return 1.0;
    const double v = sv_eval(p.ell, t) * std::pow(t, -p.beta);
    return v < 1.0 ? (v > 0.0 ? v : 0.0) : 1.0;
}

inline double tail(const LightTail& l, double t) {
    return std::visit([&](const auto& x) { return tail(x, t); }, l);
}

inline double cdf(const Exponential& e, double t) { return 1.0 - tail(e, t); }
inline double cdf(const Uniform& u, double t) { return 1.0 - tail(u, t); }
inline double cdf(const ParetoTail& p, double t) { return 1.0 - tail(p, t); }
inline double cdf(const LightTail& l, double t) { return 1.0 - tail(l, t); }

// Exact inverse cdf; u in [0, 1).
inline double quantile(const Exponential& e, double u) { return -std::log1p(-u) / e.rate; }

inline double quantile(const Uniform& uf, double u) { return uf.a + (uf.b - uf.a) * u; }

inline double quantile(const ParetoTail& p, double u) {
    const double target = 1.0 - u; // tail level to hit
    if (target >= tail(p, p.t0)) return p.t0;
    if (const auto* k = std::get_if<ConstantSV>(&p.ell)) {
        return std::pow(k->c / target, 1.0 / p.beta);
    }
    // bisection on x = ln t; tail is strictly decreasing past t0 for valid parameters
    double lo = std::log(p.t0), hi = std::log(p.t0) + 1.0;
    while (tail(p, std::exp(hi)) > target) {
        hi += hi - std::log(p.t0) + 1.0;
        if (hi > 2000.0) break;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (tail(p, std::exp(mid)) > target) lo = mid; else hi = mid;
        if (hi - lo < 1e-15 * std::fmax(1.0, std::fabs(hi))) break;
    }
    return std::exp(0.5 * (lo + hi));
}

inline double quantile(const LightTail& l, double u) {
    return std::visit([&](const auto& x) { return quantile(x, u); }, l);
}

// ---- partial means ----

// mu(t) = int_0^t (1 - G(w)) dw for the light tail; mu = mu(inf).
inline double mu_total(const Exponential& e) { return 1.0 / e.rate; }
inline double mu_total(const Uniform& u) { return 0.5 * (u.a + u.b); }
inline double mu_total(const LightTail& l) {
    return std::visit([](const auto& x) { return mu_total(x); }, l);
}

// mu2(t) = int_0^t (1 - G2(w)) dw, closed form for a constant slowly varying
// factor and quadrature otherwise.
inline double mu2_partial(const ParetoTail& p, double t) {
    if (t <= p.t0) return t;
    if (const auto* k = std::get_if<ConstantSV>(&p.ell)) {
        if (p.beta < 1.0) {
            return p.t0 + k->c * (std::pow(t, 1.0 - p.beta) - std::pow(p.t0, 1.0 - p.beta)) / (1.0 - p.beta);
        }
        return p.t0 + k->c * std::log(t / p.t0);
    }
    // integrate on x = ln w to keep the integrand gentle over decades
    const auto f = [&](double x) {
        const double w = std::exp(x);
        return tail(p, w) * w;
    };
    const double a = std::log(p.t0), b = std::log(t);
    return p.t0 + adaptive_simpson(f, a, b, 1e-12 * std::fmax(1.0, t));
}

// mu2(inf); infinite unless beta = 1 with an integrable slowly varying factor.
inline double mu2_total(const ParetoTail& p) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (p.beta < 1.0) return inf;
    if (std::holds_alternative<ConstantSV>(p.ell)) return inf;
    const auto& lp = std::get<LogPowerSV>(p.ell);
    if (lp.p >= -1.0) return inf;
    // int_{t0}^inf c (ln(e+w))^p / w dw; substitute x = ln w, then the
    // integrand c (ln(e+e^x))^p ~ c x^p is integrable for p < -1.
    // ln(e + e^x) written without forming e^x, which overflows past x = 709.
    const auto ln_e_plus_exp = [](double x) {
        return x > 1.0 ? x + std::log1p(std::exp(1.0 - x)) : 1.0 + std::log1p(std::exp(x - 1.0));
    };
    const auto f = [&](double x) {
        const double ell = lp.c * std::pow(ln_e_plus_exp(x), lp.p);
        return x < 700.0 ? std::fmin(std::exp(x), ell) : ell;
    };
    double total = p.t0, a = std::log(p.t0);
    while (a < 700.0) {
        const double b = std::fmin(a + 16.0, 700.0);
        total += adaptive_simpson(f, a, b, 1e-13 * std::fmax(1.0, total));
        a = b;
    }
    // analytic remainder: int_X^inf c (ln w)^p dw/w = c (ln X)^{p+1} / (-1-p)
    total += lp.c * std::pow(ln_e_plus_exp(a), lp.p + 1.0) / (-1.0 - lp.p);
    return total;
}

// R(t) = t / mu2(t) >= 1, with R(0) = 1.
inline double ratio_R(const ParetoTail& p, double t) {
    if (t <= p.t0) return 1.0;
    return t / mu2_partial(p, t);
}

} // namespace bhlab
