#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bhlab/errors.hpp"
#include "bhlab/grid.hpp"
#include "bhlab/model.hpp"
#include "bhlab/quad.hpp"
#include "bhlab/quadratic.hpp"
#include "bhlab/volterra.hpp"

namespace bhlab {

namespace detail {

// Nodes x[i] = end (i/(n-1))^power. The fixed-point solutions behave like
// x^p near 0 with fractional p, so clustering nodes there keeps the relative
// interpolation error of a piecewise-linear representation uniform.
struct PowerGrid {
    double end = 0.0;
    double power = 1.0;
    std::vector<double> x;

    PowerGrid() = default;
    PowerGrid(double end_, double power_, std::size_t n) : end(end_), power(power_), x(n) {
        for (std::size_t i = 0; i < n; ++i)
            x[i] = end * std::pow(static_cast<double>(i) / static_cast<double>(n - 1), power);
        x.back() = end;
    }

    // continuous index of v
    double locate(double v) const {
        return static_cast<double>(x.size() - 1) * std::pow(v / end, 1.0 / power);
    }
};

inline Vec2 lerp_cell(const PowerGrid& g, const std::vector<Vec2>& vals, double u, double v) {
    if (!(u > 0.0)) return vals.front();
    const std::size_t last = vals.size() - 1;
    if (u >= static_cast<double>(last)) return vals.back();
    const auto k = static_cast<std::size_t>(u);
    double w = (v - g.x[k]) / (g.x[k + 1] - g.x[k]);
    w = std::fmin(std::fmax(w, 0.0), 1.0);
    return (1.0 - w) * vals[k] + w * vals[k + 1];
}

inline Vec2 lerp_power(const PowerGrid& g, const std::vector<Vec2>& vals, double v) {
    return lerp_cell(g, vals, g.locate(v), v);
}

inline double sup_dist(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::fmax(d, max_abs(a[i] - b[i]));
    return d;
}

inline bool all_finite(const std::vector<Vec2>& a) {
    for (const Vec2& x : a)
        if (!std::isfinite(x[0]) || !std::isfinite(x[1])) return false;
    return true;
}

} // namespace detail

// ---- Theta ----
//
// Theta solves
//   Theta(lam) = D (0,1)^T - gamma lam^beta int_0^1 D N(Theta(lam (1-y))) d(y^beta)
// on [0, Lambda]; Omega(lam) = lam Theta(lam^{1/beta}) then solves the
// singular-kernel equation with kernel (1-w)^{-2 beta}.
//
// The integral is split at y = 1/2 with substitutions z = y^beta on the left
// and v = (1-y)^beta on the right; the right half turns the (1-y)^beta cusp
// of the integrand (inherited from Theta's own cusp at 0) into a linear
// factor, restoring second-order midpoint accuracy.

class ThetaProblem {
public:
    ThetaProblem(const DerivedConstants& c, const QuadraticForm& q, std::size_t nodes_per_half = 1024)
        : D_(c.D), q_(q), beta_(c.beta), gamma_(c.gamma) {
        const double b = beta_;
        const auto M = static_cast<double>(nodes_per_half);
        const double zmax = std::pow(0.5, b);
        shrink_.reserve(2 * nodes_per_half);
        weight_.reserve(2 * nodes_per_half);
        for (std::size_t j = 0; j < nodes_per_half; ++j) {
            const double z = (static_cast<double>(j) + 0.5) * zmax / M;
            shrink_.push_back(1.0 - std::pow(z, 1.0 / b)); // 1 - y, in (1/2, 1)
            weight_.push_back(zmax / M);
        }
        for (std::size_t j = 0; j < nodes_per_half; ++j) {
            const double v = (static_cast<double>(j) + 0.5) * zmax / M;
            const double s = std::pow(v, 1.0 / b); // 1 - y, in (0, 1/2)
            shrink_.push_back(s);
            weight_.push_back(std::pow(1.0 - s, b - 1.0) * std::pow(s, 1.0 - b) * zmax / M);
        }
    }

    Vec2 boundary() const { return {D_(0, 1), D_(1, 1)}; }
    double beta() const { return beta_; }

    // equals int_0^1 d(y^beta) = 1
    double quadrature_mass() const {
        double s = 0.0;
        for (double w : weight_) s += w;
        return s;
    }

    // one Picard step on the grid
    std::vector<Vec2> apply(const detail::PowerGrid& g, const std::vector<Vec2>& theta) const {
        const auto scale = static_cast<double>(g.x.size() - 1);
        std::vector<double> upart(shrink_.size());
        for (std::size_t j = 0; j < shrink_.size(); ++j)
            upart[j] = std::pow(shrink_[j], 1.0 / g.power);
        std::vector<Vec2> out(g.x.size());
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double lam = g.x[i];
            const double base = scale * std::pow(lam / g.end, 1.0 / g.power);
            Vec2 acc{0.0, 0.0};
            for (std::size_t j = 0; j < shrink_.size(); ++j)
                acc += weight_[j] *
                       q_(detail::lerp_cell(g, theta, base * upart[j], lam * shrink_[j]));
            out[i] = boundary() - gamma_ * std::pow(lam, beta_) * (D_ * acc);
        }
        return out;
    }

private:
    Mat2 D_;
    QuadraticForm q_;
    double beta_;
    double gamma_;
    std::vector<double> shrink_;
    std::vector<double> weight_;
};

struct ThetaSolution {
    double beta = 0.0;
    detail::PowerGrid grid; // lambda nodes, clustered near 0
    std::vector<Vec2> values;
    double Lambda = 0.0;
    double Lambda_contract = 0.0; // prefix certified by the probe iterations
    double kappa = 0.0;           // measured contraction factor on that prefix
    double residual = 0.0;        // sup-norm fixed-point defect on the final grid

    Vec2 eval(double lam) const {
        if (!(lam >= 0.0) || lam > Lambda * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "Theta argument " << lam << " outside [0, " << Lambda << "]";
            throw OutsideDomain(os.str());
        }
        return detail::lerp_power(grid, values, lam);
    }
};

struct ThetaOptions {
    double Lambda = 1.0;
    std::size_t grid_points = 512;
    std::size_t quad_nodes = 1024; // per half
    double tol = 1e-8;             // required defect on the contracting prefix
    double extend_tol = 1e-6;      // required defect after each doubling step
    double kappa_max = 0.8;
    double Lambda_floor = 1e-3;
};

inline ThetaSolution solve_theta(const DerivedConstants& c, const QuadraticForm& q,
                                 const ThetaOptions& opt = {}) {
    if (!(opt.Lambda > 0.0)) throw std::invalid_argument("Lambda must be positive");
    if (opt.grid_points < 2 || opt.quad_nodes < 2) throw std::invalid_argument("grids too small");
    const ThetaProblem prob(c, q, opt.quad_nodes);
    const double gpow = std::fmin(1.0 / c.beta, 16.0);

    // halve the domain until three probe steps certify contraction
    double Lc = opt.Lambda;
    double kappa = 0.0;
    detail::PowerGrid grid;
    std::vector<Vec2> th;
    for (;;) {
        grid = detail::PowerGrid(Lc, gpow, opt.grid_points);
        th.assign(opt.grid_points, prob.boundary());
        std::vector<Vec2> t1 = prob.apply(grid, th);
        std::vector<Vec2> t2 = prob.apply(grid, t1);
        std::vector<Vec2> t3 = prob.apply(grid, t2);
        const double d1 = std::fmax(detail::sup_dist(t1, th), 1e-300);
        const double d2 = detail::sup_dist(t2, t1);
        const double d3 = detail::sup_dist(t3, t2);
        kappa = std::fmax(d2 / d1, d3 / std::fmax(d2, 1e-300));
        if (detail::all_finite(t3) && kappa <= opt.kappa_max) {
            th = std::move(t3);
            break;
        }
        Lc *= 0.5;
        if (Lc < opt.Lambda_floor) {
            std::ostringstream os;
            os << "no contracting prefix above " << opt.Lambda_floor << ", last kappa " << kappa;
            throw ContractionFailed(os.str());
        }
    }

    const auto settle = [&](std::vector<Vec2>& cur, std::size_t max_iter) {
        for (std::size_t it = 0; it < max_iter; ++it) {
            std::vector<Vec2> next = prob.apply(grid, cur);
            const double d = detail::sup_dist(next, cur);
            cur = std::move(next);
            if (!detail::all_finite(cur) || d > 1e6)
                throw ContractionFailed("Theta iteration diverged");
            if (d <= 1e-13) return;
        }
    };

    settle(th, 400);
    double residual = detail::sup_dist(prob.apply(grid, th), th);
    if (residual > opt.tol) {
        std::ostringstream os;
        os << "fixed-point defect " << residual << " above " << opt.tol << " on [0, " << Lc << "]";
        throw ContractionFailed(os.str());
    }
    const double Lambda_contract = Lc;

    // push past the certified prefix by doubling, seeding with the clamped
    // previous solution; acceptance is by defect, not by a contraction bound
    while (Lc < opt.Lambda * (1.0 - 1e-12)) {
        const double Lnext = std::fmin(2.0 * Lc, opt.Lambda);
        detail::PowerGrid next_grid(Lnext, gpow, opt.grid_points);
        std::vector<Vec2> seed(opt.grid_points);
        for (std::size_t i = 0; i < seed.size(); ++i)
            seed[i] = detail::lerp_power(grid, th, std::fmin(next_grid.x[i], Lc));
        grid = std::move(next_grid);
        th = std::move(seed);
        settle(th, 3000);
        residual = detail::sup_dist(prob.apply(grid, th), th);
        if (residual > opt.extend_tol) {
            std::ostringstream os;
            os << "defect " << residual << " extending Theta to [0, " << Lnext << "]";
            throw ContractionFailed(os.str());
        }
        Lc = Lnext;
    }

    ThetaSolution out;
    out.beta = c.beta;
    out.grid = std::move(grid);
    out.values = std::move(th);
    out.Lambda = Lc;
    out.Lambda_contract = Lambda_contract;
    out.kappa = kappa;
    out.residual = residual;
    return out;
}

inline Vec2 omega(const ThetaSolution& th, double lam) {
    if (!(lam >= 0.0)) throw OutsideDomain("Omega argument must be nonnegative");
    return lam * th.eval(std::pow(lam, 1.0 / th.beta));
}

// Defect of Omega(lam) = lam Theta(lam^{1/beta}) in its own equation
//   Omega(lam) = lam D (0,1)^T - gamma int_0^1 D N(Omega(lam (1-w)^beta)) (1-w)^{-2beta} d(w^beta).
// The integrand stays bounded because N(Omega(x)) = O(x^2) near 0; the w -> 1
// half is rewritten through N's homogeneity so no large/small cancellation
// is evaluated directly.
inline double omega_residual(const ThetaSolution& th, const DerivedConstants& c,
                             const QuadraticForm& q, double lam, std::size_t nodes = 2048) {
    const Vec2 om = omega(th, lam);
    const double b = th.beta;
    const double x = std::pow(lam, 1.0 / b);
    const double zmax = std::pow(0.5, b);
    const auto M = static_cast<double>(nodes);
    Vec2 acc{0.0, 0.0};
    for (std::size_t j = 0; j < nodes; ++j) {
        // w in (0, 1/2): z = w^beta
        const double z = (static_cast<double>(j) + 0.5) * zmax / M;
        const double s = 1.0 - std::pow(z, 1.0 / b); // 1 - w
        const Vec2 inner = std::pow(s, b) * lam * th.eval(x * s);
        acc += (zmax / M) * std::pow(s, -2.0 * b) * q(inner);
        // w in (1/2, 1): v = (1-w)^beta, integrand lam^2 N(Theta((lam v)^{1/beta}))
        const double v = z;
        const double w = 1.0 - std::pow(v, 1.0 / b);
        const double wt = std::pow(w, b - 1.0) * std::pow(1.0 - w, 1.0 - b) * (zmax / M);
        acc += wt * lam * lam * q(th.eval(std::pow(lam * v, 1.0 / b)));
    }
    const Vec2 rhs = lam * Vec2{c.D(0, 1), c.D(1, 1)} - c.gamma * (c.D * acc);
    return max_abs(om - rhs);
}

// ---- H (beta in (1/2, 1]) ----
//
// H(theta, lam) = C_beta (1, lam theta^{1-beta})^T
//                 - gamma theta^{2beta-1} int_0^1 D N(H(theta (1-y), lam)) (1-y)^{2beta-2} d(y^beta)
// solved per lam as a one-dimensional fixed point in theta. The integral is
// split at y = 1/2: z = y^beta removes the y^{beta-1} blowup on the left,
// w = (1-y)^{2beta-1} the (1-y)^{2beta-2} blowup on the right.

class HProblem {
public:
    HProblem(const DerivedConstants& c, const QuadraticForm& q, std::size_t nodes_per_half = 1024)
        : D_(c.D), q_(q), beta_(c.beta), gamma_(c.gamma) {
        if (!(beta_ > 0.5))
            throw BetaOutOfRange("H is defined for beta in (1/2, 1]");
        C_ = Mat2{D_(0, 0) * beta_ * gamma_, D_(0, 1), D_(1, 0) * beta_ * gamma_, D_(1, 1)};
        const double b = beta_;
        const auto M = static_cast<double>(nodes_per_half);
        const double zmax = std::pow(0.5, b);
        const double wmax = std::pow(0.5, 2.0 * b - 1.0);
        shrink_.reserve(2 * nodes_per_half);
        weight_.reserve(2 * nodes_per_half);
        for (std::size_t j = 0; j < nodes_per_half; ++j) {
            const double z = (static_cast<double>(j) + 0.5) * zmax / M;
            const double y = std::pow(z, 1.0 / b);
            shrink_.push_back(1.0 - y);
            weight_.push_back(std::pow(1.0 - y, 2.0 * b - 2.0) * zmax / M);
        }
        for (std::size_t j = 0; j < nodes_per_half; ++j) {
            const double w = (static_cast<double>(j) + 0.5) * wmax / M;
            const double frac = std::pow(w, 1.0 / (2.0 * b - 1.0)); // 1 - y
            shrink_.push_back(frac);
            weight_.push_back(b * std::pow(1.0 - frac, b - 1.0) / (2.0 * b - 1.0) * wmax / M);
        }
    }

    Vec2 boundary(double theta, double lam) const {
        const double p = lam * std::pow(theta, 1.0 - beta_);
        return {C_(0, 0) + C_(0, 1) * p, C_(1, 0) + C_(1, 1) * p};
    }

    const Mat2& C() const { return C_; }

    // total weight; equals int_0^1 (1-y)^{2beta-2} d(y^beta) = beta B(beta, 2beta-1)
    double quadrature_mass() const {
        double s = 0.0;
        for (double w : weight_) s += w;
        return s;
    }

    std::vector<Vec2> apply(const detail::PowerGrid& g, double lam,
                            const std::vector<Vec2>& h) const {
        const auto scale = static_cast<double>(g.x.size() - 1);
        std::vector<double> upart(shrink_.size());
        for (std::size_t j = 0; j < shrink_.size(); ++j)
            upart[j] = std::pow(shrink_[j], 1.0 / g.power);
        std::vector<Vec2> out(g.x.size());
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            const double theta = g.x[i];
            const double base = scale * std::pow(theta / g.end, 1.0 / g.power);
            Vec2 acc{0.0, 0.0};
            for (std::size_t j = 0; j < shrink_.size(); ++j)
                acc += weight_[j] *
                       q_(detail::lerp_cell(g, h, base * upart[j], theta * shrink_[j]));
            out[i] = boundary(theta, lam) - gamma_ * std::pow(theta, 2.0 * beta_ - 1.0) * (D_ * acc);
        }
        return out;
    }

private:
    Mat2 D_;
    Mat2 C_;
    QuadraticForm q_;
    double beta_;
    double gamma_;
    std::vector<double> shrink_;
    std::vector<double> weight_;
};

struct HSolution {
    double beta = 0.0;
    Mat2 C;
    detail::PowerGrid theta_grid;    // clustered near 0
    std::vector<double> lambda_grid; // uniform on [0, Lambda]
    std::vector<std::vector<Vec2>> values; // [lambda index][theta index]
    double Theta_contract = 0.0;
    double kappa = 0.0;
    double residual = 0.0;

    Vec2 eval(double theta, double lam) const {
        const double Tmax = theta_grid.end;
        const double Lmax = lambda_grid.back();
        if (!(theta >= 0.0) || theta > Tmax * (1.0 + 1e-12) || !(lam >= 0.0) ||
            lam > Lmax * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "H argument (" << theta << ", " << lam << ") outside [0, " << Tmax << "] x [0, "
               << Lmax << "]";
            throw OutsideDomain(os.str());
        }
        const double lstep = lambda_grid[1] - lambda_grid[0];
        const double pos = lam / lstep;
        const std::size_t last = lambda_grid.size() - 1;
        if (pos >= static_cast<double>(last))
            return detail::lerp_power(theta_grid, values[last], theta);
        const auto k = static_cast<std::size_t>(std::fmax(pos, 0.0));
        const double w = pos - static_cast<double>(k);
        const Vec2 lo = detail::lerp_power(theta_grid, values[k], theta);
        const Vec2 hi = detail::lerp_power(theta_grid, values[k + 1], theta);
        return (1.0 - w) * lo + w * hi;
    }
};

struct HOptions {
    double Theta = 1.0;
    double Lambda = 1.0;
    std::size_t theta_points = 257;
    std::size_t lambda_points = 33;
    std::size_t quad_nodes = 1024; // per half
    double tol = 1e-7;
    double kappa_max = 0.8;
    double Theta_floor = 1e-3;
};

inline HSolution solve_H(const DerivedConstants& c, const QuadraticForm& q,
                         const HOptions& opt = {}) {
    if (!(opt.Theta > 0.0) || !(opt.Lambda >= 0.0)) throw std::invalid_argument("bad H domain");
    if (opt.theta_points < 2 || opt.lambda_points < 2) throw std::invalid_argument("grids too small");
    const HProblem prob(c, q, opt.quad_nodes);

    // cluster toward 0 against the theta^{1-beta} and theta^{2beta-1} cusps
    double gpow = 1.0;
    for (double e : {1.0 - c.beta, 2.0 * c.beta - 1.0})
        if (e > 1e-9) gpow = std::fmax(gpow, 1.0 / e);
    gpow = std::fmin(gpow, 8.0);

    const auto boundary_curve = [&](const detail::PowerGrid& g, double lam) {
        std::vector<Vec2> h(g.x.size());
        for (std::size_t i = 0; i < g.x.size(); ++i) h[i] = prob.boundary(g.x[i], lam);
        return h;
    };

    // probe at the largest lambda, where the inhomogeneous term is biggest
    double Tc = opt.Theta;
    double kappa = 0.0;
    for (;;) {
        const detail::PowerGrid tg(Tc, gpow, opt.theta_points);
        std::vector<Vec2> h0 = boundary_curve(tg, opt.Lambda);
        std::vector<Vec2> h1 = prob.apply(tg, opt.Lambda, h0);
        std::vector<Vec2> h2 = prob.apply(tg, opt.Lambda, h1);
        std::vector<Vec2> h3 = prob.apply(tg, opt.Lambda, h2);
        const double d1 = std::fmax(detail::sup_dist(h1, h0), 1e-300);
        const double d2 = detail::sup_dist(h2, h1);
        const double d3 = detail::sup_dist(h3, h2);
        kappa = std::fmax(d2 / d1, d3 / std::fmax(d2, 1e-300));
        if (detail::all_finite(h3) && kappa <= opt.kappa_max) break;
        Tc *= 0.5;
        if (Tc < opt.Theta_floor) {
            std::ostringstream os;
            os << "no contracting theta prefix above " << opt.Theta_floor << ", last kappa " << kappa;
            throw ContractionFailed(os.str());
        }
    }

    const auto settle = [&](const detail::PowerGrid& g, double lam, std::vector<Vec2>& h,
                            std::size_t max_iter) {
        for (std::size_t it = 0; it < max_iter; ++it) {
            std::vector<Vec2> next = prob.apply(g, lam, h);
            const double d = detail::sup_dist(next, h);
            h = std::move(next);
            if (!detail::all_finite(h) || d > 1e6) {
                std::ostringstream os;
                os << "H iteration diverged at lambda " << lam;
                throw ContractionFailed(os.str());
            }
            if (d <= 1e-13) return;
        }
    };

    std::vector<double> lg(opt.lambda_points);
    for (std::size_t i = 0; i < lg.size(); ++i)
        lg[i] = opt.Lambda * static_cast<double>(i) / static_cast<double>(lg.size() - 1);
    const detail::PowerGrid final_grid(opt.Theta, gpow, opt.theta_points);
    std::vector<std::vector<Vec2>> rows(lg.size());
    double residual = 0.0;
    for (std::size_t li = 0; li < lg.size(); ++li) {
        const double lam = lg[li];
        detail::PowerGrid g(Tc, gpow, opt.theta_points);
        std::vector<Vec2> h = boundary_curve(g, lam);
        settle(g, lam, h, 400);
        double defect = detail::sup_dist(prob.apply(g, lam, h), h);
        double Tcur = Tc;
        while (Tcur < opt.Theta * (1.0 - 1e-12)) {
            const double Tnext = std::fmin(2.0 * Tcur, opt.Theta);
            const detail::PowerGrid ng =
                Tnext == opt.Theta ? final_grid : detail::PowerGrid(Tnext, gpow, opt.theta_points);
            std::vector<Vec2> seed(ng.x.size());
            for (std::size_t i = 0; i < seed.size(); ++i)
                seed[i] = detail::lerp_power(g, h, std::fmin(ng.x[i], Tcur));
            g = ng;
            h = std::move(seed);
            settle(g, lam, h, 3000);
            defect = detail::sup_dist(prob.apply(g, lam, h), h);
            Tcur = Tnext;
        }
        if (defect > opt.tol) {
            std::ostringstream os;
            os << "H defect " << defect << " above " << opt.tol << " at lambda " << lam;
            throw ContractionFailed(os.str());
        }
        residual = std::fmax(residual, defect);
        rows[li] = std::move(h);
    }

    HSolution out;
    out.beta = c.beta;
    out.C = prob.C();
    out.theta_grid = final_grid;
    out.lambda_grid = std::move(lg);
    out.values = std::move(rows);
    out.Theta_contract = Tc;
    out.kappa = kappa;
    out.residual = residual;
    return out;
}

// ---- O(s) ----
//
// O(s) = beta gamma int_0^inf D Phi(Q(w; s, 1)) dw for beta <= 1/2: trapezoid
// over a Volterra solve up to twice the requested horizon, plus a remainder
// fitted as Phi_i(w) ~ C_i / (1 + mu2(w))^2 over the last decade. Inherits
// the first-order h bias of the generating-function lattice.

struct OFunctional {
    Vec2 value;
    Vec2 finite_part;
    Vec2 tail_part;
    double horizon = 0.0;
};

inline OFunctional o_functional(const BranchingModel& model, double h, double s,
                                double tail_horizon) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("s outside [0,1]");
    const DerivedConstants c = derive_constants(model);
    if (c.beta > 0.5) throw BetaOutOfRange("O(s) integral diverges for beta > 1/2");
    const auto nT = static_cast<std::size_t>(std::llround(tail_horizon / h));
    if (nT < 16) throw std::invalid_argument("tail horizon shorter than 16 steps");
    const TimeGrid grid{h, 2 * nT + 1};
    const GeneratingSolution gen = solve_generating_system(model, {s, 1.0}, grid);

    std::vector<Vec2> ph(grid.n_points);
    for (std::size_t k = 0; k < grid.n_points; ++k) ph[k] = phi(model, c.M, gen.Q.values[k]);

    const auto trapz = [&](std::size_t n) {
        Vec2 acc = 0.5 * (ph[0] + ph[n]);
        for (std::size_t k = 1; k < n; ++k) acc += ph[k];
        return h * acc;
    };

    const auto tail_after = [&](std::size_t n) -> Vec2 {
        const double cut = grid.point(n);
        Vec2 C{0.0, 0.0};
        for (std::size_t k = 0; k <= n; ++k) {
            if (grid.point(k) < 0.1 * cut) continue;
            const double m = 1.0 + c.mu2(grid.point(k));
            C[0] = std::fmax(C[0], ph[k][0] * m * m);
            C[1] = std::fmax(C[1], ph[k][1] * m * m);
        }
        if (C[0] == 0.0 && C[1] == 0.0) return {0.0, 0.0};
        // integrate (1 + mu2)^{-2} past the cut in doubling blocks; stop once
        // the block ratio settles, then add the geometric remainder
        const auto f = [&](double w) {
            const double m = 1.0 + c.mu2(w);
            return 1.0 / (m * m);
        };
        double acc = 0.0, a = cut, prev_piece = -1.0, prev_ratio = -1.0;
        for (int block = 0; block < 60; ++block) {
            const double piece = adaptive_simpson(f, a, 2.0 * a, 1e-10 * f(a) * a + 1e-300);
            acc += piece;
            if (prev_piece > 0.0) {
                const double ratio = piece / prev_piece;
                if (ratio < 0.999 && prev_ratio > 0.0 &&
                    std::fabs(ratio - prev_ratio) <= 1e-3 * (1.0 - ratio)) {
                    acc += piece * ratio / (1.0 - ratio);
                    return {C[0] * acc, C[1] * acc};
                }
                prev_ratio = ratio;
            }
            prev_piece = piece;
            a *= 2.0;
        }
        throw TailNotConverged("remainder of the O(s) integral shows no geometric decay");
    };

    const Vec2 at_half = trapz(nT) + tail_after(nT);
    const Vec2 finite = trapz(2 * nT);
    const Vec2 tail = tail_after(2 * nT);
    const Vec2 at_full = finite + tail;
    if (norm1(at_full - at_half) > 0.01 * norm1(at_full) + 1e-12) {
        std::ostringstream os;
        os << "O(s) moved by " << norm1(at_full - at_half) << " when doubling the horizon to "
           << grid.horizon();
        throw TailNotConverged(os.str());
    }

    OFunctional out;
    const double scale = c.beta * c.gamma;
    out.finite_part = scale * (c.D * finite);
    out.tail_part = scale * (c.D * tail);
    out.value = out.finite_part + out.tail_part;
    out.horizon = grid.horizon();
    return out;
}

// ---- limit predictions ----

enum class TheoremId { T1, C1, T2, T3, T4, T5, T6, Z12 };

inline const char* to_string(TheoremId id) {
    switch (id) {
        case TheoremId::T1: return "T1";
        case TheoremId::C1: return "C1";
        case TheoremId::T2: return "T2";
        case TheoremId::T3: return "T3";
        case TheoremId::T4: return "T4";
        case TheoremId::T5: return "T5";
        case TheoremId::T6: return "T6";
        case TheoremId::Z12: return "Z12";
    }
    return "?";
}

inline TheoremId theorem_from_string(const std::string& name) {
    for (TheoremId id : {TheoremId::T1, TheoremId::C1, TheoremId::T2, TheoremId::T3, TheoremId::T4,
                         TheoremId::T5, TheoremId::T6, TheoremId::Z12})
        if (name == to_string(id)) return id;
    throw std::invalid_argument("unknown theorem id: " + name);
}

// Arguments of the limiting transforms; which fields are read depends on the
// theorem. r is the regime rate from the classifier schedule.
struct LimitScenario {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double r = 1.0;
    double s = 1.0;
};

struct LimitInputs {
    const ThetaSolution* theta = nullptr; // T4
    const HSolution* H = nullptr;         // T5
    const OFunctional* O = nullptr;       // T2, at the scenario's s
};

inline double predict_limit(TheoremId id, const DerivedConstants& c, const LimitScenario& sc,
                            const LimitInputs& in = {}) {
    if (!(sc.lambda1 >= 0.0) || !(sc.lambda2 >= 0.0) || !(sc.r >= 0.0) ||
        !(sc.s >= 0.0 && sc.s <= 1.0))
        throw std::invalid_argument("limit scenario outside its domain");
    const double bg = c.beta * c.gamma;
    switch (id) {
        case TheoremId::T1:
            return std::exp(-c.mu1 * bg * c.D(1, 0) * sc.lambda1 - c.D(1, 1) * sc.lambda2);
        case TheoremId::C1:
        case TheoremId::T3:
            return std::exp(-c.D(1, 1) * sc.lambda2);
        case TheoremId::T2: {
            if (in.O == nullptr) throw MissingSolution("T2 needs the O(s) functional");
            const double expo = -sc.r * bg * c.mu1 * c.D(1, 0) * (1.0 - sc.s) +
                                sc.r * in.O->value[1] - c.D(1, 1) * sc.lambda2;
            return std::exp(expo);
        }
        case TheoremId::T4: {
            if (in.theta == nullptr) throw MissingSolution("T4 needs the Theta solution");
            return std::exp(-sc.r * omega(*in.theta, sc.lambda2)[1]);
        }
        case TheoremId::T5: {
            if (!(c.beta > 0.5)) throw BetaOutOfRange("T5 requires beta in (1/2, 1]");
            if (sc.lambda1 == 0.0) // continuity limit of lambda1 H2: boundary term C22 lambda2
                return std::exp(-sc.r * c.D(1, 1) * sc.lambda2);
            if (in.H == nullptr) throw MissingSolution("T5 needs the H solution");
            const double p = 1.0 / (2.0 * c.beta - 1.0);
            const double theta = std::pow(sc.lambda1, p);
            const double lam = sc.lambda2 * std::pow(sc.lambda1, -c.beta * p);
            return std::exp(-sc.r * sc.lambda1 * in.H->eval(theta, lam)[1]);
        }
        case TheoremId::T6:
            return std::exp(-sc.r * c.u[1] * std::sqrt(sc.lambda2));
        case TheoremId::Z12:
            return std::exp(-sc.r * c.u[1] * std::sqrt(1.0 - sc.s));
    }
    throw std::invalid_argument("unknown theorem id");
}

} // namespace bhlab
