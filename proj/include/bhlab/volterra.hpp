#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <vector>

#include "bhlab/errors.hpp"
#include "bhlab/grid.hpp"
#include "bhlab/model.hpp"

namespace bhlab {

// Lifetime-cdf masses per step: inc[k] = G(t_k) - G(t_{k-1}), inc[0] = 0.
// The whole explicit scheme rests on every step mass being well below 1.
template <class Law>
std::vector<double> cdf_increments(const Law& law, const TimeGrid& grid) {
    std::vector<double> inc(grid.n_points, 0.0);
    double prev = 0.0;
    for (std::size_t k = 1; k < grid.n_points; ++k) {
        const double cur = cdf(law, grid.point(k));
        inc[k] = cur - prev;
        prev = cur;
        if (inc[k] > 0.5) {
            std::ostringstream os;
            os << "lifetime cdf mass " << inc[k] << " on one step of width " << grid.h;
            throw GridTooCoarse(os.str());
        }
    }
    return inc;
}

struct RenewalSolution {
    GridFunction<Mat2> U;   // values, with masses in increments (atom I sits in values[0])
    GridFunction<Mat2> U_I; // U convolved with the lifetime cdfs
};

// U(t_n) = I + sum_k dM(t_k) U(t_n - t_k), masses at the right lattice point.
// Row i of dM(t_k) is dG_i(t_k) times row i of M.
inline RenewalSolution renewal_matrix(const BranchingModel& model, const TimeGrid& grid) {
    const Mat2 M = mean_offspring_matrix(model);
    const std::vector<double> dG1 = cdf_increments(model.life1, grid);
    const std::vector<double> dG2 = cdf_increments(model.life2, grid);
    const std::size_t n = grid.n_points;

    std::vector<Mat2> U(n), MU(n);
    U[0] = Mat2::identity();
    MU[0] = M;
    for (std::size_t step = 1; step < n; ++step) {
        Mat2 acc = Mat2::identity();
        for (std::size_t k = 1; k <= step; ++k) {
            const Mat2& V = MU[step - k];
            acc.m[0][0] += dG1[k] * V.m[0][0];
            acc.m[0][1] += dG1[k] * V.m[0][1];
            acc.m[1][0] += dG2[k] * V.m[1][0];
            acc.m[1][1] += dG2[k] * V.m[1][1];
        }
        U[step] = acc;
        MU[step] = M * acc;
    }

    RenewalSolution out{GridFunction<Mat2>(grid), GridFunction<Mat2>(grid)};
    out.U.values = std::move(U);
    out.U.increments.resize(n, Mat2{});
    for (std::size_t k = 1; k < n; ++k)
        out.U.increments[k] = out.U.values[k] - out.U.values[k - 1];

    // (U * G_I)_{ij}(t_n) = sum_k U_{ij}(t_n - t_k) dG_j(t_k)
    out.U_I.values.resize(n, Mat2{});
    for (std::size_t step = 1; step < n; ++step) {
        Mat2 acc{};
        for (std::size_t k = 1; k <= step; ++k) {
            const Mat2& V = out.U.values[step - k];
            acc.m[0][0] += dG1[k] * V.m[0][0];
            acc.m[0][1] += dG2[k] * V.m[0][1];
            acc.m[1][0] += dG1[k] * V.m[1][0];
            acc.m[1][1] += dG2[k] * V.m[1][1];
        }
        out.U_I.values[step] = acc;
    }
    return out;
}

// int_0^t W_j(t - u) dU_{ij}(u) for a smooth kernel W = (W_1, W_2).
// The mass of step k spreads over (t_{k-1}, t_k], so the kernel is read at
// the lag midpoint; the atom at 0 is read exactly. Second-order accurate,
// which matters because W here is a survival function with W(0) = 1.
inline std::vector<Mat2> convolve_dU_kernel(const RenewalSolution& ren,
                                            const std::function<double(double)>& W1,
                                            const std::function<double(double)>& W2) {
    const TimeGrid& grid = ren.U.grid;
    const std::size_t n = grid.n_points;
    std::vector<double> w1mid(n), w2mid(n), w1at(n), w2at(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lag = grid.point(k);
        w1mid[k] = W1(lag + 0.5 * grid.h);
        w2mid[k] = W2(lag + 0.5 * grid.h);
        w1at[k] = W1(lag);
        w2at[k] = W2(lag);
    }
    std::vector<Mat2> out(n, Mat2{});
    for (std::size_t step = 0; step < n; ++step) {
        Mat2 acc{};
        acc.m[0][0] = w1at[step];
        acc.m[1][1] = w2at[step]; // atom dU(0) = I
        for (std::size_t k = 1; k <= step; ++k) {
            const Mat2& dU = ren.U.increments[k];
            acc.m[0][0] += dU.m[0][0] * w1mid[step - k];
            acc.m[0][1] += dU.m[0][1] * w2mid[step - k];
            acc.m[1][0] += dU.m[1][0] * w1mid[step - k];
            acc.m[1][1] += dU.m[1][1] * w2mid[step - k];
        }
        out[step] = acc;
    }
    return out;
}

// P_{ij}(t) = E_i Z_j(t) = int_0^t (1 - G_j(t - u)) dU_{ij}(u), P(0) = I.
inline GridFunction<Mat2> mean_matrix(const BranchingModel& model, const RenewalSolution& ren) {
    GridFunction<Mat2> P(ren.U.grid);
    P.values = convolve_dU_kernel(
        ren, [&](double t) { return tail(model.life1, t); },
        [&](double t) { return tail(model.life2, t); });
    return P;
}

struct GeneratingSolution {
    GridFunction<Vec2> F;
    GridFunction<Vec2> Q; // Q = 1 - F
    std::size_t clamp_events = 0;
};

// F_i(t_n; s) = s_i (1 - G_i(t_n)) + sum_k f_i(F(t_n - t_k; s)) dG_i(t_k)
inline GeneratingSolution solve_generating_system(const BranchingModel& model, Vec2 s,
                                                  const TimeGrid& grid) {
    if (!(s[0] >= 0.0 && s[0] <= 1.0 && s[1] >= 0.0 && s[1] <= 1.0))
        throw std::invalid_argument("pgf argument outside [0,1]^2");
    const std::vector<double> dG1 = cdf_increments(model.life1, grid);
    const std::vector<double> dG2 = cdf_increments(model.life2, grid);
    const std::size_t n = grid.n_points;

    GeneratingSolution out{GridFunction<Vec2>(grid), GridFunction<Vec2>(grid)};
    std::vector<Vec2>& F = out.F.values;
    F.resize(n);
    std::vector<double> f1cache(n), f2cache(n);
    F[0] = s;
    f1cache[0] = model.offspring1.pgf(s[0], s[1]);
    f2cache[0] = model.offspring2.pgf(s[0], s[1]);

    double cum1 = 0.0, cum2 = 0.0;
    for (std::size_t step = 1; step < n; ++step) {
        cum1 += dG1[step];
        cum2 += dG2[step];
        double F1 = s[0] * (1.0 - cum1);
        double F2 = s[1] * (1.0 - cum2);
        for (std::size_t k = 1; k <= step; ++k) {
            F1 += f1cache[step - k] * dG1[k];
            F2 += f2cache[step - k] * dG2[k];
        }
        if (F1 < 0.0 || F1 > 1.0) {
            F1 = F1 < 0.0 ? 0.0 : 1.0;
            ++out.clamp_events;
        }
        if (F2 < 0.0 || F2 > 1.0) {
            F2 = F2 < 0.0 ? 0.0 : 1.0;
            ++out.clamp_events;
        }
        F[step] = {F1, F2};
        f1cache[step] = model.offspring1.pgf(F1, F2);
        f2cache[step] = model.offspring2.pgf(F1, F2);
    }

    out.Q.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.Q.values[k] = Vec2{1.0, 1.0} - F[k];
    return out;
}

// Q_i(t) = P_i(Z(t) != 0) = 1 - F_i(t; 0, 0)
inline GridFunction<Vec2> survival_probability(const BranchingModel& model, const TimeGrid& grid) {
    GeneratingSolution sol = solve_generating_system(model, {0.0, 0.0}, grid);
    return std::move(sol.Q);
}

struct WeightedQPoint {
    double t = 0.0;
    Vec2 s{};      // evaluated argument 1 - lambda u psi(t)
    Vec2 Q{};      // Q(t; s)
    double value = 0.0; // (v, Q(t; s))
};

// (v, Q(t; 1 - lambda u psi(t))) along selected horizons. Each point is its
// own O((t/h)^2) solve, so callers pick a handful of t values.
inline std::vector<WeightedQPoint> weighted_Q(const BranchingModel& model, const TimeGrid& grid,
                                              double lambda,
                                              const std::function<double(double)>& psi,
                                              const std::vector<double>& eval_times) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    const DerivedConstants c = derive_constants(model);
    std::vector<WeightedQPoint> out;
    out.reserve(eval_times.size());
    for (double t : eval_times) {
        const auto steps = std::size_t(std::llround(t / grid.h));
        if (steps < 1 || steps >= grid.n_points)
            throw std::invalid_argument("weighted_Q evaluation time off the grid");
        WeightedQPoint pt;
        pt.t = grid.point(steps);
        const double scale = lambda * psi(pt.t);
        pt.s = Vec2{1.0, 1.0} - scale * c.u;
        if (pt.s[0] < 0.0 || pt.s[1] < 0.0) {
            std::ostringstream os;
            os << "1 - lambda u psi(t) leaves [0,1]^2 at t = " << pt.t;
            throw ScalingTooLarge(os.str());
        }
        const TimeGrid sub(grid.h, steps + 1);
        const GeneratingSolution sol = solve_generating_system(model, pt.s, sub);
        pt.Q = sol.Q.values.back();
        pt.value = dot(c.v, pt.Q);
        out.push_back(pt);
    }
    return out;
}

} // namespace bhlab
