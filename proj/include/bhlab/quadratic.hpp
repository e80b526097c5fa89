#pragma once

#include <cmath>

#include "bhlab/model.hpp"

namespace bhlab {

// N_i(x) = (1/2) sum_{j,k} b^i_{jk} x_j x_k, the quadratic part of
// 1 - f_i(1 - x) around x = 0.
class QuadraticForm {
public:
    explicit QuadraticForm(const BranchingModel& model) {
        const OffspringLaw* laws[2] = {&model.offspring1, &model.offspring2};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) {
                    b_[i][j][k] = laws[i]->second_factorial(j, k);
                    bbar_ = std::fmax(bbar_, b_[i][j][k]);
                }
    }

    Vec2 operator()(Vec2 x) const {
        Vec2 out{0.0, 0.0};
        for (int i = 0; i < 2; ++i)
            out[i] = 0.5 * (b_[i][0][0] * x[0] * x[0] + (b_[i][0][1] + b_[i][1][0]) * x[0] * x[1] +
                            b_[i][1][1] * x[1] * x[1]);
        return out;
    }

    double coefficient(int i, int j, int k) const { return b_[i][j][k]; }
    double bbar() const { return bbar_; } // max coefficient; N(x) <= bbar |x|^2 1

private:
    double b_[2][2][2]{};
    double bbar_ = 0.0;
};

// Phi(x) = M x - (1 - f(1 - x)); equals N(x) up to o(|x|^2) as x -> 0 and is
// nonnegative componentwise for x in [0,1]^2 by convexity of the pgfs.
inline Vec2 phi(const BranchingModel& model, const Mat2& M, Vec2 x) {
    const Vec2 Mx = M * x;
    return {Mx[0] - (1.0 - model.offspring1.pgf(1.0 - x[0], 1.0 - x[1])),
            Mx[1] - (1.0 - model.offspring2.pgf(1.0 - x[0], 1.0 - x[1]))};
}

} // namespace bhlab
