#pragma once

#include "bhlab/model.hpp"

// Reference model used across the suite: type 1 always emits one type-2
// child, type 2 emits independent Bernoulli(1/2) children of each type.
// M = [[0,1],[1/2,1/2]], u = (1,1), v = (1/3,2/3), B = 1/6,
// D = [[1/2,1],[1/2,1]] when mu2 diverges.
inline bhlab::BranchingModel reference_model(double beta) {
    using namespace bhlab;
    OffspringLaw f1({{0, 1, 1.0}});
    OffspringLaw f2({{0, 0, 0.25}, {1, 0, 0.25}, {0, 1, 0.25}, {1, 1, 0.25}});
    return BranchingModel{f1, f2, Exponential{1.0}, ParetoTail{beta, 1.0, ConstantSV{1.0}}};
}
