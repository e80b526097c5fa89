#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bhlab/linalg.hpp"

namespace bhlab {

// One offspring outcome: (k1, k2) children with probability p.
struct Outcome {
    int k1 = 0;
    int k2 = 0;
    double p = 0.0;
};

// Finite-support offspring law for one particle type.
//
// Sampling walks the cumulative probabilities in declaration order, so the
// outcome order is part of the reproducibility contract.
class OffspringLaw {
public:
    explicit OffspringLaw(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
        if (outcomes_.empty()) throw std::invalid_argument("offspring law needs at least one outcome");
        cum_.reserve(outcomes_.size());
        double s = 0.0;
        for (const Outcome& o : outcomes_) {
            if (o.p < 0.0) throw std::invalid_argument("offspring probability is negative");
            if (o.k1 < 0 || o.k2 < 0) throw std::invalid_argument("offspring count is negative");
            s += o.p;
            cum_.push_back(s);
        }
        total_ = s;
    }

    const std::vector<Outcome>& outcomes() const { return outcomes_; }
    double total_probability() const { return total_; }

    double pgf(double s1, double s2) const {
        double r = 0.0;
        for (const Outcome& o : outcomes_) r += o.p * ipow(s1, o.k1) * ipow(s2, o.k2);
        return r;
    }

    // (E k1, E k2)
    Vec2 mean() const {
        Vec2 m{0.0, 0.0};
        for (const Outcome& o : outcomes_) {
            m[0] += o.p * o.k1;
            m[1] += o.p * o.k2;
        }
        return m;
    }

    // second mixed derivative of the pgf at s = (1,1):
    // j == k gives the factorial moment E[k_j (k_j - 1)], j != k gives E[k_1 k_2].
    double second_factorial(int j, int k) const {
        double r = 0.0;
        for (const Outcome& o : outcomes_) {
            const double kj = (j == 0) ? o.k1 : o.k2;
            const double kk = (k == 0) ? o.k1 : o.k2;
            r += (j == k) ? o.p * kj * (kj - 1.0) : o.p * kj * kk;
        }
        return r;
    }

    std::pair<int, int> sample(double u) const {
        const double target = u * total_;
        for (std::size_t i = 0; i + 1 < cum_.size(); ++i) {
            if (target < cum_[i]) return {outcomes_[i].k1, outcomes_[i].k2};
        }
        const Outcome& last = outcomes_.back();
        return {last.k1, last.k2};
    }

private:
    static double ipow(double s, int k) {
        double r = 1.0;
        for (int i = 0; i < k; ++i) r *= s;
        return r;
    }

    std::vector<Outcome> outcomes_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

} // namespace bhlab
