#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bhlab/lifetime.hpp"
#include "bhlab/model.hpp"
#include "bhlab/rng.hpp"

namespace bhlab {

// Snapshot of one replicate at the horizon. truncated means the event budget
// ran out first; such a sample is not a draw from the process law and must be
// excluded from estimates.
struct PopulationSample {
    std::int64_t z1 = 0;
    std::int64_t z2 = 0;
    std::uint64_t events = 0;
    bool truncated = false;
};

struct SimConfig {
    std::int64_t N = 1;
    double t = 0.0;
    std::uint64_t replicates = 1;
    std::uint64_t seed = 0;
    std::uint64_t event_budget = 10'000'000;
};

struct BatchResult {
    std::vector<PopulationSample> samples;
    std::uint64_t truncated = 0;
};

inline double sample_lifetime(const LightTail& law, double u) { return quantile(law, u); }
inline double sample_lifetime(const ParetoTail& law, double u) { return quantile(law, u); }

inline std::pair<int, int> sample_offspring(const OffspringLaw& law, double u) {
    return law.sample(u);
}

// One exact draw of Z(t) started from n1 type-1 and n2 type-2 particles at
// time 0. Depth-first over a stack of (birth time, type) records; processing
// order does not affect the law, only the pairing of draws with particles.
inline PopulationSample simulate_from(const BranchingModel& model, std::int64_t n1, std::int64_t n2,
                                      double t, CounterRng& stream,
                                      std::uint64_t event_budget = 10'000'000) {
    struct Record {
        double birth;
        std::uint8_t type;
    };
    PopulationSample out;
    std::vector<Record> stack;
    stack.reserve(64);
    for (std::int64_t i = 0; i < n1; ++i) stack.push_back({0.0, 0});
    for (std::int64_t i = 0; i < n2; ++i) stack.push_back({0.0, 1});

    while (!stack.empty()) {
        const Record rec = stack.back();
        stack.pop_back();
        const double life = rec.type == 0 ? sample_lifetime(model.life1, stream.uniform())
                                          : sample_lifetime(model.life2, stream.uniform());
        const double death = rec.birth + life;
        if (death > t) {
            (rec.type == 0 ? out.z1 : out.z2) += 1;
            continue;
        }
        if (++out.events > event_budget) {
            out.truncated = true;
            return out;
        }
        const OffspringLaw& law = rec.type == 0 ? model.offspring1 : model.offspring2;
        const auto [k1, k2] = sample_offspring(law, stream.uniform());
        for (int i = 0; i < k1; ++i) stack.push_back({death, 0});
        for (int i = 0; i < k2; ++i) stack.push_back({death, 1});
    }
    return out;
}

inline PopulationSample simulate_population(const BranchingModel& model, std::int64_t N, double t,
                                            CounterRng& stream,
                                            std::uint64_t event_budget = 10'000'000) {
    return simulate_from(model, 0, N, t, stream, event_budget);
}

// Replicate r always uses stream (seed, r), so the result is a pure function
// of (model, config) no matter how replicates are scheduled.
inline BatchResult simulate_batch(const BranchingModel& model, const SimConfig& config) {
    BatchResult out;
    out.samples.reserve(config.replicates);
    for (std::uint64_t r = 0; r < config.replicates; ++r) {
        CounterRng stream(config.seed, r);
        out.samples.push_back(simulate_population(model, config.N, config.t, stream, config.event_budget));
        if (out.samples.back().truncated) ++out.truncated;
    }
    return out;
}

} // namespace bhlab
