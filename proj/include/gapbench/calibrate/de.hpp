#pragma once

#include <limits>
#include <vector>

#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/dyncore/types.hpp"

namespace gapbench::calibrate {

using dyncore::Vec;

struct DEConfig {
    double weight = 0.8;     // differential weight F
    double crossover = 0.9;  // crossover rate CR
    int pop_per_dim = 15;
    int max_generations = 300;
    double tol = 0.0;  // stop early once the best value drops to tol
    uint64_t seed = 0;
};

struct DEResult {
    Vec best;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> history;  // best value after each generation
    int evaluations = 0;
};

// DE/rand/1/bin with bound clipping. Selection keeps the incumbent unless the
// trial is at least as good, so the best member can only improve. Non-finite
// objective values are treated as +inf rather than propagating.
template <typename F>
DEResult differential_evolution(F&& objective, const Vec& lo, const Vec& hi, const DEConfig& cfg) {
    const int dim = static_cast<int>(lo.size());
    require(dim >= 1, "differential_evolution: empty search space");
    require(hi.size() == dim, "differential_evolution: bound size mismatch");
    for (int d = 0; d < dim; ++d)
        require(hi[d] >= lo[d], "differential_evolution: hi < lo");
    require(cfg.weight > 0.0 && cfg.crossover >= 0.0 && cfg.crossover <= 1.0,
            "differential_evolution: bad F/CR");

    const int np = std::max(cfg.pop_per_dim * dim, 8);
    Rng rng = Rng::derive(cfg.seed, stream::kDe, 0, 0);

    auto safe_eval = [&](const Vec& x) {
        const double f = objective(x);
        return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    };

    DEResult res;
    std::vector<Vec> pop(np);
    std::vector<double> fit(np);
    for (int i = 0; i < np; ++i) {
        pop[i] = Vec(dim);
        for (int d = 0; d < dim; ++d) pop[i][d] = rng.uniform(lo[d], hi[d]);
        fit[i] = safe_eval(pop[i]);
        ++res.evaluations;
        if (fit[i] < res.best_value) {
            res.best_value = fit[i];
            res.best = pop[i];
        }
    }

    for (int gen = 0; gen < cfg.max_generations; ++gen) {
        for (int i = 0; i < np; ++i) {
            int r1, r2, r3;
            do r1 = static_cast<int>(rng.uniform_index(np)); while (r1 == i);
            do r2 = static_cast<int>(rng.uniform_index(np)); while (r2 == i || r2 == r1);
            do r3 = static_cast<int>(rng.uniform_index(np)); while (r3 == i || r3 == r1 || r3 == r2);

            Vec trial = pop[i];
            const int jrand = static_cast<int>(rng.uniform_index(dim));
            for (int d = 0; d < dim; ++d) {
                if (d == jrand || rng.uniform01() < cfg.crossover) {
                    trial[d] = pop[r1][d] + cfg.weight * (pop[r2][d] - pop[r3][d]);
                    trial[d] = std::clamp(trial[d], lo[d], hi[d]);
                }
            }
            const double f = safe_eval(trial);
            ++res.evaluations;
            if (f <= fit[i]) {
                pop[i] = std::move(trial);
                fit[i] = f;
                if (f < res.best_value) {
                    res.best_value = f;
                    res.best = pop[i];
                }
            }
        }
        res.history.push_back(res.best_value);
        if (res.best_value <= cfg.tol) break;
    }
    return res;
}

}  // namespace gapbench::calibrate
