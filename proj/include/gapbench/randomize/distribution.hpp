#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"

namespace gapbench::randomize {

enum class DistKind { uniform, loguniform_factor, categorical };

// One marginal over a scalar parameter. loguniform_factor multiplies the
// baseline value by a log-uniform factor; the other kinds ignore the baseline.
struct ParamDistribution {
    DistKind kind = DistKind::uniform;
    double lo = 0.0, hi = 0.0;
    std::vector<double> values;  // categorical support
    std::vector<double> probs;

    static ParamDistribution make_uniform(double lo, double hi) {
        ParamDistribution d;
        d.kind = DistKind::uniform;
        d.lo = lo;
        d.hi = hi;
        d.validate();
        return d;
    }

    static ParamDistribution factor(double lo, double hi) {
        ParamDistribution d;
        d.kind = DistKind::loguniform_factor;
        d.lo = lo;
        d.hi = hi;
        d.validate();
        return d;
    }

    static ParamDistribution make_categorical(std::vector<double> values,
                                              std::vector<double> probs) {
        ParamDistribution d;
        d.kind = DistKind::categorical;
        d.values = std::move(values);
        d.probs = std::move(probs);
        d.validate();
        return d;
    }

    void validate() const {
        switch (kind) {
            case DistKind::uniform:
                require(hi >= lo, "uniform: hi < lo");
                break;
            case DistKind::loguniform_factor:
                require(lo > 0.0 && hi >= lo, "loguniform_factor: need 0 < lo <= hi");
                break;
            case DistKind::categorical: {
                require(!values.empty(), "categorical: empty support");
                require(values.size() == probs.size(), "categorical: values/probs size mismatch");
                double sum = 0.0;
                for (double p : probs) {
                    require(p >= 0.0, "categorical: negative probability");
                    sum += p;
                }
                require(std::abs(sum - 1.0) <= 1e-9, "categorical: probabilities must sum to 1");
                break;
            }
        }
    }

    double sample(Rng& rng, double baseline) const {
        switch (kind) {
            case DistKind::uniform:
                return rng.uniform(lo, hi);
            case DistKind::loguniform_factor:
                return baseline * std::exp(rng.uniform(std::log(lo), std::log(hi)));
            case DistKind::categorical: {
                const double u = rng.uniform01();
                double acc = 0.0;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    acc += probs[i];
                    if (u < acc) return values[i];
                }
                return values.back();  // guard against rounding in the partial sums
            }
        }
        throw ContractViolation("unreachable distribution kind");
    }
};

}  // namespace gapbench::randomize
