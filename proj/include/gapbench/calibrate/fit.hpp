#pragma once

#include <string>
#include <vector>

#include "gapbench/calibrate/de.hpp"
#include "gapbench/core/svg.hpp"
#include "gapbench/tasks/environment.hpp"

namespace gapbench::calibrate {

using dyncore::Mat;
using dyncore::ModelSpec;
using dyncore::Vec2;
using tasks::Environment;
using tasks::TaskSpec;

// Deterministic excitation used for calibration rollouts: smooth, multi-tone,
// and gentle enough to keep every task away from its failure states.
inline Vec scripted_excitation(const TaskSpec& task, int k) {
    const double t = 0.1 * k;
    Vec a(task.act_dim);
    if (task.name == "reach") {
        a << 0.5 * std::sin(2.0 * M_PI * 0.5 * t), 0.5 * std::cos(2.0 * M_PI * 0.3 * t);
    } else if (task.name == "push") {
        const double ramp = std::min(1.0, t / 1.0);
        a << 0.6 * ramp * std::cos(2.0 * M_PI * 0.2 * t), 0.6 * ramp * std::sin(2.0 * M_PI * 0.35 * t);
    } else {
        const double ramp = std::min(1.0, t / 2.0);
        a << 0.6 * ramp * std::sin(2.0 * M_PI * 0.25 * t), 0.6 * ramp * std::sin(2.0 * M_PI * 0.4 * t + 1.0);
    }
    return a;
}

// Measurement channels a bench setup could record: end-effector position and
// velocity for arms, object position and velocity for the plate.
inline Vec measurement_channels(const Environment& env) {
    Vec c(4);
    if (env.model().kind == dyncore::ArmKind::serial_chain) {
        const Vec2 ee = env.ee_position();
        const Vec2 eev = dyncore::ee_velocity(env.model(), env.realization().params,
                                              env.arm_state().q, env.arm_state().v);
        c << ee[0], ee[1], eev[0], eev[1];
    } else {
        c << env.puck().pos[0], env.puck().pos[1], env.puck().vel[0], env.puck().vel[1];
    }
    return c;
}

inline randomize::EnvRealization pinned_realization(const ModelSpec& model,
                                                    const dyncore::DynamicsParams& params) {
    randomize::EnvRealization env;
    env.params = params;
    env.rfi_joint_halfwidth = Vec::Zero(model.n_joints);
    return env;
}

// Rolls the scripted excitation under pinned dynamics. Rows are policy steps,
// columns measurement channels; episodes differ only in their start draw.
inline std::vector<Mat> collect_channels(const ModelSpec& model, const TaskSpec& task,
                                         const dyncore::DynamicsParams& params, int episodes,
                                         uint64_t seed) {
    tasks::PseudoRealEffects pin;
    pin.fixed_env = pinned_realization(model, params);
    Environment env(model, task, randomize::make_regime(randomize::RegimeKind::NR, model), seed,
                    pin);
    std::vector<Mat> out;
    for (int ep = 0; ep < episodes; ++ep) {
        env.reset(static_cast<uint64_t>(ep));
        std::vector<Vec> rows;
        rows.push_back(measurement_channels(env));
        for (int k = 0; !env.episode_over(); ++k) {
            env.step(scripted_excitation(task, k));
            rows.push_back(measurement_channels(env));
        }
        Mat m(static_cast<int>(rows.size()), 4);
        for (int r = 0; r < m.rows(); ++r) m.row(r) = rows[r].transpose();
        out.push_back(std::move(m));
    }
    return out;
}

// Mean squared error across aligned steps and channels; episodes that end at
// different lengths pay a flat penalty per missing step so early failures
// cannot look like good fits.
inline double channel_mse(const std::vector<Mat>& target, const std::vector<Mat>& sim) {
    require(target.size() == sim.size(), "channel_mse: episode count mismatch");
    double se = 0.0;
    long count = 0;
    double penalty = 0.0;
    for (std::size_t e = 0; e < target.size(); ++e) {
        const long rows = std::min(target[e].rows(), sim[e].rows());
        se += (target[e].topRows(rows) - sim[e].topRows(rows)).squaredNorm();
        count += rows * target[e].cols();
        penalty += 1.0 * static_cast<double>(std::max(target[e].rows(), sim[e].rows()) - rows);
    }
    require(count > 0, "channel_mse: empty trajectories");
    return se / static_cast<double>(count) + penalty;
}

struct FitSpec {
    std::vector<std::string> param_names;
    Vec lo, hi;  // absolute bounds, one per name
    int episodes = 2;
    DEConfig de;
};

struct FitResult {
    dyncore::DynamicsParams params;  // baseline with the fitted values applied
    Vec fitted;                      // raw fitted vector, ordered as param_names
    double mse = 0.0;
    std::vector<double> history;
    int evaluations = 0;
};

// Fits the named dynamics parameters so scripted rollouts reproduce the
// target channels recorded on the reference system.
inline FitResult fit_baseline(const ModelSpec& model, const TaskSpec& task,
                              const std::vector<Mat>& target, const FitSpec& spec) {
    require(!spec.param_names.empty(), "fit_baseline: nothing to fit");
    require(spec.lo.size() == static_cast<long>(spec.param_names.size()) &&
                spec.hi.size() == spec.lo.size(),
            "fit_baseline: bounds shape");
    const auto reg = randomize::param_registry(model);
    std::vector<const randomize::ParamAccessor*> acc;
    for (const auto& name : spec.param_names) {
        const auto* a = randomize::find_param(reg, name);
        require(a != nullptr, "fit_baseline: unknown parameter " + name);
        acc.push_back(a);
    }

    auto apply = [&](const Vec& x) {
        dyncore::DynamicsParams p = model.baseline;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i]->set(p, x[i]);
        return p;
    };
    auto objective = [&](const Vec& x) {
        const auto p = apply(x);
        if (p.violated_invariant()) return std::numeric_limits<double>::infinity();
        return channel_mse(target, collect_channels(model, task, p, spec.episodes, 0));
    };

    const DEResult de = differential_evolution(objective, spec.lo, spec.hi, spec.de);
    FitResult res;
    res.params = apply(de.best);
    res.fitted = de.best;
    res.mse = de.best_value;
    res.history = de.history;
    res.evaluations = de.evaluations;
    return res;
}

// Envelope of a randomization regime around the scripted excitation, plus how
// much of a reference trajectory it covers.
struct SpreadReport {
    std::vector<double> t;
    Mat mean, lo, hi;        // steps x channels
    double coverage = 1.0;   // fraction of reference samples inside [lo, hi]
    int rollouts = 0;
};

inline SpreadReport compute_spread(const ModelSpec& model, const TaskSpec& task,
                                   const randomize::RegimeSpec& regime, int rollouts,
                                   uint64_t seed, const Mat* reference = nullptr) {
    require(rollouts >= 2, "compute_spread: need at least two rollouts");
    Environment env(model, task, regime, seed);
    std::vector<Mat> traces;
    long min_rows = std::numeric_limits<long>::max();
    for (int r = 0; r < rollouts; ++r) {
        env.reset(static_cast<uint64_t>(r));
        std::vector<Vec> rows;
        rows.push_back(measurement_channels(env));
        for (int k = 0; !env.episode_over(); ++k) {
            env.step(scripted_excitation(task, k));
            rows.push_back(measurement_channels(env));
        }
        Mat m(static_cast<long>(rows.size()), 4);
        for (long i = 0; i < m.rows(); ++i) m.row(i) = rows[i].transpose();
        min_rows = std::min(min_rows, m.rows());
        traces.push_back(std::move(m));
    }

    SpreadReport rep;
    rep.rollouts = rollouts;
    rep.mean = Mat::Zero(min_rows, 4);
    rep.lo = Mat::Constant(min_rows, 4, std::numeric_limits<double>::infinity());
    rep.hi = Mat::Constant(min_rows, 4, -std::numeric_limits<double>::infinity());
    for (const auto& m : traces) {
        rep.mean += m.topRows(min_rows);
        rep.lo = rep.lo.cwiseMin(m.topRows(min_rows));
        rep.hi = rep.hi.cwiseMax(m.topRows(min_rows));
    }
    rep.mean /= static_cast<double>(rollouts);
    for (long i = 0; i < min_rows; ++i) rep.t.push_back(0.1 * static_cast<double>(i));

    if (reference != nullptr) {
        long inside = 0, total = 0;
        const long rows = std::min(min_rows, reference->rows());
        for (long i = 0; i < rows; ++i)
            for (long c = 0; c < 4; ++c) {
                ++total;
                if ((*reference)(i, c) >= rep.lo(i, c) && (*reference)(i, c) <= rep.hi(i, c))
                    ++inside;
            }
        rep.coverage = total > 0 ? static_cast<double>(inside) / total : 1.0;
    }
    return rep;
}

inline void write_spread_svg(const SpreadReport& rep, const std::string& path, int channel = 0,
                             const Mat* reference = nullptr) {
    require(channel >= 0 && channel < 4, "write_spread_svg: channel out of range");
    double lo = rep.lo.col(channel).minCoeff(), hi = rep.hi.col(channel).maxCoeff();
    if (reference != nullptr) {
        lo = std::min(lo, reference->col(channel).minCoeff());
        hi = std::max(hi, reference->col(channel).maxCoeff());
    }
    SvgFigure fig(rep.t.front(), rep.t.back(), lo, hi);
    fig.title("regime envelope, channel " + std::to_string(channel));
    fig.xlabel("time [s]");
    fig.ylabel("channel value");
    std::vector<double> mean_v, lo_v, hi_v;
    for (long i = 0; i < rep.mean.rows(); ++i) {
        mean_v.push_back(rep.mean(i, channel));
        lo_v.push_back(rep.lo(i, channel));
        hi_v.push_back(rep.hi(i, channel));
    }
    fig.envelope(rep.t, lo_v, hi_v, "#6699cc");
    fig.polyline(rep.t, mean_v, "#336699", 2.0);
    fig.legend_entry("regime mean", "#336699");
    if (reference != nullptr) {
        std::vector<double> ref_v;
        const long rows = std::min<long>(rep.mean.rows(), reference->rows());
        for (long i = 0; i < rows; ++i) ref_v.push_back((*reference)(i, channel));
        fig.polyline(std::vector<double>(rep.t.begin(), rep.t.begin() + rows), ref_v, "#cc3333",
                     2.0, "6,3");
        fig.legend_entry("reference", "#cc3333");
    }
    fig.write(path);
}

}  // namespace gapbench::calibrate
