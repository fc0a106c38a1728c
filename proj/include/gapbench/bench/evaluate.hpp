#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gapbench/agents/policy.hpp"
#include "gapbench/bench/pseudo_real.hpp"
#include "gapbench/core/stats.hpp"

namespace gapbench::bench {

using agents::Policy;
using dyncore::Mat;
using dyncore::Vec;

// Either an in-domain regime (fresh sample per episode) or the held-out
// fixed target.
struct EnvSource {
    bool pseudo_real = false;
    randomize::RegimeKind regime = randomize::RegimeKind::NR;
    PseudoRealSpec pr;

    static EnvSource in_domain(randomize::RegimeKind k) {
        EnvSource s;
        s.regime = k;
        return s;
    }
    static EnvSource target(PseudoRealSpec spec = {}) {
        EnvSource s;
        s.pseudo_real = true;
        s.pr = spec;
        return s;
    }
    std::string name() const {
        return pseudo_real ? "pseudo_real" : randomize::regime_name(regime);
    }
};

inline tasks::Environment make_environment(const dyncore::ModelSpec& model,
                                           const tasks::TaskSpec& task, const EnvSource& src,
                                           uint64_t seed) {
    if (src.pseudo_real) return make_pseudo_real_env(model, task, src.pr, seed);
    return tasks::Environment(model, task, randomize::make_regime(src.regime, model), seed);
}

struct EvalCell {
    std::string task, source, policy, tier;
    int n = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_final_distance = 0.0;
};

struct Trajectory {
    std::string tier;
    int episode = 0;
    bool success = false;
    double ret = 0.0;
    double final_distance = 0.0;
    Mat path;  // rows of (x, y): end effector for arms, object for the plate
    dyncore::Vec2 goal;
};

struct EvalSpec {
    std::vector<tasks::Tier> tiers{tasks::Tier::easy, tasks::Tier::intermediate,
                                   tasks::Tier::hard};
    int episodes = 100;                // split across tiers
    int trajectories_per_tier = 0;     // optional path capture for figures
    int episode_base = 1000000;        // keeps eval streams clear of training
};

struct EvalResult {
    std::vector<EvalCell> cells;
    std::vector<Trajectory> trajectories;
    int n = 0;
    int successes = 0;
    double success_rate = 0.0;
};

// Runs one episode while recording the task-relevant planar path.
inline Trajectory traced_episode(tasks::Environment& env, Policy& pol, int episode,
                                 const dyncore::Vec2& goal) {
    agents::PolicyRuntime rt = agents::make_runtime(pol);
    agents::runtime_reset(pol, rt);
    Vec obs = env.reset(episode, goal);
    std::vector<dyncore::Vec2> pts;
    const bool use_object = env.model().has_object;
    pts.push_back(use_object ? env.puck().pos : env.ee_position());
    Trajectory tr;
    while (true) {
        const Vec a = agents::policy_act(pol, rt, obs);
        const auto sr = env.step(a);
        agents::runtime_feedback(pol, rt, obs, a, env.aux_vector());
        pts.push_back(use_object ? env.puck().pos : env.ee_position());
        tr.ret += sr.reward;
        obs = sr.obs;
        if (sr.terminated || sr.truncated) break;
    }
    tr.episode = episode;
    tr.success = env.success();
    tr.final_distance = env.task_distance();
    tr.goal = goal;
    tr.path = Mat(static_cast<long>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i)
        tr.path.row(static_cast<long>(i)) = pts[i].transpose();
    return tr;
}

inline EvalResult evaluate_policy(const dyncore::ModelSpec& model, const tasks::TaskSpec& task,
                                  const EnvSource& src, Policy& pol, const EvalSpec& spec,
                                  uint64_t seed) {
    require(!spec.tiers.empty() && spec.episodes > 0, "evaluate: empty spec");
    EvalResult result;
    tasks::Environment env = make_environment(model, task, src, seed);
    const int per_tier = spec.episodes / static_cast<int>(spec.tiers.size());
    const int extra = spec.episodes % static_cast<int>(spec.tiers.size());
    int episode = spec.episode_base;
    for (std::size_t ti = 0; ti < spec.tiers.size(); ++ti) {
        const tasks::Tier tier = spec.tiers[ti];
        const dyncore::Vec2 goal = task.tier_goal(tier);
        const int n = per_tier + (static_cast<int>(ti) < extra ? 1 : 0);
        EvalCell cell;
        cell.task = task.name;
        cell.source = src.name();
        cell.policy = policy_name(pol.kind);
        cell.tier = tasks::tier_name(tier);
        cell.n = n;
        for (int e = 0; e < n; ++e) {
            if (e < spec.trajectories_per_tier) {
                Trajectory tr = traced_episode(env, pol, episode++, goal);
                tr.tier = cell.tier;
                cell.successes += tr.success ? 1 : 0;
                cell.mean_return += tr.ret;
                cell.mean_final_distance += tr.final_distance;
                result.trajectories.push_back(std::move(tr));
            } else {
                const auto out = agents::run_episode(env, pol, episode++, goal);
                cell.successes += out.success ? 1 : 0;
                cell.mean_return += out.ret;
                cell.mean_final_distance += out.final_distance;
            }
        }
        cell.success_rate = static_cast<double>(cell.successes) / n;
        cell.mean_return /= n;
        cell.mean_final_distance /= n;
        result.cells.push_back(cell);
        result.n += n;
        result.successes += cell.successes;
    }
    result.success_rate = static_cast<double>(result.successes) / result.n;
    return result;
}

}  // namespace gapbench::bench
