#pragma once

#include <string>
#include <vector>

#include "gapbench/core/rng.hpp"
#include "gapbench/dyncore/model.hpp"

namespace gapbench::tasks {

using dyncore::Vec;
using dyncore::Vec2;

enum class Tier { easy, intermediate, hard };

inline std::string tier_name(Tier t) {
    switch (t) {
        case Tier::easy: return "easy";
        case Tier::intermediate: return "intermediate";
        case Tier::hard: return "hard";
    }
    throw ContractViolation("unreachable tier");
}

inline Tier tier_by_name(const std::string& s) {
    if (s == "easy") return Tier::easy;
    if (s == "intermediate") return Tier::intermediate;
    if (s == "hard") return Tier::hard;
    throw ContractViolation("unknown tier: " + s);
}

struct RewardWeights {
    double goal = 10.0;   // per-step bonus inside target zone
    double dist = 1.0;    // distance-to-goal shaping
    double limit = 5.0;   // joint-limit hit
    double table = 5.0;   // table strike (reach)
    double reach = 0.5;   // ee-to-object shaping (push)
    double fall = 10.0;   // object or ee leaving the workspace
};

// Episode-level contract of one task: what counts as success, how long an
// episode runs, what the policy sees and commands, and where goals live.
struct TaskSpec {
    std::string name;
    double horizon_s = 6.0;
    double success_threshold = 0.01;  // m
    double hold_s = 0.5;
    int obs_dim = 0;
    int act_dim = 0;
    bool cartesian_action = true;      // false: joint-velocity action
    std::vector<int> position_dims;    // observation dims carrying positions
    RewardWeights weights;

    Vec start_q;             // nominal joint configuration at reset
    double start_jitter = 0.01;  // rad, uniform per joint

    // Goal region; tier goals must lie inside it.
    Vec2 goal_lo = Vec2::Zero();
    Vec2 goal_hi = Vec2::Zero();
    Vec2 goal_easy = Vec2::Zero();
    Vec2 goal_intermediate = Vec2::Zero();
    Vec2 goal_hard = Vec2::Zero();

    // push: sampled ee start band and puck placement relative to the ee
    Vec2 ee_start_lo = Vec2::Zero();
    Vec2 ee_start_hi = Vec2::Zero();
    double puck_gap_lo = 0.047, puck_gap_hi = 0.053;  // center distance, m
    double puck_dir_cone = 0.5236;                    // +/-30 deg toward goal
    Vec2 table_lo = Vec2::Zero();  // push: puck falls outside this rectangle
    Vec2 table_hi = Vec2::Zero();

    // slide: puck start square
    Vec2 puck_start_lo = Vec2::Zero();
    Vec2 puck_start_hi = Vec2::Zero();

    int horizon_steps(double control_period) const {
        return static_cast<int>(std::round(horizon_s / control_period));
    }
    int hold_steps(double control_period) const {
        return static_cast<int>(std::round(hold_s / control_period));
    }

    Vec2 tier_goal(Tier t) const {
        switch (t) {
            case Tier::easy: return goal_easy;
            case Tier::intermediate: return goal_intermediate;
            case Tier::hard: return goal_hard;
        }
        throw ContractViolation("unreachable tier");
    }

    Vec2 sample_goal(Rng& rng) const {
        return Vec2(rng.uniform(goal_lo[0], goal_hi[0]), rng.uniform(goal_lo[1], goal_hi[1]));
    }
};

inline TaskSpec reach_task() {
    TaskSpec t;
    t.name = "reach";
    t.horizon_s = 6.0;
    t.success_threshold = 0.01;
    t.obs_dim = 4;  // goal - ee, ee velocity
    t.act_dim = 2;
    t.cartesian_action = true;
    t.position_dims = {0, 1};
    t.start_q = (Vec(2) << -1.47644, 2.39463).finished();  // ee near (0.18, -0.10)
    // Goal line 2.5 cm above the table.
    t.goal_lo = Vec2(0.12, -0.325);
    t.goal_hi = Vec2(0.42, -0.325);
    t.goal_easy = Vec2(0.18, -0.325);
    t.goal_intermediate = Vec2(0.30, -0.325);
    t.goal_hard = Vec2(0.42, -0.325);
    return t;
}

inline TaskSpec push_task() {
    TaskSpec t;
    t.name = "push";
    t.horizon_s = 8.0;
    t.success_threshold = 0.03;
    t.obs_dim = 10;  // puck - ee, goal - puck, ee vel, puck vel, spin sincos
    t.act_dim = 2;
    t.cartesian_action = true;
    t.position_dims = {0, 1, 2, 3};
    t.start_q = (Vec(3) << 1.35, -2.45, 1.35).finished();  // folded, ee near the start band
    t.ee_start_lo = Vec2(0.15, -0.06);
    t.ee_start_hi = Vec2(0.22, 0.06);
    t.goal_lo = Vec2(0.28, -0.14);
    t.goal_hi = Vec2(0.48, 0.14);
    t.goal_easy = Vec2(0.32, 0.0);
    t.goal_intermediate = Vec2(0.40, 0.07);
    t.goal_hard = Vec2(0.46, -0.12);
    t.table_lo = Vec2(0.0, -0.28);
    t.table_hi = Vec2(0.58, 0.28);
    return t;
}

inline TaskSpec slide_task() {
    TaskSpec t;
    t.name = "slide";
    t.horizon_s = 6.0;
    t.success_threshold = 0.023;
    t.obs_dim = 10;  // puck - goal, puck vel, spin sincos, plate q, plate qdot
    t.act_dim = 2;
    t.cartesian_action = false;
    t.position_dims = {0, 1};
    t.start_q = Vec::Zero(2);
    t.start_jitter = 0.0;  // plate starts level
    t.goal_lo = Vec2(0.06, 0.06);
    t.goal_hi = Vec2(0.06, 0.06);  // single goal
    t.goal_easy = Vec2(0.06, 0.06);
    t.goal_intermediate = Vec2(0.06, 0.06);
    t.goal_hard = Vec2(0.06, 0.06);
    t.puck_start_lo = Vec2(-0.09, -0.09);
    t.puck_start_hi = Vec2(-0.03, -0.03);
    return t;
}

inline TaskSpec task_by_name(const std::string& name) {
    if (name == "reach") return reach_task();
    if (name == "push") return push_task();
    if (name == "slide") return slide_task();
    throw ContractViolation("unknown task: " + name);
}

}  // namespace gapbench::tasks
