#include <gtest/gtest.h>

#include <cmath>

#include "gapbench/tasks/environment.hpp"

using namespace gapbench;
using namespace gapbench::tasks;
using randomize::make_regime;
using randomize::RegimeKind;
using randomize::RegimeSpec;

namespace {

Environment make_env(const std::string& task, RegimeKind regime, uint64_t seed) {
    const auto model = dyncore::model_by_name(task);
    return Environment(model, task_by_name(task), make_regime(regime, model), seed);
}

// Proportional reach policy on the raw observation layout.
Vec reach_policy(const Vec& obs) {
    Vec a(2);
    a[0] = 10.0 * obs[0] - 0.8 * obs[2];
    a[1] = 10.0 * obs[1] - 0.8 * obs[3];
    return a.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace

TEST(Task, SpecsExposeExpectedShapes) {
    const auto reach = reach_task();
    EXPECT_EQ(reach.horizon_steps(0.1), 60);
    EXPECT_EQ(reach.hold_steps(0.1), 5);
    EXPECT_EQ(reach.obs_dim, 4);
    const auto push = push_task();
    EXPECT_EQ(push.horizon_steps(0.1), 80);
    EXPECT_DOUBLE_EQ(push.success_threshold, 0.03);
    const auto slide = slide_task();
    EXPECT_EQ(slide.horizon_steps(0.1), 60);
    EXPECT_DOUBLE_EQ(slide.success_threshold, 0.023);
    EXPECT_THROW(task_by_name("juggle"), ContractViolation);
}

TEST(Task, TierGoalsLieInsideGoalRegion) {
    for (const auto& name : {"reach", "push", "slide"}) {
        const auto t = task_by_name(name);
        for (Tier tier : {Tier::easy, Tier::intermediate, Tier::hard}) {
            const Vec2 g = t.tier_goal(tier);
            EXPECT_GE(g[0], t.goal_lo[0]) << name;
            EXPECT_LE(g[0], t.goal_hi[0]) << name;
            EXPECT_GE(g[1], t.goal_lo[1]) << name;
            EXPECT_LE(g[1], t.goal_hi[1]) << name;
        }
    }
}

TEST(Task, ReachStartPoseMatchesIntendedEePosition) {
    const auto model = dyncore::reach_model();
    const auto t = reach_task();
    const Vec2 ee = dyncore::fk_ee(model, model.baseline, t.start_q);
    EXPECT_NEAR(ee[0], 0.18, 1e-3);
    EXPECT_NEAR(ee[1], -0.10, 1e-3);
}

TEST(Environment, ResetIsDeterministicPerEpisode) {
    auto a = make_env("reach", RegimeKind::DR, 9001);
    auto b = make_env("reach", RegimeKind::DR, 9001);
    const Vec oa = a.reset(5), ob = b.reset(5);
    EXPECT_EQ(oa, ob);
    EXPECT_EQ(a.realization().params.link_masses, b.realization().params.link_masses);
    const Vec oc = a.reset(6);
    EXPECT_NE(oa, oc);
}

TEST(Environment, EpisodeReplaysBitForBit) {
    auto a = make_env("push", RegimeKind::RFIPlus, 17);
    auto b = make_env("push", RegimeKind::RFIPlus, 17);
    Vec oa = a.reset(3), ob = b.reset(3);
    Vec act = Vec::Constant(2, 0.3);
    for (int i = 0; i < 15; ++i) {
        const auto ra = a.step(act);
        const auto rb = b.step(act);
        ASSERT_EQ(ra.obs, rb.obs) << "step " << i;
        ASSERT_EQ(ra.reward, rb.reward);
    }
    EXPECT_EQ(a.arm_state().q, b.arm_state().q);
    EXPECT_EQ(a.puck().pos, b.puck().pos);
}

// A zero-amplitude force regime must replay the unrandomized rollout exactly:
// unused randomness is never drawn, so the streams stay aligned.
TEST(Environment, ZeroWidthRfiMatchesNrBitwise) {
    const auto model = dyncore::push_model();
    RegimeSpec zero_rfi = make_regime(RegimeKind::RFI, model);
    zero_rfi.rfi_joint_fraction = 0.0;
    zero_rfi.rfi_object_fraction = 0.0;
    Environment nr(model, push_task(), make_regime(RegimeKind::NR, model), 4242);
    Environment zr(model, push_task(), zero_rfi, 4242);

    Vec oa = nr.reset(0), ob = zr.reset(0);
    ASSERT_EQ(oa, ob);
    for (int i = 0; i < 30; ++i) {
        Vec act(2);
        act << std::sin(0.2 * i), std::cos(0.3 * i);
        const auto ra = nr.step(act);
        const auto rb = zr.step(act);
        ASSERT_EQ(ra.obs, rb.obs) << "diverged at step " << i;
        ASSERT_EQ(ra.reward, rb.reward);
    }
    EXPECT_EQ(nr.arm_state().q, zr.arm_state().q);
    EXPECT_EQ(nr.arm_state().v, zr.arm_state().v);
    EXPECT_EQ(nr.puck().pos, zr.puck().pos);
}

TEST(Environment, NonZeroRfiDiverges) {
    auto nr = make_env("reach", RegimeKind::NR, 4242);
    auto rf = make_env("reach", RegimeKind::RFI, 4242);
    nr.reset(0);
    rf.reset(0);
    Vec act = Vec::Zero(2);
    nr.step(act);
    rf.step(act);
    EXPECT_NE(nr.arm_state().v, rf.arm_state().v);
}

TEST(Environment, ReachZeroActionHoldsArmStill) {
    auto env = make_env("reach", RegimeKind::NR, 1);
    env.reset(0);
    const Vec2 ee0 = env.ee_position();
    for (int i = 0; i < 10; ++i) env.step(Vec::Zero(2));
    EXPECT_LT((env.ee_position() - ee0).norm(), 1e-3);
}

TEST(Environment, ScriptedReachPolicySucceedsOnAllTiers) {
    const auto t = reach_task();
    for (Tier tier : {Tier::easy, Tier::intermediate, Tier::hard}) {
        auto env = make_env("reach", RegimeKind::NR, 2);
        Vec obs = env.reset(0, t.tier_goal(tier));
        double final_dist = 1e9;
        while (true) {
            const auto out = env.step(reach_policy(obs));
            obs = out.obs;
            if (out.terminated || out.truncated) {
                final_dist = env.task_distance();
                break;
            }
        }
        EXPECT_TRUE(env.success()) << tier_name(tier) << " dist " << final_dist;
    }
}

TEST(Environment, SuccessRequiresHoldingThroughTheEnd) {
    const auto t = reach_task();
    auto env = make_env("reach", RegimeKind::NR, 2);
    Vec obs = env.reset(0, t.tier_goal(Tier::easy));
    for (int i = 0; i < 57; ++i) obs = env.step(reach_policy(obs)).obs;
    EXPECT_GT(env.steps_done(), 0);
    Vec away(2);
    away << 0.0, 1.0;  // bolt upward just before the horizon
    while (!env.episode_over()) env.step(away);
    EXPECT_FALSE(env.success());
}

TEST(Environment, ScriptedPushMakesContactAndMovesPuck) {
    auto env = make_env("push", RegimeKind::NR, 3);
    Vec obs = env.reset(1);
    const Vec2 puck0 = env.puck().pos;
    const Vec2 goal = env.goal();
    for (int i = 0; i < 40 && !env.episode_over(); ++i) {
        // Drive the ee through the puck center.
        Vec2 to_puck(obs[0], obs[1]);
        Vec a(2);
        a << 12.0 * to_puck[0], 12.0 * to_puck[1];
        obs = env.step(a.cwiseMax(-1.0).cwiseMin(1.0)).obs;
    }
    const Vec2 moved = env.puck().pos - puck0;
    EXPECT_GT(moved.norm(), 0.01);
    EXPECT_GT(moved.dot(goal - puck0), 0.0);  // pushed roughly goalward
}

TEST(Environment, SlideTiltDrivesPuckAndDetectsFall) {
    auto env = make_env("slide", RegimeKind::NR, 4);
    env.reset(2);
    const Vec2 puck0 = env.puck().pos;
    Vec tilt(2);
    tilt << -1.0, -1.0;  // hold a strong constant tilt
    bool fell = false;
    double reward_at_fall = 0.0;
    for (int i = 0; i < 60 && !env.episode_over(); ++i) {
        const auto out = env.step(tilt);
        if (out.terminated) {
            fell = true;
            reward_at_fall = out.reward;
        }
    }
    EXPECT_NE(env.puck().pos, puck0);
    EXPECT_TRUE(fell);
    EXPECT_LT(reward_at_fall, -5.0);
    EXPECT_FALSE(env.success());
}

TEST(Environment, PushStartPlacementIsConsistent) {
    auto env = make_env("push", RegimeKind::NR, 5);
    for (uint64_t ep = 0; ep < 30; ++ep) {
        env.reset(ep);
        const Vec2 ee = env.ee_position();
        const auto& t = env.task();
        EXPECT_GE(ee[0], t.ee_start_lo[0] - 1e-5);
        EXPECT_LE(ee[0], t.ee_start_hi[0] + 1e-5);
        EXPECT_GE(ee[1], t.ee_start_lo[1] - 1e-5);
        EXPECT_LE(ee[1], t.ee_start_hi[1] + 1e-5);
        const double gap = (env.puck().pos - ee).norm();
        EXPECT_GE(gap, t.puck_gap_lo - 1e-9);
        EXPECT_LE(gap, t.puck_gap_hi + 1e-9);
        // Puck sits between the ee and the goal, within the placement cone.
        const Vec2 to_goal = env.goal() - ee;
        const Vec2 to_puck = env.puck().pos - ee;
        const double cosang = to_goal.dot(to_puck) / (to_goal.norm() * to_puck.norm());
        EXPECT_GT(cosang, std::cos(t.puck_dir_cone) - 1e-6);
    }
}

TEST(Environment, ObservationDelayShiftsWhatThePolicySees) {
    const auto model = dyncore::reach_model();
    RegimeSpec delayed = make_regime(RegimeKind::RFIPlus, model);
    delayed.rfi_joint_fraction = 0.0;
    delayed.rfi_object_fraction = 0.0;
    delayed.obs_noise_dist = randomize::ParamDistribution::make_uniform(0.0, 0.0);
    delayed.obs_delay_dist = randomize::ParamDistribution::make_categorical({2.0}, {1.0});

    Environment lag(model, reach_task(), delayed, 99);
    Environment live(model, reach_task(), make_regime(RegimeKind::NR, model), 99);
    std::vector<Vec> live_obs;
    Vec ol = lag.reset(0);
    live_obs.push_back(live.reset(0));
    for (int i = 0; i < 10; ++i) {
        Vec act(2);
        act << 0.4, -0.2;
        const auto a = lag.step(act);
        const auto b = live.step(act);
        live_obs.push_back(b.obs);
        // Same physics, two-step-old readout.
        ASSERT_EQ(a.obs, live_obs[std::max(0, static_cast<int>(live_obs.size()) - 1 - 2)]);
    }
}

TEST(Environment, DescriptorVectorTracksRegime) {
    auto nr = make_env("reach", RegimeKind::NR, 6);
    nr.reset(0);
    EXPECT_EQ(nr.xi_dim(), 0);
    EXPECT_EQ(nr.true_xi().size(), 0);

    auto dr = make_env("reach", RegimeKind::DR, 6);
    dr.reset(0);
    EXPECT_EQ(dr.xi_dim(), 15);  // 2 masses, 2 damping, 2 dry friction, 6 gains, action noise, obs noise, delay
    const Vec xi = dr.true_xi();
    for (int i = 0; i < xi.size(); ++i) {
        EXPECT_GE(xi[i], -1.0);
        EXPECT_LE(xi[i], 1.0);
    }
    auto dr_push = make_env("push", RegimeKind::DR, 6);
    dr_push.reset(0);
    EXPECT_EQ(dr_push.xi_dim(), 23);
}

TEST(Environment, AuxVectorHasJointChannels) {
    auto env = make_env("push", RegimeKind::NR, 7);
    env.reset(0);
    EXPECT_EQ(env.aux_dim(), 9);
    const Vec before = env.aux_vector();
    Vec act(2);
    act << 0.5, 0.1;
    env.step(act);
    const Vec after = env.aux_vector();
    EXPECT_EQ(before.size(), after.size());
    EXPECT_NE(before, after);  // torques and joints moved
}

TEST(Environment, StepAfterEpisodeEndThrows) {
    auto env = make_env("reach", RegimeKind::NR, 8);
    env.reset(0);
    while (!env.episode_over()) env.step(Vec::Zero(2));
    EXPECT_THROW(env.step(Vec::Zero(2)), ContractViolation);
    EXPECT_THROW(make_env("reach", RegimeKind::NR, 8).step(Vec::Zero(2)), ContractViolation);
}

TEST(Environment, RejectsMalformedActions) {
    auto env = make_env("reach", RegimeKind::NR, 9);
    env.reset(0);
    EXPECT_THROW(env.step(Vec::Zero(3)), ContractViolation);
    Vec bad(2);
    bad << std::nan(""), 0.0;
    EXPECT_THROW(env.step(bad), NumericError);
}

TEST(Environment, HorizonTruncatesWithoutTermination) {
    auto env = make_env("reach", RegimeKind::NR, 10);
    env.reset(0);
    int steps = 0;
    bool truncated = false, terminated = false;
    while (!env.episode_over()) {
        const auto out = env.step(Vec::Zero(2));
        ++steps;
        truncated = out.truncated;
        terminated = out.terminated;
    }
    EXPECT_EQ(steps, 60);
    EXPECT_TRUE(truncated);
    EXPECT_FALSE(terminated);
}
