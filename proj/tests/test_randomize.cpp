#include <gtest/gtest.h>

#include <cmath>

#include "gapbench/core/stats.hpp"
#include "gapbench/randomize/regime.hpp"

using namespace gapbench;
using namespace gapbench::randomize;
using dyncore::Vec;

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

TEST(Distribution, ValidatesBoundsAndProbabilities) {
    EXPECT_THROW(ParamDistribution::make_uniform(1.0, 0.5), ContractViolation);
    EXPECT_THROW(ParamDistribution::factor(0.0, 2.0), ContractViolation);
    EXPECT_THROW(ParamDistribution::factor(-0.5, 2.0), ContractViolation);
    EXPECT_THROW(ParamDistribution::make_categorical({1.0, 2.0}, {0.6, 0.6}), ContractViolation);
    EXPECT_THROW(ParamDistribution::make_categorical({1.0, 2.0}, {0.5}), ContractViolation);
    EXPECT_NO_THROW(ParamDistribution::make_categorical({1.0, 2.0}, {0.5, 0.5 + 1e-12}));
}

TEST(Distribution, LogUniformFactorStaysInRangeAndIsLogUniform) {
    const auto d = ParamDistribution::factor(0.5, 2.0);
    Rng rng(21);
    const double baseline = 1.3;
    const int n = 10000;
    std::vector<double> u;
    for (int i = 0; i < n; ++i) {
        const double x = d.sample(rng, baseline);
        ASSERT_GE(x, 0.5 * baseline);
        ASSERT_LE(x, 2.0 * baseline);
        // Probability transform: log of the factor should be uniform.
        u.push_back(std::log(x / (0.5 * baseline)) / std::log(4.0));
    }
    EXPECT_LT(ks_uniform01(u), 1.36 / std::sqrt(double(n)));  // alpha = 0.05
}

TEST(Distribution, CategoricalCountsWithinThreeSigma) {
    const auto d = ParamDistribution::make_categorical({0.0, 1.0, 2.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    Rng rng(22);
    const int n = 9000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(d.sample(rng, 0.0))];
    const double expect = n / 3.0;
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (int c : counts) EXPECT_NEAR(c, expect, 3.0 * sigma);
}

TEST(Distribution, CategoricalRespectsSkewedWeights) {
    const auto d = ParamDistribution::make_categorical({5.0, 7.0}, {0.9, 0.1});
    Rng rng(23);
    int hi = 0;
    for (int i = 0; i < 5000; ++i)
        if (d.sample(rng, 0.0) == 7.0) ++hi;
    EXPECT_NEAR(hi, 500, 3.0 * std::sqrt(5000 * 0.1 * 0.9));
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

TEST(Registry, ManifestCoversExpectedParameterCount) {
    EXPECT_EQ(manifest_names(dyncore::reach_model()).size(), 17u);
    EXPECT_EQ(manifest_names(dyncore::push_model()).size(), 27u);
    EXPECT_EQ(manifest_names(dyncore::slide_model()).size(), 19u);
}

TEST(Registry, AccessorsRoundTrip) {
    const auto model = dyncore::push_model();
    const auto reg = param_registry(model);
    dyncore::DynamicsParams p = model.baseline;
    for (const auto& a : reg) {
        const double v = a.get(p);
        a.set(p, v * 1.5);
        EXPECT_DOUBLE_EQ(a.get(p), v * 1.5) << a.name;
    }
    EXPECT_DOUBLE_EQ(p.link_masses[0], model.baseline.link_masses[0] * 1.5);
    EXPECT_EQ(find_param(reg, "no_such_param"), nullptr);
    ASSERT_NE(find_param(reg, "surface_friction_mu"), nullptr);
}

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

TEST(Regime, NrSamplesExactBaseline) {
    const auto model = dyncore::reach_model();
    const auto regime = make_regime(RegimeKind::NR, model);
    Rng rng(31);
    const auto env = sample_environment(model, regime, rng);
    EXPECT_EQ(env.params.link_masses, model.baseline.link_masses);
    EXPECT_EQ(env.params.joint_damping, model.baseline.joint_damping);
    EXPECT_EQ(env.obs_noise_std, 0.0);
    EXPECT_EQ(env.obs_delay_steps, 0);
    EXPECT_EQ(env.rfi_joint_halfwidth.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(env.rfi_object_halfwidth, 0.0);
}

TEST(Regime, DrPerturbsListedParametersOnly) {
    const auto model = dyncore::push_model();
    const auto regime = make_regime(RegimeKind::DR, model);
    EXPECT_TRUE(regime.dynamics_dists.count("link_mass_0"));
    EXPECT_TRUE(regime.dynamics_dists.count("gain_kp_2"));
    EXPECT_TRUE(regime.dynamics_dists.count("surface_friction_mu"));
    EXPECT_FALSE(regime.dynamics_dists.count("joint_armature_0"));
    EXPECT_FALSE(regime.dynamics_dists.count("object_radius"));

    Rng rng(32);
    const auto env = sample_environment(model, regime, rng);
    for (int i = 0; i < 3; ++i) {
        EXPECT_GE(env.params.link_masses[i], 0.5 * model.baseline.link_masses[i]);
        EXPECT_LE(env.params.link_masses[i], 2.0 * model.baseline.link_masses[i]);
        EXPECT_NE(env.params.link_masses[i], model.baseline.link_masses[i]);
    }
    EXPECT_EQ(env.params.object_radius, model.baseline.object_radius);
    EXPECT_EQ(env.params.joint_armature, model.baseline.joint_armature);
    EXPECT_GE(env.obs_noise_std, 0.0);
    EXPECT_LE(env.obs_noise_std, 0.005);
    EXPECT_GE(env.params.action_noise_range, 0.0);
    EXPECT_LE(env.params.action_noise_range, 0.05);
    EXPECT_GE(env.obs_delay_steps, 0);
    EXPECT_LE(env.obs_delay_steps, 2);
}

TEST(Regime, SamplingIsDeterministicPerSeed) {
    const auto model = dyncore::push_model();
    const auto regime = make_regime(RegimeKind::DR, model);
    Rng a(77), b(77), c(78);
    const auto ea = sample_environment(model, regime, a);
    const auto eb = sample_environment(model, regime, b);
    const auto ec = sample_environment(model, regime, c);
    EXPECT_EQ(ea.params.link_masses, eb.params.link_masses);
    EXPECT_EQ(ea.params.controller_gains[1].kp, eb.params.controller_gains[1].kp);
    EXPECT_NE(ea.params.link_masses, ec.params.link_masses);
}

TEST(Regime, ResamplesUntilValidThenGivesUp) {
    const auto model = dyncore::reach_model();
    RegimeSpec mixed = make_regime(RegimeKind::NR, model);
    mixed.dynamics_dists.emplace("joint_damping_0", ParamDistribution::make_uniform(-0.1, 2.0));
    Rng rng(41);
    const auto env = sample_environment(model, mixed, rng);  // invalid draws are retried
    EXPECT_GE(env.params.joint_damping[0], 0.0);

    RegimeSpec hopeless = make_regime(RegimeKind::NR, model);
    hopeless.dynamics_dists.emplace("link_mass_0", ParamDistribution::make_uniform(-2.0, -1.0));
    try {
        sample_environment(model, hopeless, rng);
        FAIL() << "expected ContractViolation";
    } catch (const ContractViolation& e) {
        EXPECT_NE(std::string(e.what()).find("link_masses"), std::string::npos);
    }
}

TEST(Regime, RejectsUnknownParameterName) {
    const auto model = dyncore::reach_model();
    RegimeSpec r = make_regime(RegimeKind::NR, model);
    r.dynamics_dists.emplace("object_mass", ParamDistribution::factor(0.5, 2.0));  // no object
    Rng rng(42);
    EXPECT_THROW(sample_environment(model, r, rng), ContractViolation);
}

// ---------------------------------------------------------------------------
// Random force injection
// ---------------------------------------------------------------------------

TEST(Rfi, JointHalfwidthsMatchStaticLoadFractions) {
    // Vertical-plane arm at full extension: tau_1 = (m1 l1/2 + m2 (l1 + l2/2)) g.
    const auto reach = dyncore::reach_model();
    const Vec w = rfi_joint_halfwidths(reach, 0.1);
    EXPECT_NEAR(w[0], 0.1 * (1.2 * 0.15 + 0.9 * (0.30 + 0.125)) * 9.81, 1e-9);
    EXPECT_NEAR(w[1], 0.1 * (0.9 * 0.125) * 9.81, 1e-9);

    // Horizontal arm uses the equivalent vertical-plane load as its scale.
    const auto push = dyncore::push_model();
    const Vec wp = rfi_joint_halfwidths(push, 0.1);
    const double t1 = (1.0 * 0.125 + 0.8 * (0.25 + 0.11) + 0.5 * (0.25 + 0.22 + 0.09)) * 9.81;
    EXPECT_NEAR(wp[0], 0.1 * t1, 1e-9);

    // Balanced plate: baseline puck weight at the plate edge.
    const auto slide = dyncore::slide_model();
    const Vec ws = rfi_joint_halfwidths(slide, 0.1);
    EXPECT_NEAR(ws[0], 0.1 * 0.08 * 9.81 * 0.15, 1e-12);
    EXPECT_NEAR(ws[1], ws[0], 1e-15);
}

TEST(Rfi, ObjectHalfwidthIsFractionOfBreakawayForce) {
    const auto push = dyncore::push_model();
    EXPECT_NEAR(rfi_object_halfwidth(push, 0.3), 0.3 * 0.30 * 0.12 * 9.81, 1e-12);
    const auto reach = dyncore::reach_model();
    EXPECT_EQ(rfi_object_halfwidth(reach, 0.3), 0.0);
}

TEST(Rfi, SamplesStayInBoundsAndCoverBothSigns) {
    Vec w(2);
    w << 0.5, 0.1;
    Rng rng(51);
    bool neg0 = false, pos0 = false;
    for (int i = 0; i < 2000; ++i) {
        const Vec f = sample_rfi(w, rng);
        ASSERT_LE(std::abs(f[0]), 0.5);
        ASSERT_LE(std::abs(f[1]), 0.1);
        neg0 = neg0 || f[0] < -0.1;
        pos0 = pos0 || f[0] > 0.1;
    }
    EXPECT_TRUE(neg0);
    EXPECT_TRUE(pos0);
}

TEST(Rfi, ZeroWidthConsumesNoRandomness) {
    Rng a(60), b(60);
    const Vec f = sample_rfi(Vec::Zero(3), a);
    EXPECT_EQ(f.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(sample_rfi_object(0.0, a).norm(), 0.0);
    EXPECT_EQ(a.next_u64(), b.next_u64());  // streams still aligned
}

// ---------------------------------------------------------------------------
// Observation corruption
// ---------------------------------------------------------------------------

TEST(ObsCorruption, ZeroNoiseIsIdentityAndConsumesNothing) {
    Rng a(61), b(61);
    Vec obs(3);
    obs << 1.0, -2.0, 0.5;
    const Vec out = corrupt_observation(obs, 0.0, a);
    EXPECT_EQ(out, obs);
    EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(ObsCorruption, NoiseScalesWithStd) {
    Rng rng(62);
    const Vec obs = Vec::Zero(2000);
    const Vec out = corrupt_observation(obs, 0.003, rng);
    std::vector<double> x(out.data(), out.data() + out.size());
    EXPECT_NEAR(mean(x), 0.0, 3.0 * 0.003 / std::sqrt(2000.0));
    EXPECT_NEAR(std::sqrt(sample_variance(x)), 0.003, 0.0004);
}

TEST(ObsCorruption, DelayBufferClampsToOldest) {
    DelayBuffer buf(2);
    Vec o0 = Vec::Constant(1, 0.0), o1 = Vec::Constant(1, 1.0), o2 = Vec::Constant(1, 2.0),
        o3 = Vec::Constant(1, 3.0);
    EXPECT_EQ(buf.push(o0)[0], 0.0);  // nothing older yet
    EXPECT_EQ(buf.push(o1)[0], 0.0);
    EXPECT_EQ(buf.push(o2)[0], 0.0);
    EXPECT_EQ(buf.push(o3)[0], 1.0);  // now a true 2-step delay
    buf.reset();
    EXPECT_EQ(buf.push(o3)[0], 3.0);
}

TEST(ObsCorruption, ZeroDelayPassesThrough) {
    DelayBuffer buf(0);
    Vec o = Vec::Constant(1, 7.0);
    EXPECT_EQ(buf.push(o)[0], 7.0);
    o[0] = 8.0;
    EXPECT_EQ(buf.push(o)[0], 8.0);
}
