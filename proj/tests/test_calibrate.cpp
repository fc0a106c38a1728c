#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gapbench/calibrate/fit.hpp"

using namespace gapbench;
using namespace gapbench::calibrate;
using dyncore::Vec;

namespace {

double sphere(const Vec& x) { return x.squaredNorm(); }

double rosenbrock(const Vec& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
}

}  // namespace

TEST(DifferentialEvolution, SolvesSphereToTightTolerance) {
    DEConfig cfg;
    cfg.seed = 1;
    cfg.max_generations = 400;
    cfg.tol = 1e-8;
    const Vec lo = Vec::Constant(5, -5.0), hi = Vec::Constant(5, 5.0);
    const auto res = differential_evolution(sphere, lo, hi, cfg);
    EXPECT_LT(res.best_value, 1e-6);
    EXPECT_LT(res.best.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(DifferentialEvolution, FindsRosenbrockValleyMinimum) {
    DEConfig cfg;
    cfg.seed = 2;
    cfg.max_generations = 3000;
    cfg.tol = 1e-10;
    const Vec lo = Vec::Constant(2, -2.0), hi = Vec::Constant(2, 2.0);
    const auto res = differential_evolution(rosenbrock, lo, hi, cfg);
    EXPECT_NEAR(res.best[0], 1.0, 1e-3);
    EXPECT_NEAR(res.best[1], 1.0, 1e-3);
}

TEST(DifferentialEvolution, RespectsBounds) {
    DEConfig cfg;
    cfg.seed = 3;
    cfg.max_generations = 50;
    // Optimum at the origin sits outside the box; best must stay inside.
    const Vec lo = Vec::Constant(3, 1.0), hi = Vec::Constant(3, 2.0);
    const auto res = differential_evolution(sphere, lo, hi, cfg);
    for (int d = 0; d < 3; ++d) {
        EXPECT_GE(res.best[d], 1.0);
        EXPECT_LE(res.best[d], 2.0);
    }
    EXPECT_NEAR(res.best_value, 3.0, 1e-6);
}

TEST(DifferentialEvolution, DeterministicPerSeedAndMonotone) {
    DEConfig cfg;
    cfg.seed = 4;
    cfg.max_generations = 60;
    const Vec lo = Vec::Constant(4, -3.0), hi = Vec::Constant(4, 3.0);
    const auto a = differential_evolution(sphere, lo, hi, cfg);
    const auto b = differential_evolution(sphere, lo, hi, cfg);
    EXPECT_EQ(a.best, b.best);
    EXPECT_EQ(a.history, b.history);
    for (std::size_t i = 1; i < a.history.size(); ++i)
        EXPECT_LE(a.history[i], a.history[i - 1]);

    cfg.seed = 5;
    const auto c = differential_evolution(sphere, lo, hi, cfg);
    EXPECT_NE(a.best, c.best);  // different search path
}

TEST(DifferentialEvolution, SurvivesNonFiniteObjectiveRegions) {
    DEConfig cfg;
    cfg.seed = 6;
    cfg.max_generations = 80;
    auto holey = [](const Vec& x) {
        if (x[0] > 0.5) return std::nan("");
        return x.squaredNorm();
    };
    const Vec lo = Vec::Constant(2, -2.0), hi = Vec::Constant(2, 2.0);
    const auto res = differential_evolution(holey, lo, hi, cfg);
    EXPECT_TRUE(std::isfinite(res.best_value));
    EXPECT_LT(res.best_value, 1e-3);
}

TEST(Excitation, IsDeterministicAndBounded) {
    for (const auto& name : {"reach", "push", "slide"}) {
        const auto t = tasks::task_by_name(name);
        for (int k = 0; k < 80; ++k) {
            const Vec a = scripted_excitation(t, k);
            ASSERT_EQ(a.size(), t.act_dim);
            ASSERT_LE(a.cwiseAbs().maxCoeff(), 1.0) << name;
            ASSERT_EQ(a, scripted_excitation(t, k));
        }
    }
}

TEST(Channels, CollectionIsDeterministicAndFullLength) {
    const auto model = dyncore::reach_model();
    const auto task = tasks::reach_task();
    const auto a = collect_channels(model, task, model.baseline, 2, 0);
    const auto b = collect_channels(model, task, model.baseline, 2, 0);
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a[0], b[0]);
    EXPECT_EQ(a[0].rows(), 61);  // initial sample plus 60 steps
    EXPECT_EQ(a[0].cols(), 4);
    EXPECT_GT((a[0].row(30) - a[0].row(0)).norm(), 1e-3);  // excitation actually moves the arm
}

TEST(Channels, MseZeroAgainstItselfAndPositiveOtherwise) {
    const auto model = dyncore::reach_model();
    const auto task = tasks::reach_task();
    const auto target = collect_channels(model, task, model.baseline, 1, 0);
    EXPECT_DOUBLE_EQ(channel_mse(target, target), 0.0);

    auto p = model.baseline;
    p.joint_damping[0] *= 3.0;
    const auto other = collect_channels(model, task, p, 1, 0);
    EXPECT_GT(channel_mse(target, other), 1e-8);
}

TEST(Fit, RecoversDampingWithinFivePercent) {
    const auto model = dyncore::reach_model();
    const auto task = tasks::reach_task();
    auto truth = model.baseline;
    truth.joint_damping[0] = 0.85;  // off-baseline ground truth
    truth.joint_damping[1] = 0.40;
    const auto target = collect_channels(model, task, truth, 2, 0);

    FitSpec spec;
    spec.param_names = {"joint_damping_0", "joint_damping_1"};
    spec.lo = (Vec(2) << 0.06, 0.025).finished();
    spec.hi = (Vec(2) << 6.0, 2.5).finished();
    spec.episodes = 2;
    spec.de.seed = 7;
    spec.de.pop_per_dim = 10;
    spec.de.max_generations = 40;
    spec.de.tol = 1e-12;

    const auto fit = fit_baseline(model, task, target, spec);
    EXPECT_NEAR(fit.params.joint_damping[0], 0.85, 0.05 * 0.85);
    EXPECT_NEAR(fit.params.joint_damping[1], 0.40, 0.05 * 0.40);
    EXPECT_LT(fit.mse, 1e-8);
}

TEST(Spread, EnvelopeContainsMeanAndCoversMemberTrajectory) {
    const auto model = dyncore::reach_model();
    const auto task = tasks::reach_task();
    const auto regime = randomize::make_regime(randomize::RegimeKind::DR, model);
    const auto rep = compute_spread(model, task, regime, 8, 123);
    ASSERT_GT(rep.mean.rows(), 10);
    for (long i = 0; i < rep.mean.rows(); ++i)
        for (int c = 0; c < 4; ++c) {
            ASSERT_LE(rep.lo(i, c), rep.mean(i, c) + 1e-12);
            ASSERT_GE(rep.hi(i, c), rep.mean(i, c) - 1e-12);
        }

    // The baseline rollout is a member of the family, so it must be covered.
    const auto base = collect_channels(model, task, model.baseline, 1, 123);
    const auto rep2 = compute_spread(model, task, regime, 8, 123, &base[0]);
    EXPECT_GT(rep2.coverage, 0.85);
}

TEST(Spread, WritesAnSvgFigure) {
    namespace fs = std::filesystem;
    const auto model = dyncore::slide_model();
    const auto task = tasks::slide_task();
    const auto regime = randomize::make_regime(randomize::RegimeKind::DR, model);
    const auto rep = compute_spread(model, task, regime, 3, 9);
    const auto path = fs::temp_directory_path() / "gapbench_spread.svg";
    write_spread_svg(rep, path.string());
    ASSERT_TRUE(fs::exists(path));
    EXPECT_GT(fs::file_size(path), 500u);
    fs::remove(path);
}
