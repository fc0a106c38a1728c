#pragma once

#include <Eigen/Eigenvalues>

#include "gapbench/agents/train.hpp"
#include "gapbench/bench/evaluate.hpp"
#include "gapbench/core/stats.hpp"
#include "gapbench/core/svg.hpp"

namespace gapbench::bench {

// Mean absolute prediction error as a percentage of each dimension's range.
// Dimensions with (numerically) no range are excluded; if every dimension is
// excluded the metric is undefined.
inline double osi_error_percent(const Mat& pred, const Mat& truth, const Vec& lo,
                                const Vec& hi) {
    require(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
            "osi_error_percent: shape mismatch");
    require(lo.size() == pred.cols() && hi.size() == pred.cols(),
            "osi_error_percent: bounds width mismatch");
    double sum = 0.0;
    long count = 0;
    for (long c = 0; c < pred.cols(); ++c) {
        const double range = hi(c) - lo(c);
        if (range < 1e-9) continue;
        for (long r = 0; r < pred.rows(); ++r) {
            sum += std::abs(pred(r, c) - truth(r, c)) / range;
            ++count;
        }
    }
    require(count > 0, "osi_error_percent: all dimensions are degenerate");
    return 100.0 * sum / static_cast<double>(count);
}

// Rolls the estimator over in-domain episodes and scores it against the true
// normalized environment vectors (range [-1, 1] per dimension).
inline double trained_osi_error(const dyncore::ModelSpec& model, const tasks::TaskSpec& task,
                                const randomize::RegimeSpec& regime, Policy& pol, int episodes,
                                uint64_t seed) {
    require(pol.kind == agents::PolicyKind::uposi && pol.xi_dim > 0,
            "trained_osi_error: needs an estimator policy");
    tasks::Environment env(model, task, regime, seed);
    std::vector<Vec> preds, truths;
    for (int e = 0; e < episodes; ++e) {
        agents::PolicyRuntime rt = agents::make_runtime(pol);
        agents::runtime_reset(pol, rt);
        Vec obs = env.reset(2000000 + e);
        const Vec xi = env.true_xi();
        while (true) {
            const Vec a = agents::policy_act(pol, rt, obs);
            const auto sr = env.step(a);
            agents::runtime_feedback(pol, rt, obs, a, env.aux_vector());
            // Skip the zero-padded warmup; score only full stacks.
            if (rt.t >= pol.history_depth) {
                preds.push_back(rt.condition);
                truths.push_back(xi);
            }
            obs = sr.obs;
            if (sr.terminated || sr.truncated) break;
        }
    }
    require(!preds.empty(), "trained_osi_error: no samples");
    Mat P(static_cast<long>(preds.size()), pol.xi_dim);
    Mat T(static_cast<long>(truths.size()), pol.xi_dim);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        P.row(static_cast<long>(i)) = preds[i].transpose();
        T.row(static_cast<long>(i)) = truths[i].transpose();
    }
    return osi_error_percent(P, T, Vec::Constant(pol.xi_dim, -1.0),
                             Vec::Constant(pol.xi_dim, 1.0));
}

// ---------------------------------------------------------------------------
// Conditioning ablation for the universal policy
// ---------------------------------------------------------------------------

enum class ConditionMode { true_xi, white_noise, estimator };

struct AblationResult {
    int n = 0;
    int successes_true = 0;
    int successes_noise = 0;
    double delta = 0.0;    // success(true) - success(noise)
    double p_value = 1.0;  // two-sided two-proportion z test
};

namespace detail {

inline bool conditioned_episode(tasks::Environment& env, Policy& pol, int episode,
                                ConditionMode mode, Rng& noise_rng) {
    agents::PolicyRuntime rt = agents::make_runtime(pol);
    agents::runtime_reset(pol, rt);
    Vec obs = env.reset(episode);
    Vec cond;
    switch (mode) {
        case ConditionMode::true_xi: cond = env.true_xi(); break;
        case ConditionMode::white_noise: {
            cond = Vec(pol.xi_dim);
            for (long i = 0; i < cond.size(); ++i) cond(i) = noise_rng.uniform(-1.0, 1.0);
            break;
        }
        case ConditionMode::estimator: cond = Vec(); break;
    }
    while (true) {
        Vec a;
        if (mode == ConditionMode::estimator) {
            a = agents::policy_act(pol, rt, obs);
        } else {
            Vec x(pol.actor_input_dim());
            x << obs, cond;
            a = agents::clamp_action(pol.actor.step(x));
        }
        const auto sr = env.step(a);
        if (mode == ConditionMode::estimator)
            agents::runtime_feedback(pol, rt, obs, a, env.aux_vector());
        obs = sr.obs;
        if (sr.terminated || sr.truncated) break;
    }
    return env.success();
}

}  // namespace detail

// Pairs episodes across arms: the same episode index replays the same sampled
// environment and start state, so only the conditioning input differs.
inline AblationResult up_noise_ablation(const dyncore::ModelSpec& model,
                                        const tasks::TaskSpec& task,
                                        const randomize::RegimeSpec& regime, Policy& pol, int n,
                                        uint64_t seed) {
    require(pol.kind == agents::PolicyKind::uposi && pol.xi_dim > 0,
            "up_noise_ablation: needs a conditioned policy");
    tasks::Environment env(model, task, regime, seed);
    AblationResult res;
    res.n = n;
    for (int e = 0; e < n; ++e) {
        const int episode = 3000000 + e;
        Rng noise_a = Rng::derive(seed, stream::kEval, 1, static_cast<uint64_t>(e));
        Rng noise_b = Rng::derive(seed, stream::kEval, 1, static_cast<uint64_t>(e));
        res.successes_true += detail::conditioned_episode(env, pol, episode,
                                                          ConditionMode::true_xi, noise_a)
                                  ? 1
                                  : 0;
        res.successes_noise += detail::conditioned_episode(env, pol, episode,
                                                           ConditionMode::white_noise, noise_b)
                                   ? 1
                                   : 0;
    }
    res.delta = (res.successes_true - res.successes_noise) / static_cast<double>(n);
    res.p_value = two_proportion_z_pvalue(res.successes_true, n, res.successes_noise, n);
    return res;
}

// Null-harness variant: severs the conditioning pathway by zeroing the first
// dense layer's weight columns that read the condition, so both arms must
// behave identically.
inline Policy zero_condition_pathway(const Policy& pol) {
    Policy p = pol;
    auto params = p.actor.parameters();
    require(!params.empty(), "zero_condition_pathway: empty actor");
    Mat& W = *params[0];
    require(W.cols() == p.actor_input_dim(), "zero_condition_pathway: unexpected first layer");
    W.rightCols(p.condition_dim()).setZero();
    return p;
}

// ---------------------------------------------------------------------------
// Latent separability
// ---------------------------------------------------------------------------

// Two leading principal axes, sign-fixed so the largest-magnitude loading of
// each axis is positive (keeps output stable across solver builds).
inline Mat pca_project_2d(const Mat& X) {
    require(X.rows() >= 2, "pca_project_2d: need at least two points");
    const Mat centered = X.rowwise() - X.colwise().mean();
    const Mat cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
    require(solver.info() == Eigen::Success, "pca_project_2d: eigensolver failed");
    const long d = cov.rows();
    Mat axes = Mat::Zero(d, 2);
    axes.col(0) = solver.eigenvectors().col(d - 1);  // eigenvalues ascend
    if (d >= 2) axes.col(1) = solver.eigenvectors().col(d - 2);
    for (int c = 0; c < 2; ++c) {
        long imax = 0;
        for (long r = 1; r < d; ++r)
            if (std::abs(axes(r, c)) > std::abs(axes(imax, c))) imax = r;
        if (axes(imax, c) < 0.0) axes.col(c) = -axes.col(c);
    }
    return centered * axes;
}

// Standard silhouette in [-1, 1]; singleton clusters and all-zero distances
// contribute 0, a single cluster scores 0.
inline double silhouette_score(const Mat& X, const std::vector<int>& labels) {
    require(static_cast<long>(labels.size()) == X.rows(), "silhouette: label count mismatch");
    const long n = X.rows();
    require(n >= 2, "silhouette: need at least two points");
    std::vector<int> unique_labels;
    for (int l : labels)
        if (std::find(unique_labels.begin(), unique_labels.end(), l) == unique_labels.end())
            unique_labels.push_back(l);
    if (unique_labels.size() < 2) return 0.0;
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
        double a = 0.0;
        long a_count = 0;
        double b = std::numeric_limits<double>::infinity();
        for (int l : unique_labels) {
            double sum = 0.0;
            long count = 0;
            for (long j = 0; j < n; ++j) {
                if (labels[j] != l || j == i) continue;
                sum += (X.row(i) - X.row(j)).norm();
                ++count;
            }
            if (l == labels[i]) {
                a = count > 0 ? sum / count : 0.0;
                a_count = count;
            } else if (count > 0) {
                b = std::min(b, sum / count);
            }
        }
        if (a_count == 0 || !std::isfinite(b)) continue;  // singleton: contributes 0
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

inline void write_latent_scatter_svg(const std::string& path, const Mat& pts2d,
                                     const std::vector<int>& labels, double silhouette) {
    require(pts2d.cols() == 2, "latent scatter: need 2-d points");
    const double xmin = pts2d.col(0).minCoeff(), xmax = pts2d.col(0).maxCoeff();
    const double ymin = pts2d.col(1).minCoeff(), ymax = pts2d.col(1).maxCoeff();
    const double xpad = std::max(1e-6, 0.1 * (xmax - xmin));
    const double ypad = std::max(1e-6, 0.1 * (ymax - ymin));
    SvgFigure fig(xmin - xpad, xmax + xpad, ymin - ypad, ymax + ypad);
    fig.title("latent space, silhouette " + fmt_double(silhouette));
    fig.xlabel("pc1");
    fig.ylabel("pc2");
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::vector<int> unique_labels;
    for (int l : labels)
        if (std::find(unique_labels.begin(), unique_labels.end(), l) == unique_labels.end())
            unique_labels.push_back(l);
    std::sort(unique_labels.begin(), unique_labels.end());
    for (std::size_t k = 0; k < unique_labels.size(); ++k) {
        std::vector<double> xs, ys;
        for (long i = 0; i < pts2d.rows(); ++i) {
            if (labels[i] != unique_labels[k]) continue;
            xs.push_back(pts2d(i, 0));
            ys.push_back(pts2d(i, 1));
        }
        const char* color = kColors[k % 8];
        fig.scatter(xs, ys, color);
        fig.legend_entry("env " + std::to_string(unique_labels[k]), color);
    }
    fig.write(path);
}

}  // namespace gapbench::bench
