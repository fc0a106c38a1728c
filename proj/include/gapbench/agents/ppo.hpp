#pragma once

#include <numeric>
#include <vector>

#include "gapbench/agents/td3.hpp"
#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/neural/net.hpp"

namespace gapbench::agents {

// Advantages and discounted returns for one episode. `bootstrap` is the value
// estimate past the last step; it is ignored when the episode terminated.
inline void gae(const std::vector<double>& rewards, const std::vector<double>& values,
                double bootstrap, bool terminated, double gamma, double lam,
                std::vector<double>& adv, std::vector<double>& ret) {
    require(rewards.size() == values.size(), "gae: rewards/values length mismatch");
    const std::size_t T = rewards.size();
    adv.assign(T, 0.0);
    ret.assign(T, 0.0);
    double next_value = terminated ? 0.0 : bootstrap;
    double carry = 0.0;
    for (std::size_t i = T; i-- > 0;) {
        const double delta = rewards[i] + gamma * next_value - values[i];
        carry = delta + gamma * lam * carry;
        adv[i] = carry;
        ret[i] = adv[i] + values[i];
        next_value = values[i];
    }
}

struct PpoConfig {
    double gamma = 0.99;
    double lam = 0.95;
    double clip = 0.2;
    int epochs = 10;
    int minibatch = 64;
    double lr = 3e-4;
    double value_lr = 1e-3;
    double entropy_coef = 0.01;
    double init_log_std = -0.5;
    std::vector<int> hidden{64, 64};
};

struct PpoStep {
    Vec obs, act;
    double reward = 0.0;
    double logp = 0.0;
    double value = 0.0;
};

struct PpoEpisode {
    std::vector<PpoStep> steps;
    bool terminated = false;
    double bootstrap = 0.0;
};

// Clipped-surrogate policy gradient over a diagonal Gaussian whose log-std is
// state independent (stored as the bias of a zero-input dense layer so the
// shared optimizer applies).
class Ppo {
   public:
    Ppo(int obs_dim, int act_dim, const PpoConfig& cfg, uint64_t seed)
        : cfg_(cfg), obs_dim_(obs_dim), act_dim_(act_dim) {
        Rng init_pi = Rng::derive(seed, stream::kInit, 3, 0);
        Rng init_v = Rng::derive(seed, stream::kInit, 4, 0);
        Rng init_s = Rng::derive(seed, stream::kInit, 5, 0);
        mean_ = make_mlp(obs_dim, cfg.hidden, act_dim, Act::tanh, init_pi);
        value_ = make_mlp(obs_dim, cfg.hidden, 1, Act::linear, init_v);
        log_std_ = Network().dense(1, act_dim, Act::linear, init_s);
        log_std_.parameters()[0]->setZero();
        log_std_.parameters()[1]->setConstant(cfg.init_log_std);
        mean_opt_ = std::make_unique<Adam>(mean_, cfg.lr);
        value_opt_ = std::make_unique<Adam>(value_, cfg.value_lr);
        std_opt_ = std::make_unique<Adam>(log_std_, cfg.lr);
    }

    int obs_dim() const { return obs_dim_; }
    int act_dim() const { return act_dim_; }
    Network& mean_net() { return mean_; }

    Vec log_std() { return log_std_.forward_vec(Vec::Zero(1)); }

    Vec mean_action(const Vec& obs) { return mean_.forward_vec(obs); }

    Vec sample_action(const Vec& obs, Rng& rng, double& logp, double& value) {
        const Vec mu = mean_action(obs);
        const Vec ls = log_std();
        Vec a(act_dim_);
        for (int i = 0; i < act_dim_; ++i) a(i) = mu(i) + std::exp(ls(i)) * rng.normal();
        logp = log_prob(a, mu, ls);
        value = value_.forward_vec(obs)(0);
        return a;
    }

    static double log_prob(const Vec& a, const Vec& mu, const Vec& ls) {
        double lp = 0.0;
        for (long i = 0; i < a.size(); ++i) {
            const double z = (a(i) - mu(i)) / std::exp(ls(i));
            lp += -0.5 * z * z - ls(i) - 0.5 * std::log(2.0 * M_PI);
        }
        return lp;
    }

    void update(const std::vector<PpoEpisode>& episodes, Rng& rng) {
        long N = 0;
        for (const auto& ep : episodes) N += static_cast<long>(ep.steps.size());
        require(N > 0, "Ppo::update: empty rollout");
        Mat X(N, obs_dim_), A(N, act_dim_);
        Vec old_logp(N), advv(N), retv(N);
        long row = 0;
        std::vector<double> adv, ret, rewards, values;
        for (const auto& ep : episodes) {
            rewards.clear();
            values.clear();
            for (const auto& s : ep.steps) {
                rewards.push_back(s.reward);
                values.push_back(s.value);
            }
            gae(rewards, values, ep.bootstrap, ep.terminated, cfg_.gamma, cfg_.lam, adv, ret);
            for (std::size_t i = 0; i < ep.steps.size(); ++i, ++row) {
                X.row(row) = ep.steps[i].obs.transpose();
                A.row(row) = ep.steps[i].act.transpose();
                old_logp(row) = ep.steps[i].logp;
                advv(row) = adv[i];
                retv(row) = ret[i];
            }
        }
        const double am = advv.mean();
        const double as = std::sqrt((advv.array() - am).square().sum() / std::max<long>(N - 1, 1));
        if (as > 1e-12) advv = ((advv.array() - am) / as).matrix();

        std::vector<long> order(N);
        std::iota(order.begin(), order.end(), 0);
        for (int e = 0; e < cfg_.epochs; ++e) {
            for (long i = N - 1; i > 0; --i)
                std::swap(order[i], order[rng.uniform_index(static_cast<std::size_t>(i + 1))]);
            for (long start = 0; start < N; start += cfg_.minibatch) {
                const long B = std::min<long>(cfg_.minibatch, N - start);
                Mat xb(B, obs_dim_), ab(B, act_dim_);
                Vec lpb(B), advb(B), retb(B);
                for (long k = 0; k < B; ++k) {
                    const long j = order[start + k];
                    xb.row(k) = X.row(j);
                    ab.row(k) = A.row(j);
                    lpb(k) = old_logp(j);
                    advb(k) = advv(j);
                    retb(k) = retv(j);
                }
                policy_minibatch(xb, ab, lpb, advb);
                value_minibatch(xb, retb);
            }
        }
    }

   private:
    void policy_minibatch(const Mat& xb, const Mat& ab, const Vec& lpb, const Vec& advb) {
        const long B = xb.rows();
        mean_.zero_grad();
        log_std_.zero_grad();
        const Mat mu = mean_.forward(xb);
        const Vec ls = log_std_.forward_vec(Vec::Zero(1));
        Mat dmu = Mat::Zero(B, act_dim_);
        Vec dls = Vec::Zero(act_dim_);
        for (long k = 0; k < B; ++k) {
            double lp_new = 0.0;
            for (int i = 0; i < act_dim_; ++i) {
                const double z = (ab(k, i) - mu(k, i)) / std::exp(ls(i));
                lp_new += -0.5 * z * z - ls(i) - 0.5 * std::log(2.0 * M_PI);
            }
            const double ratio = std::exp(lp_new - lpb(k));
            const double a = advb(k);
            const bool clipped = (a >= 0.0 && ratio > 1.0 + cfg_.clip) ||
                                 (a < 0.0 && ratio < 1.0 - cfg_.clip);
            // Maximize min(ratio*A, clip(ratio)*A): zero gradient once clipped.
            const double dlp = clipped ? 0.0 : ratio * a;
            for (int i = 0; i < act_dim_; ++i) {
                const double inv_var = std::exp(-2.0 * ls(i));
                const double diff = ab(k, i) - mu(k, i);
                // Descend the negative surrogate; entropy pushes log-std up.
                dmu(k, i) += -dlp * diff * inv_var / B;
                dls(i) += (-dlp * (diff * diff * inv_var - 1.0) - cfg_.entropy_coef) / B;
            }
        }
        mean_.backward(dmu);
        mean_opt_->step();
        log_std_.backward(dls.transpose());
        std_opt_->step();
    }

    void value_minibatch(const Mat& xb, const Vec& retb) {
        value_.zero_grad();
        const Mat pred = value_.forward(xb);
        Mat dp;
        neural::mse_loss(pred, retb, dp);
        value_.backward(dp);
        value_opt_->step();
    }

    PpoConfig cfg_;
    int obs_dim_, act_dim_;
    Network mean_, value_, log_std_;
    std::unique_ptr<Adam> mean_opt_, value_opt_, std_opt_;
};

}  // namespace gapbench::agents
