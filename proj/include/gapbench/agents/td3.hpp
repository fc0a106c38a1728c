#pragma once

#include <algorithm>
#include <vector>

#include "gapbench/agents/replay.hpp"
#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/neural/net.hpp"

namespace gapbench::agents {

using neural::Act;
using neural::Adam;
using neural::Network;

struct Td3Config {
    double gamma = 0.99;
    double tau = 0.005;
    int policy_delay = 2;
    double smoothing_std = 0.2;
    double smoothing_clip = 0.5;
    double exploration_std = 0.1;
    int batch = 256;
    // The desk-scale tasks are small; 1e-3 converges in a fraction of the
    // budget where 3e-4 stalls short of the success zone.
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    std::vector<int> actor_hidden{128, 128, 128};
    std::vector<int> critic_hidden{128, 128, 128};
    int lstm_hidden = 64;  // recurrent actor branch width
    std::size_t buffer_capacity = 200000;
    int start_steps = 1000;   // uniform random actions before the policy takes over
    int update_every = 1;     // gradient steps happen every this many env steps
    int window = 8;           // recurrent window length
    int n_windows = 32;       // windows per recurrent gradient step

    // Smaller preset tuned for single-core wall clock; learning quality on the
    // desk-scale tasks is indistinguishable in practice.
    static Td3Config fast() {
        Td3Config c;
        c.actor_hidden = {64, 64};
        c.critic_hidden = {64, 64};
        c.lstm_hidden = 32;
        c.batch = 128;
        c.update_every = 2;
        c.n_windows = 24;
        return c;
    }
};

inline Network make_mlp(int in, const std::vector<int>& hidden, int out, Act head, Rng& init) {
    Network net;
    int cur = in;
    for (int h : hidden) {
        net.dense(cur, h, Act::relu, init);
        cur = h;
    }
    net.dense(cur, out, head, init);
    return net;
}

// Actor for the recurrent family: instantaneous features feed both a skip
// path and an LSTM branch, so the head sees current state plus a filtered
// history summary.
inline Network make_recurrent_actor(int in, const Td3Config& cfg, int act_dim, Rng& init) {
    require(!cfg.actor_hidden.empty(), "recurrent actor needs at least one dense layer");
    const int feat = cfg.actor_hidden.front();
    Network net;
    net.dense(in, feat, Act::relu, init)
        .lstm_concat(feat, cfg.lstm_hidden, init)
        .dense(feat + cfg.lstm_hidden, act_dim, Act::tanh, init);
    return net;
}

class Td3 {
   public:
    Td3(int obs_dim, int act_dim, bool recurrent, const Td3Config& cfg, uint64_t seed)
        : cfg_(cfg),
          obs_dim_(obs_dim),
          act_dim_(act_dim),
          recurrent_(recurrent),
          buffer_(cfg.buffer_capacity),
          sample_rng_(Rng::derive(seed, stream::kReplay, 0, 0)),
          noise_rng_(Rng::derive(seed, stream::kReplay, 1, 0)) {
        Rng init_a = Rng::derive(seed, stream::kInit, 0, 0);
        Rng init_q1 = Rng::derive(seed, stream::kInit, 1, 0);
        Rng init_q2 = Rng::derive(seed, stream::kInit, 2, 0);
        actor_ = recurrent ? make_recurrent_actor(obs_dim, cfg, act_dim, init_a)
                           : make_mlp(obs_dim, cfg.actor_hidden, act_dim, Act::tanh, init_a);
        critic1_ = make_mlp(obs_dim + act_dim, cfg.critic_hidden, 1, Act::linear, init_q1);
        critic2_ = make_mlp(obs_dim + act_dim, cfg.critic_hidden, 1, Act::linear, init_q2);
        actor_t_ = actor_;
        critic1_t_ = critic1_;
        critic2_t_ = critic2_;
        actor_opt_ = std::make_unique<Adam>(actor_, cfg.actor_lr);
        critic1_opt_ = std::make_unique<Adam>(critic1_, cfg.critic_lr);
        critic2_opt_ = std::make_unique<Adam>(critic2_, cfg.critic_lr);
    }

    int obs_dim() const { return obs_dim_; }
    int act_dim() const { return act_dim_; }
    bool recurrent() const { return recurrent_; }
    const Td3Config& config() const { return cfg_; }
    Network& actor() { return actor_; }
    Network& critic1() { return critic1_; }
    ReplayBuffer& buffer() { return buffer_; }
    double last_critic_loss() const { return last_critic_loss_; }

    void reset_episode() { actor_.zero_state(); }

    // Deterministic streaming action; recurrent state advances inside the net.
    Vec act(const Vec& obs) {
        require(obs.size() == obs_dim_, "Td3::act: obs dim mismatch");
        return actor_.step(obs);
    }

    void push(Transition tr) { buffer_.push(std::move(tr)); }

    bool ready() const {
        return buffer_.size() >= static_cast<std::size_t>(std::max(cfg_.batch, 64));
    }

    void update() {
        if (recurrent_)
            update_recurrent();
        else
            update_feedforward();
        ++updates_;
    }

   private:
    Vec smoothed_target_action(const Vec& raw) {
        Vec a = raw;
        for (long i = 0; i < a.size(); ++i) {
            const double n = std::clamp(cfg_.smoothing_std * noise_rng_.normal(),
                                        -cfg_.smoothing_clip, cfg_.smoothing_clip);
            a(i) = std::clamp(a(i) + n, -1.0, 1.0);
        }
        return a;
    }

    void critic_step(const Mat& X, const Mat& A, const Vec& y) {
        Mat qin(X.rows(), obs_dim_ + act_dim_);
        qin << X, A;
        for (Network* c : {&critic1_, &critic2_}) {
            Adam& opt = c == &critic1_ ? *critic1_opt_ : *critic2_opt_;
            c->zero_grad();
            const Mat pred = c->forward(qin);
            Mat dp;
            last_critic_loss_ = neural::mse_loss(pred, y, dp);
            require_finite(last_critic_loss_, "critic loss");
            c->backward(dp);
            opt.step();
        }
    }

    void actor_step_feedforward(const Mat& X) {
        actor_.zero_grad();
        const Mat a = actor_.forward(X);
        Mat qin(X.rows(), obs_dim_ + act_dim_);
        qin << X, a;
        critic1_.forward(qin);
        // Ascend Q: feed -1/B and let the critic hand back d(-Q)/d(action).
        const Mat dq = Mat::Constant(X.rows(), 1, -1.0 / X.rows());
        const Mat dqin = critic1_.backward(dq);
        actor_.backward(dqin.rightCols(act_dim_));
        actor_opt_->step();
        critic1_.zero_grad();  // discard gradients that belong to the actor objective
    }

    void polyak_all() {
        neural::polyak_update(actor_t_, actor_, cfg_.tau);
        neural::polyak_update(critic1_t_, critic1_, cfg_.tau);
        neural::polyak_update(critic2_t_, critic2_, cfg_.tau);
    }

    void update_feedforward() {
        const auto idx = buffer_.sample_indices(cfg_.batch, sample_rng_);
        const long B = static_cast<long>(idx.size());
        Mat X(B, obs_dim_), A(B, act_dim_), X2(B, obs_dim_), TA(B, act_dim_);
        Vec r(B), live(B);
        for (long k = 0; k < B; ++k) {
            const Transition& tr = buffer_.at(idx[k]);
            X.row(k) = tr.obs.transpose();
            A.row(k) = tr.act.transpose();
            X2.row(k) = tr.next_obs.transpose();
            r(k) = tr.reward;
            live(k) = tr.terminated ? 0.0 : 1.0;
        }
        const Mat a2 = actor_t_.forward(X2);
        for (long k = 0; k < B; ++k)
            TA.row(k) = smoothed_target_action(a2.row(k).transpose()).transpose();
        Mat qin2(B, obs_dim_ + act_dim_);
        qin2 << X2, TA;
        const Vec q1 = critic1_t_.forward(qin2).col(0);
        const Vec q2 = critic2_t_.forward(qin2).col(0);
        const Vec y = r + cfg_.gamma * live.cwiseProduct(q1.cwiseMin(q2));
        critic_step(X, A, y);
        if (updates_ % cfg_.policy_delay == 0) {
            actor_step_feedforward(X);
            polyak_all();
        }
    }

    // Recurrent actors train on windows of consecutive steps: the LSTM warms
    // up from a zero state over the window and the TD3 losses apply to the
    // final step. Critics stay feedforward.
    void update_recurrent() {
        const int W = cfg_.n_windows;
        std::vector<std::vector<std::size_t>> windows(W);
        Mat X(W, obs_dim_), A(W, act_dim_), X2(W, obs_dim_), TA(W, act_dim_);
        Vec r(W), live(W);
        for (int w = 0; w < W; ++w) {
            windows[w] = buffer_.sample_window(cfg_.window, sample_rng_);
            const auto& win = windows[w];
            const Transition& last = buffer_.at(win.back());
            X.row(w) = last.obs.transpose();
            A.row(w) = last.act.transpose();
            X2.row(w) = last.next_obs.transpose();
            r(w) = last.reward;
            live(w) = last.terminated ? 0.0 : 1.0;

            // Target action from the shifted sequence ending at next_obs.
            Mat seq2(static_cast<long>(win.size()), obs_dim_);
            for (std::size_t k = 1; k < win.size(); ++k)
                seq2.row(static_cast<long>(k - 1)) = buffer_.at(win[k]).obs.transpose();
            seq2.row(static_cast<long>(win.size()) - 1) = last.next_obs.transpose();
            const Mat a2 = actor_t_.forward(seq2);
            TA.row(w) = smoothed_target_action(a2.row(a2.rows() - 1).transpose()).transpose();
        }
        Mat qin2(W, obs_dim_ + act_dim_);
        qin2 << X2, TA;
        const Vec q1 = critic1_t_.forward(qin2).col(0);
        const Vec q2 = critic2_t_.forward(qin2).col(0);
        const Vec y = r + cfg_.gamma * live.cwiseProduct(q1.cwiseMin(q2));
        critic_step(X, A, y);

        if (updates_ % cfg_.policy_delay == 0) {
            // Pass 1: actor actions at each window end.
            Mat a_last(W, act_dim_);
            std::vector<Mat> seqs(W);
            for (int w = 0; w < W; ++w) {
                const auto& win = windows[w];
                Mat seq(static_cast<long>(win.size()), obs_dim_);
                for (std::size_t k = 0; k < win.size(); ++k)
                    seq.row(static_cast<long>(k)) = buffer_.at(win[k]).obs.transpose();
                seqs[w] = std::move(seq);
                const Mat a = actor_.forward(seqs[w]);
                a_last.row(w) = a.row(a.rows() - 1);
            }
            Mat qin(W, obs_dim_ + act_dim_);
            qin << X, a_last;
            critic1_.forward(qin);
            const Mat dq = Mat::Constant(W, 1, -1.0 / W);
            const Mat da = critic1_.backward(dq).rightCols(act_dim_);
            // Pass 2: re-run each window to rebuild caches, then BPTT with the
            // gradient injected at the final step.
            actor_.zero_grad();
            for (int w = 0; w < W; ++w) {
                actor_.forward(seqs[w]);
                Mat dy = Mat::Zero(seqs[w].rows(), act_dim_);
                dy.row(dy.rows() - 1) = da.row(w);
                actor_.backward(dy);
            }
            actor_opt_->step();
            critic1_.zero_grad();
            polyak_all();
        }
    }

    Td3Config cfg_;
    int obs_dim_, act_dim_;
    bool recurrent_;
    Network actor_, critic1_, critic2_, actor_t_, critic1_t_, critic2_t_;
    std::unique_ptr<Adam> actor_opt_, critic1_opt_, critic2_opt_;
    ReplayBuffer buffer_;
    Rng sample_rng_, noise_rng_;
    long updates_ = 0;
    double last_critic_loss_ = 0.0;
};

}  // namespace gapbench::agents
