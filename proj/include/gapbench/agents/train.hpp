#pragma once

#include <algorithm>
#include <deque>
#include <numeric>
#include <utility>

#include "gapbench/agents/policy.hpp"
#include "gapbench/agents/ppo.hpp"
#include "gapbench/agents/td3.hpp"
#include "gapbench/dyncore/model.hpp"
#include "gapbench/randomize/regime.hpp"
#include "gapbench/tasks/task.hpp"

namespace gapbench::agents {

struct TrainConfig {
    std::string task = "reach";
    randomize::RegimeKind regime = randomize::RegimeKind::NR;
    PolicyKind kind = PolicyKind::conservative;
    uint64_t seed = 0;
    long max_env_steps = 60000;
    Td3Config td3 = Td3Config::fast();
    PolicyArch arch;
    int curve_every_episodes = 20;
    // Universal-policy phases: share of the step budget spent conditioning on
    // the true environment vector, then estimator fitting rounds.
    double up_phase_fraction = 0.75;
    int osi_rounds = 2;
    int osi_episodes_per_round = 40;
    int osi_epochs = 30;
    double osi_lr = 1e-3;
    int osi_batch = 128;
    // Probing-policy phases.
    int epi_iterations = 20;
    int epi_episodes_per_iter = 6;
    int epi_post_probe_steps = 25;
    PpoConfig ppo;
};

// Task-tuned defaults for the benchmark's training runs. Contact-free reach
// converges quickly; push needs a larger budget and wider exploration to
// discover sustained contact, and randomized regimes need more steps than
// the fixed-baseline regime to cover their environment ensemble.
inline TrainConfig default_train_config(const std::string& task, randomize::RegimeKind regime,
                                        PolicyKind kind = PolicyKind::conservative) {
    TrainConfig cfg;
    cfg.task = task;
    cfg.regime = regime;
    cfg.kind = kind;
    cfg.td3 = Td3Config::fast();
    const bool randomized = regime != randomize::RegimeKind::NR;
    if (task == "push") {
        cfg.td3.exploration_std = 0.2;
        cfg.max_env_steps = 500000;
    } else {
        cfg.max_env_steps = randomized ? 150000 : 50000;
    }
    return cfg;
}

struct CurvePoint {
    long env_steps = 0;
    double mean_return = 0.0;
    double success_rate = 0.0;
};

struct TrainResult {
    Policy policy;
    std::vector<CurvePoint> curve;
    long env_steps = 0;
    int episodes = 0;
};

namespace detail {

// Supplies the per-episode condition vector, possibly by spending environment
// steps (probing) before handing control to the learner.
struct EpisodeSetup {
    Vec obs;        // observation the learner starts from
    Vec condition;  // empty for unconditioned families
    long steps_used = 0;
    bool aborted = false;  // episode ended during the prefix
};

class Conditioner {
   public:
    virtual ~Conditioner() = default;
    virtual EpisodeSetup begin(tasks::Environment& env, Vec obs0) = 0;
};

class PlainConditioner final : public Conditioner {
   public:
    EpisodeSetup begin(tasks::Environment&, Vec obs0) override {
        return {std::move(obs0), Vec(), 0, false};
    }
};

class TrueXiConditioner final : public Conditioner {
   public:
    EpisodeSetup begin(tasks::Environment& env, Vec obs0) override {
        return {std::move(obs0), env.true_xi(), 0, false};
    }
};

// Runs the frozen probe for its prefix and embeds the response.
class ProbeConditioner final : public Conditioner {
   public:
    explicit ProbeConditioner(Policy& pol) : pol_(&pol) {}

    EpisodeSetup begin(tasks::Environment& env, Vec obs0) override {
        EpisodeSetup setup;
        Mat log = Mat::Zero(pol_->probe_steps, pol_->obs_dim + pol_->act_dim);
        Vec obs = std::move(obs0);
        for (int t = 0; t < pol_->probe_steps; ++t) {
            const Vec a = clamp_action(pol_->probe.forward_vec(obs));
            log.row(t).segment(0, pol_->obs_dim) = obs.transpose();
            log.row(t).segment(pol_->obs_dim, pol_->act_dim) = a.transpose();
            const auto sr = env.step(a);
            ++setup.steps_used;
            obs = sr.obs;
            if (sr.terminated || sr.truncated) {
                setup.aborted = true;
                setup.obs = obs;
                setup.condition = Vec::Zero(pol_->z_dim);
                return setup;
            }
        }
        Vec flat(log.size());
        for (long r = 0; r < log.rows(); ++r)
            flat.segment(r * log.cols(), log.cols()) = log.row(r).transpose();
        setup.obs = obs;
        setup.condition = pol_->embed.forward_vec(flat);
        return setup;
    }

   private:
    Policy* pol_;
};

struct LoopState {
    long steps = 0;
    int episode = 0;
    std::vector<CurvePoint> curve;
};

// Shared TD3 driver: the conditioner fixes the episode's condition vector,
// actions explore with clipped Gaussian noise after a uniform warmup, and one
// gradient step runs every `update_every` environment steps once the buffer
// can fill a batch.
inline void run_td3_loop(tasks::Environment& env, Td3& td3, Conditioner& cond, long step_budget,
                         const TrainConfig& cfg, LoopState& st) {
    Rng explore = Rng::derive(cfg.seed, stream::kExploration, 0, static_cast<uint64_t>(st.episode));
    const long stop = st.steps + step_budget;
    std::deque<double> window_ret;
    std::deque<int> window_succ;
    while (st.steps < stop) {
        const int episode = st.episode++;
        Vec obs0 = env.reset(episode);
        EpisodeSetup setup = cond.begin(env, std::move(obs0));
        st.steps += setup.steps_used;
        if (setup.aborted) continue;
        td3.reset_episode();
        Vec obs = std::move(setup.obs);
        double ep_ret = 0.0;
        int t = 0;
        bool done = false;
        while (!done && st.steps < stop + env.horizon_steps()) {
            Vec x(obs.size() + setup.condition.size());
            if (setup.condition.size() > 0)
                x << obs, setup.condition;
            else
                x = obs;
            Vec a = td3.act(x);  // advances recurrent state even during warmup
            if (st.steps < cfg.td3.start_steps) {
                for (long i = 0; i < a.size(); ++i) a(i) = explore.uniform(-1.0, 1.0);
            } else {
                for (long i = 0; i < a.size(); ++i)
                    a(i) = std::clamp(a(i) + cfg.td3.exploration_std * explore.normal(), -1.0,
                                      1.0);
            }
            const auto sr = env.step(a);
            ep_ret += sr.reward;
            Vec x2(sr.obs.size() + setup.condition.size());
            if (setup.condition.size() > 0)
                x2 << sr.obs, setup.condition;
            else
                x2 = sr.obs;
            Transition tr;
            tr.obs = x;
            tr.act = a;
            tr.reward = sr.reward;
            tr.next_obs = x2;
            tr.terminated = sr.terminated;
            tr.episode = episode;
            tr.t = t;
            td3.push(std::move(tr));
            ++st.steps;
            ++t;
            obs = sr.obs;
            done = sr.terminated || sr.truncated;
            if (st.steps % cfg.td3.update_every == 0 && td3.ready()) {
                try {
                    td3.update();
                } catch (const NumericError& e) {
                    throw NumericError(std::string(e.what()) + " (diverged at env step " +
                                       std::to_string(st.steps) + ")");
                }
            }
        }
        window_ret.push_back(ep_ret);
        window_succ.push_back(env.success() ? 1 : 0);
        if (static_cast<int>(window_ret.size()) > cfg.curve_every_episodes) {
            window_ret.pop_front();
            window_succ.pop_front();
        }
        if (st.episode % cfg.curve_every_episodes == 0) {
            double mr = 0.0, ms = 0.0;
            for (double v : window_ret) mr += v;
            for (int v : window_succ) ms += v;
            st.curve.push_back({st.steps, mr / window_ret.size(),
                                ms / static_cast<double>(window_succ.size())});
        }
    }
}

// Roll the universal policy and pair every history stack with the episode's
// environment vector. `use_estimate` switches the conditioning input to the
// estimator's own prediction, closing the loop for refinement rounds.
inline std::pair<Mat, Mat> collect_osi_dataset(tasks::Environment& env, Policy& pol,
                                               bool use_estimate, int episodes, LoopState& st) {
    std::vector<Vec> xs, ys;
    for (int e = 0; e < episodes; ++e) {
        const int episode = st.episode++;
        Vec obs = env.reset(episode);
        const Vec xi = env.true_xi();
        PolicyRuntime rt = make_runtime(pol);
        runtime_reset(pol, rt);
        while (true) {
            Vec x(pol.actor_input_dim());
            x << obs, (use_estimate ? rt.condition : xi);
            const Vec a = clamp_action(pol.actor.step(x));
            const auto sr = env.step(a);
            ++st.steps;
            runtime_feedback(pol, rt, obs, a, env.aux_vector());
            xs.push_back(rt.history.vector());
            ys.push_back(xi);
            obs = sr.obs;
            if (sr.terminated || sr.truncated) break;
        }
    }
    require(!xs.empty(), "estimator dataset is empty");
    Mat X(static_cast<long>(xs.size()), xs[0].size());
    Mat Y(static_cast<long>(ys.size()), ys[0].size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        X.row(static_cast<long>(i)) = xs[i].transpose();
        Y.row(static_cast<long>(i)) = ys[i].transpose();
    }
    return {X, Y};
}

inline void train_osi(Network& osi, const Mat& X, const Mat& Y, const TrainConfig& cfg,
                      int round) {
    Adam opt(osi, cfg.osi_lr);
    Rng order_rng = Rng::derive(cfg.seed, stream::kReplay, 100 + static_cast<uint64_t>(round), 0);
    Rng drop_rng = Rng::derive(cfg.seed, stream::kDropout, static_cast<uint64_t>(round), 0);
    const long N = X.rows();
    std::vector<long> order(N);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.osi_epochs; ++epoch) {
        for (long i = N - 1; i > 0; --i)
            std::swap(order[i], order[order_rng.uniform_index(static_cast<std::size_t>(i + 1))]);
        for (long start = 0; start < N; start += cfg.osi_batch) {
            const long B = std::min<long>(cfg.osi_batch, N - start);
            Mat xb(B, X.cols()), yb(B, Y.cols());
            for (long k = 0; k < B; ++k) {
                xb.row(k) = X.row(order[start + k]);
                yb.row(k) = Y.row(order[start + k]);
            }
            osi.zero_grad();
            Mat dp;
            neural::mse_loss(osi.forward(xb, true, &drop_rng), yb, dp);
            osi.backward(dp);
            opt.step();
        }
    }
}

struct EpiEpisodeData {
    Mat traj;       // probe_steps x (obs+act)
    Mat states;     // post-probe [s, a]
    Mat next_obs;   // aligned next observations
    std::vector<PpoStep> probe_steps;
    bool usable = false;
};

}  // namespace detail

inline void train_epi(tasks::Environment& env, Policy& pol, const TrainConfig& cfg,
                      detail::LoopState& st);

inline TrainResult train_policy(const TrainConfig& cfg) {
    const auto model = dyncore::model_by_name(cfg.task);
    const auto task = tasks::task_by_name(cfg.task);
    const auto regime = randomize::make_regime(cfg.regime, model);
    tasks::Environment env(model, task, regime, cfg.seed);
    const int xi_dim = randomize::xi_dim(model, regime);

    TrainConfig cfg_eff = cfg;
    cfg_eff.td3.actor_hidden = cfg.arch.actor_hidden;
    cfg_eff.td3.critic_hidden = cfg.arch.actor_hidden;
    cfg_eff.td3.lstm_hidden = cfg.arch.lstm_hidden;

    Policy pol = make_policy(cfg.kind, env.obs_dim(), env.act_dim(), env.aux_dim(), xi_dim,
                             cfg.arch, cfg.seed);
    detail::LoopState st;

    switch (cfg.kind) {
        case PolicyKind::conservative: {
            Td3 td3(env.obs_dim(), env.act_dim(), false, cfg_eff.td3, cfg.seed);
            detail::PlainConditioner cond;
            detail::run_td3_loop(env, td3, cond, cfg.max_env_steps, cfg_eff, st);
            pol.actor = td3.actor();
            break;
        }
        case PolicyKind::adaptive: {
            Td3 td3(env.obs_dim(), env.act_dim(), true, cfg_eff.td3, cfg.seed);
            detail::PlainConditioner cond;
            detail::run_td3_loop(env, td3, cond, cfg.max_env_steps, cfg_eff, st);
            pol.actor = td3.actor();
            break;
        }
        case PolicyKind::uposi: {
            Td3 td3(pol.actor_input_dim(), env.act_dim(), false, cfg_eff.td3, cfg.seed);
            detail::TrueXiConditioner cond;
            const long up_budget =
                xi_dim > 0 ? static_cast<long>(cfg.up_phase_fraction * cfg.max_env_steps)
                           : cfg.max_env_steps;
            detail::run_td3_loop(env, td3, cond, up_budget, cfg_eff, st);
            pol.actor = td3.actor();
            if (xi_dim > 0) {
                for (int round = 0; round < cfg.osi_rounds; ++round) {
                    const auto [X, Y] = detail::collect_osi_dataset(
                        env, pol, round > 0, cfg.osi_episodes_per_round, st);
                    detail::train_osi(pol.osi, X, Y, cfg_eff, round);
                }
            }
            break;
        }
        case PolicyKind::epi: {
            train_epi(env, pol, cfg_eff, st);
            break;
        }
    }

    TrainResult result;
    result.policy = std::move(pol);
    result.curve = std::move(st.curve);
    result.env_steps = st.steps;
    result.episodes = st.episode;
    return result;
}

// Probing-family trainer: phase A alternates probe-policy PPO updates with
// supervised fits of the conditioned and unconditioned forward models (the
// probe's reward is the prediction improvement its trajectory buys); phase B
// trains the task policy conditioned on the frozen embedding.
inline void train_epi(tasks::Environment& env, Policy& pol, const TrainConfig& cfg,
                      detail::LoopState& st) {
    const int obs_dim = env.obs_dim(), act_dim = env.act_dim();
    Ppo ppo(obs_dim, act_dim, cfg.ppo, cfg.seed);
    Rng init_f = Rng::derive(cfg.seed, stream::kInit, 20, 0);
    Rng init_f0 = Rng::derive(cfg.seed, stream::kInit, 21, 0);
    Network f = make_mlp(obs_dim + act_dim + pol.z_dim, cfg.arch.pred_hidden, obs_dim,
                         Act::linear, init_f);
    Network f0 =
        make_mlp(obs_dim + act_dim, cfg.arch.pred_hidden, obs_dim, Act::linear, init_f0);
    Adam f_opt(f, 1e-3), f0_opt(f0, 1e-3), embed_opt(pol.embed, 1e-3);
    Rng probe_rng = Rng::derive(cfg.seed, stream::kProbe, 0, 0);
    Rng explore = Rng::derive(cfg.seed, stream::kProbe, 1, 0);

    auto flatten = [](const Mat& m) {
        Vec flat(m.size());
        for (long r = 0; r < m.rows(); ++r)
            flat.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
        return flat;
    };
    auto model_mse = [&](Network& net, const Mat& sa, const Mat& sp,
                         const Vec* z) {
        Mat in(sa.rows(), sa.cols() + (z ? z->size() : 0));
        if (z)
            for (long r = 0; r < sa.rows(); ++r) in.row(r) << sa.row(r), z->transpose();
        else
            in = sa;
        Mat dp;
        return neural::mse_loss(net.forward(in), sp, dp);
    };

    std::deque<detail::EpiEpisodeData> bank;
    for (int iter = 0; iter < cfg.epi_iterations; ++iter) {
        std::vector<PpoEpisode> rollouts;
        for (int e = 0; e < cfg.epi_episodes_per_iter; ++e) {
            const int episode = st.episode++;
            Vec obs = env.reset(episode);
            detail::EpiEpisodeData data;
            data.traj = Mat::Zero(pol.probe_steps, obs_dim + act_dim);
            bool aborted = false;
            for (int t = 0; t < pol.probe_steps; ++t) {
                PpoStep step;
                step.obs = obs;
                step.act = ppo.sample_action(obs, probe_rng, step.logp, step.value);
                const Vec a = clamp_action(step.act);
                data.traj.row(t).segment(0, obs_dim) = obs.transpose();
                data.traj.row(t).segment(obs_dim, act_dim) = a.transpose();
                const auto sr = env.step(a);
                ++st.steps;
                data.probe_steps.push_back(std::move(step));
                obs = sr.obs;
                if (sr.terminated || sr.truncated) {
                    aborted = true;
                    break;
                }
            }
            if (aborted) continue;
            std::vector<Vec> sa_rows, sp_rows;
            for (int t = 0; t < cfg.epi_post_probe_steps; ++t) {
                Vec a(act_dim);
                for (int i = 0; i < act_dim; ++i) a(i) = explore.uniform(-1.0, 1.0);
                Vec row(obs_dim + act_dim);
                row << obs, a;
                const auto sr = env.step(a);
                ++st.steps;
                sa_rows.push_back(row);
                sp_rows.push_back(sr.obs);
                obs = sr.obs;
                if (sr.terminated || sr.truncated) break;
            }
            if (sa_rows.empty()) continue;
            data.states = Mat(static_cast<long>(sa_rows.size()), obs_dim + act_dim);
            data.next_obs = Mat(static_cast<long>(sp_rows.size()), obs_dim);
            for (std::size_t i = 0; i < sa_rows.size(); ++i) {
                data.states.row(static_cast<long>(i)) = sa_rows[i].transpose();
                data.next_obs.row(static_cast<long>(i)) = sp_rows[i].transpose();
            }
            data.usable = true;

            // Probe reward: how much this trajectory's embedding reduces
            // one-step prediction error relative to the unconditioned model.
            const Vec z = pol.embed.forward_vec(flatten(data.traj));
            const double mse0 = model_mse(f0, data.states, data.next_obs, nullptr);
            const double mse1 = model_mse(f, data.states, data.next_obs, &z);
            PpoEpisode ep;
            ep.steps = data.probe_steps;
            ep.terminated = true;
            ep.bootstrap = 0.0;
            ep.steps.back().reward = mse0 - mse1;
            rollouts.push_back(std::move(ep));
            bank.push_back(std::move(data));
            if (bank.size() > 40) bank.pop_front();
        }

        // Supervised passes over the episode bank, embedding trained through
        // the conditioned model's input gradient.
        for (int pass = 0; pass < 2; ++pass) {
            for (auto& data : bank) {
                if (!data.usable) continue;
                const Vec flat = flatten(data.traj);
                const Vec z = pol.embed.forward_vec(flat);
                Mat in(data.states.rows(), obs_dim + act_dim + pol.z_dim);
                for (long r = 0; r < data.states.rows(); ++r)
                    in.row(r) << data.states.row(r), z.transpose();
                f.zero_grad();
                Mat dp;
                neural::mse_loss(f.forward(in), data.next_obs, dp);
                const Mat din = f.backward(dp);
                f_opt.step();
                pol.embed.zero_grad();
                const Mat dz = din.rightCols(pol.z_dim).colwise().sum();
                pol.embed.forward_vec(flat);  // rebuild caches
                pol.embed.backward(dz);
                embed_opt.step();
                f0.zero_grad();
                neural::mse_loss(f0.forward(data.states), data.next_obs, dp);
                f0.backward(dp);
                f0_opt.step();
            }
        }
        if (!rollouts.empty()) ppo.update(rollouts, probe_rng);
    }
    pol.probe = ppo.mean_net();

    // Phase B: task policy conditioned on the frozen probe embedding.
    Td3 td3(pol.actor_input_dim(), env.act_dim(), false, cfg.td3, cfg.seed);
    detail::ProbeConditioner cond(pol);
    const long remaining = std::max<long>(cfg.max_env_steps - st.steps, 0);
    detail::run_td3_loop(env, td3, cond, remaining, cfg, st);
    pol.actor = td3.actor();
}

}  // namespace gapbench::agents
