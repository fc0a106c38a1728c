#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "gapbench/agents/replay.hpp"
#include "gapbench/agents/td3.hpp"
#include "gapbench/tasks/environment.hpp"

namespace gapbench::agents {

enum class PolicyKind { conservative, adaptive, uposi, epi };

inline const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::conservative: return "conservative";
        case PolicyKind::adaptive: return "adaptive";
        case PolicyKind::uposi: return "uposi";
        case PolicyKind::epi: return "epi";
    }
    throw ContractViolation("unreachable policy kind");
}

inline PolicyKind policy_by_name(const std::string& name) {
    for (PolicyKind k : {PolicyKind::conservative, PolicyKind::adaptive, PolicyKind::uposi,
                         PolicyKind::epi})
        if (name == policy_name(k)) return k;
    throw ContractViolation("unknown policy: " + name);
}

struct PolicyArch {
    std::vector<int> actor_hidden{64, 64};
    int lstm_hidden = 32;
    std::vector<int> osi_hidden{128, 64, 32, 16};
    double osi_dropout = 0.1;
    std::vector<int> probe_hidden{64, 64};
    std::vector<int> embed_hidden{64};
    std::vector<int> pred_hidden{64, 64};
};

// Everything needed to act at evaluation time. Training-only machinery
// (critics, prediction heads, optimizers) lives with the trainers.
struct Policy {
    PolicyKind kind = PolicyKind::conservative;
    int obs_dim = 0;
    int act_dim = 0;
    int aux_dim = 0;        // per-step proprioceptive extras fed to the estimator
    int xi_dim = 0;         // environment-vector width the estimator predicts
    int z_dim = 0;          // probe embedding width
    int history_depth = 5;  // estimator stack length
    int probe_steps = 10;   // probing prefix length per episode
    PolicyArch arch;
    Network actor;
    Network osi;    // history stack -> xi estimate
    Network probe;  // obs -> probing action
    Network embed;  // flattened probe log -> z

    int condition_dim() const {
        if (kind == PolicyKind::uposi) return xi_dim;
        if (kind == PolicyKind::epi) return z_dim;
        return 0;
    }
    int actor_input_dim() const { return obs_dim + condition_dim(); }
    int osi_slot_dim() const { return obs_dim + act_dim + aux_dim; }
};

inline Network make_osi_net(int in, int out, const PolicyArch& arch, Rng& init) {
    Network net;
    int cur = in;
    for (int h : arch.osi_hidden) {
        net.dense(cur, h, Act::relu, init);
        if (arch.osi_dropout > 0.0) net.dropout(arch.osi_dropout);
        cur = h;
    }
    net.dense(cur, out, Act::linear, init);
    return net;
}

inline Policy make_policy(PolicyKind kind, int obs_dim, int act_dim, int aux_dim, int xi_dim,
                          const PolicyArch& arch, uint64_t seed) {
    Policy p;
    p.kind = kind;
    p.obs_dim = obs_dim;
    p.act_dim = act_dim;
    p.aux_dim = aux_dim;
    p.xi_dim = kind == PolicyKind::uposi ? xi_dim : 0;
    p.z_dim = kind == PolicyKind::epi ? 10 : 0;
    p.arch = arch;
    Rng init_a = Rng::derive(seed, stream::kInit, 10, 0);
    Td3Config shape;
    shape.actor_hidden = arch.actor_hidden;
    shape.lstm_hidden = arch.lstm_hidden;
    p.actor = kind == PolicyKind::adaptive
                  ? make_recurrent_actor(p.actor_input_dim(), shape, act_dim, init_a)
                  : make_mlp(p.actor_input_dim(), arch.actor_hidden, act_dim, Act::tanh, init_a);
    if (kind == PolicyKind::uposi && p.xi_dim > 0) {
        Rng init_o = Rng::derive(seed, stream::kInit, 11, 0);
        p.osi = make_osi_net(p.history_depth * p.osi_slot_dim(), p.xi_dim, arch, init_o);
    }
    if (kind == PolicyKind::epi) {
        Rng init_p = Rng::derive(seed, stream::kInit, 12, 0);
        Rng init_e = Rng::derive(seed, stream::kInit, 13, 0);
        p.probe = make_mlp(obs_dim, arch.probe_hidden, act_dim, Act::tanh, init_p);
        p.embed = make_mlp(p.probe_steps * (obs_dim + act_dim), arch.embed_hidden, p.z_dim,
                           Act::tanh, init_e);
    }
    return p;
}

// Per-episode actor state, owned by whoever runs the episode.
struct PolicyRuntime {
    HistoryStack history{1, 1};
    Vec condition;
    Mat probe_log;
    int t = 0;
};

inline PolicyRuntime make_runtime(const Policy& p) {
    PolicyRuntime rt;
    if (p.kind == PolicyKind::uposi && p.xi_dim > 0)
        rt.history = HistoryStack(p.history_depth, p.osi_slot_dim());
    rt.condition = Vec::Zero(p.condition_dim());
    if (p.kind == PolicyKind::epi)
        rt.probe_log = Mat::Zero(p.probe_steps, p.obs_dim + p.act_dim);
    return rt;
}

inline void runtime_reset(Policy& p, PolicyRuntime& rt) {
    p.actor.zero_state();
    if (p.kind == PolicyKind::uposi && p.xi_dim > 0) rt.history.reset();
    rt.condition.setZero();
    if (p.kind == PolicyKind::epi) rt.probe_log.setZero();
    rt.t = 0;
}

inline Vec clamp_action(Vec a) {
    for (long i = 0; i < a.size(); ++i) a(i) = std::clamp(a(i), -1.0, 1.0);
    return a;
}

// Deterministic action for evaluation. The probing families spend the first
// probe_steps of each episode exciting the system, then condition on the
// embedded response for the rest.
inline Vec policy_act(Policy& p, PolicyRuntime& rt, const Vec& obs) {
    require(obs.size() == p.obs_dim, "policy_act: obs dim mismatch");
    Vec a;
    if (p.kind == PolicyKind::epi && rt.t < p.probe_steps) {
        a = clamp_action(p.probe.forward_vec(obs));
        rt.probe_log.row(rt.t).segment(0, p.obs_dim) = obs.transpose();
        rt.probe_log.row(rt.t).segment(p.obs_dim, p.act_dim) = a.transpose();
        if (rt.t + 1 == p.probe_steps) {
            Vec flat(rt.probe_log.size());
            for (long r = 0; r < rt.probe_log.rows(); ++r)
                flat.segment(r * rt.probe_log.cols(), rt.probe_log.cols()) =
                    rt.probe_log.row(r).transpose();
            rt.condition = p.embed.forward_vec(flat);
        }
    } else {
        Vec x(p.actor_input_dim());
        if (rt.condition.size() > 0)
            x << obs, rt.condition;
        else
            x = obs;
        a = clamp_action(p.actor.step(x));
    }
    ++rt.t;
    return a;
}

// Call after each environment step with the observation the action was
// computed from and the proprioceptive summary of the executed period.
inline void runtime_feedback(Policy& p, PolicyRuntime& rt, const Vec& obs, const Vec& act,
                             const Vec& aux) {
    if (p.kind != PolicyKind::uposi || p.xi_dim == 0) return;
    Vec slot(p.osi_slot_dim());
    slot << obs, act, aux;
    rt.history.push(slot);
    rt.condition = clamp_action(p.osi.forward_vec(rt.history.vector()));
}

struct EpisodeOutcome {
    double ret = 0.0;
    bool success = false;
    double final_distance = 0.0;
    int steps = 0;
};

inline EpisodeOutcome run_episode(tasks::Environment& env, Policy& p, int episode,
                                  const std::optional<dyncore::Vec2>& goal = std::nullopt) {
    PolicyRuntime rt = make_runtime(p);
    runtime_reset(p, rt);
    Vec obs = goal ? env.reset(episode, *goal) : env.reset(episode);
    EpisodeOutcome out;
    while (true) {
        const Vec a = policy_act(p, rt, obs);
        const auto sr = env.step(a);
        runtime_feedback(p, rt, obs, a, env.aux_vector());
        out.ret += sr.reward;
        ++out.steps;
        obs = sr.obs;
        if (sr.terminated || sr.truncated) break;
    }
    out.success = env.success();
    out.final_distance = env.task_distance();
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: meta.json plus one binary per network.
// ---------------------------------------------------------------------------

inline void save_policy(Policy& p, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta;
    meta["kind"] = policy_name(p.kind);
    meta["obs_dim"] = p.obs_dim;
    meta["act_dim"] = p.act_dim;
    meta["aux_dim"] = p.aux_dim;
    meta["xi_dim"] = p.xi_dim;
    meta["z_dim"] = p.z_dim;
    meta["history_depth"] = p.history_depth;
    meta["probe_steps"] = p.probe_steps;
    meta["actor_hidden"] = p.arch.actor_hidden;
    meta["lstm_hidden"] = p.arch.lstm_hidden;
    meta["osi_hidden"] = p.arch.osi_hidden;
    meta["osi_dropout"] = p.arch.osi_dropout;
    meta["probe_hidden"] = p.arch.probe_hidden;
    meta["embed_hidden"] = p.arch.embed_hidden;
    std::ofstream out(fs::path(dir) / "meta.json");
    require(out.good(), "cannot write policy meta: " + dir);
    out << meta.dump(2) << "\n";
    p.actor.save((fs::path(dir) / "actor.bin").string());
    if (p.kind == PolicyKind::uposi && p.xi_dim > 0)
        p.osi.save((fs::path(dir) / "osi.bin").string());
    if (p.kind == PolicyKind::epi) {
        p.probe.save((fs::path(dir) / "probe.bin").string());
        p.embed.save((fs::path(dir) / "embed.bin").string());
    }
}

inline Policy load_policy(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "meta.json");
    require(in.good(), "cannot read policy meta: " + dir);
    nlohmann::json meta = nlohmann::json::parse(in);
    PolicyArch arch;
    arch.actor_hidden = meta.at("actor_hidden").get<std::vector<int>>();
    arch.lstm_hidden = meta.at("lstm_hidden").get<int>();
    arch.osi_hidden = meta.at("osi_hidden").get<std::vector<int>>();
    arch.osi_dropout = meta.at("osi_dropout").get<double>();
    arch.probe_hidden = meta.at("probe_hidden").get<std::vector<int>>();
    arch.embed_hidden = meta.at("embed_hidden").get<std::vector<int>>();
    Policy p = make_policy(policy_by_name(meta.at("kind").get<std::string>()),
                           meta.at("obs_dim").get<int>(), meta.at("act_dim").get<int>(),
                           meta.at("aux_dim").get<int>(), meta.at("xi_dim").get<int>(), arch, 0);
    p.history_depth = meta.at("history_depth").get<int>();
    p.probe_steps = meta.at("probe_steps").get<int>();
    p.actor.load((fs::path(dir) / "actor.bin").string());
    if (p.kind == PolicyKind::uposi && p.xi_dim > 0)
        p.osi.load((fs::path(dir) / "osi.bin").string());
    if (p.kind == PolicyKind::epi) {
        p.probe.load((fs::path(dir) / "probe.bin").string());
        p.embed.load((fs::path(dir) / "embed.bin").string());
    }
    return p;
}

}  // namespace gapbench::agents
