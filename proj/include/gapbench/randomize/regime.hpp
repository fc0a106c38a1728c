#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>

#include "gapbench/dyncore/model.hpp"
#include "gapbench/randomize/distribution.hpp"
#include "gapbench/randomize/registry.hpp"

namespace gapbench::randomize {

using dyncore::ModelSpec;
using dyncore::Vec;
using dyncore::Vec2;

enum class RegimeKind { NR, DR, RFI, RFIPlus };

inline std::string regime_name(RegimeKind k) {
    switch (k) {
        case RegimeKind::NR: return "nr";
        case RegimeKind::DR: return "dr";
        case RegimeKind::RFI: return "rfi";
        case RegimeKind::RFIPlus: return "rfi_plus";
    }
    throw ContractViolation("unreachable regime kind");
}

inline RegimeKind regime_by_name(const std::string& s) {
    if (s == "nr") return RegimeKind::NR;
    if (s == "dr") return RegimeKind::DR;
    if (s == "rfi") return RegimeKind::RFI;
    if (s == "rfi_plus") return RegimeKind::RFIPlus;
    throw ContractViolation("unknown regime: " + s);
}

// What varies between training episodes. NR fixes everything at the baseline;
// DR perturbs dynamics parameters per episode; RFI keeps the baseline dynamics
// but injects random generalized forces every physics step; RFI+ adds the
// observation corruption DR has without touching the dynamics.
struct RegimeSpec {
    RegimeKind kind = RegimeKind::NR;
    std::map<std::string, ParamDistribution> dynamics_dists;
    std::optional<ParamDistribution> obs_noise_dist;
    std::optional<ParamDistribution> obs_delay_dist;
    double rfi_joint_fraction = 0.0;   // of static gravity-load torque
    double rfi_object_fraction = 0.0;  // of the breakaway friction force
};

inline ParamDistribution default_obs_noise() { return ParamDistribution::make_uniform(0.0, 0.005); }

// Per-episode half-width of the uniform jitter added to every action. Kept
// modest: a full-range draw displaces the end effector by roughly a
// millimetre per policy step.
inline ParamDistribution default_action_noise() { return ParamDistribution::make_uniform(0.0, 0.05); }

inline ParamDistribution default_obs_delay() {
    return ParamDistribution::make_categorical({0.0, 1.0, 2.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

inline RegimeSpec make_regime(RegimeKind kind, const ModelSpec& model) {
    RegimeSpec r;
    r.kind = kind;
    if (kind == RegimeKind::DR) {
        const auto factor = ParamDistribution::factor(0.5, 2.0);
        for (const auto& a : param_registry(model)) {
            const bool randomized = a.name.rfind("link_mass", 0) == 0 ||
                                    a.name.rfind("joint_damping", 0) == 0 ||
                                    a.name.rfind("joint_dry_friction", 0) == 0 ||
                                    a.name.rfind("gain_", 0) == 0 || a.name == "object_mass" ||
                                    a.name == "surface_friction_mu";
            if (randomized) r.dynamics_dists.emplace(a.name, factor);
        }
        r.dynamics_dists.emplace("action_noise_range", default_action_noise());
        r.obs_noise_dist = default_obs_noise();
        r.obs_delay_dist = default_obs_delay();
    }
    if (kind == RegimeKind::RFI || kind == RegimeKind::RFIPlus) {
        r.rfi_joint_fraction = 0.1;
        r.rfi_object_fraction = 0.3;
    }
    if (kind == RegimeKind::RFIPlus) {
        r.obs_noise_dist = default_obs_noise();
        r.obs_delay_dist = default_obs_delay();
    }
    return r;
}

// Per-joint force half-widths. Horizontal arms carry no gravity load, so the
// scale uses the torque the same arm would bear in a vertical plane at full
// extension; the balanced plate uses the baseline puck's weight at the edge.
inline Vec rfi_joint_halfwidths(const ModelSpec& model, double fraction) {
    if (fraction <= 0.0) return Vec::Zero(model.n_joints);
    if (model.kind == dyncore::ArmKind::serial_chain) {
        ModelSpec loaded = model;
        loaded.gravity_in_plane = true;
        const Vec tau =
            chain_gravity_torque(loaded, model.baseline, Vec::Zero(model.n_joints));
        return fraction * tau.cwiseAbs();
    }
    const double edge_torque =
        model.baseline.object_mass * model.baseline.gravity * model.plate_half_x;
    return Vec::Constant(model.n_joints, fraction * edge_torque);
}

inline double rfi_object_halfwidth(const ModelSpec& model, double fraction) {
    if (fraction <= 0.0 || !model.has_object) return 0.0;
    const auto& b = model.baseline;
    return fraction * b.surface_friction_mu * b.object_mass * b.gravity;
}

// One concrete environment draw: the dynamics an episode actually runs under.
struct EnvRealization {
    dyncore::DynamicsParams params;
    double obs_noise_std = 0.0;
    int obs_delay_steps = 0;
    Vec rfi_joint_halfwidth;
    double rfi_object_halfwidth = 0.0;
};

inline EnvRealization sample_environment(const ModelSpec& model, const RegimeSpec& regime,
                                         Rng& rng) {
    const auto reg = param_registry(model);
    for (const auto& [name, dist] : regime.dynamics_dists) {
        require(find_param(reg, name) != nullptr, "regime references unknown parameter: " + name);
        dist.validate();
    }

    std::string last_bad;
    for (int attempt = 0; attempt < 100; ++attempt) {
        EnvRealization env;
        env.params = model.baseline;
        for (const auto& a : reg) {  // registry order, not map order
            const auto it = regime.dynamics_dists.find(a.name);
            if (it == regime.dynamics_dists.end()) continue;
            a.set(env.params, it->second.sample(rng, a.get(model.baseline)));
        }
        if (regime.obs_noise_dist) env.obs_noise_std = regime.obs_noise_dist->sample(rng, 0.0);
        if (regime.obs_delay_dist)
            env.obs_delay_steps = static_cast<int>(regime.obs_delay_dist->sample(rng, 0.0));
        env.rfi_joint_halfwidth = rfi_joint_halfwidths(model, regime.rfi_joint_fraction);
        env.rfi_object_halfwidth = rfi_object_halfwidth(model, regime.rfi_object_fraction);

        if (auto bad = env.params.violated_invariant()) {
            last_bad = *bad;
            continue;
        }
        return env;
    }
    throw ContractViolation("environment sampling kept violating invariant: " + last_bad);
}

// Where a realized value sits inside its sampling distribution, mapped to
// [-1, 1]. Degenerate (single-point) distributions map to 0.
inline double normalize_in_dist(const ParamDistribution& d, double value, double baseline) {
    double u = 0.0;
    switch (d.kind) {
        case DistKind::uniform:
            if (d.hi > d.lo) u = 2.0 * (value - d.lo) / (d.hi - d.lo) - 1.0;
            break;
        case DistKind::loguniform_factor:
            if (d.hi > d.lo && baseline > 0.0 && value > 0.0)
                u = 2.0 * (std::log(value / baseline) - std::log(d.lo)) /
                        (std::log(d.hi) - std::log(d.lo)) -
                    1.0;
            break;
        case DistKind::categorical: {
            if (d.values.size() < 2) break;
            std::size_t best = 0;
            for (std::size_t i = 1; i < d.values.size(); ++i)
                if (std::abs(d.values[i] - value) < std::abs(d.values[best] - value)) best = i;
            u = 2.0 * static_cast<double>(best) / static_cast<double>(d.values.size() - 1) - 1.0;
            break;
        }
    }
    return std::clamp(u, -1.0, 1.0);
}

inline int xi_dim(const ModelSpec& model, const RegimeSpec& regime) {
    int d = 0;
    for (const auto& a : param_registry(model))
        if (regime.dynamics_dists.count(a.name)) ++d;
    if (regime.obs_noise_dist) ++d;
    if (regime.obs_delay_dist) ++d;
    return d;
}

// The environment descriptor xi a system-identification module estimates:
// every randomized scalar, in registry order, normalized inside its own
// distribution. Fixed regimes have an empty descriptor.
inline Vec normalized_environment_vector(const ModelSpec& model, const RegimeSpec& regime,
                                         const EnvRealization& env) {
    Vec xi(xi_dim(model, regime));
    int k = 0;
    for (const auto& a : param_registry(model)) {
        const auto it = regime.dynamics_dists.find(a.name);
        if (it == regime.dynamics_dists.end()) continue;
        xi[k++] = normalize_in_dist(it->second, a.get(env.params), a.get(model.baseline));
    }
    if (regime.obs_noise_dist)
        xi[k++] = normalize_in_dist(*regime.obs_noise_dist, env.obs_noise_std, 0.0);
    if (regime.obs_delay_dist)
        xi[k++] = normalize_in_dist(*regime.obs_delay_dist,
                                    static_cast<double>(env.obs_delay_steps), 0.0);
    return xi;
}

// Uniform force draw per DoF. Zero-width components consume no randomness, so
// a zero-scale RFI regime replays the exact NR trajectory.
inline Vec sample_rfi(const Vec& halfwidth, Rng& rng) {
    Vec f = Vec::Zero(halfwidth.size());
    for (int i = 0; i < halfwidth.size(); ++i)
        if (halfwidth[i] > 0.0) f[i] = rng.uniform(-halfwidth[i], halfwidth[i]);
    return f;
}

inline Vec2 sample_rfi_object(double halfwidth, Rng& rng) {
    if (halfwidth <= 0.0) return Vec2::Zero();
    return Vec2(rng.uniform(-halfwidth, halfwidth), rng.uniform(-halfwidth, halfwidth));
}

// Additive Gaussian sensor noise; a zero std consumes no randomness.
inline Vec corrupt_observation(Vec obs, double noise_std, Rng& rng) {
    if (noise_std > 0.0)
        for (int i = 0; i < obs.size(); ++i) obs[i] += noise_std * rng.normal();
    return obs;
}

// Fixed observation latency in policy steps. Until enough history exists the
// oldest recorded observation is returned, so episodes start well defined.
class DelayBuffer {
   public:
    explicit DelayBuffer(int delay_steps) : delay_(delay_steps) {
        require(delay_steps >= 0, "DelayBuffer: negative delay");
    }

    Vec push(const Vec& obs) {
        buf_.push_back(obs);
        if (static_cast<int>(buf_.size()) > delay_ + 1) buf_.pop_front();
        return buf_.front();
    }

    void reset() { buf_.clear(); }

   private:
    int delay_;
    std::deque<Vec> buf_;
};

}  // namespace gapbench::randomize
