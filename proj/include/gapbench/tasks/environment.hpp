#pragma once

#include <optional>

#include "gapbench/dyncore/contact.hpp"
#include "gapbench/dyncore/dynamics.hpp"
#include "gapbench/randomize/regime.hpp"
#include "gapbench/tasks/task.hpp"

namespace gapbench::tasks {

using dyncore::AppliedForces;
using dyncore::DynamicsParams;
using dyncore::GeneralizedState;
using dyncore::Mat;
using dyncore::ModelSpec;
using dyncore::PuckState;

struct StepOut {
    Vec obs;
    double reward = 0.0;
    bool terminated = false;  // failure state reached: falls and strikes
    bool truncated = false;   // horizon exhausted
};

// Fixed quirks of a target system layered over one realization: a pinned
// environment draw, unmodeled viscous drag on the object, a constant
// sensor offset on position observations, and a constant joint load
// (cable drag, mounting tilt, payload) the plant model does not know about.
struct PseudoRealEffects {
    std::optional<randomize::EnvRealization> fixed_env;
    double puck_drag = 0.0;  // N·s/m
    double obs_bias = 0.0;   // m
    Vec bias_torque;         // N·m per joint; empty = none
    Vec action_offset;       // command-zero miscalibration, action units; empty = none
    double start_jitter = -1.0;  // rad; >= 0 overrides the task's start spread
};

// Damped resolved-rate position IK onto the joint box. Returns nullopt when
// the target cannot be reached from the seed.
inline std::optional<dyncore::Vec> solve_ik_position(const ModelSpec& model,
                                                     const DynamicsParams& p, const Vec2& target,
                                                     dyncore::Vec q, int iters = 200) {
    for (int i = 0; i < iters; ++i) {
        const Vec2 err = target - fk_ee(model, p, q);
        if (err.norm() < 1e-9) return q;
        q += jacobian_ik(model, p, q, err, model.ik_damping);
        for (int j = 0; j < model.n_joints; ++j)
            q[j] = std::clamp(q[j], model.joint_lo[j], model.joint_hi[j]);
    }
    if ((target - fk_ee(model, p, q)).norm() < 1e-6) return q;
    return std::nullopt;
}

// One task episode under one randomization regime. All randomness flows from
// (seed, stream, episode), so any episode replays bit for bit.
class Environment {
   public:
    Environment(ModelSpec model, TaskSpec task, randomize::RegimeSpec regime, uint64_t seed,
                PseudoRealEffects effects = {})
        : model_(std::move(model)),
          task_(std::move(task)),
          regime_(std::move(regime)),
          seed_(seed),
          effects_(std::move(effects)),
          delay_buf_(0) {}

    Vec reset(uint64_t episode) { return reset_impl(episode, std::nullopt); }
    Vec reset(uint64_t episode, const Vec2& goal) { return reset_impl(episode, goal); }

    StepOut step(const Vec& action) {
        require(started_ && !terminated_ && !truncated_, "step called on finished episode");
        require(action.size() == task_.act_dim, "action dimension");
        for (int i = 0; i < action.size(); ++i) require_finite(action[i], "action");

        Vec a = action.cwiseMax(-1.0).cwiseMin(1.0);
        if (effects_.action_offset.size() > 0) a += effects_.action_offset;
        const double nr = env_.params.action_noise_range;
        if (nr > 0.0)
            for (int i = 0; i < a.size(); ++i) a[i] += act_rng_.uniform(-nr, nr);
        a = a.cwiseMax(-1.0).cwiseMin(1.0);
        const Vec qdot_target = action_to_joint_velocity(a);

        auto forces = [this](int, const GeneralizedState& st) { return substep_forces(st); };
        auto res = dyncore::run_control_period(model_, env_.params, model_.baseline, state_, pid_,
                                               qdot_target, forces);
        state_ = res.state;
        mean_tau_.setZero();
        for (const auto& tau : res.torques) mean_tau_ += tau;
        mean_tau_ /= static_cast<double>(res.torques.size());
        ++steps_;

        const double dist = task_distance();
        const bool within = dist < task_.success_threshold;
        hold_count_ = within ? hold_count_ + 1 : 0;

        const auto& w = task_.weights;
        double reward = -w.dist * dist + (within ? w.goal : 0.0);
        if (res.limit_hit) reward -= w.limit;

        if (task_.name == "reach") {
            if (ee_position()[1] < model_.table_y) {  // struck the table
                reward -= w.table;
                terminated_ = true;
            }
        } else if (task_.name == "push") {
            reward -= w.reach * (puck_.pos - ee_position()).norm();
            const bool off = puck_.pos[0] < task_.table_lo[0] || puck_.pos[0] > task_.table_hi[0] ||
                             puck_.pos[1] < task_.table_lo[1] || puck_.pos[1] > task_.table_hi[1];
            if (off) {
                reward -= w.fall;
                terminated_ = true;
            }
        } else {
            const bool off = std::abs(puck_.pos[0]) > model_.plate_half_x ||
                             std::abs(puck_.pos[1]) > model_.plate_half_y;
            if (off) {
                reward -= w.fall;
                terminated_ = true;
            }
        }
        if (!terminated_ && steps_ >= horizon_steps()) truncated_ = true;

        return {process_obs(observe_raw()), reward, terminated_, truncated_};
    }

    // Success requires surviving the whole horizon and sitting inside the
    // target zone continuously through the final hold window.
    bool success() const {
        return truncated_ && !terminated_ && hold_count_ >= task_.hold_steps(control_period());
    }

    int obs_dim() const { return task_.obs_dim; }
    int act_dim() const { return task_.act_dim; }
    int horizon_steps() const { return task_.horizon_steps(control_period()); }
    int steps_done() const { return steps_; }
    double control_period() const { return env_.params.control_period; }
    bool episode_over() const { return terminated_ || truncated_; }

    const ModelSpec& model() const { return model_; }
    const TaskSpec& task() const { return task_; }
    const randomize::RegimeSpec& regime() const { return regime_; }
    const randomize::EnvRealization& realization() const { return env_; }
    const GeneralizedState& arm_state() const { return state_; }
    const PuckState& puck() const { return puck_; }
    const Vec2& goal() const { return goal_; }
    double task_distance() const {
        return task_.name == "reach" ? (ee_position() - goal_).norm() : (puck_.pos - goal_).norm();
    }
    Vec2 ee_position() const { return fk_ee(model_, env_.params, state_.q); }

    // Proprioceptive history channel: joint positions, velocities, and the
    // mean actuator torque of the last control period.
    Vec aux_vector() const {
        Vec aux(3 * model_.n_joints);
        aux << state_.q, state_.v, mean_tau_;
        return aux;
    }
    int aux_dim() const { return 3 * model_.n_joints; }

    Vec true_xi() const { return normalized_environment_vector(model_, regime_, env_); }
    int xi_dim() const { return randomize::xi_dim(model_, regime_); }

   private:
    Vec reset_impl(uint64_t episode, std::optional<Vec2> fixed_goal) {
        episode_ = episode;
        Rng env_rng = Rng::derive(seed_, stream::kEnvSample, episode, 0);
        Rng reset_rng = Rng::derive(seed_, stream::kReset, episode, 0);
        rfi_rng_ = Rng::derive(seed_, stream::kRfi, episode, 0);
        obs_rng_ = Rng::derive(seed_, stream::kObsNoise, episode, 0);
        act_rng_ = Rng::derive(seed_, stream::kActionNoise, episode, 0);

        env_ = effects_.fixed_env ? *effects_.fixed_env
                                  : randomize::sample_environment(model_, regime_, env_rng);
        env_.params.validate();
        pid_ = dyncore::PidState::reset(model_.n_joints);
        mean_tau_ = Vec::Zero(model_.n_joints);
        steps_ = 0;
        hold_count_ = 0;
        terminated_ = truncated_ = false;
        started_ = true;

        goal_ = fixed_goal ? *fixed_goal : task_.sample_goal(reset_rng);
        place_start(reset_rng);
        state_.t = 0.0;

        delay_buf_ = randomize::DelayBuffer(env_.obs_delay_steps);
        return process_obs(observe_raw());
    }

    void place_start(Rng& rng) {
        puck_ = PuckState{};
        // A target system's home pose is only as exact as its mounting; the
        // override widens (or narrows) the start spread around the task's
        // nominal configuration.
        const double jitter =
            effects_.start_jitter >= 0.0 ? effects_.start_jitter : task_.start_jitter;
        if (task_.name == "reach") {
            state_.q = task_.start_q;
            for (int i = 0; i < state_.q.size(); ++i)
                if (jitter > 0.0) state_.q[i] += rng.uniform(-jitter, jitter);
            state_.v = Vec::Zero(model_.n_joints);
            return;
        }
        if (task_.name == "push") {
            for (int attempt = 0; attempt < 50; ++attempt) {
                const Vec2 ee_target(rng.uniform(task_.ee_start_lo[0], task_.ee_start_hi[0]),
                                     rng.uniform(task_.ee_start_lo[1], task_.ee_start_hi[1]));
                auto q = solve_ik_position(model_, model_.baseline, ee_target, task_.start_q);
                if (!q) q = solve_ik_position(model_, model_.baseline, ee_target, Vec(-task_.start_q));
                if (!q) continue;
                state_.q = *q;
                if (effects_.start_jitter > 0.0)
                    for (int i = 0; i < state_.q.size(); ++i)
                        state_.q[i] +=
                            rng.uniform(-effects_.start_jitter, effects_.start_jitter);
                state_.v = Vec::Zero(model_.n_joints);
                const Vec2 ee = fk_ee(model_, model_.baseline, state_.q);
                const double toward = std::atan2(goal_[1] - ee[1], goal_[0] - ee[0]);
                const double dir = toward + rng.uniform(-task_.puck_dir_cone, task_.puck_dir_cone);
                const double gap = rng.uniform(task_.puck_gap_lo, task_.puck_gap_hi);
                puck_.pos = ee + gap * Vec2(std::cos(dir), std::sin(dir));
                puck_.spin = rng.uniform(-M_PI, M_PI);
                return;
            }
            throw ContractViolation("push start placement failed: IK never converged");
        }
        // slide
        state_.q = task_.start_q;
        if (effects_.start_jitter > 0.0)
            for (int i = 0; i < state_.q.size(); ++i)
                state_.q[i] += rng.uniform(-effects_.start_jitter, effects_.start_jitter);
        state_.v = Vec::Zero(model_.n_joints);
        puck_.pos = Vec2(rng.uniform(task_.puck_start_lo[0], task_.puck_start_hi[0]),
                         rng.uniform(task_.puck_start_lo[1], task_.puck_start_hi[1]));
        puck_.spin = rng.uniform(-M_PI, M_PI);
    }

    Vec action_to_joint_velocity(const Vec& a) const {
        Vec qdot(model_.n_joints);
        if (task_.cartesian_action) {
            const Vec2 xdot(a[0] * model_.cart_vel_limit, a[1] * model_.cart_vel_limit);
            qdot = jacobian_ik(model_, model_.baseline, state_.q, xdot, model_.ik_damping);
        } else {
            qdot = a * model_.joint_vel_cmd_limit;
        }
        return qdot.cwiseMax(-model_.joint_vel_limit).cwiseMin(model_.joint_vel_limit);
    }

    // Forces for one physics substep. The object integrates here too, so the
    // arm and object advance under a consistent pre-step coupling.
    AppliedForces substep_forces(const GeneralizedState& st) {
        AppliedForces f = AppliedForces::zero(model_.n_joints);
        f.rfi = randomize::sample_rfi(env_.rfi_joint_halfwidth, rfi_rng_);
        if (effects_.bias_torque.size() > 0) f.rfi += effects_.bias_torque;
        if (!model_.has_object) return f;
        const auto& p = env_.params;

        if (model_.kind == dyncore::ArmKind::serial_chain) {  // push
            const Vec2 ee = fk_ee(model_, p, st.q);
            const Vec2 eev = ee_velocity(model_, p, st.q, st.v);
            const auto c = dyncore::ee_puck_contact(ee, eev, puck_, p.object_radius,
                                                   model_.ee_radius, model_.contact_stiffness,
                                                   model_.contact_damping, model_.contact_mu);
            Vec2 fp = c.force_on_puck +
                      randomize::sample_rfi_object(env_.rfi_object_halfwidth, rfi_rng_) -
                      effects_.puck_drag * puck_.vel;
            puck_ = dyncore::puck_step(p.object_mass, p.object_radius, p.surface_friction_mu,
                                       dyncore::SurfacePose::flat(p.gravity), puck_, fp,
                                       c.spin_torque_on_puck, model_.physics_dt)
                        .state;
            if (c.active) {
                dyncore::ExternalForce reaction;
                reaction.force = -c.force_on_puck;
                reaction.jacobian = jacobian_ee(model_, p, st.q);
                f.external.push_back(std::move(reaction));
            }
            return f;
        }

        // slide: puck rides the tilting plate; fall is only detected at the
        // policy rate, so the last partial period still treats it as on-plate
        const auto pose = dyncore::SurfacePose::from_tilt(st.q[0], st.q[1], p.gravity);
        const Vec2 fp = randomize::sample_rfi_object(env_.rfi_object_halfwidth, rfi_rng_) -
                        effects_.puck_drag * puck_.vel;
        puck_ = dyncore::puck_step(p.object_mass, p.object_radius, p.surface_friction_mu, pose,
                                   puck_, fp, 0.0, model_.physics_dt)
                    .state;
        dyncore::ExternalForce load;
        load.force = dyncore::plate_load_torque(puck_.pos, p.object_mass * pose.normal_load);
        load.jacobian = Mat::Identity(2, 2);
        f.external.push_back(std::move(load));
        return f;
    }

    Vec observe_raw() const {
        Vec o(task_.obs_dim);
        if (task_.name == "reach") {
            const Vec2 ee = ee_position();
            const Vec2 eev = ee_velocity(model_, env_.params, state_.q, state_.v);
            o << goal_[0] - ee[0], goal_[1] - ee[1], eev[0], eev[1];
        } else if (task_.name == "push") {
            const Vec2 ee = ee_position();
            const Vec2 eev = ee_velocity(model_, env_.params, state_.q, state_.v);
            o << puck_.pos[0] - ee[0], puck_.pos[1] - ee[1], goal_[0] - puck_.pos[0],
                goal_[1] - puck_.pos[1], eev[0], eev[1], puck_.vel[0], puck_.vel[1],
                std::sin(puck_.spin), std::cos(puck_.spin);
        } else {
            o << puck_.pos[0] - goal_[0], puck_.pos[1] - goal_[1], puck_.vel[0], puck_.vel[1],
                std::sin(puck_.spin), std::cos(puck_.spin), state_.q[0], state_.q[1], state_.v[0],
                state_.v[1];
        }
        return o;
    }

    Vec process_obs(const Vec& raw) {
        Vec obs = randomize::corrupt_observation(delay_buf_.push(raw), env_.obs_noise_std, obs_rng_);
        if (effects_.obs_bias != 0.0)
            for (int d : task_.position_dims) obs[d] += effects_.obs_bias;
        return obs;
    }

    ModelSpec model_;
    TaskSpec task_;
    randomize::RegimeSpec regime_;
    uint64_t seed_;
    PseudoRealEffects effects_;

    uint64_t episode_ = 0;
    randomize::EnvRealization env_;
    GeneralizedState state_;
    dyncore::PidState pid_;
    PuckState puck_;
    Vec2 goal_ = Vec2::Zero();
    Vec mean_tau_;
    Rng rfi_rng_{0}, obs_rng_{0}, act_rng_{0};
    randomize::DelayBuffer delay_buf_;
    int steps_ = 0;
    int hold_count_ = 0;
    bool started_ = false;
    bool terminated_ = false;
    bool truncated_ = false;
};

}  // namespace gapbench::tasks
