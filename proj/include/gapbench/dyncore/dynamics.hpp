#pragma once

#include <string>

#include "gapbench/dyncore/model.hpp"
#include "gapbench/dyncore/types.hpp"

namespace gapbench::dyncore {

// Generalized accelerations of the articulated subsystem:
//   vdot = M(q)^-1 ( tau + sum_k J_k^T f_k + f_r - c(q, v) )
inline Vec forward_dynamics(const ModelSpec& model, const GeneralizedState& state,
                            const DynamicsParams& params, const AppliedForces& forces) {
    const int n = model.n_joints;
    require(state.q.size() == n && state.v.size() == n, "forward_dynamics: state dimension");
    require(forces.tau.size() == n, "forward_dynamics: tau dimension");
    require(forces.rfi.size() == n, "forward_dynamics: rfi dimension");
    for (int i = 0; i < n; ++i) {
        require_finite(state.q[i], "forward_dynamics q");
        require_finite(state.v[i], "forward_dynamics v");
        require_finite(forces.tau[i], "forward_dynamics tau");
    }

    Vec rhs = forces.tau + forces.rfi - bias_forces(model, params, state.q, state.v);
    for (const auto& ext : forces.external) {
        require(ext.jacobian.rows() == 2 && ext.jacobian.cols() == n,
                "forward_dynamics: external force Jacobian shape");
        rhs += ext.jacobian.transpose() * ext.force;
    }
    const Mat M = mass_matrix(model, params, state.q);
    return M.ldlt().solve(rhs);
}

struct StepResult {
    GeneralizedState state;
    bool limit_hit = false;
};

// Semi-implicit Euler: v' = v + vdot*dt, q' = q + v'*dt. Joints clamped to
// their limits with the velocity zeroed at the limit.
inline StepResult step(const ModelSpec& model, const GeneralizedState& state,
                       const DynamicsParams& params, const AppliedForces& forces, double dt) {
    require(dt > 0.0, "step: dt must be positive");
    const Vec vdot = forward_dynamics(model, state, params, forces);

    StepResult res;
    res.state.v = state.v + vdot * dt;
    res.state.q = state.q + res.state.v * dt;
    res.state.t = state.t + dt;

    for (int i = 0; i < model.n_joints; ++i) {
        if (res.state.q[i] < model.joint_lo[i]) {
            res.state.q[i] = model.joint_lo[i];
            res.state.v[i] = 0.0;
            res.limit_hit = true;
        } else if (res.state.q[i] > model.joint_hi[i]) {
            res.state.q[i] = model.joint_hi[i];
            res.state.v[i] = 0.0;
            res.limit_hit = true;
        }
        if (!std::isfinite(res.state.q[i]) || !std::isfinite(res.state.v[i]))
            throw NumericError("non-finite state after step at DoF " + std::to_string(i));
    }
    return res;
}

// Damped-least-squares inverse kinematics: qdot = J^T (J J^T + lambda^2 I)^-1 xdot.
// Bounded output even at singular configurations.
inline Vec jacobian_ik(const ModelSpec& model, const DynamicsParams& params, const Vec& q,
                       const Vec2& cartesian_vel, double lambda = 1e-4) {
    const Mat J = jacobian_ee(model, params, q);
    Mat A = J * J.transpose();
    A(0, 0) += lambda * lambda;
    A(1, 1) += lambda * lambda;
    return J.transpose() * A.ldlt().solve(Eigen::Matrix<double, 2, 1>(cartesian_vel));
}

// ---------------------------------------------------------------------------
// Inner velocity PID loop
// ---------------------------------------------------------------------------

struct PidState {
    Vec integral;
    Vec prev_error;
    bool first_tick = true;

    static PidState reset(int n) {
        PidState s;
        s.integral = Vec::Zero(n);
        s.prev_error = Vec::Zero(n);
        s.first_tick = true;
        return s;
    }
};

// Torque for one feedback tick. comp_params drives the gravity feedforward,
// which uses the controller's internal (baseline) model, not the true one.
inline Vec pid_torque(const ModelSpec& model, const DynamicsParams& params,
                      const DynamicsParams& comp_params, PidState& pid, const Vec& target_vel,
                      const Vec& measured_vel, const Vec& q, double dt_fb) {
    const int n = model.n_joints;
    Vec e = target_vel - measured_vel;
    pid.integral += e * dt_fb;
    Vec de = pid.first_tick ? Vec::Zero(n) : Vec((e - pid.prev_error) / dt_fb);
    pid.prev_error = e;
    pid.first_tick = false;

    Vec tau(n);
    for (int i = 0; i < n; ++i) {
        const auto& g = params.controller_gains[i];
        tau[i] = g.kp * e[i] + g.ki * pid.integral[i] + g.kd * de[i];
    }
    if (model.gravity_comp && model.kind == ArmKind::serial_chain)
        tau += chain_gravity_torque(model, comp_params, q);
    for (int i = 0; i < n; ++i) {
        tau[i] = std::clamp(tau[i], -model.torque_limit[i], model.torque_limit[i]);
        if (std::abs(tau[i]) < params.torque_deadband) tau[i] = 0.0;
    }
    return tau;
}

struct ControlPeriodResult {
    GeneralizedState state;
    std::vector<Vec> torques;  // one entry per feedback tick
    bool limit_hit = false;
};

// Runs the closed velocity loop for one control period: PID at the feedback
// rate, physics at the model timestep, zero-order hold on torque in between.
// substep_forces(physics_step_index) supplies RFI and contact forces.
template <typename SubstepForces>
ControlPeriodResult run_control_period(const ModelSpec& model, const DynamicsParams& params,
                                       const DynamicsParams& comp_params,
                                       const GeneralizedState& state, PidState& pid,
                                       const Vec& target_vel, SubstepForces&& substep_forces) {
    const double dt = model.physics_dt;
    const int n_sub = static_cast<int>(std::round(params.control_period / dt));
    const int fb_every = static_cast<int>(std::round(params.feedback_period / dt));
    require(n_sub >= 1 && fb_every >= 1, "run_control_period: period/timestep mismatch");

    ControlPeriodResult res;
    res.state = state;
    Vec tau = Vec::Zero(model.n_joints);
    for (int s = 0; s < n_sub; ++s) {
        if (s % fb_every == 0) {
            tau = pid_torque(model, params, comp_params, pid, target_vel, res.state.v, res.state.q,
                             params.feedback_period);
            res.torques.push_back(tau);
        }
        AppliedForces forces = substep_forces(s, res.state);
        forces.tau = tau;
        const StepResult sr = step(model, res.state, params, forces, dt);
        res.state = sr.state;
        res.limit_hit = res.limit_hit || sr.limit_hit;
    }
    return res;
}

// Convenience wrapper: velocity loop with no extra forces.
inline ControlPeriodResult pd_velocity_loop(const ModelSpec& model, const DynamicsParams& params,
                                            const GeneralizedState& state, PidState& pid,
                                            const Vec& target_vel) {
    const int n = model.n_joints;
    return run_control_period(model, params, params, state, pid, target_vel,
                              [n](int, const GeneralizedState&) { return AppliedForces::zero(n); });
}

}  // namespace gapbench::dyncore
