#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gapbench/dyncore/types.hpp"

namespace gapbench::dyncore {

// Articulated subsystem kind. The free object (puck), when present, is stepped
// separately through the contact model; its coordinates are not part of q.
enum class ArmKind {
    serial_chain,  // planar revolute chain of uniform rods, base fixed at origin
    tilt_plate,    // two orthogonal gimbal axes (roll about x, pitch about y)
};

// Task model description: geometry, limits and baseline parameters.
//
// Conventions for the serial chain: the plane is x-y, joint angles are
// absolute-relative (theta_k = sum of q_1..q_k), links are uniform rods with
// the center of mass at mid-length and rod inertia m*l^2/12 about the com.
// For the vertical-plane model gravity pulls along -y. For the tilt plate,
// q = (roll, pitch) and the puck lives in the plate frame.
struct ModelSpec {
    std::string name;
    ArmKind kind = ArmKind::serial_chain;
    int n_joints = 2;
    bool gravity_in_plane = false;  // vertical-plane chain
    bool has_object = false;
    bool gravity_comp = false;  // feedforward gravity compensation in the controller

    Vec joint_lo, joint_hi;      // rad
    Vec joint_vel_limit;         // rad/s, symmetric
    Vec torque_limit;            // N·m, symmetric
    double cart_vel_limit = 0.2;      // m/s, action scale for Cartesian tasks
    double joint_vel_cmd_limit = 0.8; // rad/s, action scale for joint-space tasks
    double physics_dt = 0.002;        // s
    double ik_damping = 1e-2;         // DLS lambda used by the environments

    double table_y = 0.0;  // reach: table line height (vertical plane)

    double plate_half_x = 0.15, plate_half_y = 0.15;  // slide: plate extents

    // ee-object contact (push)
    double contact_stiffness = 1000.0;  // N/m
    double contact_damping = 14.0;      // N·s/m
    double contact_mu = 0.3;            // ee-puck tangential
    double ee_radius = 0.01;            // m

    DynamicsParams baseline;

    // Full DoF count including the free object (x, y, spin), used by RFI.
    int n_dof() const { return n_joints + (has_object ? 3 : 0); }
};

namespace detail {

inline Vec2 unit(double th) { return Vec2(std::cos(th), std::sin(th)); }
inline Vec2 perp(const Vec2& w) { return Vec2(-w.y(), w.x()); }
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Sharpness of the smooth sign(v) used for joint dry friction.
inline constexpr double kDryFrictionSharpness = 1e3;

}  // namespace detail

// ---------------------------------------------------------------------------
// Serial chain kinematics
// ---------------------------------------------------------------------------

// Joint origins p_1..p_{n+1}; p_{n+1} is the end-effector.
inline std::vector<Vec2> chain_joint_positions(const ModelSpec& model, const DynamicsParams& p,
                                               const Vec& q) {
    std::vector<Vec2> pos(model.n_joints + 1);
    pos[0] = Vec2::Zero();
    double th = 0.0;
    for (int k = 0; k < model.n_joints; ++k) {
        th += q[k];
        pos[k + 1] = pos[k] + p.link_lengths[k] * detail::unit(th);
    }
    return pos;
}

inline Vec2 fk_ee(const ModelSpec& model, const DynamicsParams& p, const Vec& q) {
    return chain_joint_positions(model, p, q).back();
}

// 2 x n Jacobian of the end-effector position.
inline Mat jacobian_ee(const ModelSpec& model, const DynamicsParams& p, const Vec& q) {
    const auto pos = chain_joint_positions(model, p, q);
    const Vec2 ee = pos.back();
    Mat J(2, model.n_joints);
    for (int i = 0; i < model.n_joints; ++i) {
        const Vec2 r = ee - pos[i];
        J.col(i) = detail::perp(r);
    }
    return J;
}

inline Vec2 ee_velocity(const ModelSpec& model, const DynamicsParams& p, const Vec& q,
                        const Vec& v) {
    return jacobian_ee(model, p, q) * v;
}

// ---------------------------------------------------------------------------
// Serial chain dynamics (closed form)
// ---------------------------------------------------------------------------

// Inverse dynamics for the planar chain: joint torques realizing qdd at (q, v),
// with gravity folded in through the base-acceleration trick. Direct O(n^2)
// moment summation; exact for uniform-rod links.
inline Vec chain_inverse_dynamics(const ModelSpec& model, const DynamicsParams& p, const Vec& q,
                                  const Vec& v, const Vec& qdd, bool with_gravity) {
    const int n = model.n_joints;
    const Vec2 g_base = (with_gravity && model.gravity_in_plane) ? Vec2(0.0, p.gravity) : Vec2(0.0, 0.0);

    std::vector<Vec2> joint_pos(n + 1), com(n), com_acc(n);
    std::vector<double> alpha(n);
    joint_pos[0] = Vec2::Zero();

    double th = 0.0, om = 0.0, al = 0.0;
    Vec2 a = g_base;  // base "acceleration" = -gravity
    for (int k = 0; k < n; ++k) {
        th += q[k];
        om += v[k];
        al += qdd[k];
        alpha[k] = al;
        const Vec2 u = detail::unit(th);
        const Vec2 r = p.link_lengths[k] * u;
        const Vec2 rc = 0.5 * p.link_lengths[k] * u;
        com[k] = joint_pos[k] + rc;
        com_acc[k] = a + al * detail::perp(rc) - om * om * rc;
        joint_pos[k + 1] = joint_pos[k] + r;
        a = a + al * detail::perp(r) - om * om * r;
    }

    Vec tau = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = i; j < n; ++j) {
            const double inertia_j =
                p.link_masses[j] * p.link_lengths[j] * p.link_lengths[j] / 12.0;
            s += inertia_j * alpha[j] +
                 p.link_masses[j] * detail::cross2(com[j] - joint_pos[i], com_acc[j]);
        }
        tau[i] = s;
    }
    return tau;
}

inline Mat chain_mass_matrix(const ModelSpec& model, const DynamicsParams& p, const Vec& q) {
    const int n = model.n_joints;
    Mat M(n, n);
    const Vec zero = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        M.col(i) = chain_inverse_dynamics(model, p, q, zero, e, /*with_gravity=*/false);
    }
    M.diagonal() += Eigen::Map<const Vec>(p.joint_armature.data(), n);
    return M;
}

// Gravity torque alone (used for controller feedforward).
inline Vec chain_gravity_torque(const ModelSpec& model, const DynamicsParams& p, const Vec& q) {
    const int n = model.n_joints;
    return chain_inverse_dynamics(model, p, q, Vec::Zero(n), Vec::Zero(n), /*with_gravity=*/true);
}

// ---------------------------------------------------------------------------
// Tilt plate dynamics
// ---------------------------------------------------------------------------

// Per-axis plate inertia: square plate of mass link_masses[0] spanning
// 2*plate_half, rotating about its central axis.
inline double plate_axis_inertia(const ModelSpec& model, const DynamicsParams& p) {
    const double w = 2.0 * model.plate_half_x;
    return p.link_masses[0] * w * w / 12.0;
}

inline Mat plate_mass_matrix(const ModelSpec& model, const DynamicsParams& p) {
    Mat M = Mat::Zero(2, 2);
    const double inertia = plate_axis_inertia(model, p);
    M(0, 0) = inertia + p.joint_armature[0];
    M(1, 1) = inertia + p.joint_armature[1];
    return M;
}

// ---------------------------------------------------------------------------
// Model-dispatched mass matrix and bias vector
// ---------------------------------------------------------------------------

inline Mat mass_matrix(const ModelSpec& model, const DynamicsParams& p, const Vec& q) {
    if (model.kind == ArmKind::serial_chain) return chain_mass_matrix(model, p, q);
    return plate_mass_matrix(model, p);
}

// Bias c(q, v): Coriolis/centrifugal + gravity + viscous damping + smooth dry
// friction. The plate is balanced about its gimbal axes, so its bias carries
// no gravity term; the puck's weight enters through external forces.
inline Vec bias_forces(const ModelSpec& model, const DynamicsParams& p, const Vec& q,
                       const Vec& v) {
    const int n = model.n_joints;
    Vec c;
    if (model.kind == ArmKind::serial_chain) {
        c = chain_inverse_dynamics(model, p, q, v, Vec::Zero(n), /*with_gravity=*/true);
    } else {
        c = Vec::Zero(n);
    }
    for (int i = 0; i < n; ++i) {
        c[i] += p.joint_damping[i] * v[i] +
                p.joint_dry_friction[i] * std::tanh(detail::kDryFrictionSharpness * v[i]);
    }
    return c;
}

inline double kinetic_energy(const ModelSpec& model, const DynamicsParams& p, const Vec& q,
                             const Vec& v) {
    return 0.5 * v.dot(mass_matrix(model, p, q) * v);
}

// ---------------------------------------------------------------------------
// Desk-scale task models
// ---------------------------------------------------------------------------

inline ModelSpec reach_model() {
    ModelSpec m;
    m.name = "reach";
    m.kind = ArmKind::serial_chain;
    m.n_joints = 2;
    m.gravity_in_plane = true;
    m.gravity_comp = true;
    m.has_object = false;
    m.joint_lo = (Vec(2) << -2.8, 0.15).finished();
    m.joint_hi = (Vec(2) << 0.3, 2.8).finished();
    m.joint_vel_limit = (Vec(2) << 2.5, 2.5).finished();
    m.torque_limit = (Vec(2) << 12.0, 6.0).finished();
    m.cart_vel_limit = 0.25;
    m.table_y = -0.35;
    m.ik_damping = 1e-2;

    DynamicsParams& b = m.baseline;
    b.link_masses = {1.2, 0.9};
    b.link_lengths = {0.30, 0.25};
    b.joint_damping = {0.6, 0.25};
    b.joint_dry_friction = {0.05, 0.02};
    b.joint_armature = {0.02, 0.01};
    b.controller_gains = {{4.0, 20.0, 0.02}, {1.2, 8.0, 0.005}};
    b.control_period = 0.1;
    b.feedback_period = 0.002;
    b.gravity = 9.81;
    return m;
}

inline ModelSpec push_model() {
    ModelSpec m;
    m.name = "push";
    m.kind = ArmKind::serial_chain;
    m.n_joints = 3;
    m.gravity_in_plane = false;  // horizontal plane
    m.has_object = true;
    m.joint_lo = (Vec(3) << -1.9, -2.6, -2.6).finished();
    m.joint_hi = (Vec(3) << 1.9, 2.6, 2.6).finished();
    m.joint_vel_limit = (Vec(3) << 3.0, 3.0, 3.0).finished();
    m.torque_limit = (Vec(3) << 8.0, 5.0, 3.0).finished();
    m.cart_vel_limit = 0.20;
    m.ik_damping = 2e-2;
    m.contact_stiffness = 1000.0;
    m.contact_damping = 14.0;
    m.contact_mu = 0.3;
    m.ee_radius = 0.01;

    DynamicsParams& b = m.baseline;
    b.link_masses = {1.0, 0.8, 0.5};
    b.link_lengths = {0.25, 0.22, 0.18};
    b.joint_damping = {0.5, 0.3, 0.15};
    b.joint_dry_friction = {0.04, 0.02, 0.01};
    b.joint_armature = {0.02, 0.01, 0.005};
    b.controller_gains = {{2.5, 12.0, 0.01}, {1.2, 6.0, 0.005}, {0.5, 3.0, 0.002}};
    b.control_period = 0.1;
    b.feedback_period = 0.002;
    b.object_mass = 0.12;
    b.object_radius = 0.035;
    b.surface_friction_mu = 0.30;
    b.gravity = 9.81;
    return m;
}

inline ModelSpec slide_model() {
    ModelSpec m;
    m.name = "slide";
    m.kind = ArmKind::tilt_plate;
    m.n_joints = 2;
    m.gravity_in_plane = false;
    m.has_object = true;
    m.joint_lo = (Vec(2) << -0.25, -0.25).finished();
    m.joint_hi = (Vec(2) << 0.25, 0.25).finished();
    m.joint_vel_limit = (Vec(2) << 1.2, 1.2).finished();
    m.torque_limit = (Vec(2) << 1.5, 1.5).finished();
    m.joint_vel_cmd_limit = 0.8;
    m.plate_half_x = 0.15;
    m.plate_half_y = 0.15;

    DynamicsParams& b = m.baseline;
    b.link_masses = {0.4};     // plate mass
    b.link_lengths = {0.15};   // plate half-extent, kept for manifest symmetry
    b.joint_damping = {0.05, 0.05};
    b.joint_dry_friction = {0.01, 0.01};
    b.joint_armature = {0.002, 0.002};
    b.controller_gains = {{0.8, 4.0, 0.002}, {0.8, 4.0, 0.002}};
    b.control_period = 0.1;
    b.feedback_period = 0.002;
    b.object_mass = 0.08;
    b.object_radius = 0.025;
    b.surface_friction_mu = 0.12;
    b.gravity = 9.81;
    return m;
}

inline ModelSpec model_by_name(const std::string& name) {
    if (name == "reach") return reach_model();
    if (name == "push") return push_model();
    if (name == "slide") return slide_model();
    throw ContractViolation("unknown task model: " + name);
}

}  // namespace gapbench::dyncore
