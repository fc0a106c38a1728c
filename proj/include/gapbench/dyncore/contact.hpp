#pragma once

#include "gapbench/dyncore/model.hpp"
#include "gapbench/dyncore/types.hpp"

namespace gapbench::dyncore {

namespace detail {

// Unit vector along w, or zero when w vanishes.
inline Vec2 direction(const Vec2& w) {
    const double n = w.norm();
    return n > 1e-12 ? Vec2(w / n) : Vec2(Vec2::Zero());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Surface orientation
// ---------------------------------------------------------------------------

// Gravity seen in the frame of a plate rotated by R = Ry(pitch) * Rx(roll).
// in_plane is an acceleration (m/s^2) acting on anything resting on the plate;
// normal_load is the acceleration pressing it into the surface.
struct SurfacePose {
    Vec2 in_plane = Vec2::Zero();
    double normal_load = 9.81;

    static SurfacePose from_tilt(double roll, double pitch, double gravity = 9.81) {
        SurfacePose s;
        s.in_plane[0] = gravity * std::sin(pitch);
        s.in_plane[1] = -gravity * std::cos(pitch) * std::sin(roll);
        s.normal_load = gravity * std::cos(pitch) * std::cos(roll);
        return s;
    }

    static SurfacePose flat(double gravity = 9.81) { return from_tilt(0.0, 0.0, gravity); }
};

// Reaction torques on the plate joints (roll about x, pitch about y) from a
// normal load F_n at in-plane position p. The loaded side is pushed down.
inline Vec2 plate_load_torque(const Vec2& p, double normal_force) {
    return Vec2(-p[1] * normal_force, p[0] * normal_force);
}

// ---------------------------------------------------------------------------
// Free puck on a surface
// ---------------------------------------------------------------------------

struct PuckState {
    Vec2 pos = Vec2::Zero();
    Vec2 vel = Vec2::Zero();
    double spin = 0.0;
    double spin_vel = 0.0;
};

struct PuckStepResult {
    PuckState state;
    bool slipping = false;
};

// Coulomb friction with a true sticking regime. A puck at rest stays at rest
// unless the tangential force exceeds mu*N; a moving puck decelerates at mu*g
// and stops instead of oscillating through zero. Spin friction uses the disc
// result (2/3)*mu*N*r with inertia (1/2)*m*r^2.
inline PuckStepResult puck_step(double mass, double radius, double mu, const SurfacePose& surface,
                                const PuckState& state, const Vec2& applied_force,
                                double applied_spin_torque, double dt) {
    require(mass > 0.0 && radius > 0.0 && mu >= 0.0, "puck_step: parameters");
    require(dt > 0.0, "puck_step: dt");
    constexpr double kRestSpeed = 1e-6;

    const double normal = std::max(0.0, mass * surface.normal_load);
    const double fric_max = mu * normal;
    const Vec2 tangential = applied_force + mass * surface.in_plane;

    PuckStepResult res;
    res.state = state;

    const double speed = state.vel.norm();
    if (speed < kRestSpeed && tangential.norm() <= fric_max) {
        res.state.vel.setZero();
    } else {
        const Vec2 slide_dir = speed < kRestSpeed ? detail::direction(tangential) : detail::direction(state.vel);
        const Vec2 accel = (tangential - fric_max * slide_dir) / mass;
        res.state.vel = state.vel + accel * dt;
        // Friction stopped the puck inside this step.
        if (speed >= kRestSpeed && res.state.vel.dot(state.vel) <= 0.0 &&
            tangential.norm() <= fric_max)
            res.state.vel.setZero();
        else
            res.slipping = true;
    }
    res.state.pos = state.pos + res.state.vel * dt;

    const double inertia = 0.5 * mass * radius * radius;
    const double spin_fric = (2.0 / 3.0) * fric_max * radius;
    const double w = state.spin_vel;
    if (std::abs(w) < kRestSpeed && std::abs(applied_spin_torque) <= spin_fric) {
        res.state.spin_vel = 0.0;
    } else {
        const double dir = std::abs(w) < kRestSpeed ? (applied_spin_torque >= 0 ? 1.0 : -1.0)
                                                    : (w >= 0 ? 1.0 : -1.0);
        res.state.spin_vel = w + (applied_spin_torque - spin_fric * dir) / inertia * dt;
        if (std::abs(w) >= kRestSpeed && res.state.spin_vel * w <= 0.0 &&
            std::abs(applied_spin_torque) <= spin_fric)
            res.state.spin_vel = 0.0;
    }
    res.state.spin = state.spin + res.state.spin_vel * dt;

    require_finite(res.state.pos[0], "puck_step pos");
    require_finite(res.state.vel[0], "puck_step vel");
    return res;
}

// ---------------------------------------------------------------------------
// End-effector / puck coupling
// ---------------------------------------------------------------------------

struct EePuckContact {
    bool active = false;
    Vec2 force_on_puck = Vec2::Zero();  // equal and opposite on the ee
    double spin_torque_on_puck = 0.0;
    double penetration = 0.0;
};

// Compliant circular contact: spring-damper along the contact normal plus
// regularised Coulomb friction on the tangential slip velocity. The damper
// only acts while approaching so release is never sticky.
inline EePuckContact ee_puck_contact(const Vec2& ee_pos, const Vec2& ee_vel, const PuckState& puck,
                                     double puck_radius, double ee_radius, double stiffness,
                                     double damping, double mu) {
    EePuckContact c;
    const Vec2 d = puck.pos - ee_pos;
    const double dist = d.norm();
    const double reach = puck_radius + ee_radius;
    if (dist >= reach || dist < 1e-12) return c;

    c.active = true;
    c.penetration = reach - dist;
    const Vec2 n = d / dist;
    const Vec2 v_rel = puck.vel - ee_vel;
    const double approach = -v_rel.dot(n);
    const double fn = stiffness * c.penetration + damping * std::max(0.0, approach);
    if (fn <= 0.0) return c;

    // Slip velocity of the puck surface at the contact point.
    const Vec2 contact_offset = -puck_radius * n;
    const Vec2 v_contact = v_rel + puck.spin_vel * detail::perp(contact_offset);
    const Vec2 v_t = v_contact - v_contact.dot(n) * n;
    constexpr double kSlipScale = 1e-3;
    const Vec2 friction = -mu * fn * std::tanh(v_t.norm() / kSlipScale) * detail::direction(v_t);

    c.force_on_puck = fn * n + friction;
    c.spin_torque_on_puck = detail::cross2(contact_offset, friction);
    return c;
}

}  // namespace gapbench::dyncore
