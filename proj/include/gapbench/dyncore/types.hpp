#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gapbench/core/error.hpp"

namespace gapbench::dyncore {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

// Generalized positions/velocities of the articulated subsystem.
// q in rad (joints), v in rad/s, t in seconds.
struct GeneralizedState {
    Vec q;
    Vec v;
    double t = 0.0;
};

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

// The randomizable parameter vector. One instance describes a concrete
// environment realization; the baseline instance lives in the model spec.
struct DynamicsParams {
    std::vector<double> link_masses;         // kg
    std::vector<double> link_lengths;        // m
    std::vector<double> joint_damping;       // N·m·s/rad
    std::vector<double> joint_dry_friction;  // N·m
    std::vector<double> joint_armature;      // kg·m²
    std::vector<PidGains> controller_gains;  // per joint
    double control_period = 0.1;             // s, policy period
    double feedback_period = 0.002;          // s, PID inner loop
    double object_mass = 0.0;                // kg, 0 when no free object
    double object_radius = 0.0;              // m
    double surface_friction_mu = 0.0;        // dimensionless
    double gravity = 9.81;                   // m/s²
    double action_noise_range = 0.0;         // normalized action units
    double torque_deadband = 0.0;            // N·m, actuator output dead zone

    // Returns the name of the first violated invariant, or nullopt if valid.
    std::optional<std::string> violated_invariant() const {
        for (double m : link_masses)
            if (!(m > 0.0)) return "link_masses";
        for (double l : link_lengths)
            if (!(l > 0.0)) return "link_lengths";
        for (double d : joint_damping)
            if (!(d >= 0.0)) return "joint_damping";
        for (double f : joint_dry_friction)
            if (!(f >= 0.0)) return "joint_dry_friction";
        for (double a : joint_armature)
            if (!(a >= 0.0)) return "joint_armature";
        for (const auto& g : controller_gains)
            if (!(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0)) return "controller_gains";
        if (!(control_period > 0.0)) return "control_period";
        if (!(feedback_period > 0.0)) return "feedback_period";
        if (feedback_period > control_period) return "feedback_period";
        const double ratio = control_period / feedback_period;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) return "control_period";
        if (object_mass < 0.0) return "object_mass";
        if (object_radius < 0.0) return "object_radius";
        if (surface_friction_mu < 0.0) return "surface_friction_mu";
        if (!(gravity >= 0.0)) return "gravity";
        if (action_noise_range < 0.0) return "action_noise_range";
        if (torque_deadband < 0.0) return "torque_deadband";
        return std::nullopt;
    }

    void validate() const {
        if (auto bad = violated_invariant())
            throw ContractViolation("DynamicsParams invariant violated: " + *bad);
    }
};

// One external Cartesian force with the Jacobian of its application point.
// Contribution to the generalized equations is J^T f.
struct ExternalForce {
    Vec2 force = Vec2::Zero();
    Mat jacobian;  // 2 x n_dof of the articulated subsystem
};

struct AppliedForces {
    Vec tau;                              // actuation, one per joint
    std::vector<ExternalForce> external;  // contacts etc.
    Vec rfi;                              // random generalized forces, per DoF

    static AppliedForces zero(int n) {
        AppliedForces f;
        f.tau = Vec::Zero(n);
        f.rfi = Vec::Zero(n);
        return f;
    }
};

}  // namespace gapbench::dyncore
