#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gapbench/dyncore/model.hpp"

namespace gapbench::randomize {

// Named access to one scalar inside DynamicsParams. The registry is the single
// source of truth for which dynamics parameters exist on a model and for the
// canonical sampling order.
struct ParamAccessor {
    std::string name;
    std::function<double(const dyncore::DynamicsParams&)> get;
    std::function<void(dyncore::DynamicsParams&, double)> set;
};

inline std::vector<ParamAccessor> param_registry(const dyncore::ModelSpec& model) {
    using dyncore::DynamicsParams;
    std::vector<ParamAccessor> reg;
    auto idx = [](const std::string& base, int i) { return base + "_" + std::to_string(i); };

    const int n_links = static_cast<int>(model.baseline.link_masses.size());
    for (int i = 0; i < n_links; ++i)
        reg.push_back({idx("link_mass", i),
                       [i](const DynamicsParams& p) { return p.link_masses[i]; },
                       [i](DynamicsParams& p, double v) { p.link_masses[i] = v; }});
    for (int i = 0; i < model.n_joints; ++i)
        reg.push_back({idx("joint_damping", i),
                       [i](const DynamicsParams& p) { return p.joint_damping[i]; },
                       [i](DynamicsParams& p, double v) { p.joint_damping[i] = v; }});
    for (int i = 0; i < model.n_joints; ++i)
        reg.push_back({idx("joint_dry_friction", i),
                       [i](const DynamicsParams& p) { return p.joint_dry_friction[i]; },
                       [i](DynamicsParams& p, double v) { p.joint_dry_friction[i] = v; }});
    for (int i = 0; i < model.n_joints; ++i)
        reg.push_back({idx("joint_armature", i),
                       [i](const DynamicsParams& p) { return p.joint_armature[i]; },
                       [i](DynamicsParams& p, double v) { p.joint_armature[i] = v; }});
    for (int i = 0; i < model.n_joints; ++i) {
        reg.push_back({idx("gain_kp", i),
                       [i](const DynamicsParams& p) { return p.controller_gains[i].kp; },
                       [i](DynamicsParams& p, double v) { p.controller_gains[i].kp = v; }});
        reg.push_back({idx("gain_ki", i),
                       [i](const DynamicsParams& p) { return p.controller_gains[i].ki; },
                       [i](DynamicsParams& p, double v) { p.controller_gains[i].ki = v; }});
        reg.push_back({idx("gain_kd", i),
                       [i](const DynamicsParams& p) { return p.controller_gains[i].kd; },
                       [i](DynamicsParams& p, double v) { p.controller_gains[i].kd = v; }});
    }
    if (model.has_object) {
        reg.push_back({"object_mass", [](const DynamicsParams& p) { return p.object_mass; },
                       [](DynamicsParams& p, double v) { p.object_mass = v; }});
        reg.push_back({"object_radius", [](const DynamicsParams& p) { return p.object_radius; },
                       [](DynamicsParams& p, double v) { p.object_radius = v; }});
        reg.push_back({"surface_friction_mu",
                       [](const DynamicsParams& p) { return p.surface_friction_mu; },
                       [](DynamicsParams& p, double v) { p.surface_friction_mu = v; }});
    }
    reg.push_back({"action_noise_range",
                   [](const DynamicsParams& p) { return p.action_noise_range; },
                   [](DynamicsParams& p, double v) { p.action_noise_range = v; }});
    return reg;
}

inline const ParamAccessor* find_param(const std::vector<ParamAccessor>& reg,
                                       const std::string& name) {
    for (const auto& a : reg)
        if (a.name == name) return &a;
    return nullptr;
}

// All names a regime or calibration config may reference for this model.
// Observation corruption lives outside DynamicsParams but is part of the
// randomizable surface, so it appears here too.
inline std::vector<std::string> manifest_names(const dyncore::ModelSpec& model) {
    std::vector<std::string> names;
    for (const auto& a : param_registry(model)) names.push_back(a.name);
    names.push_back("obs_noise_std");
    names.push_back("obs_delay_steps");
    return names;
}

}  // namespace gapbench::randomize
