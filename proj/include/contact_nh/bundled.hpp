#pragma once

// Model files shipped inside the library. The same texts live under models/
// in the source tree; a unit test keeps the two copies identical.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contact_nh/errors.hpp"
#include "contact_nh/model.hpp"

namespace contact_nh {

inline const std::vector<std::pair<std::string_view, std::string_view>>& bundled_model_texts() {
    static const std::vector<std::pair<std::string_view, std::string_view>> texts = {
        {"sledge", R"model(# Chaplygin sledge with Rayleigh-type friction gamma*z.
# (alpha, beta) locate the centre of mass in the blade frame; mass and
# radius of inertia are normalised to 1.
[model]
name = "sledge"
description = "Chaplygin sledge with linear friction"
coords = ["x", "y", "phi"]
lagrangian = "0.5*((alpha*cos(phi) - beta*sin(phi))*dphi + dy)^2 + 0.5*((beta*cos(phi) + alpha*sin(phi))*dphi - dx)^2 + dphi^2 + gamma*z"
check_state = [0, 0, 0, 1, 0, 0.5, 0]

[params]
alpha = 1
beta = 0.5
gamma = 0.1

[constraints]
blade = "sin(phi)*dx - cos(phi)*dy"
)model"},
        {"oscillator", R"model(# Damped harmonic oscillator: qddot = -q + gamma*qdot.
[model]
name = "oscillator"
description = "harmonic oscillator with linear damping"
coords = ["q"]
lagrangian = "0.5*dq^2 - 0.5*q^2 + gamma*z"
check_state = [1, 0, 0]

[params]
gamma = -0.2
)model"},
        {"free_particle", R"model([model]
name = "free_particle"
description = "free particle in the plane"
coords = ["x", "y"]
lagrangian = "0.5*(dx^2 + dy^2)"
check_state = [0, 0, 1, 0, 0]
)model"},
        {"knife_edge", R"model(# Knife edge (rolling blade) on the plane with friction.
[model]
name = "knife_edge"
description = "knife edge on the plane with linear friction"
coords = ["x", "y", "theta"]
lagrangian = "0.5*(dx^2 + dy^2 + dtheta^2) + gamma*z"
check_state = [0, 0, 0, 1, 0, 0.5, 0]

[params]
gamma = 0.1

[constraints]
blade = "sin(theta)*dx - cos(theta)*dy"
)model"},
        {"holonomic", R"model(# Constant constraint qdot1 = 0: an integrable distribution.
[model]
name = "holonomic"
description = "free particle in R^3 with q1 frozen"
coords = ["q1", "q2", "q3"]
lagrangian = "0.5*(dq1^2 + dq2^2 + dq3^2) + gamma*z"
check_state = [0, 0, 0, 0, 1, 0.5, 0]

[params]
gamma = 0.1

[constraints]
c1 = "dq1"
)model"},
        {"exact", R"model(# Constraint d(q1*q2) = 0 written as a velocity form: integrable.
[model]
name = "exact"
description = "free particle in R^3 keeping q1*q2 constant"
coords = ["q1", "q2", "q3"]
lagrangian = "0.5*(dq1^2 + dq2^2 + dq3^2) + gamma*z"
check_state = [1, 1, 0, 1, -1, 0.5, 0]

[params]
gamma = 0.1

[constraints]
c1 = "q2*dq1 + q1*dq2"
)model"},
    };
    return texts;
}

inline bool is_bundled_model(std::string_view name) {
    for (const auto& [k, v] : bundled_model_texts())
        if (k == name) return true;
    return false;
}

inline std::string_view bundled_model_text(std::string_view name) {
    for (const auto& [k, v] : bundled_model_texts())
        if (k == name) return v;
    throw ModelError("no bundled model named '" + std::string(name) + "'");
}

inline LagrangianModel bundled_model(std::string_view name) { return load_model_text(bundled_model_text(name)); }

/// A bundled name or a path to a model file.
inline LagrangianModel load_model(const std::string& name_or_path) {
    if (is_bundled_model(name_or_path)) return bundled_model(name_or_path);
    return load_model_file(name_or_path);
}

}  // namespace contact_nh
