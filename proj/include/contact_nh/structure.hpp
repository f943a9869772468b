#pragma once

// The projected almost-Jacobi structure (R_Delta, Lambda_Delta) and a bundle
// of all pointwise data at one state.

#include <Eigen/Dense>

#include "contact_nh/constraints.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/model.hpp"

namespace contact_nh {

struct ProjectedStructure {
    Vec reeb_delta;   // P(R)
    Mat lambda_delta; // Lambda_Delta(a, b) = a^T lambda_delta b

    double pair(const Vec& a, const Vec& b) const { return a.dot(lambda_delta * b); }
    /// b(sharp(a)) = Lambda_Delta(a, b).
    Vec sharp(const Vec& a) const { return lambda_delta.transpose() * a; }
};

inline ProjectedStructure projected_structure(const ContactFrame& f, const ConstraintFrame& cf) {
    ProjectedStructure s;
    s.reeb_delta = cf.P * f.reeb;
    s.lambda_delta = cf.P * lambda_matrix(f) * cf.P.transpose();
    return s;
}

/// Contact frame, constraint frame and projected structure at one state.
struct PointData {
    ContactFrame frame;
    ConstraintFrame cf;
    ProjectedStructure ps;

    static PointData at(const LagrangianModel& model, const State& state) {
        PointData d;
        d.frame = contact_frame(model, state);
        d.cf = constraint_frame(model, d.frame);
        d.ps = projected_structure(d.frame, d.cf);
        return d;
    }
};

}  // namespace contact_nh
