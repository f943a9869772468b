#pragma once

// Pointwise contact data of a Lagrangian on TQ x R.
//
// Conventions: components are ordered (q, qdot, z); dEta(i, j) = d eta(e_i, e_j)
// with (da ^ db)(u, v) = a(u) b(v) - a(v) b(u); the flat map sends v to the
// covector flat * v, whose pairing with u is d eta(v, u) + eta(v) eta(u).

#include <string>

#include <Eigen/Dense>

#include "contact_nh/autodiff.hpp"
#include "contact_nh/errors.hpp"
#include "contact_nh/linalg.hpp"
#include "contact_nh/model.hpp"

namespace contact_nh {

struct ContactFrame {
    State state;
    Vec x;          // packed state
    Eigen::Index n = 0;

    double L_value = 0.0;
    Vec dL;         // full gradient of L
    Mat hessL;      // full Hessian of L

    Vec p;          // dL/dqdot
    Vec eta;        // (-p, 0, 1)
    Mat deta;       // antisymmetric
    Mat flat;       // covector = flat * v
    Vec reeb;
    Mat W, Winv;
    double E = 0.0;
    Vec dE;

    Eigen::PartialPivLU<Mat> flat_lu;

    Eigen::Index dim() const { return 2 * n + 1; }
    Vec sharp(const Vec& a) const { return flat_lu.solve(a); }
    Vec flat_of(const Vec& v) const { return flat * v; }
    /// R(f) for a function with differential df.
    double reeb_derivative(const Vec& df) const { return df.dot(reeb); }
};

inline std::string describe_state(const State& s) {
    return "q = " + format_vec(s.q) + ", qdot = " + format_vec(s.qdot) + ", z = " + format_vec(Vec::Constant(1, s.z));
}

/// Velocity Hessian W and its inverse; RegularityError when W is singular.
inline std::pair<Mat, Mat> velocity_hessian(const LagrangianModel& model, const State& state) {
    const Eigen::Index n = model.dof();
    const Dual2 j = model.lagrangian().jet(state.packed());
    Mat W = j.hess().block(n, n, n, n);
    Eigen::PartialPivLU<Mat> lu(W);
    if (nearly_singular(lu))
        throw RegularityError("singular velocity Hessian at " + describe_state(state));
    return {W, lu.inverse()};
}

inline ContactFrame contact_frame(const LagrangianModel& model, const State& state) {
    if (state.dof() != model.dof() || state.qdot.size() != model.dof())
        throw Error("state dimension does not match model '" + model.name() + "'");
    ContactFrame f;
    f.state = state;
    f.x = state.packed();
    f.n = model.dof();
    const Eigen::Index n = f.n, N = 2 * n + 1;

    const Dual2 j = model.lagrangian().jet(f.x);
    f.L_value = j.value();
    f.dL = j.grad();
    f.hessL = j.hess();

    f.p = f.dL.segment(n, n);
    f.eta = Vec::Zero(N);
    f.eta.head(n) = -f.p;
    f.eta[N - 1] = 1.0;

    // d_i eta_j = -d_i p_j for the q-components; the z-component of eta is constant.
    Mat deta_partial = Mat::Zero(N, N);
    deta_partial.leftCols(n) = -f.hessL.middleCols(n, n);
    f.deta = deta_partial - deta_partial.transpose();

    f.W = f.hessL.block(n, n, n, n);
    Eigen::PartialPivLU<Mat> wlu(f.W);
    if (nearly_singular(wlu))
        throw RegularityError("singular velocity Hessian at " + describe_state(state));
    f.Winv = wlu.inverse();

    f.flat = -f.deta + f.eta * f.eta.transpose();
    f.flat_lu.compute(f.flat);
    if (nearly_singular(f.flat_lu))
        throw RegularityError("contact flat map is not invertible at " + describe_state(state));

    f.reeb = f.flat_lu.solve(f.eta);

    const Vec qdot = state.qdot;
    f.E = qdot.dot(f.p) - f.L_value;
    f.dE = f.hessL.middleRows(n, n).transpose() * qdot - f.dL;
    f.dE.segment(n, n) += f.p;
    return f;
}

inline Vec flat_apply(const ContactFrame& f, const Vec& v) { return f.flat_of(v); }
inline Vec sharp_apply(const ContactFrame& f, const Vec& a) { return f.sharp(a); }

/// Lambda(a, b) = -d eta(sharp a, sharp b).
inline double lambda_pair(const ContactFrame& f, const Vec& a, const Vec& b) {
    return -f.sharp(a).dot(f.deta * f.sharp(b));
}

/// The vector v with b(v) = Lambda(a, b) for every b.
inline Vec sharp_lambda(const ContactFrame& f, const Vec& a) {
    const Vec s = f.sharp(a);
    return s - a.dot(f.reeb) * f.reeb;
}

/// Matrix of Lambda: Lambda(a, b) = a^T M b.
inline Mat lambda_matrix(const ContactFrame& f) {
    const Mat inv = f.flat_lu.inverse();
    return -inv.transpose() * f.deta * inv;
}

/// X_H = sharp(dH - (R(H) + H) eta).
inline Vec hamiltonian_vf(const ContactFrame& f, double H, const Vec& dH) {
    return f.sharp(dH - (f.reeb_derivative(dH) + H) * f.eta);
}

/// Same field written as sharp_Lambda(dH) - H R.
inline Vec hamiltonian_vf_jacobi(const ContactFrame& f, double H, const Vec& dH) {
    return sharp_lambda(f, dH) - H * f.reeb;
}

}  // namespace contact_nh
