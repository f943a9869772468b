#pragma once

// Herglotz vector fields: the free field Gamma_L, the constrained field
// Gamma_{L,Delta}, and constrained Hamiltonian fields of arbitrary functions.

#include <Eigen/Dense>

#include "contact_nh/constraints.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/model.hpp"
#include "contact_nh/structure.hpp"

namespace contact_nh {

struct DynamicsReport {
    Vec gamma;
    Vec lambdas;              // empty when unconstrained
    double sode_residual = 0.0;
    double eta_pairing = 0.0; // eta(Gamma) + E
    Vec constraint_pairing;   // Phitilde^a(Gamma)
};

/// Right-hand side of W b = RHS for the free Herglotz equations.
inline Vec herglotz_rhs(const ContactFrame& f) {
    const Eigen::Index n = f.n, N = f.dim();
    const Vec qdot = f.state.qdot;
    const Mat B = f.hessL.block(0, n, n, n);  // B(k, i) = d^2 L / dq^k dqdot^i
    const double Lz = f.dL[N - 1];
    return f.dL.head(n) + f.p * Lz - B.transpose() * qdot - f.L_value * f.hessL.block(N - 1, n, 1, n).transpose();
}

namespace detail {

inline DynamicsReport finish_report(const ContactFrame& f, const Mat& phi_tilde, Vec gamma, Vec lambdas) {
    DynamicsReport r;
    const Eigen::Index n = f.n;
    r.sode_residual = (gamma.head(n) - f.state.qdot).cwiseAbs().maxCoeff();
    r.eta_pairing = f.eta.dot(gamma) + f.E;
    r.constraint_pairing = phi_tilde * gamma;
    r.gamma = std::move(gamma);
    r.lambdas = std::move(lambdas);
    return r;
}

}  // namespace detail

inline DynamicsReport gamma_unconstrained(const ContactFrame& f) {
    const Eigen::Index n = f.n;
    Vec gamma(f.dim());
    gamma.head(n) = f.state.qdot;
    gamma.segment(n, n) = f.W.partialPivLu().solve(herglotz_rhs(f));
    gamma[2 * n] = f.L_value;
    return detail::finish_report(f, Mat(0, f.dim()), std::move(gamma), Vec());
}

/// Gamma_L - C^{ba} dPhibar^b(Gamma_L) Z_a.
inline DynamicsReport gamma_constrained(const ContactFrame& f, const ConstraintFrame& cf) {
    const DynamicsReport free = gamma_unconstrained(f);
    const VectorSplit s = project_vector(cf, free.gamma);
    Vec gamma = s.P;
    gamma.head(f.n) = f.state.qdot;     // Z_a has no q-block
    gamma[2 * f.n] = f.L_value;         // nor a z-component
    return detail::finish_report(f, cf.phi_tilde, std::move(gamma), s.lambdas);
}

inline DynamicsReport gamma_constrained(const LagrangianModel& model, const State& state) {
    const ContactFrame f = contact_frame(model, state);
    return gamma_constrained(f, constraint_frame(model, f));
}

/// Residual of W b - RHS - Phi^T lambda with the accelerations of `r`.
inline Vec constrained_herglotz_residual(const ContactFrame& f, const ConstraintFrame& cf, const DynamicsReport& r) {
    const Vec b = r.gamma.segment(f.n, f.n);
    Vec res = f.W * b - herglotz_rhs(f);
    if (cf.k > 0) res -= cf.coeff.transpose() * r.lambdas;
    return res;
}

/// X^Delta_H = sharp_{Lambda_Delta}(dH) - H R_Delta.
inline Vec constrained_hamiltonian_vf(const ProjectedStructure& ps, double H, const Vec& dH) {
    return ps.sharp(dH) - H * ps.reeb_delta;
}

/// Equivalent form P(sharp(P* dH)) - (R_Delta(H) + H) R_Delta.
inline Vec constrained_hamiltonian_vf_flat(const ContactFrame& f, const ConstraintFrame& cf, double H,
                                           const Vec& dH) {
    const Vec rd = cf.P * f.reeb;
    return cf.P * f.sharp(cf.P.transpose() * dH) - (dH.dot(rd) + H) * rd;
}

/// Equivalent form P(X_H) - P(sharp_Lambda(Q* dH)).
inline Vec constrained_hamiltonian_vf_split(const ContactFrame& f, const ConstraintFrame& cf, double H,
                                            const Vec& dH) {
    return cf.P * (hamiltonian_vf(f, H, dH) - sharp_lambda(f, cf.Q.transpose() * dH));
}

/// flat(Gamma_Delta) - Pbar(dE - (E + R(E)) eta). Vanishes identically.
inline Vec flat_projection_residual(const ContactFrame& f, const ConstraintFrame& cf, const Vec& gamma) {
    const Vec a = f.dE - (f.E + f.reeb_derivative(f.dE)) * f.eta;
    return f.flat_of(gamma) - project_covector_flat(cf, f, a).P;
}

/// The same identity with the opposite sign in front of (E + R(E)); kept as a
/// diagnostic, it does not reproduce Gamma_Delta.
inline Vec flat_projection_residual_plus(const ContactFrame& f, const ConstraintFrame& cf, const Vec& gamma) {
    const Vec a = f.dE + (f.E + f.reeb_derivative(f.dE)) * f.eta;
    return f.flat_of(gamma) - project_covector_flat(cf, f, a).P;
}

/// Reaction field Q(Gamma_L) = lambda^a Z_a as a field on TQ x R.
inline Vec reaction_field(const LagrangianModel& model, const Vec& x) {
    const ContactFrame f = contact_frame(model, State::unpack(x));
    const ConstraintFrame cf = constraint_frame(model, f);
    return project_vector(cf, gamma_unconstrained(f).gamma).Q;
}

/// Basis of the lifted distribution: ker Phi(q) in the q-block plus every
/// velocity and z direction. Columns are basis vectors.
inline Mat lifted_distribution_basis(const LagrangianModel& model, const Vec& q) {
    const Eigen::Index n = model.dof(), N = model.dim();
    const Mat X = constraint_null_basis(model.constraints().coeff(q));
    Mat B = Mat::Zero(N, X.cols() + n + 1);
    B.topLeftCorner(n, X.cols()) = X;
    B.bottomRightCorner(n + 1, n + 1).setIdentity();
    return B;
}

namespace detail {

template <class F>
Vec rk4_flow(const F& field, Vec x, double t, int steps) {
    const double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        const Vec k1 = field(x);
        const Vec k2 = field(x + 0.5 * h * k1);
        const Vec k3 = field(x + 0.5 * h * k2);
        const Vec k4 = field(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

}  // namespace detail

/// Lie derivative of eta along the reaction field Q(Gamma_L), by central
/// differences of the pulled-back form along its flow. Returns the covector.
inline Vec lie_derivative_eta_reaction(const LagrangianModel& model, const State& state, double h = 1e-5,
                                       double eps = 1e-4) {
    const Vec x = state.packed();
    const Eigen::Index N = x.size();
    auto field = [&](const Vec& y) { return reaction_field(model, y); };
    auto eta_at = [&](const Vec& y) { return contact_frame(model, State::unpack(y)).eta; };
    // displacement of the time-t flow
    auto delta = [&](const Vec& y, double t) -> Vec { return detail::rk4_flow(field, y, t, 2) - y; };

    Vec out(N);
    const Vec xp = x + delta(x, h), xm = x + delta(x, -h);
    const Vec eta_p = eta_at(xp), eta_m = eta_at(xm);
    for (Eigen::Index i = 0; i < N; ++i) {
        Vec e = Vec::Zero(N);
        e[i] = 1.0;
        const Vec dp = e + (delta(x + eps * e, h) - delta(x - eps * e, h)) / (2 * eps);
        const Vec dm = e + (delta(x + eps * e, -h) - delta(x - eps * e, -h)) / (2 * eps);
        out[i] = (eta_p.dot(dp) - eta_m.dot(dm)) / (2 * h);
    }
    return out;
}

}  // namespace contact_nh
