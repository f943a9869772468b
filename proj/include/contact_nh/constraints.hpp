#pragma once

// Lifted constraints, the reaction fields Z_a, the matrix C and the
// projectors P/Q splitting T(TQ x R) along Delta x R.

#include <vector>

#include <Eigen/Dense>

#include "contact_nh/errors.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/linalg.hpp"
#include "contact_nh/model.hpp"

namespace contact_nh {

struct ConstraintFrame {
    Eigen::Index k = 0;
    Vec values;              // Phibar^a at the state
    Mat coeff;               // Phi^a_i, k x n
    std::vector<Mat> coeff_jac;
    Mat phi_tilde;           // row a: (Phi^a_i, 0, 0)
    Mat Z;                   // column a: Z_a
    Mat dphibar;             // row b: d Phibar^b
    Mat C, Cinv;             // C(a, b) = d Phibar^b (Z_a)
    Mat P, Q;                // vector projectors

    /// Multipliers lambda^a = C^{ba} dPhibar^b(Y).
    Vec multipliers(const Vec& Y) const { return Cinv.transpose() * (dphibar * Y); }
};

inline ConstraintFrame constraint_frame(const LagrangianModel& model, const ContactFrame& f) {
    ConstraintFrame cf;
    const Eigen::Index n = f.n, N = f.dim();
    cf.k = model.constraint_count();
    const Eigen::Index k = cf.k;

    const ConstraintValues cv = model.constraints().at(f.x);
    cf.values = cv.values;
    cf.coeff = cv.coeff;
    cf.coeff_jac = cv.coeff_jac;
    require_full_rank(cf.coeff, f.state.q);

    cf.phi_tilde = Mat::Zero(k, N);
    cf.phi_tilde.leftCols(n) = cf.coeff;
    cf.Z = Mat::Zero(N, k);
    cf.Z.middleRows(n, n) = -f.Winv * cf.coeff.transpose();
    cf.dphibar = cv.differential;

    cf.C = (cf.dphibar * cf.Z).transpose();
    if (k > 0) {
        Eigen::PartialPivLU<Mat> lu(cf.C);
        if (nearly_singular(lu))
            throw DegeneracyError("constraint matrix C is singular at " + describe_state(f.state));
        cf.Cinv = lu.inverse();
    } else {
        cf.Cinv = Mat(0, 0);
    }
    cf.Q = cf.Z * cf.Cinv.transpose() * cf.dphibar;
    cf.P = Mat::Identity(N, N) - cf.Q;
    return cf;
}

struct VectorSplit {
    Vec P;
    Vec Q;
    Vec lambdas;
};

inline VectorSplit project_vector(const ConstraintFrame& cf, const Vec& Y) {
    VectorSplit s;
    s.lambdas = cf.multipliers(Y);
    s.Q = cf.Z * s.lambdas;
    s.P = Y - s.Q;
    return s;
}

struct CovectorSplit {
    Vec P;
    Vec Q;
};

/// Adjoint projectors: (P* a)(v) = a(P v).
inline CovectorSplit project_covector_adjoint(const ConstraintFrame& cf, const Vec& a) {
    CovectorSplit s;
    s.Q = cf.Q.transpose() * a;
    s.P = a - s.Q;
    return s;
}

/// Projectors transported by the flat map: Pbar(a) = flat(P(sharp a)).
inline CovectorSplit project_covector_flat(const ConstraintFrame& cf, const ContactFrame& f, const Vec& a) {
    const VectorSplit v = project_vector(cf, f.sharp(a));
    CovectorSplit s;
    s.Q = f.flat_of(v.Q);
    s.P = a - s.Q;
    return s;
}

struct InvolutivityDefect {
    Mat table;   // row a, column per basis pair (u < v)
    double max = 0.0;
};

/// Orthonormal basis of ker Phi(q) from a column-pivoted QR of Phi^T.
inline Mat constraint_null_basis(const Mat& coeff) {
    const Eigen::Index n = coeff.cols(), k = coeff.rows();
    if (k == 0) return Mat::Identity(n, n);
    Eigen::ColPivHouseholderQR<Mat> qr(coeff.transpose());
    const Mat Qfull = qr.householderQ() * Mat::Identity(n, n);
    return Qfull.rightCols(n - k);
}

/// d Phi^a evaluated on pairs of an orthonormal basis of ker Phi(q). Zero at
/// every q exactly when the constraint distribution is involutive.
inline InvolutivityDefect involutivity_defect(const LagrangianModel& model, const Vec& q) {
    const Eigen::Index k = model.constraint_count();
    const Mat coeff = model.constraints().coeff(q);
    require_full_rank(coeff, q);
    const std::vector<Mat> jac = model.constraints().coeff_jac(q);
    const Mat X = constraint_null_basis(coeff);
    const Eigen::Index m = X.cols();

    InvolutivityDefect d;
    d.table = Mat::Zero(k, m * (m - 1) / 2);
    for (Eigen::Index a = 0; a < k; ++a) {
        const Mat& J = jac[static_cast<std::size_t>(a)];
        const Mat A = J.transpose() - J;  // A(i, j) = d_i Phi_j - d_j Phi_i
        Eigen::Index col = 0;
        for (Eigen::Index u = 0; u < m; ++u)
            for (Eigen::Index v = u + 1; v < m; ++v) {
                d.table(a, col) = X.col(u).dot(A * X.col(v));
                d.max = std::max(d.max, std::abs(d.table(a, col)));
                ++col;
            }
    }
    return d;
}

/// Least-squares velocity projection onto Delta at fixed q.
inline State project_onto_constraints(const LagrangianModel& model, State s) {
    if (model.constraint_count() == 0) return s;
    const Mat coeff = model.constraints().coeff(s.q);
    const Vec r = coeff * s.qdot;
    s.qdot -= coeff.transpose() * (coeff * coeff.transpose()).ldlt().solve(r);
    return s;
}

}  // namespace contact_nh
