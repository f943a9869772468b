#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Dense>

namespace contact_nh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Induced infinity norm (max absolute row sum).
inline double inf_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Singularity test on an LU factorisation: the estimated smallest singular
/// value rcond * ||M||_1 falls below 1e-12 max(1, ||M||_1), or is not a number.
inline bool nearly_singular(const Eigen::PartialPivLU<Mat>& lu) {
    const double norm = lu.reconstructedMatrix().cwiseAbs().colwise().sum().maxCoeff();
    return !(lu.rcond() * norm >= 1e-12 * std::max(1.0, norm));
}

inline std::string format_vec(const Vec& v) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

}  // namespace contact_nh
