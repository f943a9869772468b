#pragma once

// Second-order forward-mode automatic differentiation.
//
// A Dual2 carries a value, its gradient and its Hessian with respect to a
// fixed set of active variables. An empty gradient stands for a constant, so
// literals can be promoted with a plain converting constructor and mixed
// freely with seeded variables. Hessians are assembled one triangle at a
// time and mirrored, so they are bitwise symmetric.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "contact_nh/errors.hpp"
#include "contact_nh/expr.hpp"
#include "contact_nh/linalg.hpp"

namespace contact_nh {

class Dual2 {
public:
    Dual2() = default;
    Dual2(double v) : value_(v) {}  // NOLINT: implicit promotion of constants
    Dual2(double v, Vec grad, Mat hess) : value_(v), grad_(std::move(grad)), hess_(std::move(hess)) {}

    /// Active variable `index` out of `n`, evaluated at `v`.
    static Dual2 variable(Eigen::Index n, Eigen::Index index, double v) {
        Vec g = Vec::Zero(n);
        g[index] = 1.0;
        return Dual2(v, std::move(g), Mat::Zero(n, n));
    }

    double value() const { return value_; }
    bool is_constant() const { return grad_.size() == 0; }
    Eigen::Index size() const { return grad_.size(); }

    /// Gradient expanded to `n` entries (zeros for constants).
    Vec grad(Eigen::Index n) const { return is_constant() ? Vec::Zero(n) : grad_; }
    Mat hess(Eigen::Index n) const { return is_constant() ? Mat::Zero(n, n) : hess_; }
    const Vec& grad() const { return grad_; }
    const Mat& hess() const { return hess_; }

    // Chain rule for a scalar function with derivatives d1, d2 at value().
    Dual2 apply(double fv, double d1, double d2) const {
        if (is_constant()) return Dual2(fv);
        const Eigen::Index n = size();
        Vec g = d1 * grad_;
        Mat h(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i) {
                const double v = d2 * (grad_[i] * grad_[j]) + d1 * hess_(i, j);
                h(i, j) = v;
                h(j, i) = v;
            }
        }
        return Dual2(fv, std::move(g), std::move(h));
    }

    friend Dual2 operator-(const Dual2& a) {
        if (a.is_constant()) return Dual2(-a.value_);
        return Dual2(-a.value_, -a.grad_, -a.hess_);
    }

    friend Dual2 operator+(const Dual2& a, const Dual2& b) {
        if (a.is_constant()) return b.is_constant() ? Dual2(a.value_ + b.value_) : Dual2(a.value_ + b.value_, b.grad_, b.hess_);
        if (b.is_constant()) return Dual2(a.value_ + b.value_, a.grad_, a.hess_);
        check_sizes(a, b);
        return Dual2(a.value_ + b.value_, a.grad_ + b.grad_, a.hess_ + b.hess_);
    }

    friend Dual2 operator-(const Dual2& a, const Dual2& b) { return a + (-b); }

    friend Dual2 operator*(const Dual2& a, const Dual2& b) {
        if (a.is_constant()) return b.scaled(a.value_);
        if (b.is_constant()) return a.scaled(b.value_);
        check_sizes(a, b);
        const Eigen::Index n = a.size();
        Vec g = a.value_ * b.grad_ + b.value_ * a.grad_;
        Mat h(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i) {
                const double v = a.value_ * b.hess_(i, j) + b.value_ * a.hess_(i, j) +
                                 (a.grad_[i] * b.grad_[j] + a.grad_[j] * b.grad_[i]);
                h(i, j) = v;
                h(j, i) = v;
            }
        }
        return Dual2(a.value_ * b.value_, std::move(g), std::move(h));
    }

    friend Dual2 operator/(const Dual2& a, const Dual2& b) {
        if (b.is_constant()) return a.scaled(1.0 / b.value_);
        const double v = b.value_;
        return a * b.apply(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
    }

    friend Dual2 sin(const Dual2& a) {
        const double s = std::sin(a.value_), c = std::cos(a.value_);
        return a.apply(s, c, -s);
    }
    friend Dual2 cos(const Dual2& a) {
        const double s = std::sin(a.value_), c = std::cos(a.value_);
        return a.apply(c, -s, -c);
    }
    friend Dual2 tan(const Dual2& a) {
        const double t = std::tan(a.value_);
        const double sec2 = 1.0 + t * t;
        return a.apply(t, sec2, 2.0 * t * sec2);
    }
    friend Dual2 exp(const Dual2& a) {
        const double e = std::exp(a.value_);
        return a.apply(e, e, e);
    }
    friend Dual2 log(const Dual2& a) {
        const double v = a.value_;
        return a.apply(std::log(v), 1.0 / v, -1.0 / (v * v));
    }
    friend Dual2 sqrt(const Dual2& a) {
        const double r = std::sqrt(a.value_);
        return a.apply(r, 0.5 / r, -0.25 / (r * a.value_));
    }

    /// a^b. Constant integral exponents use the power rule (any base);
    /// otherwise a^b = exp(b log a), which needs a positive base.
    friend Dual2 pow(const Dual2& a, const Dual2& b) {
        if (b.is_constant() && std::trunc(b.value_) == b.value_) {
            const double n = b.value_;
            const double fv = std::pow(a.value_, n);
            const double d1 = n == 0.0 ? 0.0 : n * std::pow(a.value_, n - 1.0);
            const double d2 = (n == 0.0 || n == 1.0) ? 0.0 : n * (n - 1.0) * std::pow(a.value_, n - 2.0);
            return a.apply(fv, d1, d2);
        }
        if (a.is_constant() && b.is_constant()) return Dual2(std::pow(a.value_, b.value_));
        return exp(b * log(a));
    }

    friend double scalar_value(const Dual2& a) { return a.value_; }
    friend bool scalar_is_constant(const Dual2& a) { return a.is_constant() || a.grad_.isZero(0.0); }

private:
    Dual2 scaled(double s) const {
        if (is_constant()) return Dual2(value_ * s);
        return Dual2(value_ * s, s * grad_, s * hess_);
    }

    static void check_sizes(const Dual2& a, const Dual2& b) {
        if (a.size() != b.size()) throw Error("Dual2: mismatched active variable counts");
    }

    double value_ = 0.0;
    Vec grad_;
    Mat hess_;
};

/// Value, gradient and Hessian of `e` at `point`, where `point[i]` is bound to
/// the variable named `order[i]`. Every free variable of `e` must appear in
/// `order`. Extra names in `order` are active variables the expression does
/// not depend on.
inline Dual2 jet2(const expr::Expression& e, std::span<const std::string> order,
                  std::span<const double> point) {
    if (order.size() != point.size()) throw Error("jet2: ordering and point lengths differ");
    const auto n = static_cast<Eigen::Index>(order.size());
    std::vector<Dual2> values;
    values.reserve(e.free_vars().size());
    for (const auto& name : e.free_vars()) {
        auto it = std::find(order.begin(), order.end(), name);
        if (it == order.end()) throw UnboundVariableError(name);
        const auto idx = static_cast<Eigen::Index>(it - order.begin());
        values.push_back(Dual2::variable(n, idx, point[static_cast<std::size_t>(idx)]));
    }
    Dual2 r = expr::evaluate<Dual2>(e, std::span<const Dual2>(values));
    if (r.is_constant()) return Dual2(r.value(), Vec::Zero(n), Mat::Zero(n, n));
    return r;
}

}  // namespace contact_nh
