#pragma once

// Lagrangian models on TQ x R: state layout, expressions bound to that
// layout, the linear velocity constraints, and model loading/validation.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "contact_nh/autodiff.hpp"
#include "contact_nh/errors.hpp"
#include "contact_nh/expr.hpp"
#include "contact_nh/linalg.hpp"
#include "contact_nh/model_file.hpp"
#include "contact_nh/sampling.hpp"

namespace contact_nh {

/// A point (q, qdot, z) of TQ x R. Vectors and covectors on TQ x R use the
/// canonical ordering (q^1..q^n, qdot^1..qdot^n, z).
struct State {
    Vec q;
    Vec qdot;
    double z = 0.0;

    Eigen::Index dof() const { return q.size(); }

    Vec packed() const {
        const Eigen::Index n = q.size();
        Vec x(2 * n + 1);
        x.head(n) = q;
        x.segment(n, n) = qdot;
        x[2 * n] = z;
        return x;
    }

    static State unpack(const Vec& x) {
        if (x.size() % 2 != 1) throw Error("state vector must have odd length 2n+1");
        const Eigen::Index n = (x.size() - 1) / 2;
        return State{x.head(n), x.segment(n, n), x[2 * n]};
    }

    bool finite() const { return q.allFinite() && qdot.allFinite() && std::isfinite(z); }
};

/// An expression whose free variables are resolved to slots of the packed
/// state or to fixed parameter values.
class BoundExpression {
public:
    BoundExpression() = default;

    BoundExpression(expr::Expression e, const std::vector<std::string>& layout,
                    const std::vector<std::pair<std::string, double>>& params)
        : expr_(std::move(e)) {
        for (const auto& name : expr_.free_vars()) {
            auto it = std::find(layout.begin(), layout.end(), name);
            if (it != layout.end()) {
                bindings_.push_back({static_cast<Eigen::Index>(it - layout.begin()), 0.0});
                continue;
            }
            auto pit = std::find_if(params.begin(), params.end(),
                                    [&](const auto& p) { return p.first == name; });
            if (pit == params.end()) throw UnboundVariableError(name);
            bindings_.push_back({-1, pit->second});
        }
    }

    const expr::Expression& expression() const { return expr_; }
    const std::string& source() const { return expr_.source(); }

    double value(const Vec& x) const {
        std::vector<double> v;
        v.reserve(bindings_.size());
        for (const auto& b : bindings_) v.push_back(b.slot >= 0 ? x[b.slot] : b.constant);
        return expr::evaluate<double>(expr_, std::span<const double>(v));
    }

    /// Value, gradient and Hessian with respect to every slot of `x`.
    Dual2 jet(const Vec& x) const {
        const Eigen::Index n = x.size();
        std::vector<Dual2> v;
        v.reserve(bindings_.size());
        for (const auto& b : bindings_)
            v.push_back(b.slot >= 0 ? Dual2::variable(n, b.slot, x[b.slot]) : Dual2(b.constant));
        Dual2 r = expr::evaluate<Dual2>(expr_, std::span<const Dual2>(v));
        if (r.is_constant()) return Dual2(r.value(), Vec::Zero(n), Mat::Zero(n, n));
        return r;
    }

private:
    struct Binding {
        Eigen::Index slot;  // -1 for parameters
        double constant;
    };
    expr::Expression expr_;
    std::vector<Binding> bindings_;
};

/// Pointwise data of the k linear constraints Phi^a = Phi^a_i(q) qdot^i.
struct ConstraintValues {
    Vec values;                 // Phi^a(state), length k
    Mat coeff;                  // Phi^a_i, k x n
    Mat differential;           // dPhibar^a on TQ x R, k x (2n+1)
    std::vector<Mat> coeff_jac; // [a](i, j) = d Phi^a_i / d q^j
};

class ConstraintSet {
public:
    ConstraintSet() = default;
    ConstraintSet(std::vector<std::string> names, std::vector<BoundExpression> exprs, Eigen::Index n)
        : names_(std::move(names)), exprs_(std::move(exprs)), n_(n) {}

    Eigen::Index count() const { return static_cast<Eigen::Index>(exprs_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<BoundExpression>& expressions() const { return exprs_; }

    ConstraintValues at(const Vec& x) const {
        const Eigen::Index k = count(), dim = x.size();
        ConstraintValues cv{Vec(k), Mat(k, n_), Mat(k, dim), {}};
        for (Eigen::Index a = 0; a < k; ++a) {
            const Dual2 j = exprs_[static_cast<std::size_t>(a)].jet(x);
            cv.values[a] = j.value();
            cv.differential.row(a) = j.grad().transpose();
            cv.coeff.row(a) = j.grad().segment(n_, n_).transpose();
            cv.coeff_jac.push_back(j.hess().block(n_, 0, n_, n_));
        }
        return cv;
    }

    /// Phi^a_i(q), k x n.
    Mat coeff(const Vec& q) const { return at(configuration_point(q)).coeff; }

    /// d Phi^a_i / d q^j at q, one n x n matrix per constraint.
    std::vector<Mat> coeff_jac(const Vec& q) const { return at(configuration_point(q)).coeff_jac; }

    Vec values(const Vec& x) const {
        Vec v(count());
        for (Eigen::Index a = 0; a < count(); ++a) v[a] = exprs_[static_cast<std::size_t>(a)].value(x);
        return v;
    }

private:
    Vec configuration_point(const Vec& q) const {
        Vec x = Vec::Zero(2 * n_ + 1);
        x.head(n_) = q;
        return x;
    }

    std::vector<std::string> names_;
    std::vector<BoundExpression> exprs_;
    Eigen::Index n_ = 0;
};

/// Numerical rank test for the constraint coefficients at q.
inline void require_full_rank(const Mat& coeff, const Vec& q) {
    if (coeff.rows() == 0) return;
    Eigen::JacobiSVD<Mat> svd(coeff);
    const Vec& s = svd.singularValues();
    const double smax = s[0];
    const double smin = s[s.size() - 1];
    if (!(smax > 0.0) || smin <= 1e-10 * std::max(1.0, smax))
        throw RankError("constraint coefficient matrix is rank deficient at q = " + format_vec(q));
}

class LagrangianModel {
public:
    /// Validates and binds a parsed model file.
    static LagrangianModel build(ModelFile file) {
        LagrangianModel m;
        m.file_ = std::move(file);
        const auto& f = m.file_;
        const auto n = static_cast<Eigen::Index>(f.coords.size());
        if (n == 0) throw ModelError("model '" + f.name + "' has no coordinates");

        std::set<std::string> taken;
        auto claim = [&](const std::string& name, const std::string& what) {
            if (name.empty()) throw ModelError("empty " + what + " name");
            if (expr::is_reserved_name(name))
                throw ModelError(what + " name '" + name + "' collides with a built-in name");
            if (!taken.insert(name).second)
                throw ModelError(what + " name '" + name + "' collides with another name");
        };
        claim("z", "thermal variable");
        for (const auto& c : f.coords) claim(c, "coordinate");
        for (const auto& c : f.coords) claim("d" + c, "velocity");
        for (const auto& [p, v] : f.params) claim(p, "parameter");

        m.layout_.reserve(static_cast<std::size_t>(2 * n + 1));
        for (const auto& c : f.coords) m.layout_.push_back(c);
        for (const auto& c : f.coords) m.layout_.push_back("d" + c);
        m.layout_.push_back("z");

        m.lagrangian_ = m.bind(f.lagrangian, "lagrangian");

        const auto k = static_cast<Eigen::Index>(f.constraints.size());
        if (k >= n) throw ModelError("constraint count k = " + std::to_string(k) + " must be below n = " + std::to_string(n));
        std::vector<std::string> names;
        std::vector<BoundExpression> exprs;
        for (const auto& [name, src] : f.constraints) {
            names.push_back(name);
            exprs.push_back(m.bind(src, "constraint '" + name + "'"));
        }
        m.constraints_ = ConstraintSet(std::move(names), std::move(exprs), n);

        if (f.check_state && static_cast<Eigen::Index>(f.check_state->size()) != 2 * n + 1)
            throw ModelError("check_state must have 2n+1 = " + std::to_string(2 * n + 1) + " entries");

        m.validate_constraints();
        if (auto s = m.check_state()) {
            const Mat W = m.lagrangian_.jet(s->packed()).hess().block(n, n, n, n);
            if (nearly_singular(W.partialPivLu()))
                throw RegularityError("singular velocity Hessian at the check state of model '" + f.name + "'");
        }
        return m;
    }

    const std::string& name() const { return file_.name; }
    const std::string& description() const { return file_.description; }
    const std::vector<std::string>& coords() const { return file_.coords; }
    const std::vector<std::pair<std::string, double>>& params() const { return file_.params; }
    const ModelFile& file() const { return file_; }

    Eigen::Index dof() const { return static_cast<Eigen::Index>(file_.coords.size()); }
    Eigen::Index dim() const { return 2 * dof() + 1; }
    Eigen::Index constraint_count() const { return constraints_.count(); }

    /// Names of the packed state slots: coords, d-prefixed velocities, z.
    const std::vector<std::string>& layout() const { return layout_; }

    const BoundExpression& lagrangian() const { return lagrangian_; }
    const ConstraintSet& constraints() const { return constraints_; }

    std::optional<State> check_state() const {
        if (!file_.check_state) return std::nullopt;
        return State::unpack(Eigen::Map<const Vec>(file_.check_state->data(),
                                                   static_cast<Eigen::Index>(file_.check_state->size())));
    }

    /// Parses an observable over the state names and parameters.
    BoundExpression observable(std::string_view source) const { return bind(source, "observable"); }

    /// Same model with some parameter values replaced.
    LagrangianModel with_params(const std::map<std::string, double>& overrides) const {
        ModelFile f = file_;
        for (const auto& [k, v] : overrides) {
            auto it = std::find_if(f.params.begin(), f.params.end(), [&](const auto& p) { return p.first == k; });
            if (it == f.params.end()) throw ModelError("model '" + f.name + "' has no parameter '" + k + "'");
            it->second = v;
        }
        return build(std::move(f));
    }

    std::optional<double> param(std::string_view name) const {
        for (const auto& [k, v] : file_.params)
            if (k == name) return v;
        return std::nullopt;
    }

private:
    BoundExpression bind(std::string_view source, const std::string& what) const {
        try {
            return BoundExpression(expr::parse(source), layout_, file_.params);
        } catch (const UnboundVariableError& e) {
            throw ModelError(what + " of model '" + file_.name + "' uses unknown name '" + e.name() + "'");
        } catch (const ParseError& e) {
            throw ModelError(what + " of model '" + file_.name + "': " + e.what());
        }
    }

    // Linearity in the velocities (zero velocity Hessian, no z dependence,
    // zero value at qdot = 0) and full rank, checked at the check state and
    // at a few fixed pseudo-random configurations.
    void validate_constraints() const {
        if (constraint_count() == 0) return;
        const Eigen::Index n = dof(), N = dim();
        std::vector<Vec> points;
        if (auto s = check_state()) points.push_back(s->packed());
        Rng rng(0x5eed);
        for (int i = 0; i < 4; ++i) {
            Vec x(N);
            for (Eigen::Index j = 0; j < N; ++j) x[j] = rng.uniform(-1.0, 1.0);
            points.push_back(x);
        }
        for (const Vec& x : points) {
            for (Eigen::Index a = 0; a < constraint_count(); ++a) {
                const auto& e = constraints_.expressions()[static_cast<std::size_t>(a)];
                const std::string& cname = constraints_.names()[static_cast<std::size_t>(a)];
                const Dual2 j = e.jet(x);
                const double scale = 1.0 + j.grad().cwiseAbs().maxCoeff();
                const double vel_hess = j.hess().block(n, n, n, n).cwiseAbs().maxCoeff();
                const double z_dep = std::max(std::abs(j.grad()[N - 1]),
                                              j.hess().col(N - 1).cwiseAbs().maxCoeff());
                Vec x0 = x;
                x0.segment(n, n).setZero();
                const double at_rest = std::abs(e.value(x0));
                if (vel_hess > 1e-12 * scale || z_dep > 1e-12 * scale || at_rest > 1e-12 * scale)
                    throw ModelError("constraint '" + cname + "' is not linear in the velocities");
            }
            require_full_rank(constraints_.coeff(x.head(n)), x.head(n));
        }
    }

    ModelFile file_;
    std::vector<std::string> layout_;
    BoundExpression lagrangian_;
    ConstraintSet constraints_;
};

inline LagrangianModel load_model_text(std::string_view text) { return LagrangianModel::build(parse_model_file(text)); }

inline LagrangianModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_model_text(ss.str());
}

}  // namespace contact_nh
