#pragma once

// The nonholonomic bracket on observables, the Jacobi-identity defect and
// the semiholonomic/nonholonomic classification.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contact_nh/constraints.hpp"
#include "contact_nh/dynamics.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/model.hpp"
#include "contact_nh/sampling.hpp"
#include "contact_nh/structure.hpp"

namespace contact_nh {

/// Value and differential of a function at one point.
struct Differential {
    double value = 0.0;
    Vec grad;
};

inline Differential differential(const BoundExpression& e, const Vec& x) {
    const Dual2 j = e.jet(x);
    return {j.value(), j.grad()};
}

inline Differential coordinate_function(const Vec& x, Eigen::Index i) {
    Vec g = Vec::Zero(x.size());
    g[i] = 1.0;
    return {x[i], g};
}

inline Differential constant_function(Eigen::Index dim, double c) { return {c, Vec::Zero(dim)}; }

/// {f, g} = Lambda_Delta(df, dg) - f R_Delta(g) + g R_Delta(f).
inline double nh_bracket(const ProjectedStructure& ps, const Differential& f, const Differential& g) {
    return ps.pair(f.grad, g.grad) - f.value * g.grad.dot(ps.reeb_delta) + g.value * f.grad.dot(ps.reeb_delta);
}

inline double nh_bracket(const LagrangianModel& model, const BoundExpression& f, const BoundExpression& g,
                         const State& state) {
    const PointData d = PointData::at(model, state);
    const Vec x = state.packed();
    return nh_bracket(d.ps, differential(f, x), differential(g, x));
}

/// Jacobi bracket of the unconstrained contact structure:
/// Lambda(df, dg) + f E(g) - g E(f) with E = -R.
inline double contact_bracket(const ContactFrame& fr, const Differential& f, const Differential& g) {
    return lambda_pair(fr, f.grad, g.grad) - f.value * fr.reeb_derivative(g.grad) +
           g.value * fr.reeb_derivative(f.grad);
}

/// |Gamma_Delta(g) - ({E, g} - g R_Delta(E))|.
inline double evolution_check(const PointData& d, const Differential& g) {
    const Vec gamma = gamma_constrained(d.frame, d.cf).gamma;
    const Differential E{d.frame.E, d.frame.dE};
    const double rhs = nh_bracket(d.ps, E, g) - g.value * d.frame.dE.dot(d.ps.reeb_delta);
    return std::abs(g.grad.dot(gamma) - rhs);
}

inline double evolution_check(const LagrangianModel& model, const BoundExpression& g, const State& state) {
    return evolution_check(PointData::at(model, state), differential(g, state.packed()));
}

/// A function on TQ x R returning its value and differential at a point.
using FieldFunction = std::function<Differential(const Vec&)>;

inline FieldFunction as_field_function(const BoundExpression& e) {
    return [e](const Vec& x) { return differential(e, x); };
}

inline FieldFunction coordinate_field(Eigen::Index i) {
    return [i](const Vec& x) { return coordinate_function(x, i); };
}

/// Value and central-difference differential of x -> {f, g}(x). Only the
/// components along Delta x R enter any outer bracket, since P^T removes the rest.
inline Differential bracket_with_fd_differential(const LagrangianModel& model, const FieldFunction& f,
                                                 const FieldFunction& g, const Vec& x) {
    auto value_at = [&](const Vec& y) {
        const PointData d = PointData::at(model, State::unpack(y));
        return nh_bracket(d.ps, f(y), g(y));
    };
    const Eigen::Index N = x.size();
    const double step = 1e-5 * (1.0 + x.cwiseAbs().maxCoeff());
    Differential out{value_at(x), Vec(N)};
    for (Eigen::Index i = 0; i < N; ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        out.grad[i] = (value_at(xp) - value_at(xm)) / (2 * step);
    }
    return out;
}

/// |{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| at `state`.
inline double jacobi_defect(const LagrangianModel& model, const FieldFunction& f, const FieldFunction& g,
                            const FieldFunction& h, const State& state) {
    const Vec x = state.packed();
    const PointData d = PointData::at(model, state);
    const Differential gh = bracket_with_fd_differential(model, g, h, x);
    const Differential hf = bracket_with_fd_differential(model, h, f, x);
    const Differential fg = bracket_with_fd_differential(model, f, g, x);
    return std::abs(nh_bracket(d.ps, f(x), gh) + nh_bracket(d.ps, g(x), hf) + nh_bracket(d.ps, h(x), fg));
}

inline double jacobi_defect(const LagrangianModel& model, const BoundExpression& f, const BoundExpression& g,
                            const BoundExpression& h, const State& state) {
    return jacobi_defect(model, as_field_function(f), as_field_function(g), as_field_function(h), state);
}

/// Uniform state in [-1, 1]^(2n+1) with velocities projected onto Delta.
inline State sample_on_constraint_state(const LagrangianModel& model, Rng& rng) {
    const Eigen::Index n = model.dof();
    State s{Vec(n), Vec(n), 0.0};
    for (Eigen::Index i = 0; i < n; ++i) s.q[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) s.qdot[i] = rng.uniform(-1.0, 1.0);
    s.z = rng.uniform(-1.0, 1.0);
    return project_onto_constraints(model, s);
}

struct SampleSpec {
    int count = 10;
    std::uint64_t seed = 42;
};

enum class Verdict { Semiholonomic, Nonholonomic };

inline const char* to_string(Verdict v) { return v == Verdict::Semiholonomic ? "semiholonomic" : "nonholonomic"; }

struct Classification {
    Verdict verdict = Verdict::Semiholonomic;
    double structural_defect = 0.0;
    Vec structural_witness;           // configuration q
    double jacobi_defect = 0.0;
    State jacobi_witness_state;
    std::array<std::string, 3> jacobi_witness_triple;
    double structural_tol = 1e-8;
    double jacobi_tol = 1e-4;
};

/// Involutivity scan plus a Jacobi-defect scan over every triple of distinct
/// position and velocity coordinate functions at sampled on-constraint states.
inline Classification classify(const LagrangianModel& model, const SampleSpec& spec) {
    Classification c;
    Rng rng(spec.seed);
    const Eigen::Index n = model.dof();
    const auto& names = model.layout();
    for (int s = 0; s < spec.count; ++s) {
        const State st = sample_on_constraint_state(model, rng);
        const InvolutivityDefect inv = involutivity_defect(model, st.q);
        if (s == 0 || inv.max > c.structural_defect) {
            c.structural_defect = inv.max;
            c.structural_witness = st.q;
        }
        for (Eigen::Index i = 0; i < 2 * n; ++i)
            for (Eigen::Index j = i + 1; j < 2 * n; ++j)
                for (Eigen::Index k = j + 1; k < 2 * n; ++k) {
                    const double d = jacobi_defect(model, coordinate_field(i), coordinate_field(j),
                                                   coordinate_field(k), st);
                    if (d > c.jacobi_defect || (s == 0 && i == 0 && j == 1 && k == 2)) {
                        c.jacobi_defect = d;
                        c.jacobi_witness_state = st;
                        c.jacobi_witness_triple = {names[static_cast<std::size_t>(i)],
                                                   names[static_cast<std::size_t>(j)],
                                                   names[static_cast<std::size_t>(k)]};
                    }
                }
    }
    c.verdict = (c.structural_defect <= c.structural_tol && c.jacobi_defect <= c.jacobi_tol)
                    ? Verdict::Semiholonomic
                    : Verdict::Nonholonomic;
    return c;
}

}  // namespace contact_nh
