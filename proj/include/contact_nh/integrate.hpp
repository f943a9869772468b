#pragma once

// Fixed-step classical RK4 for Gamma_L and Gamma_{L,Delta}, with per-sample
// diagnostics.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contact_nh/constraints.hpp"
#include "contact_nh/dynamics.hpp"
#include "contact_nh/errors.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/model.hpp"

namespace contact_nh {

enum class FieldKind { Unconstrained, Constrained };

struct IntegrateOptions {
    bool project_velocities = false;  // least-squares velocity projection after each step
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> energy;
    std::vector<double> eta_residual;      // eta(Gamma) + E
    std::vector<Vec> constraint_residual;  // Phibar^a
    std::vector<double> lagrangian;        // equals dz/dt
    std::vector<double> energy_rate;       // -R(E) E, the predicted dE/dt of the free flow

    bool complete = true;
    std::string failure;
    double failure_time = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const { return times.size(); }
};

struct FieldSample {
    Vec gamma;
    double E = 0.0;
    double eta_residual = 0.0;
    double L = 0.0;
    double energy_rate = 0.0;
    Vec phi;
};

inline FieldSample evaluate_field(const LagrangianModel& model, FieldKind kind, const State& s) {
    const ContactFrame f = contact_frame(model, s);
    FieldSample out;
    DynamicsReport r;
    if (kind == FieldKind::Constrained && model.constraint_count() > 0)
        r = gamma_constrained(f, constraint_frame(model, f));
    else
        r = gamma_unconstrained(f);
    out.gamma = r.gamma;
    out.E = f.E;
    out.eta_residual = r.eta_pairing;
    out.L = f.L_value;
    out.energy_rate = -f.reeb_derivative(f.dE) * f.E;
    out.phi = model.constraints().values(s.packed());
    return out;
}

inline Vec field_vector(const LagrangianModel& model, FieldKind kind, const Vec& x) {
    return evaluate_field(model, kind, State::unpack(x)).gamma;
}

inline Vec rk4_step(const LagrangianModel& model, FieldKind kind, const Vec& x, double h) {
    const Vec k1 = field_vector(model, kind, x);
    const Vec k2 = field_vector(model, kind, x + 0.5 * h * k1);
    const Vec k3 = field_vector(model, kind, x + 0.5 * h * k2);
    const Vec k4 = field_vector(model, kind, x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Samples at t0, t0 + dt, ... and at t1 (a final shorter step when dt does
/// not divide the interval). A numerical failure stops the run and returns
/// the samples accepted so far.
inline Trajectory integrate(const LagrangianModel& model, FieldKind kind, const State& state0, double t0, double t1,
                            double dt, IntegrateOptions opts = {}) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("time step must be positive");
    if (!(t1 >= t0)) throw Error("t1 must not precede t0");
    if (!state0.finite()) throw Error("initial state is not finite");

    Trajectory tr;
    if (kind == FieldKind::Constrained && model.constraint_count() > 0) {
        const Vec phi0 = model.constraints().values(state0.packed());
        if (phi0.cwiseAbs().maxCoeff() > 1e-8)
            tr.warnings.push_back("initial state is off the constraint manifold: |Phi| = " +
                                  std::to_string(phi0.cwiseAbs().maxCoeff()));
    }

    const double span = t1 - t0;
    const auto full_steps = static_cast<long long>(std::floor(span / dt + 1e-9));
    const double remainder = span - static_cast<double>(full_steps) * dt;
    const bool partial = remainder > 1e-9 * dt;

    auto record = [&](double t, const State& s) {
        const FieldSample fs = evaluate_field(model, kind, s);
        tr.times.push_back(t);
        tr.states.push_back(s);
        tr.energy.push_back(fs.E);
        tr.eta_residual.push_back(fs.eta_residual);
        tr.constraint_residual.push_back(fs.phi);
        tr.lagrangian.push_back(fs.L);
        tr.energy_rate.push_back(fs.energy_rate);
    };

    Vec x = state0.packed();
    double t = t0;
    try {
        record(t, state0);
        const long long total = full_steps + (partial ? 1 : 0);
        for (long long i = 1; i <= total; ++i) {
            const double t_next = (i <= full_steps) ? t0 + static_cast<double>(i) * dt : t1;
            x = rk4_step(model, kind, x, t_next - t);
            State s = State::unpack(x);
            if (opts.project_velocities) {
                s = project_onto_constraints(model, s);
                x = s.packed();
            }
            if (!s.finite()) throw NumericalError("non-finite state");
            record(t_next, s);
            t = t_next;
        }
    } catch (const NumericalError& e) {
        tr.complete = false;
        tr.failure = e.what();
        tr.failure_time = t;
    }
    return tr;
}

struct ConvergenceResult {
    std::vector<double> dts;
    std::vector<double> errors;
    double order = 0.0;
};

/// Least-squares slope of log(endpoint error) against log(dt), errors taken
/// against a run with a quarter of the smallest step.
inline ConvergenceResult convergence_order(const LagrangianModel& model, FieldKind kind, const State& state0,
                                           double t_end, const std::vector<double>& dts) {
    if (dts.size() < 3) throw Error("convergence_order needs at least three step sizes");
    const double dt_ref = *std::min_element(dts.begin(), dts.end()) / 4.0;
    auto endpoint = [&](double dt) {
        const Trajectory tr = integrate(model, kind, state0, 0.0, t_end, dt);
        if (!tr.complete) throw NumericalError("convergence run failed: " + tr.failure);
        return tr.states.back().packed();
    };
    const Vec ref = endpoint(dt_ref);
    ConvergenceResult r;
    r.dts = dts;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double dt : dts) {
        const double e = (endpoint(dt) - ref).cwiseAbs().maxCoeff();
        r.errors.push_back(e);
        const double lx = std::log(dt), ly = std::log(e);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(dts.size());
    r.order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return r;
}

}  // namespace contact_nh
