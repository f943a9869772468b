#pragma once

// The invariant suite behind `contact-nh check`: every pointwise identity of
// the contact and constraint machinery, evaluated at seeded random states.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contact_nh/bracket.hpp"
#include "contact_nh/constraints.hpp"
#include "contact_nh/dynamics.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/model.hpp"
#include "contact_nh/sampling.hpp"
#include "contact_nh/structure.hpp"

namespace contact_nh {

struct CheckRow {
    std::string name;
    std::string what;
    double tolerance = 0.0;
    double max_residual = 0.0;
    bool evaluated = false;

    bool passed() const { return max_residual <= tolerance; }
};

struct CheckReport {
    std::string model;
    int states = 0;
    std::uint64_t seed = 0;
    std::vector<CheckRow> rows;

    bool passed() const {
        for (const auto& r : rows)
            if (!r.passed()) return false;
        return true;
    }
    const CheckRow* row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
};

struct CheckOptions {
    int states = 100;
    std::uint64_t seed = 42;
    std::map<std::string, double> tolerances;  // overrides by row name
};

/// Row names and default tolerances, in report order.
inline const std::vector<std::pair<std::string, std::pair<std::string, double>>>& check_rows() {
    static const std::vector<std::pair<std::string, std::pair<std::string, double>>> rows = {
        {"deta-antisymmetric", {"d eta + d eta^T", 1e-12}},
        {"eta-reeb", {"eta(R) - 1", 1e-10}},
        {"reeb-kernel", {"i_R d eta", 1e-10}},
        {"W-inverse", {"W Winv - I", 1e-10}},
        {"flat-sharp", {"sharp(flat v) - v, relative", 1e-10}},
        {"sharp-flat", {"flat(sharp a) - a, relative", 1e-10}},
        {"lambda-antisymmetric", {"Lambda(a,b) + Lambda(b,a)", 1e-12}},
        {"sharp-lambda", {"b(sharp_Lambda a) - Lambda(a,b)", 1e-10}},
        {"hamiltonian-forms", {"two constructions of X_H", 1e-10}},
        {"eta-hamiltonian", {"eta(X_H) + H", 1e-10}},
        {"energy-dissipation", {"dH(X_H) + R(H) H", 1e-8}},
        {"free-field", {"X_E - Gamma_L", 1e-10}},
        {"eta-Z", {"eta(Z_a)", 1e-12}},
        {"flat-Z", {"flat(Z_a) - Phitilde^a", 1e-10}},
        {"C-symmetric", {"C - C^T", 1e-12}},
        {"C-inverse", {"C Cinv - I", 1e-10}},
        {"P-idempotent", {"P^2 - P", 1e-10}},
        {"Q-idempotent", {"Q^2 - Q", 1e-10}},
        {"PQ-orthogonal", {"PQ, QP", 1e-10}},
        {"P-plus-Q", {"P + Q - I", 1e-10}},
        {"P-tangent", {"dPhibar(P Y)", 1e-10}},
        {"Qstar-dE", {"Q*(dE)", 1e-8}},
        {"sode", {"q-block of Gamma - qdot", 1e-12}},
        {"z-component", {"Gamma^z - L", 0.0}},
        {"eta-gamma", {"eta(Gamma_Delta) + E", 1e-10}},
        {"constraint-gamma", {"Phitilde^a(Gamma_Delta)", 1e-10}},
        {"herglotz-residual", {"W b - RHS - Phi^T lambda", 1e-9}},
        {"flat-projection", {"flat(Gamma_Delta) - Pbar(dE - (E + R(E)) eta)", 1e-8}},
        {"reeb-delta-lemma", {"P(sharp_Lambda dE) - sharp_Lambda_Delta(dE)", 1e-9}},
        {"lambda-delta-antisymmetric", {"Lambda_Delta(a,b) + Lambda_Delta(b,a)", 1e-12}},
        {"constrained-forms", {"three forms of X^Delta_H", 1e-9}},
        {"eta-constrained", {"eta(X^Delta_H) + H", 1e-10}},
        {"gamma-constrained-hamiltonian", {"X^Delta_E - Gamma_Delta", 1e-10}},
        {"bracket-antisymmetric", {"{f,g} + {g,f}", 1e-12}},
        {"casimir", {"{Phibar^a, g}", 1e-9}},
        {"evolution", {"Gamma_Delta(g) - ({E,g} - g R_Delta(E))", 1e-8}},
        {"leibniz", {"{f,gh} - g{f,h} - h{f,g} + gh R_Delta(f)", 1e-8}},
    };
    return rows;
}

namespace detail {

inline Vec random_vector(Rng& rng, Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
}

inline Differential random_function(Rng& rng, Eigen::Index n) {
    Differential d;
    d.value = rng.uniform(-1.0, 1.0);
    d.grad = random_vector(rng, n);
    return d;
}

inline double rel(const Vec& diff, const Vec& ref) { return diff.cwiseAbs().maxCoeff() / (1.0 + ref.cwiseAbs().maxCoeff()); }

}  // namespace detail

inline CheckReport run_check(const LagrangianModel& model, const CheckOptions& opts = {}) {
    CheckReport rep;
    rep.model = model.name();
    rep.states = opts.states;
    rep.seed = opts.seed;
    std::map<std::string, std::size_t> index;
    for (const auto& [name, info] : check_rows()) {
        CheckRow r;
        r.name = name;
        r.what = info.first;
        r.tolerance = info.second;
        if (auto it = opts.tolerances.find(name); it != opts.tolerances.end()) r.tolerance = it->second;
        index[name] = rep.rows.size();
        rep.rows.push_back(r);
    }
    for (const auto& [name, tol] : opts.tolerances)
        if (!index.count(name)) throw Error("unknown check row '" + name + "'");

    auto put = [&](const char* name, double v) {
        CheckRow& r = rep.rows[index.at(name)];
        r.evaluated = true;
        if (!(v <= r.max_residual)) r.max_residual = std::isnan(v) ? INFINITY : v;
    };

    Rng rng(opts.seed);
    const Eigen::Index n = model.dof(), N = model.dim(), k = model.constraint_count();
    const Mat I = Mat::Identity(N, N);

    for (int s = 0; s < opts.states; ++s) {
        State raw{detail::random_vector(rng, n), detail::random_vector(rng, n), rng.uniform(-1.0, 1.0)};
        const State st = project_onto_constraints(model, raw);
        const Vec v = detail::random_vector(rng, N);
        const Vec a = detail::random_vector(rng, N);
        const Vec b = detail::random_vector(rng, N);
        const Differential F = detail::random_function(rng, N);
        const Differential G = detail::random_function(rng, N);
        const Differential H = detail::random_function(rng, N);

        // Frame identities hold at every state; use the unprojected one.
        {
            const ContactFrame f = contact_frame(model, raw);
            put("deta-antisymmetric", max_abs(f.deta + f.deta.transpose()));
            put("eta-reeb", std::abs(f.eta.dot(f.reeb) - 1.0));
            put("reeb-kernel", max_abs(f.deta.transpose() * f.reeb));
            put("W-inverse", max_abs(f.W * f.Winv - Mat::Identity(n, n)));
            put("flat-sharp", detail::rel(f.sharp(f.flat_of(v)) - v, v));
            put("sharp-flat", detail::rel(f.flat_of(f.sharp(a)) - a, a));
            put("lambda-antisymmetric", std::abs(lambda_pair(f, a, b) + lambda_pair(f, b, a)));
            put("sharp-lambda", std::abs(b.dot(sharp_lambda(f, a)) - lambda_pair(f, a, b)));
            const Vec X1 = hamiltonian_vf(f, F.value, F.grad);
            put("hamiltonian-forms", max_abs(X1 - hamiltonian_vf_jacobi(f, F.value, F.grad)));
            put("eta-hamiltonian", std::abs(f.eta.dot(X1) + F.value));
            put("energy-dissipation", std::abs(F.grad.dot(X1) + f.reeb_derivative(F.grad) * F.value));
            put("free-field", max_abs(hamiltonian_vf(f, f.E, f.dE) - gamma_unconstrained(f).gamma));
        }

        const PointData d = PointData::at(model, st);
        const ContactFrame& f = d.frame;
        const ConstraintFrame& cf = d.cf;
        const ProjectedStructure& ps = d.ps;
        if (k > 0) {
            put("eta-Z", max_abs(f.eta.transpose() * cf.Z));
            put("flat-Z", max_abs(f.flat * cf.Z - cf.phi_tilde.transpose()));
            put("C-symmetric", max_abs(cf.C - cf.C.transpose()));
            put("C-inverse", max_abs(cf.C * cf.Cinv - Mat::Identity(k, k)));
        }
        put("P-idempotent", max_abs(cf.P * cf.P - cf.P));
        put("Q-idempotent", max_abs(cf.Q * cf.Q - cf.Q));
        put("PQ-orthogonal", std::max(max_abs(cf.P * cf.Q), max_abs(cf.Q * cf.P)));
        put("P-plus-Q", max_abs(cf.P + cf.Q - I));
        if (k > 0) put("P-tangent", max_abs(cf.dphibar * project_vector(cf, v).P));
        put("Qstar-dE", max_abs(project_covector_adjoint(cf, f.dE).Q));

        const DynamicsReport free = gamma_unconstrained(f);
        const DynamicsReport con = gamma_constrained(f, cf);
        put("sode", std::max(free.sode_residual, con.sode_residual));
        put("z-component", std::max(std::abs(free.gamma[N - 1] - f.L_value), std::abs(con.gamma[N - 1] - f.L_value)));
        put("eta-gamma", std::abs(con.eta_pairing));
        if (k > 0) put("constraint-gamma", max_abs(con.constraint_pairing));
        put("herglotz-residual", max_abs(constrained_herglotz_residual(f, cf, con)));
        put("flat-projection", max_abs(flat_projection_residual(f, cf, con.gamma)));
        put("reeb-delta-lemma", max_abs(cf.P * sharp_lambda(f, f.dE) - ps.sharp(f.dE)));
        put("lambda-delta-antisymmetric", std::abs(ps.pair(a, b) + ps.pair(b, a)));

        const Vec XD = constrained_hamiltonian_vf(ps, F.value, F.grad);
        put("constrained-forms", std::max(max_abs(XD - constrained_hamiltonian_vf_flat(f, cf, F.value, F.grad)),
                                          max_abs(XD - constrained_hamiltonian_vf_split(f, cf, F.value, F.grad))));
        put("eta-constrained", std::abs(f.eta.dot(XD) + F.value));
        put("gamma-constrained-hamiltonian", max_abs(constrained_hamiltonian_vf(ps, f.E, f.dE) - con.gamma));

        put("bracket-antisymmetric", std::abs(nh_bracket(ps, F, G) + nh_bracket(ps, G, F)));
        for (Eigen::Index c = 0; c < k; ++c) {
            const Differential phi{cf.values[c], cf.dphibar.row(c).transpose()};
            put("casimir", std::abs(nh_bracket(ps, phi, G)));
        }
        put("evolution", evolution_check(d, G));
        const Differential GH{G.value * H.value, G.value * H.grad + H.value * G.grad};
        put("leibniz", std::abs(nh_bracket(ps, F, GH) - G.value * nh_bracket(ps, F, H) - H.value * nh_bracket(ps, F, G) +
                                G.value * H.value * F.grad.dot(ps.reeb_delta)));
    }
    return rep;
}

inline std::string format_check_report(const CheckReport& rep, bool color = false) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string out = "model " + rep.model + ", " + std::to_string(rep.states) + " states, seed " +
                      std::to_string(rep.seed) + "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-30s %-8s %-24s %-24s %s\n", "row", "status", "max_residual", "tolerance",
                  "quantity");
    out += line;
    int failed = 0;
    for (const auto& r : rep.rows) {
        std::string status = !r.evaluated ? "n/a" : (r.passed() ? "ok" : "FAIL");
        if (r.evaluated && !r.passed()) ++failed;
        std::string shown = status;
        if (color && r.evaluated) shown = (r.passed() ? "\x1b[32m" : "\x1b[31m") + status + "\x1b[0m";
        const int pad = 8 + static_cast<int>(shown.size() - status.size());
        std::snprintf(line, sizeof line, "%-30s %-*s %-24s %-24s %s\n", r.name.c_str(), pad, shown.c_str(),
                      num(r.max_residual).c_str(), num(r.tolerance).c_str(), r.what.c_str());
        out += line;
    }
    out += failed == 0 ? "all rows passed\n" : std::to_string(failed) + " row(s) failed\n";
    return out;
}

}  // namespace contact_nh
