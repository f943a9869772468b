#pragma once

// contact-nh command-line front end. `run` takes argv and two streams so the
// whole surface can be driven in-process by tests.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "contact_nh/bracket.hpp"
#include "contact_nh/bundled.hpp"
#include "contact_nh/check.hpp"
#include "contact_nh/constraints.hpp"
#include "contact_nh/dynamics.hpp"
#include "contact_nh/geometry.hpp"
#include "contact_nh/integrate.hpp"
#include "contact_nh/structure.hpp"

namespace contact_nh::cli {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::json to_json(const Vec& v) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

inline nlohmann::json to_json(const Mat& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(to_json(Vec(m.row(i).transpose())));
    return j;
}

/// JSON dump of the contact and constraint frames at one state.
inline nlohmann::json frame_json(const LagrangianModel& model, const State& state) {
    const PointData d = PointData::at(model, state);
    nlohmann::json j;
    j["model"] = model.name();
    j["state"] = to_json(state.packed());
    j["layout"] = model.layout();
    j["p"] = to_json(d.frame.p);
    j["eta"] = to_json(d.frame.eta);
    j["deta"] = to_json(d.frame.deta);
    j["flat"] = to_json(d.frame.flat);
    j["reeb"] = to_json(d.frame.reeb);
    j["W"] = to_json(d.frame.W);
    j["Winv"] = to_json(d.frame.Winv);
    j["E"] = d.frame.E;
    j["dE"] = to_json(d.frame.dE);
    j["L"] = d.frame.L_value;
    nlohmann::json Z = nlohmann::json::array();
    for (Eigen::Index a = 0; a < d.cf.k; ++a) Z.push_back(to_json(Vec(d.cf.Z.col(a))));
    j["Z"] = Z;
    j["C"] = to_json(d.cf.C);
    j["Cinv"] = to_json(d.cf.Cinv);
    j["P_matrix"] = to_json(d.cf.P);
    j["Q_matrix"] = to_json(d.cf.Q);
    j["reeb_delta"] = to_json(d.ps.reeb_delta);
    return j;
}

inline std::string csv_header(const LagrangianModel& model) {
    std::string h = "t";
    for (const auto& c : model.coords()) h += ",q:" + c;
    for (const auto& c : model.coords()) h += ",dq:" + c;
    h += ",z,E,eta_residual";
    for (Eigen::Index a = 1; a <= model.constraint_count(); ++a) h += ",phi:" + std::to_string(a);
    return h;
}

inline void write_csv(const LagrangianModel& model, const Trajectory& tr, std::ostream& os) {
    os << csv_header(model) << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const State& s = tr.states[i];
        std::string line = fmt17(tr.times[i]);
        for (Eigen::Index j = 0; j < s.q.size(); ++j) line += "," + fmt17(s.q[j]);
        for (Eigen::Index j = 0; j < s.qdot.size(); ++j) line += "," + fmt17(s.qdot[j]);
        line += "," + fmt17(s.z) + "," + fmt17(tr.energy[i]) + "," + fmt17(tr.eta_residual[i]);
        const Vec& phi = tr.constraint_residual[i];
        for (Eigen::Index a = 0; a < phi.size(); ++a) line += "," + fmt17(phi[a]);
        os << line << '\n';
    }
}

inline std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw Error("bad number '" + item + "' in state");
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used != item.size() || !std::isfinite(v)) throw Error("bad number '" + item + "' in state");
        out.push_back(v);
    }
    return out;
}

inline State parse_state(const LagrangianModel& model, const std::string& text) {
    const std::vector<double> v = parse_number_list(text);
    if (static_cast<Eigen::Index>(v.size()) != model.dim())
        throw Error("state must have 2n+1 = " + std::to_string(model.dim()) + " entries, got " +
                    std::to_string(v.size()));
    return State::unpack(Eigen::Map<const Vec>(v.data(), model.dim()));
}

/// The --state value, else the model's check state, else the origin.
inline State resolve_state(const LagrangianModel& model, const std::string& text) {
    if (!text.empty()) return parse_state(model, text);
    if (auto s = model.check_state()) return *s;
    return State::unpack(Vec::Zero(model.dim()));
}

inline std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& it : items) {
        const auto eq = it.find('=');
        if (eq == std::string::npos) throw Error("--param expects name=value, got '" + it + "'");
        const auto vals = parse_number_list(it.substr(eq + 1));
        if (vals.size() != 1) throw Error("--param expects one number in '" + it + "'");
        out[it.substr(0, eq)] = vals[0];
    }
    return out;
}

inline std::string join_names(const std::array<std::string, 3>& t) { return t[0] + ", " + t[1] + ", " + t[2]; }

inline std::string state_text(const State& s) {
    const Vec x = s.packed();
    std::string out;
    for (Eigen::Index i = 0; i < x.size(); ++i) out += (i ? "," : "") + fmt17(x[i]);
    return out;
}

/// Entry point. Exit codes: 0 success, 1 validation failure (bad input,
/// failed check rows), 2 numerical failure (singular W, C or Phi).
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, bool color = false) {
    // --tol-<row> VALUE is open-ended, so it is peeled off before CLI11 sees argv.
    std::vector<std::string> args;
    std::map<std::string, double> tol_overrides;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a.rfind("--tol-", 0) == 0) {
            std::string name = a.substr(6), value;
            if (auto eq = name.find('='); eq != std::string::npos) {
                value = name.substr(eq + 1);
                name = name.substr(0, eq);
            } else if (i + 1 < argc) {
                value = argv[++i];
            } else {
                err << "error: " << a << " needs a value\n";
                return 1;
            }
            try {
                const auto v = parse_number_list(value);
                if (v.size() != 1) throw Error("");
                tol_overrides[name] = v[0];
            } catch (const Error&) {
                err << "error: bad tolerance '" << value << "' for " << a << "\n";
                return 1;
            }
            continue;
        }
        args.push_back(a);
    }

    CLI::App app{"Contact Lagrangian mechanics with linear nonholonomic constraints", "contact-nh"};
    app.require_subcommand(1);

    std::string model_arg, state_arg, out_path, f_src, g_src, h_src;
    std::vector<std::string> params;
    double t0 = 0.0, t1 = 10.0, dt = 1e-3;
    std::uint64_t seed = 42;
    int n_states = -1;
    bool unconstrained = false, project = false;

    auto add_model = [&](CLI::App* sub) {
        sub->add_option("model", model_arg, "bundled model name or model file path")->required();
        sub->add_option("--param", params, "parameter override name=value (repeatable)");
    };

    CLI::App* check = app.add_subcommand("check", "run the invariant suite at seeded random states");
    add_model(check);
    check->add_option("--seed", seed, "random seed");
    check->add_option("--n-states", n_states, "number of random states (default 100)");

    CLI::App* simulate = app.add_subcommand("simulate", "integrate a trajectory and write CSV");
    add_model(simulate);
    simulate->add_option("--t0", t0, "start time");
    simulate->add_option("--t1", t1, "end time");
    simulate->add_option("--dt", dt, "step size");
    simulate->add_option("--state", state_arg, "initial state q..., qdot..., z (comma separated)");
    simulate->add_option("--out", out_path, "CSV output path (default stdout)");
    simulate->add_flag("--unconstrained", unconstrained, "integrate the free field Gamma_L");
    simulate->add_flag("--project", project, "project velocities onto the constraints after each step");

    CLI::App* frame = app.add_subcommand("frame", "dump the contact and constraint frames as JSON");
    add_model(frame);
    frame->add_option("--state", state_arg, "state q..., qdot..., z");
    frame->add_option("--out", out_path, "JSON output path (default stdout)");

    CLI::App* bracket = app.add_subcommand("bracket", "evaluate the nonholonomic bracket {f, g}");
    add_model(bracket);
    bracket->add_option("--f", f_src, "observable f")->required();
    bracket->add_option("--g", g_src, "observable g")->required();
    bracket->add_option("--state", state_arg, "state q..., qdot..., z");

    CLI::App* jacobi = app.add_subcommand("jacobi", "Jacobi-identity defect of f, g, h");
    jacobi->set_help_flag("--help", "print this help message and exit");  // -h would clash with --h
    add_model(jacobi);
    jacobi->add_option("--f", f_src, "observable f")->required();
    jacobi->add_option("--g", g_src, "observable g")->required();
    jacobi->add_option("--h", h_src, "observable h")->required();
    jacobi->add_option("--state", state_arg, "state q..., qdot..., z");

    CLI::App* classify_cmd = app.add_subcommand("classify", "decide semiholonomic or nonholonomic");
    add_model(classify_cmd);
    classify_cmd->add_option("--seed", seed, "random seed");
    classify_cmd->add_option("--n-states", n_states, "number of sampled states (default 10)");

    CLI::App* export_cmd = app.add_subcommand("export-model", "print a bundled model file");
    export_cmd->add_option("model", model_arg, "bundled model name")->required();
    export_cmd->add_option("--out", out_path, "output path (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (!tol_overrides.empty() && !check->parsed()) {
        err << "error: --tol-<row> applies to the check command only\n";
        return 1;
    }

    auto open_out = [&](std::ofstream& file) -> std::ostream& {
        if (out_path.empty()) return out;
        file.open(out_path);
        if (!file) throw Error("cannot write '" + out_path + "'");
        return file;
    };

    std::optional<State> current_state;
    try {
        if (export_cmd->parsed()) {
            std::ofstream file;
            open_out(file) << bundled_model_text(model_arg);
            return 0;
        }

        LagrangianModel model = load_model(model_arg);
        if (!params.empty()) model = model.with_params(parse_params(params));

        if (check->parsed()) {
            CheckOptions opts;
            opts.seed = seed;
            opts.states = n_states < 0 ? 100 : n_states;
            opts.tolerances = tol_overrides;
            const CheckReport rep = run_check(model, opts);
            out << format_check_report(rep, color);
            return rep.passed() ? 0 : 1;
        }
        if (simulate->parsed()) {
            current_state = resolve_state(model, state_arg);
            IntegrateOptions io;
            io.project_velocities = project;
            const Trajectory tr = integrate(model, unconstrained ? FieldKind::Unconstrained : FieldKind::Constrained,
                                            *current_state, t0, t1, dt, io);
            for (const auto& w : tr.warnings) err << "warning: " << w << "\n";
            std::ofstream file;
            write_csv(model, tr, open_out(file));
            if (!tr.complete) {
                err << "error: integration stopped at t = " << fmt17(tr.failure_time) << ": " << tr.failure << "\n";
                return 2;
            }
            return 0;
        }
        if (frame->parsed()) {
            current_state = resolve_state(model, state_arg);
            std::ofstream file;
            open_out(file) << frame_json(model, *current_state).dump(2) << "\n";
            return 0;
        }
        if (bracket->parsed()) {
            current_state = resolve_state(model, state_arg);
            out << fmt17(nh_bracket(model, model.observable(f_src), model.observable(g_src), *current_state)) << "\n";
            return 0;
        }
        if (jacobi->parsed()) {
            current_state = resolve_state(model, state_arg);
            out << fmt17(jacobi_defect(model, model.observable(f_src), model.observable(g_src),
                                       model.observable(h_src), *current_state))
                << "\n";
            return 0;
        }
        if (classify_cmd->parsed()) {
            SampleSpec spec;
            spec.seed = seed;
            spec.count = n_states < 0 ? 10 : n_states;
            const Classification c = classify(model, spec);
            out << to_string(c.verdict) << "\n";
            out << "structural defect " << fmt17(c.structural_defect) << " (tolerance " << fmt17(c.structural_tol)
                << ") at q = " << format_vec(c.structural_witness) << "\n";
            out << "jacobi defect " << fmt17(c.jacobi_defect) << " (tolerance " << fmt17(c.jacobi_tol) << ")";
            if (!c.jacobi_witness_triple[0].empty())
                out << " for (" << join_names(c.jacobi_witness_triple) << ") at state "
                    << state_text(c.jacobi_witness_state);
            out << "\n";
            return 0;
        }
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        if (current_state) err << "state: " << state_text(*current_state) << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace contact_nh::cli
