// Integrator, invariant suite and command-line surface.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

using namespace contact_nh;

namespace {

struct CliResult {
    int code;
    std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "contact-nh");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

State sledge_on_constraint() {
    State s{Vec(3), Vec(3), 0.1};
    s.q << 0.3, -0.2, 0.4;
    s.qdot << 0.8 * std::cos(0.4), 0.8 * std::sin(0.4), 0.5;
    return s;
}

}  // namespace

TEST(Integrate, OscillatorClosedForm) {
    const auto m = bundled_model("oscillator");
    const double g = -0.2;
    const State s0{Vec::Constant(1, 1.0), Vec::Constant(1, 0.5), 0.0};
    const Trajectory tr = integrate(m, FieldKind::Unconstrained, s0, 0.0, 10.0, 1e-3);
    ASSERT_TRUE(tr.complete);
    ASSERT_EQ(tr.size(), 10001u);
    const double w = std::sqrt(1 - g * g / 4), A = 1.0, B = (0.5 - g / 2 * A) / w;
    for (std::size_t i = 0; i < tr.size(); i += 97) {
        const double t = tr.times[i];
        const double q = std::exp(g * t / 2) * (A * std::cos(w * t) + B * std::sin(w * t));
        EXPECT_NEAR(tr.states[i].q[0], q, 1e-6);
    }
    EXPECT_EQ(tr.times.back(), 10.0);
}

TEST(Integrate, FreeParticleIsExact) {
    const auto m = bundled_model("free_particle");
    State s0{Vec(2), Vec(2), 0.0};
    s0.q << 1, -2;
    s0.qdot << 0.25, 0.5;
    const Trajectory tr = integrate(m, FieldKind::Constrained, s0, 0.0, 3.0, 0.125);
    ASSERT_EQ(tr.size(), 25u);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_NEAR(tr.states[i].q[0], 1 + 0.25 * tr.times[i], 1e-14);
        EXPECT_NEAR(tr.states[i].q[1], -2 + 0.5 * tr.times[i], 1e-14);
        EXPECT_EQ(tr.states[i].qdot, s0.qdot);
        // z' = L = 5/32
        EXPECT_NEAR(tr.states[i].z, 5.0 / 32 * tr.times[i], 1e-14);
    }
}

TEST(Integrate, FinalPartialStep) {
    const auto m = bundled_model("oscillator");
    const Trajectory tr = integrate(m, FieldKind::Unconstrained, *m.check_state(), 0.0, 1.05, 0.1);
    ASSERT_EQ(tr.size(), 12u);
    EXPECT_EQ(tr.times.back(), 1.05);
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
    EXPECT_THROW(integrate(m, FieldKind::Unconstrained, *m.check_state(), 0.0, 1.0, 0.0), Error);
}

TEST(Integrate, ConvergenceOrder) {
    const auto osc = bundled_model("oscillator");
    EXPECT_NEAR(convergence_order(osc, FieldKind::Unconstrained, *osc.check_state(), 2.0, {0.1, 0.05, 0.025}).order, 4.0,
                0.3);
    const auto sl = bundled_model("sledge");
    EXPECT_NEAR(convergence_order(sl, FieldKind::Constrained, sledge_on_constraint(), 2.0, {0.1, 0.05, 0.025}).order, 4.0,
                0.3);
    EXPECT_THROW(convergence_order(osc, FieldKind::Unconstrained, *osc.check_state(), 1.0, {0.1, 0.05}), Error);
}

TEST(Integrate, DiagnosticsAlongSledgeRuns) {
    const auto m = bundled_model("sledge");
    const Trajectory tr = integrate(m, FieldKind::Constrained, sledge_on_constraint(), 0.0, 5.0, 1e-3);
    ASSERT_TRUE(tr.complete);
    EXPECT_TRUE(tr.warnings.empty());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_LE(std::abs(tr.constraint_residual[i][0]), 1e-6);
        EXPECT_LE(std::abs(tr.eta_residual[i]), 1e-8);
    }
    // SODE consistency: central difference of q against stored qdot
    for (std::size_t i = 1; i + 1 < tr.size(); i += 50) {
        const Vec dq = (tr.states[i + 1].q - tr.states[i - 1].q) / (tr.times[i + 1] - tr.times[i - 1]);
        EXPECT_LE(max_abs(dq - tr.states[i].qdot), 1e-5);
        EXPECT_NEAR((tr.states[i + 1].z - tr.states[i - 1].z) / 2e-3, tr.lagrangian[i], 1e-5);
    }

    const Trajectory fr = integrate(m, FieldKind::Unconstrained, sledge_on_constraint(), 0.0, 5.0, 1e-3);
    for (std::size_t i = 1; i + 1 < fr.size(); ++i)
        EXPECT_NEAR((fr.energy[i + 1] - fr.energy[i - 1]) / 2e-3, fr.energy_rate[i], 1e-4);
}

TEST(Integrate, OffConstraintStartWarnsAndProjectionHolds) {
    const auto m = bundled_model("sledge");
    State s = sledge_on_constraint();
    s.qdot[1] += 0.1;
    const Trajectory tr = integrate(m, FieldKind::Constrained, s, 0.0, 0.1, 1e-2);
    EXPECT_EQ(tr.warnings.size(), 1u);
    IntegrateOptions opts;
    opts.project_velocities = true;
    const Trajectory pr = integrate(m, FieldKind::Constrained, sledge_on_constraint(), 0.0, 1.0, 1e-2, opts);
    for (const Vec& phi : pr.constraint_residual) EXPECT_LE(std::abs(phi[0]), 1e-14);
}

TEST(Integrate, FailureReturnsPartialTrajectory) {
    // q'' = 2 q exp(q^2) blows up in finite time
    const auto m = load_model_text("[model]\nname = \"blowup\"\ncoords = [\"q\"]\nlagrangian = \"0.5*dq^2 + exp(q^2)\"\n");
    const State s0{Vec::Constant(1, 1.0), Vec::Constant(1, 1.0), 0.0};
    const Trajectory tr = integrate(m, FieldKind::Unconstrained, s0, 0.0, 5.0, 1e-2);
    EXPECT_FALSE(tr.complete);
    EXPECT_GT(tr.size(), 1u);
    EXPECT_LT(tr.size(), 501u);
    EXPECT_GT(tr.failure_time, 0.0);
    EXPECT_FALSE(tr.failure.empty());
}

TEST(Check, AllBundledModelsPass) {
    for (const auto& [name, text] : bundled_model_texts()) {
        const CheckReport rep = run_check(bundled_model(name), CheckOptions{20, 7, {}});
        for (const auto& r : rep.rows) EXPECT_TRUE(r.passed()) << name << " " << r.name << " " << r.max_residual;
        EXPECT_EQ(rep.rows.size(), check_rows().size());
        (void)text;
    }
}

TEST(Check, ToleranceOverrideCanFailARow) {
    CheckOptions opts{5, 42, {{"eta-reeb", -1.0}}};
    const CheckReport rep = run_check(bundled_model("oscillator"), opts);
    EXPECT_FALSE(rep.passed());
    EXPECT_FALSE(rep.row("eta-reeb")->passed());
    EXPECT_NE(format_check_report(rep).find("1 row(s) failed"), std::string::npos);
}

TEST(Cli, CheckExitCodesAndDeterminism) {
    const CliResult a = run_cli({"check", "sledge", "--seed", "42", "--n-states", "20"});
    const CliResult b = run_cli({"check", "sledge", "--seed", "42", "--n-states", "20"});
    EXPECT_EQ(a.code, 0) << a.out << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("all rows passed"), std::string::npos);
    const CliResult c = run_cli({"check", "sledge", "--seed", "43", "--n-states", "20"});
    EXPECT_NE(a.out, c.out);
    EXPECT_EQ(run_cli({"check", "sledge", "--n-states", "3", "--tol-eta-reeb", "-1"}).code, 1);
    EXPECT_EQ(run_cli({"check", "sledge", "--n-states", "3", "--tol-eta-reeb=1e-3"}).code, 0);
}

TEST(Cli, SimulateCsvShape) {
    const CliResult r = run_cli({"simulate", "sledge", "--t1", "0.05", "--dt", "0.01"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 1u + 6u);
    const std::vector<std::string> header = {"t",    "q:x", "q:y",          "q:phi", "dq:x", "dq:y",
                                             "dq:phi", "z", "E", "eta_residual", "phi:1"};
    EXPECT_EQ(rows[0], header);
    for (const auto& row : rows) EXPECT_EQ(row.size(), header.size());
    EXPECT_EQ(rows[1][0], "0");
    EXPECT_EQ(std::stod(rows.back()[0]), 0.05);

    const CliResult partial = run_cli({"simulate", "oscillator", "--t1", "0.25", "--dt", "0.1"});
    EXPECT_EQ(csv_rows(partial.out).size(), 1u + 2u + 1u + 1u);
    const auto fp = csv_rows(run_cli({"simulate", "free_particle", "--t1", "0.1", "--dt", "0.1"}).out);
    EXPECT_EQ(fp[0].size(), 8u);
}

TEST(Cli, SimulateDriftAndFileOutput) {
    const std::string path = (std::filesystem::temp_directory_path() / "contact_nh_sim.csv").string();
    const CliResult r = run_cli({"simulate", "sledge", "--t1", "5", "--dt", "1e-3", "--state",
                                 cli::state_text(sledge_on_constraint()), "--out", path});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto rows = csv_rows(ss.str());
    ASSERT_EQ(rows.size(), 5002u);
    double drift = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) drift = std::max(drift, std::abs(std::stod(rows[i].back())));
    EXPECT_LE(drift, 1e-6);
    std::filesystem::remove(path);
}

TEST(Cli, FrameJson) {
    const CliResult r = run_cli({"frame", "sledge"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    for (const char* key : {"eta", "deta", "reeb", "W", "Winv", "Z", "C", "P_matrix", "Q_matrix"})
        EXPECT_TRUE(j.contains(key)) << key;
    ASSERT_EQ(j["C"].size(), 1u);
    EXPECT_NEAR(j["C"][0][0].get<double>(), -1.5, 1e-12);
    EXPECT_EQ(j["reeb"].size(), 7u);
    EXPECT_EQ(j["Z"][0].size(), 7u);
    const CliResult a2 = run_cli({"frame", "sledge", "--param", "alpha=2"});
    EXPECT_NEAR(nlohmann::json::parse(a2.out)["C"][0][0].get<double>(), -3.0, 1e-12);
}

TEST(Cli, BracketJacobiClassify) {
    const CliResult one = run_cli({"bracket", "sledge", "--f", "1", "--g", "z"});
    ASSERT_EQ(one.code, 0) << one.err;
    EXPECT_NEAR(std::stod(one.out), -1.0, 1e-12);
    const CliResult pp = run_cli({"bracket", "sledge", "--f", "phi", "--g", "dphi"});
    EXPECT_NEAR(std::stod(pp.out), -1.0 / 3.0, 1e-10);

    const CliResult jac = run_cli({"jacobi", "holonomic", "--f", "q2", "--g", "dq2", "--h", "dq3"});
    ASSERT_EQ(jac.code, 0) << jac.err;
    EXPECT_LE(std::stod(jac.out), 1e-5);

    const CliResult cl = run_cli({"classify", "holonomic", "--n-states", "2"});
    ASSERT_EQ(cl.code, 0) << cl.err;
    EXPECT_EQ(cl.out.substr(0, cl.out.find('\n')), "semiholonomic");
}

TEST(Cli, ExportModelRoundTrip) {
    const CliResult r = run_cli({"export-model", "knife_edge"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, std::string(bundled_model_text("knife_edge")));
    const std::string path = (std::filesystem::temp_directory_path() / "contact_nh_knife.model").string();
    std::ofstream(path) << r.out;
    const CliResult b = run_cli({"bracket", path, "--f", "1", "--g", "z"});
    EXPECT_NEAR(std::stod(b.out), -1.0, 1e-12);
    std::filesystem::remove(path);
}

TEST(Cli, ErrorsAndExitCodes) {
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"frame", "no_such_model"}).code, 1);
    EXPECT_EQ(run_cli({"frame", "sledge", "--state", "1,2,3"}).code, 1);
    EXPECT_EQ(run_cli({"frame", "sledge", "--state", "1,2,3,4,5,x,7"}).code, 1);
    EXPECT_EQ(run_cli({"frame", "sledge", "--param", "alpha"}).code, 1);
    EXPECT_EQ(run_cli({"bracket", "sledge", "--f", "foo(x)", "--g", "z"}).code, 1);
    EXPECT_EQ(run_cli({"simulate", "sledge", "--tol-eta-reeb", "1"}).code, 1);

    const std::string path = (std::filesystem::temp_directory_path() / "contact_nh_deg.model").string();
    std::ofstream(path) << "[model]\nname = \"deg\"\ncoords = [\"x\", \"y\"]\nlagrangian = \"0.5*(dx^2 - dy^2)\"\n"
                           "[constraints]\nc = \"dx + dy\"\n";
    const CliResult d = run_cli({"frame", path, "--state", "0,0,0,0,0"});
    EXPECT_EQ(d.code, 2);
    EXPECT_NE(d.err.find("state: 0,0,0,0,0"), std::string::npos) << d.err;
    std::filesystem::remove(path);

    const std::string wall = (std::filesystem::temp_directory_path() / "contact_nh_wall.model").string();
    std::ofstream(wall) << "[model]\nname = \"blowup\"\ncoords = [\"q\"]\nlagrangian = \"0.5*dq^2 + exp(q^2)\"\n";
    const CliResult w = run_cli({"simulate", wall, "--state", "1,1,0", "--t1", "5", "--dt", "0.01"});
    EXPECT_EQ(w.code, 2);
    EXPECT_GT(csv_rows(w.out).size(), 2u);
    std::filesystem::remove(wall);
}
