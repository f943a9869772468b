// Expression parser/evaluator, second-order AD, model files and loading.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "contact_nh/autodiff.hpp"
#include "contact_nh/bundled.hpp"
#include "contact_nh/expr.hpp"
#include "contact_nh/model.hpp"
#include "contact_nh/model_file.hpp"
#include "contact_nh/sampling.hpp"

using namespace contact_nh;

namespace {

double eval(const std::string& src, const std::map<std::string, double>& b = {}) {
    return expr::evaluate<double>(expr::parse(src), b);
}

// Random well-formed expression over x, y, w with positive-safe leaves.
std::string random_expression(Rng& rng, int depth) {
    const double r = rng.unit();
    if (depth == 0 || r < 0.25) {
        const double pick = rng.unit();
        if (pick < 0.3) return "x";
        if (pick < 0.55) return "y";
        if (pick < 0.7) return "w";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", rng.uniform(0.1, 3.0));
        return buf;
    }
    const char* fns[] = {"sin", "cos", "exp", "tan"};
    if (r < 0.4) return std::string(fns[static_cast<int>(rng.unit() * 4)]) + "(" + random_expression(rng, depth - 1) + ")";
    if (r < 0.45) return "-" + random_expression(rng, depth - 1);
    if (r < 0.5) return "sqrt(1 + (" + random_expression(rng, depth - 1) + ")^2)";
    if (r < 0.55) return "log(2 + cos(" + random_expression(rng, depth - 1) + "))";
    const char ops[] = {'+', '-', '*', '/', '^'};
    const char op = ops[static_cast<int>(rng.unit() * 5)];
    if (op == '/') return "(" + random_expression(rng, depth - 1) + ")/(3 + sin(" + random_expression(rng, depth - 1) + "))";
    if (op == '^') return "(" + random_expression(rng, depth - 1) + ")^2";
    return "(" + random_expression(rng, depth - 1) + ")" + op + "(" + random_expression(rng, depth - 1) + ")";
}

}  // namespace

TEST(Expr, PrecedenceAndAssociativity) {
    EXPECT_DOUBLE_EQ(eval("2+3*4"), 14.0);
    EXPECT_DOUBLE_EQ(eval("cos(0) + sin(0)"), 1.0);
    EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
    EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
    EXPECT_DOUBLE_EQ(eval("8-3-2"), 3.0);
    EXPECT_DOUBLE_EQ(eval("16/4/2"), 2.0);
    EXPECT_DOUBLE_EQ(eval("2*-3"), -6.0);
    EXPECT_DOUBLE_EQ(eval("2^-1"), 0.5);
    EXPECT_NEAR(eval("pi"), M_PI, 0.0);
    EXPECT_DOUBLE_EQ(eval("1.5e2 + 2E-1"), 150.2);
}

TEST(Expr, BindingsAndFreeVariables) {
    EXPECT_DOUBLE_EQ(eval("x^2", {{"x", 3}}), 9.0);
    EXPECT_DOUBLE_EQ(eval("gamma*z", {{"gamma", 0.1}, {"z", 2}}), 0.2);
    const auto e = expr::parse("0.5*((alpha*cos(phi) - beta*sin(phi))*dphi + dy)^2");
    const std::vector<std::string> want = {"alpha", "beta", "dphi", "dy", "phi"};
    EXPECT_EQ(e.free_vars(), want);
}

TEST(Expr, SledgeLagrangianByHand) {
    const std::string L = std::string(bundled_model("sledge").lagrangian().source());
    const std::map<std::string, double> b = {{"alpha", 1}, {"beta", 0},   {"gamma", 0}, {"x", 0},   {"y", 0},
                                             {"phi", 0},   {"dx", 1},     {"dy", 0},     {"dphi", 0}, {"z", 0}};
    EXPECT_DOUBLE_EQ(eval(L, b), 0.5);
}

TEST(Expr, SyntaxErrorsCarryOffsets) {
    try {
        expr::parse("2x");
        FAIL() << "implicit multiplication accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 1u);
    }
    try {
        expr::parse("1 + (2");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 6u);
    }
    EXPECT_THROW(expr::parse(""), ParseError);
    EXPECT_THROW(expr::parse("sin"), ParseError);
    EXPECT_THROW(expr::parse("3 $ 4"), ParseError);
    try {
        expr::parse("1 + foo(2)");
        FAIL();
    } catch (const UnknownFunctionError& e) {
        EXPECT_EQ(e.name(), "foo");
        EXPECT_EQ(e.offset(), 4u);
    }
}

TEST(Expr, EvaluationErrors) {
    EXPECT_THROW(eval("x + 1"), UnboundVariableError);
    EXPECT_THROW(eval("log(0)"), DomainError);
    EXPECT_THROW(eval("sqrt(-1)"), DomainError);
    EXPECT_THROW(eval("1/(x-x)", {{"x", 2}}), DomainError);
    EXPECT_THROW(eval("(-2)^0.5"), DomainError);
    EXPECT_DOUBLE_EQ(eval("(-2)^3"), -8.0);
    try {
        eval("1 + sqrt(x - 4)", {{"x", 1}});
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_EQ(e.node(), "sqrt(x - 4)");
    }
}

TEST(Expr, PrintRoundTripOnRandomCorpus) {
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        const std::string src = random_expression(rng, 5);
        const auto a = expr::parse(src);
        const auto b = expr::parse(expr::print(a));
        EXPECT_TRUE(expr::structurally_equal(a, b)) << src << " -> " << expr::print(a);
    }
    for (const char* s : {"-(-x)", "(a-b)-(c-d)", "a/(b/c)", "(a^b)^c", "a^(b^c)", "-x^2", "(-x)^2", "2-(-3)"}) {
        const auto a = expr::parse(s);
        EXPECT_TRUE(expr::structurally_equal(a, expr::parse(expr::print(a)))) << s;
    }
}

TEST(Autodiff, ValueAgreesWithPlainEvaluation) {
    Rng rng(11);
    const std::vector<std::string> order = {"x", "y", "w"};
    for (int i = 0; i < 500; ++i) {
        const auto e = expr::parse(random_expression(rng, 5));
        const std::vector<double> pt = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double plain = 0;
        try {
            plain = expr::evaluate<double>(e, std::map<std::string, double>{{"x", pt[0]}, {"y", pt[1]}, {"w", pt[2]}});
        } catch (const DomainError&) {
            continue;
        }
        const Dual2 d = jet2(e, order, pt);
        EXPECT_LE(std::abs(d.value() - plain), 1e-14 * std::max(1.0, std::abs(plain))) << expr::print(e);
    }
}

TEST(Autodiff, BasicJets) {
    const std::vector<std::string> order = {"x"};
    const std::vector<double> pt = {3.0};
    const Dual2 d = jet2(expr::parse("x^2"), order, pt);
    EXPECT_DOUBLE_EQ(d.value(), 9.0);
    EXPECT_DOUBLE_EQ(d.grad()[0], 6.0);
    EXPECT_DOUBLE_EQ(d.hess()(0, 0), 2.0);

    const std::vector<std::string> ord2 = {"x", "y", "dx", "dy"};
    const std::vector<double> p2 = {0.3, -0.2, 0.7, 0.1};
    const Dual2 k = jet2(expr::parse("0.5*(dx^2+dy^2)"), ord2, p2);
    EXPECT_TRUE(k.hess().block(2, 2, 2, 2).isApprox(Eigen::Matrix2d::Identity(), 0.0));

    const Dual2 s = Dual2::variable(3, 1, 2.0);
    EXPECT_EQ(s.grad(), Vec::Unit(3, 1));
    EXPECT_TRUE(s.hess().isZero(0.0));
}

TEST(Autodiff, GradientAndHessianMatchFiniteDifferences) {
    Rng rng(23);
    const std::vector<std::string> order = {"x", "y", "w"};
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const auto e = expr::parse(random_expression(rng, 4));
        std::vector<double> pt = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Dual2 d;
        try {
            d = jet2(e, order, pt);
        } catch (const DomainError&) {
            continue;
        }
        if (!std::isfinite(d.value()) || d.grad().cwiseAbs().maxCoeff() > 1e6) continue;
        const double h = 1e-6;
        for (int j = 0; j < 3; ++j) {
            auto p = pt, m = pt;
            p[static_cast<std::size_t>(j)] += h;
            m[static_cast<std::size_t>(j)] -= h;
            Dual2 dp, dm;
            try {
                dp = jet2(e, order, p);
                dm = jet2(e, order, m);
            } catch (const DomainError&) {
                continue;
            }
            const double fd = (dp.value() - dm.value()) / (2 * h);
            EXPECT_NEAR(d.grad()[j], fd, 1e-6 * (1 + std::abs(fd))) << expr::print(e);
            const Vec hfd = (dp.grad() - dm.grad()) / (2 * h);
            for (int r = 0; r < 3; ++r) EXPECT_NEAR(d.hess()(r, j), hfd[r], 1e-6 * (1 + std::abs(hfd[r]))) << expr::print(e);
        }
        EXPECT_TRUE((d.hess() - d.hess().transpose()).isZero(0.0)) << "Hessian not bitwise symmetric";
        ++checked;
    }
    EXPECT_GT(checked, 200);
}

TEST(Autodiff, SledgeVelocityHessianDeterminant) {
    const auto m = bundled_model("sledge");
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Vec x(7);
        for (int j = 0; j < 7; ++j) x[j] = rng.uniform(-3, 3);
        const Mat W = m.lagrangian().jet(x).hess().block(3, 3, 3, 3);
        EXPECT_NEAR(W.determinant(), 2.0, 1e-12);
    }
}

TEST(ModelFile, ParseAndSerializeRoundTrip) {
    for (const auto& [name, text] : bundled_model_texts()) {
        const ModelFile a = parse_model_file(text);
        const ModelFile b = parse_model_file(to_text(a));
        EXPECT_EQ(a.name, b.name);
        EXPECT_EQ(a.coords, b.coords);
        EXPECT_EQ(a.params, b.params);
        EXPECT_EQ(a.lagrangian, b.lagrangian);
        EXPECT_EQ(a.constraints, b.constraints);
        EXPECT_EQ(a.check_state, b.check_state);
        EXPECT_EQ(a.description, b.description);
    }
}

TEST(ModelFile, ErrorsCarryLineNumbers) {
    try {
        parse_model_file("[model]\nname = \"a\"\ncoords = [\"x\"\n");
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_model_file("[model]\nname = \"a\"\nname = \"b\"\n"), ModelError);
    EXPECT_THROW(parse_model_file("[oops]\n"), ModelError);
    EXPECT_THROW(parse_model_file("x = 1\n"), ModelError);
    EXPECT_THROW(parse_model_file("[model]\nname = \"a\"\ncoords = [\"x\"]\n"), ModelError);  // no lagrangian
    const ModelFile m = parse_model_file(
        "# c\n[model]   # trailing\nname=\"a \\\"b\\\"\"\ncoords = [\"x\", \"y\"]\nlagrangian = \"dx^2\"\n[params]\nk = -1.5e-3\n");
    EXPECT_EQ(m.name, "a \"b\"");
    ASSERT_EQ(m.params.size(), 1u);
    EXPECT_DOUBLE_EQ(m.params[0].second, -1.5e-3);
}

TEST(Models, BundledSledgeShape) {
    const auto m = bundled_model("sledge");
    EXPECT_EQ(m.dof(), 3);
    EXPECT_EQ(m.constraint_count(), 1);
    EXPECT_EQ(m.param("alpha"), 1.0);
    EXPECT_EQ(m.param("beta"), 0.5);
    EXPECT_EQ(m.param("gamma"), 0.1);
    const std::vector<std::string> layout = {"x", "y", "phi", "dx", "dy", "dphi", "z"};
    EXPECT_EQ(m.layout(), layout);
}

TEST(Models, EveryBundledModelLoads) {
    for (const auto& [name, text] : bundled_model_texts()) EXPECT_NO_THROW(bundled_model(name)) << name;
}

TEST(Models, BundledTextsMatchModelsDirectory) {
    for (const auto& [name, text] : bundled_model_texts()) {
        std::ifstream in(std::string(CONTACT_NH_SOURCE_DIR) + "/models/" + std::string(name) + ".model");
        ASSERT_TRUE(in) << name;
        std::stringstream ss;
        ss << in.rdbuf();
        EXPECT_EQ(ss.str(), text) << name;
    }
}

TEST(Models, ValidationFailures) {
    const std::string head = "[model]\nname = \"t\"\ncoords = [\"x\", \"y\"]\nlagrangian = \"0.5*(dx^2+dy^2)\"\n";
    try {
        load_model_text(head + "[constraints]\nc = \"dx^2\"\n");
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos);
    }
    EXPECT_THROW(load_model_text(head + "[constraints]\nc = \"dx + 1\"\n"), ModelError);
    EXPECT_THROW(load_model_text(head + "[constraints]\nc = \"z*dx\"\n"), ModelError);
    EXPECT_THROW(load_model_text(head + "[constraints]\nc = \"dx\"\nd = \"dy\"\n"), ModelError);  // k = n
    EXPECT_THROW(load_model_text(head + "[constraints]\nc = \"dx*unknown\"\n"), ModelError);
    EXPECT_THROW(load_model_text(head + "[constraints]\nc = \"0*dx\"\n"), RankError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"z\"]\nlagrangian = \"dz^2\"\n"), ModelError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"x\", \"x\"]\nlagrangian = \"dx^2\"\n"), ModelError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"x\", \"dx\"]\nlagrangian = \"dx^2\"\n"), ModelError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"sin\"]\nlagrangian = \"1\"\n"), ModelError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"x\"]\nlagrangian = \"dx^2\"\n[params]\nx = 1\n"),
                 ModelError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"x\"]\nlagrangian = \"x\"\ncheck_state = [0, 0, 0]\n"),
                 RegularityError);
    EXPECT_THROW(load_model_text("[model]\nname = \"t\"\ncoords = [\"x\"]\nlagrangian = \"dx^2\"\ncheck_state = [0]\n"),
                 ModelError);
    EXPECT_THROW(load_model("no-such-model-or-file"), ModelError);
}

TEST(Models, ParameterOverride) {
    const auto m = bundled_model("sledge").with_params({{"alpha", 2.0}});
    EXPECT_EQ(m.param("alpha"), 2.0);
    EXPECT_THROW(bundled_model("sledge").with_params({{"delta", 1.0}}), ModelError);
}
