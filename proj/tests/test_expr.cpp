#include <cmath>
#include <random>

#include "doctest.h"
#include "roughforms/errors.hpp"
#include "roughforms/expr.hpp"
#include "test_util.hpp"

using namespace roughforms;
using namespace roughforms::expr;

namespace {

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) p(i++) = x;
    return p;
}

double central_difference(const Expr& e, Point x, int var, double h = 1e-5) {
    x(var - 1) += h;
    const double up = e(x);
    x(var - 1) -= 2 * h;
    return (up - e(x)) / (2 * h);
}

}  // namespace

TEST_CASE("parse and evaluate") {
    CHECK(parse("x1 + 2*x2")(pt({1, 3})) == 7.0);
    CHECK(parse("2^3^2")(pt({})) == 512.0);
    CHECK(parse("-2^2")(pt({})) == -4.0);
    CHECK(parse("2^-1")(pt({})) == 0.5);
    CHECK(parse("8/4/2")(pt({})) == 1.0);
    CHECK(parse("1 - 2 - 3")(pt({})) == -4.0);
    CHECK(parse("1.5e-3 * 2E+2")(pt({})) == doctest::Approx(0.3));
    CHECK(parse("pi")(pt({})) == doctest::Approx(M_PI));
    CHECK(parse("sqrt(abs(-4)) + exp(0) + log(1)")(pt({})) == 3.0);

    std::mt19937_64 rng(1);
    const Expr trig = parse("sin(x1)^2 + cos(x1)^2");
    for (int i = 0; i < 20; ++i) {
        const Point x = testutil::random_point(rng, 1, -10, 10);
        CHECK(trig(x) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("syntax errors carry positions") {
    try {
        parse("x1*(");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 4);
    }
    try {
        parse("x1 +\n  * 2");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
    CHECK_THROWS_AS(parse("x1 $ 2"), SyntaxError);
    CHECK_THROWS_AS(parse("(x1"), SyntaxError);
    CHECK_THROWS_AS(parse("x1 x2"), SyntaxError);
    CHECK_THROWS_AS(parse("y + 1"), UnknownIdentifier);
    CHECK_THROWS_AS(parse("tan(x1)"), UnknownIdentifier);
    CHECK_THROWS_AS(parse("x0"), UnknownIdentifier);
    CHECK_THROWS_AS(parse("weierstrass(x1, 2)"), SyntaxError);
    CHECK_THROWS_AS(parse("weierstrass(1.5, 2)"), SyntaxError);
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(parse("1/x1")(pt({0})), DomainError);
    CHECK_THROWS_AS(parse("sqrt(x1)")(pt({-1})), DomainError);
    CHECK_THROWS_AS(parse("log(x1)")(pt({0})), DomainError);
    CHECK_THROWS_AS(parse("x1^0.5")(pt({-1})), DomainError);
    CHECK(parse("x1^2")(pt({-3})) == 9.0);
    CHECK_THROWS_AS(parse("x3")(pt({1, 2})), InvalidArgument);
}

TEST_CASE("print then parse is the identity on syntax trees") {
    const char* cases[] = {"x1 + 2*x2",
                           "-(x1 - x2) - (x3 - 1)",
                           "x1 - (x2 - x3)",
                           "x1/(x2/x3)",
                           "(x1^x2)^x3",
                           "x1^x2^x3",
                           "(-x1)^2",
                           "-x1^2",
                           "2^-x1",
                           "sin(cos(x1*x2))/exp(-x2)",
                           "0.1 + 1e-300 + 123456789.125",
                           "weierstrass(0.6, 7) + weierstrass(0.3, 2, 1.5707963267948966)",
                           "sqrt(abs(x1)) * log(2 + x2)",
                           "((x1))"};
    for (const char* c : cases) {
        const Expr e = parse(c);
        const Expr back = parse(e.str());
        CHECK_MESSAGE(back == e, c << " -> " << e.str());
        CHECK(back.str() == e.str());
    }
    CHECK_FALSE(parse("x1 - x2 - x3") == parse("x1 - (x2 - x3)"));
}

TEST_CASE("numeric literals round-trip exactly") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-300, 300);
    for (int i = 0; i < 200; ++i) {
        const double v = std::pow(10.0, u(rng) / 10) * 1.2345678901234567;
        const Expr e = parse(number(v).str());
        CHECK(e(pt({})) == v);
    }
}

TEST_CASE("differentiation examples") {
    const Expr sq = differentiate(parse("x1^2"), 1);
    for (double x : {-2.0, 0.5, 3.0}) CHECK(sq(pt({x})) == doctest::Approx(2 * x));
    CHECK(differentiate(parse("sin(2*x1)"), 1)(pt({0})) == doctest::Approx(2.0));
    CHECK(differentiate(parse("x1*x2"), 3)(pt({1, 2, 3})) == 0.0);
    CHECK(differentiate(parse("abs(x1) + x2"), 2)(pt({1, 2})) == 1.0);
    CHECK_THROWS_AS(differentiate(parse("abs(x1)"), 1), NotDifferentiable);
    CHECK_THROWS_AS(differentiate(parse("weierstrass(0.5, 1)"), 1), NotDifferentiable);
}

TEST_CASE("derivatives match finite differences") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> deg(0, 3);
    std::uniform_real_distribution<double> coef(-2, 2);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        // random polynomial in x1, x2
        std::string text = "0";
        for (int t = 0; t < 4; ++t) {
            char buf[128];
            std::snprintf(buf, sizeof buf, " + %.6f*x1^%d*x2^%d", coef(rng), deg(rng), deg(rng));
            text += buf;
        }
        const Expr e = parse(text);
        const Point x = testutil::random_point(rng, 2, 0.5, 1.5);
        for (int v = 1; v <= 2; ++v) {
            const double exact = differentiate(e, v)(x);
            const double fd = central_difference(e, x, v);
            worst = std::max(worst, std::abs(exact - fd) / std::max(1.0, std::abs(exact)));
        }
    }
    CHECK(worst < 1e-6);

    const Expr smooth = parse("exp(x1*x2)/(1 + x1^2) + sqrt(2 + sin(x2)) + x1^x2 + log(1 + x2^2)");
    for (int i = 0; i < 50; ++i) {
        const Point x = testutil::random_point(rng, 2, 0.2, 1.5);
        for (int v = 1; v <= 2; ++v) {
            const double exact = differentiate(smooth, v)(x);
            CHECK(std::abs(exact - central_difference(smooth, x, v)) <= 1e-6 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("weierstrass builtin") {
    const Expr w = parse("weierstrass(0.6, 3)");
    const Weierstrass ref(0.6, 3, 2);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Point x = testutil::random_point(rng, 2);
        CHECK(w(x) == ref(x));
    }
    const Expr shifted = parse("weierstrass(0.6, 3, pi/2)");
    const Weierstrass ref2(0.6, 3, 2, M_PI / 2);
    const Point x = testutil::random_point(rng, 2);
    CHECK(shifted(x) == ref2(x));
    const HolderFunction h = to_holder(parse("x1 + weierstrass(0.3, 1)"), 2);
    CHECK(h.gamma == 0.3);
}
