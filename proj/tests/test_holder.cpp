#include <cmath>
#include <numbers>

#include "doctest.h"
#include "roughforms/holder.hpp"
#include "test_util.hpp"

using namespace roughforms;

TEST_CASE("weierstrass definition") {
    const Weierstrass w(0.6, 11, 2);
    CHECK(w.terms() == 13);
    for (int j = 0; j < w.terms(); ++j) CHECK(w.direction(j).norm() == doctest::Approx(1.0));
    // direct evaluation of the defining sum
    const Point x = Point::Constant(2, 0.37);
    double s = 0;
    for (int j = 0; j < 13; ++j)
        s += std::pow(2.0, -0.6 * j) * std::cos(2 * std::numbers::pi * std::ldexp(1.0, j) * w.direction(j).dot(x));
    CHECK(w(x) == doctest::Approx(s).epsilon(1e-13));
    // same seed, same directions, regardless of exponent
    const Weierstrass v(0.3, 11, 2, 0.5);
    for (int j = 0; j < 13; ++j) CHECK((v.direction(j) - w.direction(j)).norm() == 0.0);
    CHECK(std::abs(w(Point::Zero(2)) - (1 - std::pow(2.0, -0.6 * 13)) / (1 - std::pow(2.0, -0.6))) < 1e-12);
}

TEST_CASE("declared hoelder bounds hold on sampled pairs") {
    for (double g : {0.3, 0.6, 0.9}) {
        for (int d = 1; d <= 3; ++d) {
            const HolderFunction f = weierstrass_function(g, 5, d);
            const HolderCheck c = holder_spot_check(f, Region::box(d, -1, 1), 2000, 17);
            CHECK(c.pairs == 2000);
            CHECK(c.max_ratio <= 1.0);
            CHECK(c.max_ratio > 0.01);
        }
    }
    Point a(2);
    a << 3, -4;
    const HolderCheck c = holder_spot_check(affine_function(a, 1), Region::box(2, -1, 1), 500, 3);
    CHECK(c.max_ratio <= 1.0 + 1e-12);
    CHECK(c.max_ratio >= 0.5);
    CHECK(holder_spot_check(constant_function(2), Region::box(2, 0, 1), 10, 1).max_ratio == 0.0);
}
