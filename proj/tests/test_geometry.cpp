#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "roughforms/geometry.hpp"
#include "roughforms/subdivision.hpp"
#include "test_util.hpp"

using namespace roughforms;
using testutil::random_simplex;

namespace {

// Antisymmetric functional on oriented simplices built from a random bilinear pairing.
double alternating_probe(const Simplex& s, std::uint64_t seed) {
    if (s.k() == 0) {
        const Point p = s.vertex(0);
        return std::sin(3.1 * p(0) + 0.7 * seed) + (p.size() > 1 ? std::cos(1.3 * p(1)) : 0.0);
    }
    // signed sum over permutations weighted by a non-symmetric vertex function
    std::vector<int> perm(s.k() + 1);
    for (int i = 0; i <= s.k(); ++i) perm[i] = i;
    double total = 0;
    do {
        double term = 1.0;
        for (int i = 0; i <= s.k(); ++i) term *= 1.0 + (i + 1) * s.vertex(perm[i]).sum() + 0.1 * seed;
        total += permutation_sign(perm) * term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

double eval_chain(const Chain& c, std::uint64_t seed) {
    double v = 0;
    for (const auto& t : c) v += t.coeff * alternating_probe(t.simplex, seed);
    return v;
}

}  // namespace

TEST_CASE("volume of unit simplices") {
    CHECK(volume(Simplex::from_points({{0, 0}, {1, 0}})) == doctest::Approx(1.0));
    CHECK(volume(Simplex::from_points({{0, 0}, {1, 0}, {0, 1}})) == doctest::Approx(0.5));
    CHECK(volume(Simplex::from_points({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}})) == doctest::Approx(1.0 / 6));
    CHECK(volume(Simplex::from_points({{0, 0}, {1, 1}, {2, 2}})) == 0.0);
}

TEST_CASE("volume matches rejection-sampling area oracle") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 3; ++rep) {
        const Simplex s = random_simplex(rng, 2, 3, 1.0, 10.0);
        // orthonormal in-plane coordinates, independent of the Gram formula
        const Eigen::Vector3d a = s.vertex(0), b = s.vertex(1), c = s.vertex(2);
        const Eigen::Vector3d u = (b - a).normalized();
        Eigen::Vector3d w = (c - a) - (c - a).dot(u) * u;
        w.normalize();
        const Eigen::Vector2d p0(0, 0), p1((b - a).dot(u), (b - a).dot(w)), p2((c - a).dot(u), (c - a).dot(w));
        const double xlo = std::min({p0.x(), p1.x(), p2.x()}), xhi = std::max({p0.x(), p1.x(), p2.x()});
        const double ylo = std::min({p0.y(), p1.y(), p2.y()}), yhi = std::max({p0.y(), p1.y(), p2.y()});
        auto side = [](const Eigen::Vector2d& o, const Eigen::Vector2d& e, const Eigen::Vector2d& q) {
            return (e.x() - o.x()) * (q.y() - o.y()) - (e.y() - o.y()) * (q.x() - o.x());
        };
        std::uniform_real_distribution<double> ux(xlo, xhi), uy(ylo, yhi);
        const int n = 400000;
        int hit = 0;
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d q(ux(rng), uy(rng));
            const double s0 = side(p0, p1, q), s1 = side(p1, p2, q), s2 = side(p2, p0, q);
            if ((s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0)) ++hit;
        }
        const double area = (xhi - xlo) * (yhi - ylo) * hit / n;
        CHECK(std::abs(area - volume(s)) / volume(s) < 0.01);
    }
}

TEST_CASE("alpha-mass of the unit right triangle") {
    const Simplex s = Simplex::from_points({{0, 0}, {1, 0}, {0, 1}});
    const MassReport r = mass_alpha(s, 1.0);
    // dense barycentric-grid oracle for h: max over the simplex of the distance to each face line
    double h_oracle = 1e300;
    const int n = 400;
    for (int f = 0; f < 3; ++f) {
        const Simplex face = s.face(f);
        const Eigen::Vector2d a = face.vertex(0), b = face.vertex(1);
        const Eigen::Vector2d nrm = Eigen::Vector2d(-(b - a).y(), (b - a).x()).normalized();
        double best = 0;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                const Eigen::Vector2d x(double(i) / n, double(j) / n);
                best = std::max(best, std::abs(nrm.dot(x - a)));
            }
        h_oracle = std::min(h_oracle, best);
    }
    CHECK(r.h == doctest::Approx(h_oracle).epsilon(1e-9));
    CHECK(r.h == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(*std::max_element(r.face_volumes.begin(), r.face_volumes.end()) == doctest::Approx(std::sqrt(2.0)));
    CHECK(r.mass == doctest::Approx(1.0));
    CHECK(mass(s, 0.0) == 1.0);
    CHECK(mass(s, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK_THROWS_AS(mass_alpha(Simplex::from_points({{0, 0}, {1, 1}, {2, 2}}), 1.0), DegenerateSimplex);
}

TEST_CASE("mass_1 equals k times volume") {
    std::mt19937_64 rng(3);
    for (int k = 1; k <= 3; ++k)
        for (int rep = 0; rep < 20; ++rep) {
            const Simplex s = random_simplex(rng, k, 3);
            CHECK(mass(s, 1.0) == doctest::Approx(k * volume(s)).epsilon(1e-10));
        }
}

TEST_CASE("eccentricity examples") {
    CHECK(eccentricity(Simplex::from_points({{0, 0}, {1, 0}})) == doctest::Approx(1.0));
    CHECK(eccentricity(Simplex::from_points({{0, 0}, {1, 0}, {0, 1}})) == doctest::Approx(4.0));
    CHECK(eccentricity(Simplex::from_points({{0, 0}, {1, 0}, {0.5, 1e-3}})) > 100);
}

TEST_CASE("boundary examples") {
    const Simplex seg = Simplex::from_points({{0.2, 0.1}, {1.5, -0.3}});
    const Chain b = boundary(seg);
    REQUIRE(b.size() == 2);
    CHECK(b.terms()[0].coeff == 1);
    CHECK(b.terms()[0].simplex == Simplex::from_points({{1.5, -0.3}}));
    CHECK(b.terms()[1].coeff == -1);
    CHECK(b.terms()[1].simplex == Simplex::from_points({{0.2, 0.1}}));

    // ∂[0,e1,e2] = [e1,e2] - [0,e2] + [0,e1]
    const Simplex tri = Simplex::from_points({{0, 0}, {1, 0}, {0, 1}});
    const Chain bt = boundary(tri);
    Chain expected;
    expected.add(Simplex::from_points({{1, 0}, {0, 1}}), 1);
    expected.add(Simplex::from_points({{0, 0}, {0, 1}}), -1);
    expected.add(Simplex::from_points({{0, 0}, {1, 0}}), 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(eval_chain(bt, seed) == doctest::Approx(eval_chain(expected, seed)));
    for (const auto& t : bt) CHECK(t.coeff == 1);
}

TEST_CASE("boundary of boundary vanishes") {
    std::mt19937_64 rng(5);
    for (int k = 2; k <= 3; ++k)
        for (int rep = 0; rep < 10; ++rep) {
            const Simplex s = random_simplex(rng, k, 3);
            const Chain bb = boundary(boundary(s));
            for (std::uint64_t seed = 0; seed < 3; ++seed) CHECK(std::abs(eval_chain(bb, seed)) < 1e-12);
        }
}

TEST_CASE("coordinate projections") {
    CHECK(coordinate_projection(Simplex::from_points({{0, 0}, {1, 0}}), {0}) == doctest::Approx(1.0));
    const Simplex tri = Simplex::from_points({{0, 0}, {1, 0}, {0, 1}});
    CHECK(coordinate_projection(tri, {0, 1}) == doctest::Approx(0.5));
    CHECK(coordinate_projection(tri.swapped(1, 2), {0, 1}) == doctest::Approx(-0.5));
    const Simplex xz = Simplex::from_points({{0, 0, 0}, {1, 0, 0}, {0, 0, 1}});
    CHECK(coordinate_projection(xz, {0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("orientation antisymmetry of coordinate projections") {
    std::mt19937_64 rng(8);
    for (int k = 1; k <= 3; ++k)
        for (int rep = 0; rep < 10; ++rep) {
            const Simplex s = random_simplex(rng, k, 3);
            for (const auto& I : index_sets(3, k))
                for (int i = 0; i <= k; ++i)
                    for (int j = i + 1; j <= k; ++j)
                        CHECK(coordinate_projection(s.swapped(i, j), I) ==
                              doctest::Approx(-coordinate_projection(s, I)).epsilon(1e-12));
        }
}

TEST_CASE("cube_to_chain") {
    Point base(2);
    base << 0, 0;
    Cube q1(Point::Zero(2), EdgeMatrix::Identity(2, 1), 1.0);
    CHECK(cube_to_chain(q1).size() == 1);
    Cube q2(Point::Zero(2), EdgeMatrix::Identity(2, 2), 1.0);
    const Chain c2 = cube_to_chain(q2);
    REQUIRE(c2.size() == 2);
    for (const auto& t : c2) {
        CHECK(volume(t.simplex) == doctest::Approx(0.5));
        CHECK(t.coeff * coordinate_projection(t.simplex, {0, 1}) == doctest::Approx(0.5));
    }
    const double r = 0.37;
    Cube q3(Point::Zero(3), EdgeMatrix::Identity(3, 3), r);
    const Chain c3 = cube_to_chain(q3);
    REQUIRE(c3.size() == 6);
    double sum = 0, signed_sum = 0;
    for (const auto& t : c3) {
        sum += volume(t.simplex);
        signed_sum += t.coeff * coordinate_projection(t.simplex, {0, 1, 2});
    }
    CHECK(std::abs(sum - r * r * r) < 1e-12);
    CHECK(std::abs(signed_sum - r * r * r) < 1e-12);
    Cube neg(Point::Zero(3), EdgeMatrix::Identity(3, 3), r, -1);
    double neg_sum = 0;
    for (const auto& t : cube_to_chain(neg)) neg_sum += t.coeff * coordinate_projection(t.simplex, {0, 1, 2});
    CHECK(neg_sum == doctest::Approx(-r * r * r));
}

TEST_CASE("snap_to_grid") {
    std::mt19937_64 rng(21);
    for (int n : {0, 3, 10}) {
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const Point x = testutil::random_point(rng, 3, -5, 5);
            worst = std::max(worst, (snap_to_grid(x, n) - x).norm());
        }
        CHECK(worst <= std::ldexp(1.0, -n) * std::sqrt(3.0) / 2 + 1e-15);
    }
    const Simplex on = Simplex::from_points({{0.25, 0.5}, {0.75, -1.0}, {0.0, 0.125}});
    CHECK(snap_to_grid(on, 3) == on);
    Point tie(2);
    tie << 0.5, -1.5;
    const Point snapped = snap_to_grid(tie, 0);
    CHECK(snapped(0) == 0.0);
    CHECK(snapped(1) == -2.0);
}

TEST_CASE("base-height identity and mass comparison") {
    std::mt19937_64 rng(17);
    for (int k = 1; k <= 3; ++k)
        for (int rep = 0; rep < 30; ++rep) {
            const Simplex s = random_simplex(rng, k, 3, 0.9);
            const double v = volume(s);
            for (int i = 0; i <= k; ++i)
                CHECK(std::abs(volume(s.face(i)) * height(s, i) / k - v) <= 1e-10 * v);
            for (double alpha : {0.3, 0.7, 1.0}) CHECK(mass(s, alpha) <= std::pow(s.diameter(), k - 1 + alpha) + 1e-14);
        }
}

TEST_CASE("mass subadditivity over scheme subdivisions") {
    std::mt19937_64 rng(19);
    for (int k = 1; k <= 3; ++k)
        for (int rep = 0; rep < 10; ++rep) {
            const Simplex s = random_simplex(rng, k, 3, 0.8);
            for (double alpha : {0.25, 0.6, 1.0})
                for (int level = 1; level <= 2; ++level) {
                    double total = 0;
                    for (const auto& t : iterate(*edgewise(), s, level)) total += mass(t.simplex, alpha);
                    CHECK(mass(s, alpha) <= total + 1e-9);
                }
        }
}

TEST_CASE("index sets") {
    const auto sets = index_sets(3, 2);
    REQUIRE(sets.size() == 3);
    CHECK(sets[0] == std::vector<int>{0, 1});
    CHECK(sets[1] == std::vector<int>{0, 2});
    CHECK(sets[2] == std::vector<int>{1, 2});
    CHECK(index_sets(2, 0).size() == 1);
}
