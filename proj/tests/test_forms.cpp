#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "roughforms/errors.hpp"
#include "roughforms/forms.hpp"
#include "roughforms/parallel.hpp"
#include "test_util.hpp"

using namespace roughforms;
using testutil::random_simplex;

namespace {

const double kPi = std::acos(-1.0);
using Comps = std::vector<std::pair<std::vector<int>, expr::Expr>>;

// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration on P_n.
struct Gauss {
    std::vector<double> x, w;
    explicit Gauss(int n) {
        for (int i = 1; i <= n; ++i) {
            double z = std::cos(kPi * (i - 0.25) / (n + 0.5)), dp = 0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1, p1 = z;
                for (int j = 2; j <= n; ++j) {
                    const double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x.push_back(0.5 * (1 - z));
            w.push_back(1.0 / ((1 - z * z) * dp * dp));
        }
    }
};

// Average of f over a segment or triangle.
double average(const std::function<double(const Point&)>& f, const Simplex& s) {
    static const Gauss g(24);
    double sum = 0;
    if (s.k() == 1) {
        for (std::size_t i = 0; i < g.x.size(); ++i)
            sum += g.w[i] * f(Point(s.vertex(0) + g.x[i] * (s.vertex(1) - s.vertex(0))));
        return sum;
    }
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.x.size(); ++j) {
            const double u = g.x[i], t = g.x[j];
            const Point p = s.vertex(0) + u * (s.vertex(1) - s.vertex(0)) + u * t * (s.vertex(2) - s.vertex(1));
            sum += 2 * g.w[i] * g.w[j] * u * f(p);
        }
    return sum;
}

// ∫_σ Σ f_I dx^I by quadrature.
double quadrature(const CatalogEntry& e, const Simplex& s) {
    double v = 0;
    for (const auto& [I1, text] : e.components) {
        const expr::Expr f = expr::parse(text);
        std::vector<int> I;
        for (int i : I1) I.push_back(i - 1);
        v += coordinate_projection(s, I) * average([&](const Point& x) { return f(x); }, s);
    }
    return v;
}

Simplex tri(std::initializer_list<std::initializer_list<double>> p) { return Simplex::from_points(p); }

HolderFunction coordinate(int i, int d) {
    Point a = Point::Zero(d);
    a(i) = 1;
    return affine_function(a, 0.0);
}

CochainPtr form(const std::string& name) { return catalog_form(name); }

}  // namespace

TEST_CASE("smooth_form examples") {
    const auto dx = form("dx");
    CHECK(dx->eval(Simplex::from_points({{0, 0}, {1, 0}})) == doctest::Approx(1.0));
    const auto xdy = form("x dy");
    CHECK(std::abs(xdy->eval_chain(boundary(tri({{0, 0}, {1, 0}, {0, 1}}))) - 0.5) < 1e-8);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const Simplex s = random_simplex(rng, 1, 2);
        const auto r = std::static_pointer_cast<const SewnCochain>(dx)->sew_result(s);
        CHECK(r.depth == 0);
        CHECK(r.value == coordinate_projection(s, {0}));
    }
    CHECK_THROWS_AS(dx->eval(Simplex::from_points({{0, 0, 0}, {1, 0, 0}})), InvalidArgument);
    CHECK_THROWS_AS(smooth_form(2, Comps{{{2, 1}, expr::parse("1")}}), InvalidArgument);
}

TEST_CASE("smooth forms match quadrature") {
    std::mt19937_64 rng(11);
    for (const auto& e : form_catalog()) {
        const auto a = catalog_form(e.name);
        for (int i = 0; i < 3; ++i) {
            const Simplex s = random_simplex(rng, e.k, e.d, 0.8, 10.0);
            const double q = quadrature(e, s);
            CHECK_MESSAGE(std::abs(a->eval(s, 1e-8) - q) <= 1e-7 * std::max(1.0, std::abs(q)), e.name);
        }
    }
}

TEST_CASE("cochain invariants") {
    std::mt19937_64 rng(5);
    const auto a = form("wave");
    for (int i = 0; i < 10; ++i) {
        const Simplex s = random_simplex(rng, 1, 2);
        CHECK(std::abs(a->eval(s) + a->eval(s.reversed())) < 1e-7);
        const Chain kids = edgewise_children(s);
        CHECK(std::abs(a->eval_chain(kids, 1e-9) - a->eval(s, 1e-9)) < 1e-7);
    }
}

TEST_CASE("smooth exterior derivative") {
    const auto flux = catalog_form("helix");
    const auto d = smooth_exterior_derivative(*flux);
    CHECK(d->k() == 2);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 5; ++i) {
        const Simplex w = random_simplex(rng, 2, 3, 0.6, 10.0);
        CHECK(std::abs(d->eval(w, 1e-9) - flux->eval_chain(boundary(w), 1e-9)) < 1e-7);
    }
}

TEST_CASE("product examples") {
    std::mt19937_64 rng(21);
    const auto a = form("wave");
    const auto three = product(constant_function(3.0), a);
    for (int i = 0; i < 50; ++i) {
        const Simplex s = random_simplex(rng, 1, 2);
        CHECK(std::abs(three->eval(s, 1e-9) - 3.0 * a->eval(s, 1e-9)) < 1e-8);
    }

    const auto ydx = product(coordinate(1, 2), form("dx"));
    CHECK(std::abs(ydx->eval(Simplex::from_points({{0, 1}, {1, 1}})) - 1.0) < 1e-9);

    // f = x1 against x dy gives ∫ x² dy.
    const auto fx = product(coordinate(0, 2), form("x dy"));
    const auto x2dy = smooth_form(2, Comps{{{2}, expr::parse("x1^2")}});
    for (int i = 0; i < 10; ++i) {
        const Simplex s = random_simplex(rng, 1, 2);
        CHECK(std::abs(fx->eval(s, 1e-9) - x2dy->eval(s, 1e-9)) < 1e-7);
    }

    const auto w = weierstrass_function(0.7, 4, 2);
    ProductOptions bary;
    bary.rule = MeasureRule::barycenter;
    const auto pv = product(w, form("dx"));
    const auto pb = product(w, form("dx"), bary);
    for (int i = 0; i < 50; ++i) {
        const Simplex s = random_simplex(rng, 1, 2, 0.05, 10.0, 0.0, 1.0);
        CHECK(std::abs(pv->eval(s, 1e-6) - pb->eval(s, 1e-6)) < 2e-6);
    }

    CochainPtr rough = product(weierstrass_function(0.6, 2, 2), form("dx"));
    CHECK(rough->alpha() == 1.0);
    CHECK(rough->beta() == doctest::Approx(0.6));
    CHECK_THROWS_AS(product(weierstrass_function(0.3, 1, 2), coboundary(zero_form(weierstrass_function(0.6, 2, 2), 2))),
                    ExponentViolation);
    CHECK_THROWS_AS(product(weierstrass_function(0.2, 1, 2), coboundary(zero_form(weierstrass_function(0.5, 2, 2), 2))),
                    ExponentViolation);
}

TEST_CASE("coboundary examples") {
    const auto d = coboundary(form("x dy"));
    CHECK(d->k() == 2);
    CHECK(d->alpha() == 1.0);
    CHECK(std::isinf(d->beta()));
    CHECK(std::abs(d->eval(tri({{0, 0}, {1, 0}, {0, 1}})) - 0.5) < 1e-8);

    std::mt19937_64 rng(2);
    const auto dd = coboundary(coboundary(form("helix")));
    for (int i = 0; i < 5; ++i) CHECK(std::abs(dd->eval(random_simplex(rng, 3, 3, 0.5, 10.0))) < 1e-7);

    const auto closed = coboundary(form("dx"));
    for (int i = 0; i < 50; ++i) CHECK(std::abs(closed->eval(random_simplex(rng, 2, 2))) < 1e-12);

    const auto g = coboundary(zero_form(weierstrass_function(0.5, 2, 2), 2));
    const Simplex s = Simplex::from_points({{0.1, 0.2}, {0.7, 0.4}});
    const auto w = weierstrass_function(0.5, 2, 2);
    CHECK(g->eval(s) == w(s.vertex(1)) - w(s.vertex(0)));
    CHECK_THROWS_AS(coboundary(form("area")), InvalidArgument);
}

TEST_CASE("wedge_d examples") {
    const Simplex s = tri({{0, 0}, {1, 0}, {0, 1}});
    const auto w = wedge_d(coordinate(0, 2), form("dy"));
    CHECK(std::abs(w->eval(s) - 0.5) < 1e-6);
    CHECK(std::abs(w->eval(s.swapped(0, 2)) + 0.5) < 1e-6);
    CHECK(std::abs(wedge_d(coordinate(1, 2), form("dx"))->eval(s) + 0.5) < 1e-6);
    CHECK(std::abs(wedge_d(constant_function(2.0), form("x dy"))->eval(s)) < 1e-9);

    // d(x²)∧(x dy) = 2x² dx∧dy
    const HolderFunction sq{[](const Point& x) { return x(0) * x(0); }, 1.0, 2.0, false, "x^2"};
    const auto v = wedge_d(sq, form("x dy"));
    std::mt19937_64 rng(4);
    const auto oracle = smooth_form(2, Comps{{{1, 2}, expr::parse("2*x1^2")}});
    for (int i = 0; i < 3; ++i) {
        const Simplex t = random_simplex(rng, 2, 2, 0.5, 10.0);
        CHECK(std::abs(v->eval(t, 1e-7) - oracle->eval(t, 1e-9)) < 1e-6);
    }
    CHECK_THROWS_AS(wedge_d(weierstrass_function(0.3, 1, 2), coboundary(zero_form(weierstrass_function(0.5, 1, 2), 2))),
                    ExponentViolation);
}

TEST_CASE("zust_form examples") {
    const Simplex s = tri({{0, 0}, {1, 0}, {0, 1}});
    const auto unit = zero_form(constant_function(1.0), 2);
    const auto z = zust_form(constant_function(1.0), {coordinate(0, 2), coordinate(1, 2)}, unit);
    CHECK(z->k() == 2);
    CHECK(std::abs(z->eval(s) - 0.5) < 1e-6);

    const auto f = weierstrass_function(0.6, 1, 2);
    const auto plain = product(f, form("dx"));
    const auto z0 = zust_form(f, {}, form("dx"));
    const Simplex e = Simplex::from_points({{0.1, 0.1}, {0.6, 0.3}});
    CHECK(std::abs(z0->eval(e, 1e-5) - plain->eval(e, 1e-5)) < 2e-5);

    const std::vector<HolderFunction> rough = {weierstrass_function(0.3, 1, 2), weierstrass_function(0.3, 2, 2)};
    try {
        zust_form(weierstrass_function(0.3, 3, 2), rough, zero_form(weierstrass_function(0.3, 4, 2), 2));
        FAIL("expected ExponentViolation");
    } catch (const ExponentViolation& ex) {
        CHECK(std::string(ex.what()).find("alpha + sum(gamma_i) > n") != std::string::npos);
    }
}

TEST_CASE("pullback examples") {
    std::mt19937_64 rng(9);
    const auto a = form("wave");
    const auto id = pullback(identity_map(2), a);
    for (int i = 0; i < 50; ++i) {
        const Simplex s = random_simplex(rng, 1, 2);
        CHECK(std::abs(id->eval(s, 1e-9) - a->eval(s, 1e-9)) < 1e-8);
    }

    const SmoothMap circle = expression_map(1, {expr::parse("cos(2*pi*x1)"), expr::parse("sin(2*pi*x1)")});
    const auto c = pullback(circle, form("x dy"));
    CHECK(std::abs(c->eval(Simplex::from_points({{0}, {1}}), 1e-6) - kPi) < 1e-4);

    Eigen::MatrixXd m(2, 2);
    m << 2, 1, -1, 3;
    Point b(2);
    b << 0.5, -0.2;
    const auto aff = pullback(affine_map(m, b), form("dx"));
    const Simplex s = Simplex::from_points({{0.1, 0.2}, {0.4, -0.3}});
    CHECK(aff->sew_result(s).depth == 0);
    CHECK(aff->eval(s) == doctest::Approx(2 * 0.3 + 1 * -0.5));

    CHECK_THROWS_AS(pullback(circle, coboundary(zero_form(weierstrass_function(0.4, 1, 2), 2))), ExponentViolation);
    CHECK_THROWS_AS(pullback(circle, form("x dz")), InvalidArgument);
}

TEST_CASE("pullback composition and product compatibility") {
    const SmoothMap g = expression_map(2, {expr::parse("x1 + 0.3*x2^2"), expr::parse("x2 + 0.2*sin(x1)")});
    const SmoothMap f = expression_map(2, {expr::parse("x1*x2 + x1"), expr::parse("x2 - 0.1*x1^2")});
    const auto a = form("rotation");
    const auto nested = pullback(f, pullback(g, a));
    const auto composed = pullback(compose(g, f), a);
    std::mt19937_64 rng(14);
    for (int i = 0; i < 20; ++i) {
        const Simplex s = random_simplex(rng, 1, 2, 0.3, 10.0, 0.0, 0.5);
        CHECK(std::abs(nested->eval(s, 1e-7) - composed->eval(s, 1e-7)) < 2e-7);
    }

    const auto phi = weierstrass_function(0.7, 3, 2);
    const auto lhs = pullback(f, product(phi, form("dx")));
    const auto rhs = product(pullback(f, phi), pullback(f, form("dx")));
    for (int i = 0; i < 5; ++i) {
        const Simplex s = random_simplex(rng, 1, 2, 0.05, 10.0, 0.0, 0.5);
        CHECK(std::abs(lhs->eval(s, 1e-6) - rhs->eval(s, 1e-6)) < 4e-6);
    }
}

TEST_CASE("jacobian check") {
    const SmoothMap f = expression_map(2, {expr::parse("x1*x2"), expr::parse("sin(x1)"), expr::parse("x2^3")});
    CHECK(jacobian_check(f, Region::box(2, -1, 1), 20, 1) < 1e-5);
    CHECK(jacobian_check(compose(f, identity_map(2)), Region::box(2, -1, 1), 20, 1) < 1e-5);
}

TEST_CASE("stokes examples") {
    const Simplex s = tri({{0, 0}, {1, 0}, {0, 1}});
    const auto r = stokes_residual(*form("x dy"), s);
    CHECK(std::abs(r.lhs - 0.5) < 1e-7);
    CHECK(std::abs(r.rhs - 0.5) < 1e-7);
    CHECK(r.residual < 1e-6);

    const auto closed = stokes_residual(*form("dx"), s);
    CHECK(std::abs(closed.lhs) < 1e-12);
    CHECK(std::abs(closed.rhs) < 1e-12);

    const auto helix = catalog_form("helix");
    const auto dh = smooth_exterior_derivative(*helix);
    std::mt19937_64 rng(31);
    const Simplex w = random_simplex(rng, 2, 3, 0.7, 10.0);
    CHECK(stokes_residual(*helix, *dh, w, 1e-8).residual < 1e-7);
    CHECK(stokes_residual(*helix, w, 1e-6).residual < 1e-6);

    // Graph patch F(u,v) = (u, v, u²+v²) with A = x dz: F*(dx∧dz) = 2v du∧dv.
    const SmoothMap graph = expression_map(2, {expr::parse("x1"), expr::parse("x2"), expr::parse("x1^2 + x2^2")});
    FormOptions opts;
    opts.depth_max = 8;
    const auto fa = pullback(graph, form("x dz"), opts);
    const Simplex omega = tri({{0.1, 0.2}, {0.9, 0.3}, {0.3, 0.8}});
    const double area = 0.5 * ((0.9 - 0.1) * (0.8 - 0.2) - (0.3 - 0.1) * (0.3 - 0.2));
    const double exact = 2 * area * (0.2 + 0.3 + 0.8) / 3;
    const auto curved = stokes_residual(*fa, omega, 3e-5, opts);
    CHECK(curved.residual < 1e-4);
    CHECK(std::abs(curved.rhs - exact) < 3e-5);
    CHECK(std::abs(curved.lhs - exact) < 1e-4);
}

TEST_CASE("memo is thread safe and orientation aware") {
    const auto a = form("wave");
    const auto m = memoized(a);
    std::mt19937_64 rng(12);
    std::vector<Simplex> ss;
    for (int i = 0; i < 200; ++i) ss.push_back(random_simplex(rng, 1, 2));
    std::vector<double> direct(ss.size());
    for (std::size_t i = 0; i < ss.size(); ++i) direct[i] = m->eval(ss[i]);
    std::atomic<int> bad{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (int rep = 0; rep < 3; ++rep)
                for (std::size_t i = t; i < ss.size(); i += 2) {
                    if (m->eval(ss[i]) != direct[i]) ++bad;
                    if (m->eval(ss[i].reversed()) != -direct[i]) ++bad;
                }
        });
    for (auto& th : pool) th.join();
    CHECK(bad.load() == 0);
}

TEST_CASE("norm_estimate examples") {
    SamplerSpec spec;
    spec.region = Region::box(2, 0, 1);
    spec.k = 1;
    spec.per_band = 20;
    const auto dx = form("dx");
    const NormReport r = norm_estimate(*dx, 1.0, kInf, spec);
    CHECK(r.samples == 4u * 20u);
    CHECK(r.norm_alpha > 0.5);
    CHECK(r.norm_alpha <= 1.0 + 1e-12);
    CHECK(r.norm_diam <= 1.0 + 1e-12);
    CHECK(r.norm_boundary < 1e-12);
    CHECK(r.max_ratio <= 10.0);

    SamplerSpec twice = spec;
    twice.per_band = 40;
    const NormReport r2 = norm_estimate(*dx, 1.0, kInf, twice);
    for (std::size_t b = 0; b < r.bands.size(); ++b) {
        CHECK(r2.bands[b].sup_mass >= r.bands[b].sup_mass);
        CHECK(r2.bands[b].sup_diam >= r.bands[b].sup_diam);
        CHECK(r2.bands[b].sup_boundary >= r.bands[b].sup_boundary);
    }

    const NormReport rot = norm_estimate(*form("rotation"), 1.0, 1.0, spec);
    CHECK(rot.norm_boundary > 0.1);
    const std::string csv = norm_report_csv(rot);
    CHECK(csv.rfind("band,count,sup_mass,sup_diam,sup_boundary\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("flat norm bounds") {
    std::mt19937_64 rng(6);
    const Simplex s = random_simplex(rng, 2, 3);
    CHECK(flat_norm_upper(s, s, 0.5, 1.0) == 0.0);

    const Simplex a = Simplex::from_points({{0, 0}, {1, 0}});
    const Simplex b = Simplex::from_points({{0, 0}, {1, 0.1}});
    CHECK(flat_norm_upper(a, b, 0.5, 1.0, 1.0) == doctest::Approx(std::pow(0.1, 0.5) + 0.1));

    Eigen::MatrixXd pts(2, 3);
    pts << 0, 2, 1, 0, 0, 0.2;
    CHECK(min_enclosing_radius(pts) == doctest::Approx(1.0));
    pts << 0, 2, 1, 0, 0, 3;
    const double r = min_enclosing_radius(pts);
    for (int j = 0; j < 3; ++j) CHECK((pts.col(j) - Eigen::Vector2d(1, 1.5 - 1.0 / 6)).norm() <= r + 1e-12);

    // Dyadic snapping moves vertices by O(2^-n): the μ^α term dominates.
    const double alpha = 0.5, beta = 1.0;
    std::vector<double> ns, logs;
    for (int n = 6; n <= 14; ++n) {
        double total = 0;
        std::mt19937_64 r2(99);
        for (int i = 0; i < 200; ++i) {
            const Simplex t = random_simplex(r2, 1, 2, 0.5, 10.0, 0.0, 1.0);
            total += flat_norm_upper(t, snap_to_grid(t, n), alpha, beta);
        }
        ns.push_back(n);
        logs.push_back(std::log(total / 200));
    }
    CHECK(std::abs(fit_line(ns, logs).first + alpha * std::log(2.0)) < 0.1);
}

TEST_CASE("pullback regularity probe") {
    const SmoothMap graph = expression_map(2, {expr::parse("x1"), expr::parse("x2"), expr::parse("x1^2 + x2^2")});
    const auto p = pullback_regularity_probe(graph, 2, 1.0, 1.0, Region::box(2, -1, 1), 60, 1);
    CHECK(p.predicted == doctest::Approx(3.0));
    CHECK(std::abs(p.exponent - 3.0) < 0.3);
    const auto q = pullback_regularity_probe(graph, 2, 1.0, 1.0, Region::box(2, -1, 1), 120, 1);
    CHECK(std::abs(q.exponent - p.exponent) < 0.1);

    Eigen::MatrixXd m(3, 2);
    m << 1, 2, 0, 1, 3, -1;
    CHECK_THROWS_AS(pullback_regularity_probe(affine_map(m, Point::Zero(3)), 2, 1.0, 1.0, Region::box(2, -1, 1), 30),
                    DegenerateFit);
}

TEST_CASE("determinism across threads") {
    const auto a = pullback(expression_map(2, {expr::parse("x1 + x2^2"), expr::parse("x2")}), form("wave"));
    const Simplex s = Simplex::from_points({{0.1, 0.3}, {0.8, 0.5}});
    set_threads(1);
    const double one = a->eval(s, 1e-9);
    set_threads(4);
    const double four = a->eval(s, 1e-9);
    set_threads(0);
    CHECK(one == four);
}
