#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "json.hpp"
#include "roughforms/embedding.hpp"
#include "roughforms/errors.hpp"
#include "roughforms/gaussian.hpp"
#include "roughforms/parallel.hpp"
#include "roughforms/quadrature.hpp"
#include "roughforms/subdivision.hpp"
#include "test_util.hpp"

using namespace roughforms;

namespace {

constexpr double kPi = std::numbers::pi;

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) p(i++) = x;
    return p;
}

double symbol2(double norm, double theta, double L = 1.0) { return std::pow(1 + 2 * kPi * norm / L, -2 * theta); }

// Σ over |p_j| <= cutoff in d = 2 of f(p).
template <class F>
double lattice_sum_2d(int cutoff, F f) {
    double s = 0;
    for (int a = -cutoff; a <= cutoff; ++a)
        for (int b = -cutoff; b <= cutoff; ++b) s += f(a, b);
    return s;
}

// |ψ̂(ξ)| for the radial bump r^{-2}(1 - ρ²/r²)^m in d = 2, by Hankel transform.
double bump_ft_2d(double xi, double r, int m) {
    const GaussRule& g = gauss_legendre(48);
    double s = 0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double rho = r * g.x[i];
        s += r * g.w[i] * std::pow(1 - rho * rho / (r * r), m) * 2 * kPi * rho * std::cyl_bessel_j(0.0, 2 * kPi * xi * rho);
    }
    return s / (r * r);
}

double segment_quadrature(const FieldSample& g, const Point& a, const Point& b) {
    const GaussRule& q = gauss_legendre(24);
    const int panels = 16;
    double s = 0;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < q.x.size(); ++i) {
            const double t = (p + q.x[i]) / panels;
            s += q.w[i] / panels * g(a + t * (b - a));
        }
    return s * (b - a).norm();
}

}  // namespace

TEST_CASE("field sampling is deterministic and real") {
    const SpectralFieldSpec spec{2, 1.2, 16, 1.0, 7};
    const FieldSample a = sample_field(spec), b = sample_field(spec);
    CHECK(a.grid() == b.grid());
    CHECK(a.half_coefficients() == b.half_coefficients());
    SpectralFieldSpec other = spec;
    other.seed = 8;
    CHECK(sample_field(other).grid() != a.grid());

    CHECK(a.coefficient({3, -2}) == std::conj(a.coefficient({-3, 2})));
    CHECK(a.coefficient({0, 0}).imag() == 0);
    CHECK(a.coefficient({8, 0}) == std::complex<double>(0));
    for (int i : {0, 5, 11})
        for (int j : {0, 3, 15}) CHECK(a(pt({i / 16.0, j / 16.0})) == doctest::Approx(a.grid()[i * 16 + j]).epsilon(1e-11));
}

TEST_CASE("pointwise variance") {
    const SpectralFieldSpec base{2, 1.0, 32, 1.0, 0};
    const double oracle = lattice_sum_2d(15, [&](int a, int b) { return symbol2(std::hypot(a, b), 1.0); });
    CHECK(point_variance(base) == doctest::Approx(oracle).epsilon(1e-12));
    double m2 = 0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        SpectralFieldSpec s = base;
        s.seed = seed;
        for (double v : sample_field(s).grid()) m2 += v * v, ++count;
    }
    CHECK(std::abs(m2 / count / oracle - 1) < 0.05);

    SpectralFieldSpec wide = base;
    wide.L = 2.0;
    const double oracle_wide = lattice_sum_2d(15, [&](int a, int b) { return symbol2(std::hypot(a, b), 1.0, 2.0); }) / 4;
    CHECK(point_variance(wide) == doctest::Approx(oracle_wide).epsilon(1e-12));
}

TEST_CASE("pairings against a bump match the spectral sum") {
    const double r = 0.2;
    const int m = 4;
    for (double theta : {1.0, 0.0}) {
        const SpectralFieldSpec base{2, theta, 32, 1.0, 0};
        const double oracle = lattice_sum_2d(15, [&](int a, int b) {
            return symbol2(std::hypot(a, b), theta) * std::pow(bump_ft_2d(std::hypot(a, b), r, m), 2);
        });
        if (theta == 0) {
            // White noise: Σ|ψ̂|² over the lattice is close to ∫ψ² = π/(r²(2m+1)).
            CHECK(std::abs(oracle / (kPi / (r * r * (2 * m + 1))) - 1) < 0.1);
        }
        const std::vector<Point> centers{pt({0.5, 0.5}), pt({0.25, 0.25}), pt({0.75, 0.25}), pt({0.25, 0.75})};
        double m2 = 0;
        std::size_t count = 0;
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            SpectralFieldSpec s = base;
            s.seed = 1000 + seed;
            const FieldSample g = sample_field(s);
            for (const auto& c : centers) {
                const TestFunction psi(c, r, m);
                const double v = pair_field(g, [&](const Point& x) { return psi(x); });
                m2 += v * v;
                ++count;
            }
        }
        CHECK(std::abs(m2 / count / oracle - 1) < 0.1);
    }
}

TEST_CASE("hypothesis bound for bumps") {
    const SpectralFieldSpec base{2, 1.5, 32, 1.0, 0};
    const std::vector<std::pair<Point, double>> bumps{
        {pt({0.5, 0.5}), 0.1}, {pt({0.3, 0.6}), 0.15}, {pt({0.5, 0.4}), 0.2}, {pt({0.6, 0.5}), 0.25}, {pt({0.5, 0.5}), 0.3}};
    std::vector<double> m2(bumps.size(), 0.0);
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        SpectralFieldSpec s = base;
        s.seed = 5000 + seed;
        const FieldSample g = sample_field(s);
        for (std::size_t i = 0; i < bumps.size(); ++i) {
            const TestFunction psi(bumps[i].first, bumps[i].second, 4);
            const double v = pair_field(g, [&](const Point& x) { return psi(x); });
            m2[i] += v * v;
        }
    }
    for (std::size_t i = 0; i < bumps.size(); ++i) {
        // ‖ψ‖²_{H^{-θ}} on the torus, summed well past the sampling band.
        const double norm2 = lattice_sum_2d(60, [&](int a, int b) {
            return symbol2(std::hypot(a, b), 1.5) * std::pow(bump_ft_2d(std::hypot(a, b), bumps[i].second, 4), 2);
        });
        CHECK(m2[i] / 500 <= 1.1 * norm2);
    }
}

TEST_CASE("field is periodic") {
    const FieldSample g = sample_field({2, 1.0, 32, 1.0, 3}, false);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Point x = testutil::random_point(rng, 2, 0.0, 1.0);
        CHECK(std::abs(g(x + pt({1.0, 0.0})) - g(x)) < 1e-12);
        CHECK(std::abs(g(x - pt({0.0, 1.0})) - g(x)) < 1e-12);
    }
}

TEST_CASE("simplex integrals are exact") {
    const FieldSample g = sample_field({2, 1.0, 16, 1.0, 11}, false);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        const Point a = testutil::random_point(rng, 2, 0, 1), b = testutil::random_point(rng, 2, 0, 1);
        const double q = segment_quadrature(g, a, b);
        CHECK(std::abs(g.integrate(Simplex::from_points({{a(0), a(1)}, {b(0), b(1)}})) - q) < 1e-11);
    }
    // Tiny segment: the Taylor branch of the divided difference.
    const Point a = pt({0.3, 0.7}), b = pt({0.3 + 1e-7, 0.7 - 2e-7});
    CHECK(g.integrate(Simplex::from_points({{a(0), a(1)}, {b(0), b(1)}})) ==
          doctest::Approx(g(0.5 * (a + b)) * (b - a).norm()).epsilon(1e-9));

    // Triangle: Duffy-mapped Gauss product rule.
    const Simplex t = Simplex::from_points({{0.1, 0.2}, {0.7, 0.35}, {0.3, 0.9}});
    const GaussRule& q = gauss_legendre(64);
    double s = 0;
    for (std::size_t i = 0; i < q.x.size(); ++i)
        for (std::size_t j = 0; j < q.x.size(); ++j) {
            const double u = q.x[i], v = q.x[j] * (1 - u);
            s += q.w[i] * q.w[j] * (1 - u) * g(t.vertex(0) + u * (t.vertex(1) - t.vertex(0)) + v * (t.vertex(2) - t.vertex(0)));
        }
    CHECK(g.integrate(t) == doctest::Approx(2 * volume(t) * s).epsilon(1e-10));
    // Nearly coincident vertices mix the Taylor and splitting branches.
    const Simplex thin = Simplex::from_points({{0.2, 0.2}, {0.2 + 1e-6, 0.2}, {0.2, 0.6}});
    double st = 0;
    for (std::size_t i = 0; i < q.x.size(); ++i)
        st += q.w[i] * g(thin.vertex(0) + q.x[i] * (thin.vertex(2) - thin.vertex(0))) * (1 - q.x[i]);
    CHECK(g.integrate(thin) == doctest::Approx(volume(thin) * 2 * st).epsilon(1e-5));
}

TEST_CASE("gaussian form examples") {
    const SpectralFieldSpec spec{2, 1.0, 16, 1.0, 0};
    const auto c1 = FieldSample::from_coefficients(spec, {{{0, 0}, 2.0}});
    const auto c2 = FieldSample::from_coefficients(spec, {{{0, 0}, -0.5}});
    const auto a = gaussian_form({c1, c2}, 1, 1.0, 1.0);
    const Simplex seg = Simplex::from_points({{0.1, 0.2}, {0.6, -0.3}});
    CHECK(a->eval(seg) == doctest::Approx(2.0 * 0.5 - 0.5 * -0.5).epsilon(1e-14));
    const auto area = gaussian_form({FieldSample::from_coefficients(spec, {{{0, 0}, 3.0}})}, 2, 1.0, 1.0);
    const Simplex tri = Simplex::from_points({{0, 0}, {1, 0}, {0, 1}});
    CHECK(area->eval(tri) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_form({c1}, 1, 1.0, 1.0), InvalidArgument);

    GaussianFormSpec gs;
    gs.N = 32;
    gs.seed = 9;
    const auto g = gaussian_form(gs, 3);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const Simplex s = testutil::random_simplex(rng, 1, 2, 0.3, 50, 0, 1);
        const double v = g->eval(s);
        CHECK(g->eval(s.reversed()) == -v);
        CHECK(std::abs(g->eval_chain(edgewise_children(s)) - v) < 1e-12);
    }
    const auto area2 = gaussian_form(sample_components(GaussianFormSpec{2, 2, 1.5, 32, 1.0, 2}), 2, 1.0, 1.0);
    for (int i = 0; i < 5; ++i) {
        const Simplex t = testutil::random_simplex(rng, 2, 2, 0.3, 50, 0, 1);
        CHECK(std::abs(area2->eval_chain(edgewise_children(t)) - area2->eval(t)) < 1e-12);
        CHECK(area2->eval(t.swapped(0, 1)) == -area2->eval(t));
    }
    const auto a3 = gaussian_form(GaussianFormSpec{3, 2, 1.5, 16, 1.0, 1});
    const Simplex t3 = testutil::random_simplex(rng, 2, 3, 0.4, 50, 0, 1);
    CHECK(a3->eval(t3.swapped(0, 2)) == -a3->eval(t3));
    CHECK(std::abs(a3->eval_chain(edgewise_children(t3)) - a3->eval(t3)) < 1e-12);
    const auto [ab, bb] = gaussian_exponents(2, 1.5);
    CHECK(g->alpha() == ab);
    CHECK(g->beta() == bb);
}

TEST_CASE("gaussian samples are gaussian") {
    GaussianFormSpec gs;
    gs.N = 64;
    const Chain q = cube_to_chain(Cube(pt({0.3, 0.4}), EdgeMatrix::Identity(2, 1), 0.05));
    double m2 = 0, m4 = 0;
    for (std::uint64_t s = 0; s < 500; ++s) {
        const double v = gaussian_form(gs, s)->eval_chain(q);
        m2 += v * v;
        m4 += v * v * v * v;
    }
    CHECK(std::abs(m4 / 500 / std::pow(m2 / 500, 2) - 3) <= 0.3);
}

TEST_CASE("delta_Q Sobolev norm") {
    auto cube = [](int d, int k, double r) {
        EdgeMatrix f = EdgeMatrix::Zero(d, k);
        for (int i = 0; i < k; ++i) f(i, i) = 1;
        return Cube(Point::Zero(d), f, r);
    };
    // Segment on the line: direct quadrature of ∫ (1+2π|ξ|)^{-2θ} |δ̂(ξ)|² dξ.
    {
        const double r = 0.3, theta = 1.2;
        const GaussRule& q = gauss_legendre(16);
        double s = 0;
        for (int p = 0; p < 200000; ++p)
            for (std::size_t i = 0; i < q.x.size(); ++i) {
                const double xi = (p + q.x[i]) / r / 20;
                const double sinc = xi == 0 ? r : std::sin(kPi * xi * r) / (kPi * xi);
                s += 2 * q.w[i] / r / 20 * symbol2(xi, theta) * sinc * sinc;
            }
        CHECK(delta_Q_sobolev(cube(1, 1, r), theta).squared == doctest::Approx(s).epsilon(1e-4));
    }
    // Monotone in θ.
    double prev = INFINITY;
    for (double theta : {0.6, 0.8, 1.0, 1.5, 2.0, 3.0}) {
        const double v = delta_Q_sobolev(cube(2, 1, 0.25), theta).value;
        CHECK(v < prev);
        prev = v;
    }
    // Full-dimensional box and large θ: δ̂ ≈ Vol near the origin where the symbol concentrates.
    {
        const double r = 0.2, theta = 40;
        const double c = 2 * kPi / std::pow(2 * kPi, 2) / ((2 * theta - 1) * (2 * theta - 2));
        CHECK(delta_Q_sobolev(cube(2, 2, r), theta).value / (r * r * std::sqrt(c)) == doctest::Approx(1.0).epsilon(1e-3));
    }
    // Rotation invariance.
    {
        Eigen::Matrix3d m;
        m << 0.3, -1.2, 0.5, 0.8, 0.1, -0.7, 0.2, 0.9, 1.1;
        const Eigen::Matrix3d rot = Eigen::HouseholderQR<Eigen::Matrix3d>(m).householderQ();
        const EdgeMatrix f = rot.leftCols(2);
        CHECK(delta_Q_sobolev(Cube(pt({0.3, -1, 2}), f, 0.1), 1.2).value ==
              doctest::Approx(delta_Q_sobolev(cube(3, 2, 0.1), 1.2).value).epsilon(1e-12));
    }
    // Scaling exponent (k + (2θ - d + k) ∧ k)/2 = 1 for d = 2, k = 1, θ = 1.5.
    {
        std::vector<double> x, y;
        for (int j = 1; j <= 6; ++j) {
            const double r = std::ldexp(1.0, -j);
            x.push_back(std::log(r));
            y.push_back(std::log(delta_Q_sobolev(cube(2, 1, r), 1.5).value));
        }
        CHECK(std::abs(fit_line(x, y).first - 1.0) < 0.1);
    }
    CHECK_THROWS_AS(delta_Q_sobolev(cube(2, 1, 0.1), 0.5), InvalidArgument);
    CHECK_THROWS_AS(delta_Q_sobolev(cube(2, 1, 0.1), 0.55, 2.0), TruncationTail);
    CHECK_THROWS_AS(delta_Q_sobolev(cube(4, 3, 0.1), 2.0), UnsupportedDimension);
}

TEST_CASE("kolmogorov fit of the Gaussian 1-form") {
    GaussianFormSpec gs{2, 1, 1.5, 256, 1.0, 21};
    KolmogorovOptions opts;
    opts.seed = 21;
    const auto [cube, bnd] = kolmogorov_fit(gs, opts);
    CHECK(*cube.predicted == 2.0);
    CHECK(*bnd.predicted == 3.0);
    CHECK(std::abs(cube.slope - 2.0) <= 0.15);
    CHECK(std::abs(bnd.slope - 3.0) <= 0.15);
    CHECK(*cube.pass);
    CHECK(*bnd.pass);
    CHECK(cube.counts.front() == 200);

    const std::string csv = moment_fit_csv(bnd);
    CHECK(csv.rfind("scale,moment,n,ci\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    const auto js = nlohmann::json::parse(moment_fit_json(bnd));
    CHECK(js["predicted"] == 3.0);
    CHECK(js["pass"] == true);
    CHECK(js["slope"] == bnd.slope);
}

TEST_CASE("kolmogorov fit of a smooth form") {
    const auto wave = catalog_form("wave");
    KolmogorovOptions opts;
    opts.n_samples = 40;
    const auto [cube, bnd] = kolmogorov_fit([&](std::uint64_t) { return wave; }, 2, 1, std::array<double, 2>{2.0, 4.0}, opts);
    CHECK(std::abs(cube.slope - 2.0) < 0.15);
    CHECK(std::abs(bnd.slope - 4.0) < 0.15);
}

TEST_CASE("kolmogorov fit sample scaling, refusal and errors") {
    GaussianFormSpec gs{2, 1, 1.5, 64, 1.0, 4};
    KolmogorovOptions opts;
    opts.n_samples = 100;
    opts.seed = 4;
    const auto small = kolmogorov_fit(gs, opts);
    opts.n_samples = 200;
    const auto large = kolmogorov_fit(gs, opts);
    for (double ratio : {large.first.ci / small.first.ci, large.second.ci / small.second.ci})
        CHECK(std::abs(ratio * std::sqrt(2.0) - 1) < 0.3);

    GaussianFormSpec flat{2, 1, 1.0, 64, 1.0, 4};
    opts.n_samples = 50;
    const auto refused = kolmogorov_fit(flat, opts);
    CHECK_FALSE(refused.first.predicted.has_value());
    CHECK_FALSE(refused.second.pass.has_value());
    CHECK(nlohmann::json::parse(moment_fit_json(refused.first))["pass"].is_null());

    opts.fixed_field = true;
    CHECK(kolmogorov_fit(gs, opts).first.fixed_field);
    opts.fixed_field = false;

    opts.n_samples = 3;
    CHECK_THROWS_AS(kolmogorov_fit(gs, opts), InsufficientSamples);
    opts.n_samples = 50;
    opts.q = 3;
    CHECK_THROWS_AS(kolmogorov_fit(gs, opts), InvalidArgument);
}

TEST_CASE("kolmogorov fit is independent of the thread count") {
    GaussianFormSpec gs{2, 1, 1.5, 32, 1.0, 6};
    KolmogorovOptions opts;
    opts.n_samples = 40;
    set_threads(1);
    const auto a = kolmogorov_fit(gs, opts);
    set_threads(3);
    const auto b = kolmogorov_fit(gs, opts);
    set_threads(1);
    CHECK(a.first.moments == b.first.moments);
    CHECK(a.second.slope == b.second.slope);
    CHECK(a.second.ci == b.second.ci);
}

TEST_CASE("raw field export") {
    const FieldSample g = sample_field({2, 1.0, 8, 1.0, 2});
    const auto dir = std::filesystem::temp_directory_path() / "roughforms_field_export";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "field").string();
    write_field_raw(g, path);
    std::ifstream bin(path + ".bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), {});
    REQUIRE(bytes.size() == 64 * 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[8 * 5 + i]) << (8 * i);
    CHECK(std::bit_cast<double>(bits) == g.grid()[5]);
    std::ifstream js(path + ".json");
    const auto header = nlohmann::json::parse(js);
    CHECK(header["dtype"] == "float64");
    CHECK(header["shape"] == nlohmann::json::array({8, 8}));
    std::filesystem::remove_all(dir);
}
