#include "roughforms/gaussian.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "roughforms/errors.hpp"
#include "roughforms/parallel.hpp"
#include "roughforms/quadrature.hpp"
#include "roughforms/rng.hpp"
#include "roughforms/sewing.hpp"

namespace roughforms {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2 * std::numbers::pi;

/// Half of the truncated lattice |p_j| < N/2: the zero mode first, then every p whose first
/// nonzero coordinate is positive.
struct ModeLattice {
    int d = 0;
    int N = 0;
    int M = 0;  // N/2; coordinates range over [-(M-1), M-1]
    std::vector<std::array<int, kMaxDim>> modes;
    std::vector<int> dense;  // dense index -> h+1 if p = modes[h], -(h+1) if -p = modes[h]

    int width() const { return 2 * M - 1; }
    std::size_t dense_index(const int* p) const {
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j) idx = idx * width() + static_cast<std::size_t>(p[j] + M - 1);
        return idx;
    }
};

namespace {

std::shared_ptr<const ModeLattice> lattice_for(int d, int N) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const ModeLattice>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{d, N}];
    if (slot) return slot;
    auto lat = std::make_shared<ModeLattice>();
    lat->d = d;
    lat->N = N;
    lat->M = N / 2;
    const int w = lat->width();
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(w);
    lat->dense.assign(total, 0);
    lat->modes.push_back({});
    lat->dense[lat->dense_index(lat->modes[0].data())] = 1;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::array<int, kMaxDim> p{};
        std::size_t rest = idx;
        for (int j = d - 1; j >= 0; --j) {
            p[j] = static_cast<int>(rest % w) - (lat->M - 1);
            rest /= w;
        }
        int first = 0;
        for (int j = 0; j < d && first == 0; ++j) first = p[j];
        if (first <= 0) continue;
        lat->modes.push_back(p);
        const int h = static_cast<int>(lat->modes.size());
        lat->dense[idx] = h;
        std::array<int, kMaxDim> q{};
        for (int j = 0; j < d; ++j) q[j] = -p[j];
        lat->dense[lat->dense_index(q.data())] = -h;
    }
    slot = lat;
    return slot;
}

double weight(const std::array<int, kMaxDim>& p, int d, double theta, double L) {
    double n2 = 0;
    for (int j = 0; j < d; ++j) n2 += static_cast<double>(p[j]) * p[j];
    return std::pow(1.0 + kTwoPi * std::sqrt(n2) / L, -theta);
}

// e^{2πi p x_j / L} for p in [-(M-1), M-1], offset by M-1.
std::vector<cplx> phase_table(double x, int M, double L) {
    std::vector<cplx> t(2 * M - 1);
    t[M - 1] = 1.0;
    for (int p = 1; p < M; ++p) {
        const double a = kTwoPi * p * x / L;
        t[M - 1 + p] = cplx(std::cos(a), std::sin(a));
        t[M - 1 - p] = std::conj(t[M - 1 + p]);
    }
    return t;
}

const std::array<double, 32>& inverse_factorials() {
    static const std::array<double, 32> f = [] {
        std::array<double, 32> a{};
        a[0] = 1;
        for (int i = 1; i < 32; ++i) a[i] = a[i - 1] / i;
        return a;
    }();
    return f;
}

// Divided difference exp[iθ_0, ..., iθ_{n-1}] given e_j = e^{iθ_j}. Splits on the widest pair
// while the nodes spread by at least 1, otherwise sums the Taylor series around the first node.
cplx dd_exp(const double* th, const cplx* e, int n) {
    if (n == 1) return e[0];
    int a = 0, b = 0;
    for (int j = 1; j < n; ++j) {
        if (th[j] < th[a]) a = j;
        if (th[j] > th[b]) b = j;
    }
    const double spread = th[b] - th[a];
    if (spread >= 1.0) {
        if (n == 2) return (e[1] - e[0]) / cplx(0, th[1] - th[0]);
        double tha[kMaxDim + 1], thb[kMaxDim + 1];
        cplx ea[kMaxDim + 1], eb[kMaxDim + 1];
        int na = 0, nb = 0;
        for (int j = 0; j < n; ++j) {
            if (j != a) tha[na] = th[j], ea[na++] = e[j];
            if (j != b) thb[nb] = th[j], eb[nb++] = e[j];
        }
        return (dd_exp(tha, ea, na) - dd_exp(thb, eb, nb)) / cplx(0, th[b] - th[a]);
    }
    const auto& inv = inverse_factorials();
    constexpr int terms = 22;
    cplx h[terms + 1];
    h[0] = 1;
    for (int t = 1; t <= terms; ++t) h[t] = 0;
    for (int j = 1; j < n; ++j) {
        const cplx y(0, th[j] - th[0]);
        for (int t = 1; t <= terms; ++t) h[t] += y * h[t - 1];
    }
    const int k = n - 1;
    cplx s = 0;
    for (int t = terms; t >= 0; --t) s += h[t] * inv[t + k];
    return e[0] * s;
}

// Calls visit(h, dd) for every half mode, dd = exp[z_0..z_k] with z_j = 2πi p·v_j / L.
template <class Visit>
void for_each_divided_difference(const ModeLattice& lat, double L, const Simplex& s, Visit visit) {
    const int d = lat.d, n = s.k() + 1, M = lat.M;
    std::vector<std::vector<cplx>> tables(static_cast<std::size_t>(n * d));
    for (int v = 0; v < n; ++v)
        for (int j = 0; j < d; ++j) tables[v * d + j] = phase_table(s.vertices()(j, v), M, L);
    double th[kMaxDim + 1];
    cplx e[kMaxDim + 1];
    visit(std::size_t(0), cplx(inverse_factorials()[n - 1]));
    for (std::size_t h = 1; h < lat.modes.size(); ++h) {
        const auto& p = lat.modes[h];
        for (int v = 0; v < n; ++v) {
            double t = 0;
            cplx ev = tables[v * d][p[0] + M - 1];
            t += p[0] * s.vertices()(0, v);
            for (int j = 1; j < d; ++j) {
                ev *= tables[v * d + j][p[j] + M - 1];
                t += p[j] * s.vertices()(j, v);
            }
            th[v] = kTwoPi * t / L;
            e[v] = ev;
        }
        visit(h, dd_exp(th, e, n));
    }
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

void validate(const SpectralFieldSpec& spec) {
    if (spec.d < 1 || spec.d > kMaxDim) throw UnsupportedDimension("field dimension must be in 1.." + std::to_string(kMaxDim));
    if (spec.N < 2 || (spec.N & (spec.N - 1)) != 0) throw InvalidArgument("N must be a power of two >= 2");
    if (!(spec.L > 0)) throw InvalidArgument("period L must be positive");
    if (!(spec.theta >= 0)) throw InvalidArgument("theta must be nonnegative");
    double total = std::pow(spec.N - 1.0, spec.d);
    if (total > 1e8) throw InvalidArgument("spectral lattice too large");
}

double spectral_weight(const SpectralFieldSpec& spec, const std::vector<int>& p) {
    if (static_cast<int>(p.size()) != spec.d) throw InvalidArgument("mode has the wrong dimension");
    std::array<int, kMaxDim> q{};
    std::copy(p.begin(), p.end(), q.begin());
    return weight(q, spec.d, spec.theta, spec.L);
}

double point_variance(const SpectralFieldSpec& spec) {
    validate(spec);
    const auto lat = lattice_for(spec.d, spec.N);
    double s = 0;
    for (std::size_t h = 1; h < lat->modes.size(); ++h) s += 2 * std::pow(weight(lat->modes[h], spec.d, spec.theta, spec.L), 2);
    return (1 + s) / std::pow(spec.L, spec.d);
}

FieldSample::FieldSample(SpectralFieldSpec spec, std::shared_ptr<const ModeLattice> lattice, std::vector<cplx> half)
    : spec_(spec), lattice_(std::move(lattice)), half_(std::move(half)) {
    if (half_.size() != lattice_->modes.size()) throw InvalidArgument("coefficient count does not match the lattice");
    half_[0] = half_[0].real();
}

FieldSample FieldSample::from_coefficients(const SpectralFieldSpec& spec,
                                           const std::vector<std::pair<std::vector<int>, cplx>>& modes) {
    validate(spec);
    auto lat = lattice_for(spec.d, spec.N);
    std::vector<cplx> half(lat->modes.size(), 0.0);
    for (const auto& [p, c] : modes) {
        if (static_cast<int>(p.size()) != spec.d) throw InvalidArgument("mode has the wrong dimension");
        for (int x : p)
            if (std::abs(x) >= lat->M) throw InvalidArgument("mode outside |p_j| < N/2");
        const int h = lat->dense[lat->dense_index(p.data())];
        if (h == 1 && c.imag() != 0) throw InvalidArgument("the zero mode must be real");
        half[std::abs(h) - 1] += h > 0 ? c : std::conj(c);
    }
    return FieldSample(spec, std::move(lat), std::move(half));
}

cplx FieldSample::coefficient(const std::vector<int>& p) const {
    if (static_cast<int>(p.size()) != spec_.d) throw InvalidArgument("mode has the wrong dimension");
    for (int x : p)
        if (std::abs(x) >= lattice_->M) return 0.0;
    const int h = lattice_->dense[lattice_->dense_index(p.data())];
    return h > 0 ? half_[h - 1] : std::conj(half_[-h - 1]);
}

double FieldSample::operator()(const Point& x) const {
    if (x.size() != spec_.d) throw InvalidArgument("point has the wrong dimension");
    const int d = spec_.d, M = lattice_->M;
    std::vector<std::vector<cplx>> tables;
    for (int j = 0; j < d; ++j) tables.push_back(phase_table(std::fmod(x(j), spec_.L), M, spec_.L));
    double s = 0;
    for (std::size_t h = 1; h < half_.size(); ++h) {
        const auto& p = lattice_->modes[h];
        cplx e = tables[0][p[0] + M - 1];
        for (int j = 1; j < d; ++j) e *= tables[j][p[j] + M - 1];
        s += (half_[h] * e).real();
    }
    return (half_[0].real() + 2 * s) / std::pow(spec_.L, d / 2.0);
}

double FieldSample::integrate(const Simplex& s) const {
    if (s.d() != spec_.d) throw InvalidArgument("simplex has the wrong dimension");
    const double vol = volume(s);
    if (vol == 0) return 0;
    double acc0 = 0, acc = 0;
    for_each_divided_difference(*lattice_, spec_.L, s, [&](std::size_t h, cplx dd) {
        if (h == 0) acc0 = half_[0].real() * dd.real();
        else acc += (half_[h] * dd).real();
    });
    return factorial(s.k()) * vol * (acc0 + 2 * acc) / std::pow(spec_.L, spec_.d / 2.0);
}

void FieldSample::synthesize_grid() {
    static std::mutex planner;
    const int d = spec_.d, N = spec_.N;
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(N);
    fftw_complex* buf = fftw_alloc_complex(total);
    std::fill(reinterpret_cast<double*>(buf), reinterpret_cast<double*>(buf) + 2 * total, 0.0);
    auto put = [&](const int* p, cplx c) {
        std::size_t idx = 0;
        for (int j = 0; j < d; ++j) idx = idx * N + static_cast<std::size_t>((p[j] + N) % N);
        buf[idx][0] = c.real();
        buf[idx][1] = c.imag();
    };
    for (std::size_t h = 0; h < half_.size(); ++h) {
        const auto& p = lattice_->modes[h];
        put(p.data(), half_[h]);
        if (h == 0) continue;
        std::array<int, kMaxDim> q{};
        for (int j = 0; j < d; ++j) q[j] = -p[j];
        put(q.data(), std::conj(half_[h]));
    }
    std::vector<int> dims(d, N);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner);
        plan = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    const double norm = std::pow(spec_.L, -d / 2.0);
    grid_.resize(total);
    for (std::size_t i = 0; i < total; ++i) grid_[i] = buf[i][0] * norm;
    {
        std::lock_guard<std::mutex> lock(planner);
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
}

FieldSample sample_field(const SpectralFieldSpec& spec, bool synthesize_grid) {
    validate(spec);
    auto lat = lattice_for(spec.d, spec.N);
    auto rng = make_rng(spec.seed);
    std::normal_distribution<double> normal;
    std::vector<cplx> half(lat->modes.size());
    half[0] = weight(lat->modes[0], spec.d, spec.theta, spec.L) * normal(rng);
    for (std::size_t h = 1; h < half.size(); ++h) {
        const double x = normal(rng), y = normal(rng);
        half[h] = weight(lat->modes[h], spec.d, spec.theta, spec.L) * cplx(x, y) / std::numbers::sqrt2;
    }
    FieldSample g(spec, std::move(lat), std::move(half));
    if (synthesize_grid) g.synthesize_grid();
    return g;
}

double pair_field(const FieldSample& g, const std::function<double(const Point&)>& f) {
    if (g.grid().empty()) throw InvalidArgument("field grid has not been synthesized");
    const int d = g.spec().d, N = g.spec().N;
    const double h = g.spec().L / N;
    double s = 0;
    Point x(d);
    for (std::size_t i = 0; i < g.grid().size(); ++i) {
        std::size_t rest = i;
        for (int j = d - 1; j >= 0; --j) {
            x(j) = h * static_cast<double>(rest % N);
            rest /= N;
        }
        s += g.grid()[i] * f(x);
    }
    return s * std::pow(h, d);
}

void write_field_raw(const FieldSample& g, const std::string& path) {
    if (g.grid().empty()) throw InvalidArgument("field grid has not been synthesized");
    std::ofstream bin(path + ".bin", std::ios::binary);
    if (!bin) throw InvalidArgument("cannot open " + path + ".bin");
    for (double v : g.grid()) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        bin.write(bytes, 8);
    }
    const auto& s = g.spec();
    nlohmann::json header = {{"dtype", "float64"},
                             {"endianness", "little"},
                             {"order", "row-major, last axis fastest"},
                             {"shape", std::vector<int>(s.d, s.N)},
                             {"d", s.d},
                             {"N", s.N},
                             {"L", s.L},
                             {"theta", s.theta},
                             {"seed", s.seed},
                             {"symbol", "(1 + 2*pi*|p|/L)^(-theta)"}};
    std::ofstream js(path + ".json");
    if (!js) throw InvalidArgument("cannot open " + path + ".json");
    js << header.dump(2) << '\n';
}

namespace {

// G(a) = ∫_{R^m} (1 + 2π√(a² + |s|²))^{-2θ} ds, the symbol integrated over the directions normal
// to the cube. Tabulated in u = log(1 + 2πa) as a cubic spline of log G.
class NormalIntegral {
public:
    NormalIntegral(int m, double theta, double a_max) : m_(m), theta_(theta) {
        if (m_ == 0) return;
        const double sphere = m == 1 ? 2.0 : m == 2 ? kTwoPi : 4 * std::numbers::pi;
        u_max_ = std::log1p(kTwoPi * a_max) + 0.1;
        const int n = 2000;
        const double h = u_max_ / (n - 1);
        std::vector<double> logs(n);
        for (int i = 0; i < n; ++i) logs[i] = std::log(sphere * radial(std::expm1(i * h) / kTwoPi));
        spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(logs.begin(), logs.end(),
                                                                                              0.0, h);
    }
    double operator()(double a) const {
        if (m_ == 0) return std::pow(1.0 + kTwoPi * a, -2 * theta_);
        return std::exp((*spline_)(std::min(std::log1p(kTwoPi * a), u_max_)));
    }

private:
    // ∫_0^∞ φ(√(a² + s²)) s^{m-1} ds with φ(ρ) = (1 + 2πρ)^{-2θ}: adaptive Gauss-Kronrod in
    // u = log(1 + s/c) up to s = S, then the closed form of ∫_S^∞ φ(s) s^{m-1} ds.
    double radial(double a) const {
        const double c = a + 1 / kTwoPi, S = 1e8 * c;
        auto f = [&](double u) {
            const double s = c * std::expm1(u);
            return std::pow(1.0 + kTwoPi * std::hypot(a, s), -2 * theta_) * std::pow(s, m_ - 1) * c * std::exp(u);
        };
        const double head =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, std::log1p(S / c), 20, 1e-13);
        // (2π)^{-m} ∫_U^∞ v^{-2θ} (v - 1)^{m-1} dv with U = 1 + 2πS, expanded binomially.
        const double U = 1 + kTwoPi * S;
        double tail = 0;
        for (int j = 0; j < m_; ++j) {
            const double binom = j == 0 || j == m_ - 1 ? 1.0 : m_ - 1.0;
            const double sign = (m_ - 1 - j) % 2 == 0 ? 1.0 : -1.0;
            tail += sign * binom * std::pow(U, j + 1 - 2 * theta_) / (2 * theta_ - j - 1);
        }
        return head + tail / std::pow(kTwoPi, m_);
    }

    int m_;
    double theta_;
    double u_max_ = 0;
    std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

// Gauss panels on [0, T]: geometric near 0 down to the symbol's scale, unit panels beyond.
struct AxisNodes {
    std::vector<double> t, w;  // w includes sinc²(πt)
    std::vector<std::size_t> panel_end;
};

double sinc2(double t) {
    if (t == 0) return 1.0;
    const double s = std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    return s * s;
}

AxisNodes axis_nodes(double side, double theta, double T) {
    std::vector<double> bp{0.0};
    for (double b = side / (8 * kTwoPi * std::max(1.0, theta)); b < 1.0; b *= 2) bp.push_back(b);
    for (double b = 1; b <= T; b += 1) bp.push_back(b);
    const GaussRule& g = gauss_legendre(8);
    AxisNodes a;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double lo = bp[i], len = bp[i + 1] - bp[i];
        for (std::size_t q = 0; q < g.x.size(); ++q) {
            const double t = lo + len * g.x[q];
            a.t.push_back(t);
            a.w.push_back(len * g.w[q] * sinc2(t));
        }
        a.panel_end.push_back(a.t.size());
    }
    return a;
}

}  // namespace

SobolevNorm delta_Q_sobolev(const Cube& q, double theta, double max_cutoff) {
    const int k = q.k(), d = q.d(), m = d - k;
    if (k < 1 || k > 2) throw UnsupportedDimension("delta_Q_sobolev supports cubes of dimension 1 and 2");
    if (!(theta > m / 2.0)) throw InvalidArgument("theta must exceed (d - k)/2");
    const double r = q.side;
    const double t_max = max_cutoff > 0 ? max_cutoff : k == 1 ? 65536.0 : 512.0;
    const NormalIntegral G(m, theta, std::sqrt(k) * t_max / r);
    // ‖δ_Q‖² = (2r)^k ∫_{[0,∞)^k} G(|t|/r) Π sinc²(π t_j) dt after rotating Q onto the axes.
    double T = std::min(t_max, k == 1 ? 64.0 : 32.0);
    double sum = 0;
    std::size_t done = 0;
    SobolevNorm out;
    for (;;) {
        const AxisNodes ax = axis_nodes(r, theta, T);
        const std::size_t n = ax.t.size();
        if (k == 1) {
            for (std::size_t i = done; i < n; ++i) sum += ax.w[i] * G(ax.t[i] / r);
        } else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = (i < done ? done : 0); j < n; ++j)
                    sum += ax.w[i] * ax.w[j] * G(std::hypot(ax.t[i], ax.t[j]) / r);
        }
        done = n;
        const double scale = std::pow(2 * r, k);
        out.squared = scale * sum;
        // Outside [0, T]^k some t_j > T, where sinc² <= (πt_j)^{-2} and G <= G(T/r).
        out.squared_tail = std::pow(r, k) * 2 * k * G(T / r) / (std::numbers::pi * std::numbers::pi * T);
        out.cutoff = T;
        if (out.squared_tail <= 1e-4 * out.squared || T >= t_max) break;
        T *= 2;
    }
    out.value = std::sqrt(out.squared);
    out.tail = std::sqrt(out.squared + out.squared_tail) - out.value;
    if (out.squared_tail > 0.05 * out.squared)
        throw TruncationTail("truncation tail " + std::to_string(out.squared_tail) + " exceeds 5% of " +
                             std::to_string(out.squared));
    return out;
}

namespace {

class GaussianCochain : public Cochain {
public:
    GaussianCochain(std::vector<FieldSample> comps, int k, double alpha, double beta)
        : Cochain(k, comps.front().spec().d, alpha, beta, Provenance::gaussian, "gaussian"),
          comps_(std::move(comps)), sets_(index_sets(d(), k)) {}

    double eval(const Simplex& in, double) const override {
        check(in);
        // Lexicographic vertex order, so reversing orientation negates the value exactly.
        std::vector<int> order(in.k() + 1);
        for (int i = 0; i <= in.k(); ++i) order[i] = i;
        const auto& v = in.vertices();
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            for (int j = 0; j < in.d(); ++j)
                if (v(j, a) != v(j, b)) return v(j, a) < v(j, b);
            return a < b;
        });
        VertexMatrix sorted(in.d(), in.k() + 1);
        for (int i = 0; i <= in.k(); ++i) sorted.col(i) = v.col(order[i]);
        const Simplex s(sorted);
        const double sign = permutation_sign(order);
        std::vector<double> proj(sets_.size());
        bool any = false;
        for (std::size_t i = 0; i < sets_.size(); ++i) {
            proj[i] = coordinate_projection(s, sets_[i]);
            any = any || proj[i] != 0;
        }
        if (!any) return 0;
        std::vector<double> acc(sets_.size(), 0.0);
        const auto& spec = comps_.front().spec();
        for_each_divided_difference(comps_.front().lattice(), spec.L, s, [&](std::size_t h, cplx dd) {
            const double f = h == 0 ? 1.0 : 2.0;
            for (std::size_t i = 0; i < sets_.size(); ++i) acc[i] += f * (comps_[i].half_coefficients()[h] * dd).real();
        });
        double total = 0;
        for (std::size_t i = 0; i < sets_.size(); ++i) total += proj[i] * acc[i];
        return sign * factorial(k()) * total / std::pow(spec.L, d() / 2.0);
    }

private:
    std::vector<FieldSample> comps_;
    std::vector<std::vector<int>> sets_;
};

}  // namespace

CochainPtr gaussian_form(std::vector<FieldSample> components, int k, double alpha, double beta) {
    if (components.empty()) throw InvalidArgument("gaussian_form needs at least one component");
    const auto& s0 = components.front().spec();
    if (k < 0 || k > s0.d) throw InvalidArgument("form degree out of range");
    if (components.size() != index_sets(s0.d, k).size())
        throw InvalidArgument("gaussian_form needs one component per index set");
    for (const auto& c : components)
        if (c.spec().d != s0.d || c.spec().N != s0.N || c.spec().L != s0.L)
            throw InvalidArgument("components must share d, N and L");
    return std::make_shared<GaussianCochain>(std::move(components), k, alpha, beta);
}

std::pair<double, double> gaussian_exponents(int d, double theta) {
    return {std::min(theta - d / 2.0 + 1, 1.0), std::min(theta - d / 2.0, 1.0)};
}

std::vector<FieldSample> sample_components(const GaussianFormSpec& spec, std::uint64_t sample) {
    const auto sets = index_sets(spec.d, spec.k);
    std::vector<FieldSample> out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        SpectralFieldSpec f{spec.d, spec.theta, spec.N, spec.L, sub_seed(sub_seed(spec.seed, sample), i)};
        out.push_back(sample_field(f, false));
    }
    return out;
}

CochainPtr gaussian_form(const GaussianFormSpec& spec, std::uint64_t sample, double alpha_scale) {
    if (spec.k < 1 || spec.k >= spec.d) throw InvalidArgument("Gaussian forms need 1 <= k < d");
    const auto [a, b] = gaussian_exponents(spec.d, spec.theta);
    return gaussian_form(sample_components(spec, sample), spec.k, alpha_scale * a, std::max(b, 0.0));
}

namespace {

EdgeMatrix random_frame(std::mt19937_64& rng, int d, int cols) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR();
    for (int j = 0; j < d; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1;
    return Q.leftCols(cols);
}

MomentFit summarize(const std::string& part, const std::vector<std::vector<double>>& x,
                    const std::vector<double>& scales, std::optional<double> predicted, const KolmogorovOptions& opts) {
    const std::size_t n = x.size(), ns = scales.size();
    MomentFit fit;
    fit.part = part;
    fit.q = opts.q;
    fit.scales = scales;
    fit.fixed_field = opts.fixed_field;
    std::vector<double> lx(ns);
    for (std::size_t j = 0; j < ns; ++j) {
        double m = 0, m2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            m += x[i][j];
            m2 += x[i][j] * x[i][j];
        }
        m /= n;
        const double var = n > 1 ? std::max(0.0, (m2 - n * m * m) / (n - 1)) : 0.0;
        if (!(m > 0)) throw DegenerateFit(part + " moment vanishes at scale " + std::to_string(scales[j]));
        fit.moments.push_back(m);
        fit.moment_ci.push_back(1.96 * std::sqrt(var / n));
        fit.counts.push_back(n);
        lx[j] = std::log(scales[j]);
    }
    std::vector<double> ly(ns);
    for (std::size_t j = 0; j < ns; ++j) ly[j] = std::log(fit.moments[j]);
    fit.slope = fit_line(lx, ly).first;

    auto rng = make_rng(opts.seed ^ 0x6b6f6c6du, part == "cube" ? 1 : 2);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> slopes;
    for (int b = 0; b < opts.bootstrap; ++b) {
        std::vector<double> m(ns, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = x[pick(rng)];
            for (std::size_t j = 0; j < ns; ++j) m[j] += row[j];
        }
        bool ok = true;
        for (std::size_t j = 0; j < ns; ++j) {
            ok = ok && m[j] > 0;
            ly[j] = std::log(m[j] / n);
        }
        if (ok) slopes.push_back(fit_line(lx, ly).first);
    }
    double mean = 0, var = 0;
    for (double s : slopes) mean += s;
    mean /= std::max<std::size_t>(1, slopes.size());
    for (double s : slopes) var += (s - mean) * (s - mean);
    fit.ci = slopes.size() > 1 ? 1.96 * std::sqrt(var / (slopes.size() - 1)) : INFINITY;
    fit.predicted = predicted;
    if (predicted) fit.pass = std::abs(fit.slope - *predicted) <= opts.slope_tol;
    return fit;
}

}  // namespace

std::pair<MomentFit, MomentFit> kolmogorov_fit(const FormSampler& sampler, int d, int k,
                                               std::optional<std::array<double, 2>> predicted,
                                               const KolmogorovOptions& opts) {
    if (k < 1 || k >= d) throw InvalidArgument("kolmogorov_fit needs 1 <= k < d");
    if (opts.q < 2 || opts.q % 2 != 0) throw InvalidArgument("q must be even and at least 2");
    if (opts.scales.size() < 2) throw InvalidArgument("kolmogorov_fit needs at least two scales");
    for (double s : opts.scales)
        if (!(s > 0)) throw InvalidArgument("scales must be positive");
    if (opts.n_samples < 2) throw InsufficientSamples("kolmogorov_fit needs at least two samples");
    const std::size_t n = opts.n_samples, ns = opts.scales.size();
    std::vector<std::vector<double>> cube(n, std::vector<double>(ns)), bnd(n, std::vector<double>(ns));
    CochainPtr fixed = opts.fixed_field ? sampler(0) : nullptr;
    parallel_for(n, [&](std::size_t i) {
        const CochainPtr a = fixed ? fixed : sampler(i);
        auto rng = make_rng(opts.seed ^ 0x71756265u, i);
        std::uniform_real_distribution<double> unit(0.0, opts.region);
        for (std::size_t j = 0; j < ns; ++j) {
            Point base(d);
            for (int c = 0; c < d; ++c) base(c) = unit(rng);
            const EdgeMatrix frame = random_frame(rng, d, k + 1);
            const Cube q(base, frame.leftCols(k), opts.scales[j] / std::sqrt(k));
            cube[i][j] = std::pow(std::abs(a->eval_chain(cube_to_chain(q))), opts.q);
            const Cube qq(base, frame, opts.scales[j] / std::sqrt(k + 1.0));
            bnd[i][j] = std::pow(std::abs(a->eval_chain(boundary(cube_to_chain(qq)))), opts.q);
        }
    });
    std::pair<MomentFit, MomentFit> out{
        summarize("cube", cube, opts.scales, predicted ? std::optional<double>((*predicted)[0]) : std::nullopt, opts),
        summarize("boundary", bnd, opts.scales, predicted ? std::optional<double>((*predicted)[1]) : std::nullopt, opts)};
    for (const MomentFit* f : {&out.first, &out.second})
        if (f->ci > opts.max_ci)
            throw InsufficientSamples(f->part + " slope CI half-width " + std::to_string(f->ci) + " exceeds " +
                                      std::to_string(opts.max_ci));
    return out;
}

std::pair<MomentFit, MomentFit> kolmogorov_fit(const GaussianFormSpec& spec, const KolmogorovOptions& opts) {
    validate(SpectralFieldSpec{spec.d, spec.theta, spec.N, spec.L, spec.seed});
    const auto [a, b] = gaussian_exponents(spec.d, spec.theta);
    std::optional<std::array<double, 2>> predicted;
    if (b > 0) predicted = std::array<double, 2>{opts.q * (spec.k - 1 + a), opts.q * (spec.k + b)};
    return kolmogorov_fit([&spec](std::uint64_t s) { return gaussian_form(spec, s); }, spec.d, spec.k, predicted,
                          opts);
}

std::string moment_fit_csv(const MomentFit& fit) {
    std::ostringstream os;
    os.precision(17);
    os << "scale,moment,n,ci\n";
    for (std::size_t j = 0; j < fit.scales.size(); ++j)
        os << fit.scales[j] << ',' << fit.moments[j] << ',' << fit.counts[j] << ',' << fit.moment_ci[j] << '\n';
    return os.str();
}

std::string moment_fit_json(const MomentFit& fit) {
    nlohmann::json j = {{"part", fit.part},  {"q", fit.q},   {"slope", fit.slope},
                        {"ci", fit.ci},      {"fixed_field", fit.fixed_field}};
    j["predicted"] = fit.predicted ? nlohmann::json(*fit.predicted) : nlohmann::json(nullptr);
    j["pass"] = fit.pass ? nlohmann::json(*fit.pass) : nlohmann::json(nullptr);
    return j.dump();
}

}  // namespace roughforms
