#include "roughforms/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughforms/errors.hpp"
#include "roughforms/parallel.hpp"
#include "roughforms/quadrature.hpp"
#include "roughforms/rng.hpp"
#include "roughforms/subdivision.hpp"

namespace roughforms {

TestFunction::TestFunction(Point center, double radius, int m) : c_(std::move(center)), r_(radius), m_(m) {
    if (!(radius > 0)) throw InvalidArgument("test function radius must be positive");
    if (m < 1) throw InvalidArgument("test function order must be at least 1");
    norm_ = std::pow(radius, -static_cast<double>(c_.size()));
}

double TestFunction::operator()(const Point& x) const {
    const double u = 1.0 - (x - c_).squaredNorm() / (r_ * r_);
    return u > 0 ? norm_ * std::pow(u, m_) : 0.0;
}

double TestFunction::derivative(const Point& x, const std::vector<int>& J) const {
    const int p = static_cast<int>(J.size());
    if (p > m_) throw InvalidArgument("derivative order exceeds the bump order");
    const Point y = x - c_;
    const double u = 1.0 - y.squaredNorm() / (r_ * r_);
    if (u <= 0) return 0.0;
    double v = norm_ * std::pow(u, m_ - p);
    for (int i = 0; i < p; ++i) v *= (m_ - i) * (-2.0 * y(J[i]) / (r_ * r_));
    return v;
}

Chain axis_box(const Point& a, const Point& b, const std::vector<int>& J) {
    for (int j : J)
        if (a(j) == b(j)) return {};
    Point base = b;
    for (int j : J) base(j) = a(j);
    return axis_box_to_chain(base, b, J);
}

namespace {

void check_J(const std::vector<int>& J, int k, int d) {
    if (static_cast<int>(J.size()) != k) throw InvalidArgument("|J| must equal the form degree");
    if (k < 1) throw InvalidArgument("pi_J needs k >= 1");
    for (std::size_t i = 0; i < J.size(); ++i)
        if (J[i] < 0 || J[i] >= d || (i > 0 && J[i] <= J[i - 1]))
            throw InvalidArgument("J must be a strictly increasing set of coordinates");
}

// Tensor nodes over the box c ± r, restricted to the open ball.
struct Grid {
    std::vector<Point> x;
    std::vector<double> w;
};

Grid ball_grid(const Point& c, double r, int nodes, std::size_t budget) {
    const int d = static_cast<int>(c.size());
    const GaussRule& g = gauss_legendre(nodes);
    const double total = std::pow(static_cast<double>(nodes), d);
    if (total > static_cast<double>(budget))
        throw QuadratureBudget(std::to_string(nodes) + "^" + std::to_string(d) + " quadrature points exceed the budget " +
                               std::to_string(budget));
    Grid grid;
    const std::size_t n = static_cast<std::size_t>(total);
    for (std::size_t idx = 0; idx < n; ++idx) {
        Point x(d);
        double w = 1;
        std::size_t rest = idx;
        for (int i = 0; i < d; ++i) {
            const std::size_t q = rest % nodes;
            rest /= nodes;
            x(i) = c(i) + r * (2 * g.x[q] - 1);
            w *= 2 * r * g.w[q];
        }
        if ((x - c).squaredNorm() >= r * r) continue;
        grid.x.push_back(x);
        grid.w.push_back(w);
    }
    return grid;
}

}  // namespace

double pi_J(const Cochain& a, const TestFunction& psi, const std::vector<int>& J, const EmbeddingOptions& opts) {
    const int k = a.k(), d = a.d();
    if (psi.dim() != d) throw InvalidArgument("test function and cochain live in different dimensions");
    check_J(J, k, d);
    const Grid grid = ball_grid(psi.center(), psi.radius(), opts.nodes, opts.budget);
    Point anchor = psi.center();
    for (int j : J) anchor(j) -= psi.radius();
    std::vector<double> terms(grid.x.size(), 0.0);
    parallel_for(grid.x.size(), [&](std::size_t i) {
        const Point& x = grid.x[i];
        const double dpsi = psi.derivative(x, J);
        if (dpsi == 0) return;
        terms[i] = grid.w[i] * dpsi * a.eval_chain(axis_box(anchor, x, J), opts.tol);
    });
    double sum = 0;
    for (double t : terms) sum += t;
    return (k % 2 == 0 ? 1.0 : -1.0) * sum;
}

double pair_function(const std::function<double(const Point&)>& f, const TestFunction& psi, int nodes) {
    const Grid grid = ball_grid(psi.center(), psi.radius(), nodes, std::size_t(1) << 24);
    double sum = 0;
    for (std::size_t i = 0; i < grid.x.size(); ++i) sum += grid.w[i] * f(grid.x[i]) * psi(grid.x[i]);
    return sum;
}

ScalingProbe embedding_scaling_probe(const Cochain& a, const std::vector<int>& J, const std::vector<Point>& centers,
                                     const std::vector<double>& lambdas, int m, const EmbeddingOptions& opts) {
    if (centers.empty()) throw InvalidArgument("scaling probe needs at least one center");
    ScalingProbe p;
    p.predicted = a.alpha() - 1;
    std::vector<double> lx, ly;
    for (double lambda : lambdas) {
        ScalingPoint sp{J, lambda, 0.0};
        for (const auto& c : centers) sp.value = std::max(sp.value, std::abs(pi_J(a, TestFunction(c, lambda, m), J, opts)));
        p.points.push_back(sp);
        if (sp.value > 0) {
            lx.push_back(std::log(lambda));
            ly.push_back(std::log(sp.value));
        }
    }
    if (lx.size() < 2) throw DegenerateFit("scaling probe needs two nonzero pairings");
    p.slope = fit_line(lx, ly).first;
    return p;
}

std::string scaling_probe_json(const ScalingProbe& p) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        const auto& s = p.points[i];
        if (i) os << ',';
        os << "{\"J\":[";
        for (std::size_t j = 0; j < s.J.size(); ++j) os << (j ? "," : "") << s.J[j] + 1;
        os << "],\"lambda\":" << s.lambda << ",\"value\":" << s.value << '}';
    }
    os << ']';
    return os.str();
}

IotaResult iota(const std::function<double(const Point&)>& f, const Simplex& s, int max_level, int nodes) {
    if (s.k() != s.d() || s.d() > 2) throw UnsupportedDimension("iota is implemented for k = d <= 2");
    IotaResult r;
    if (s.degenerate()) return r;
    const WhitneyPartition part(s, max_level);
    const WhitneyDecomposition& dec = part.decomposition();
    const int k = s.k();
    // Composite rule on a grid of side/24 cells: every breakpoint of the cube's bump and of the bumps of
    // neighbours within a factor 4 in size lies on a cell edge, so the weights are smooth on each cell.
    const int cells = 32;
    const GaussRule& g = gauss_legendre(nodes);
    const int per_axis = cells * nodes;
    const std::size_t per_cube = k == 1 ? per_axis : static_cast<std::size_t>(per_axis) * per_axis;
    std::vector<double> values(part.size(), 0.0), sups(part.size(), 0.0);
    parallel_for(part.size(), [&](std::size_t i) {
        const WhitneyCube& q = dec.cubes[i];
        const double h = q.side / 24.0;
        double sum = 0, sup = 0;
        for (std::size_t idx = 0; idx < per_cube; ++idx) {
            Eigen::VectorXd y(k);
            double w = 1;
            std::size_t rest = idx;
            for (int j = 0; j < k; ++j) {
                const int a = static_cast<int>(rest % per_axis);
                rest /= per_axis;
                y(j) = q.local_base(j) - q.side / 6.0 + h * (a / nodes + g.x[a % nodes]);
                w *= h * g.w[a % nodes];
            }
            const Point x = dec.to_ambient(y);
            const double phi = part.weight(i, x);
            if (phi == 0) continue;
            const double fx = f(x);
            sup = std::max(sup, std::abs(fx));
            sum += w * fx * phi;
        }
        values[i] = sum;
        sups[i] = sup;
    });
    double sup = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        r.value += values[i];
        sup = std::max(sup, sups[i]);
    }
    r.value *= dec.sign;
    r.cubes = part.size();
    r.volume = dec.volume;
    r.covered_volume = dec.covered_volume;
    r.tail = std::max(0.0, dec.volume - dec.covered_volume) * sup;
    return r;
}

namespace {

class IotaCochain : public Cochain {
public:
    IotaCochain(std::function<double(const Point&)> f, int d, int max_level, int nodes, double alpha)
        : Cochain(d, d, alpha, 0.0, Provenance::custom, "iota"), f_(std::move(f)), max_level_(max_level),
          nodes_(nodes) {}
    double eval(const Simplex& s, double) const override {
        check(s);
        return iota(f_, s, max_level_, nodes_).value;
    }

private:
    std::function<double(const Point&)> f_;
    int max_level_;
    int nodes_;
};

}  // namespace

CochainPtr iota_cochain(std::function<double(const Point&)> f, int d, int max_level, int nodes, double alpha) {
    if (d < 1 || d > 2) throw UnsupportedDimension("iota is implemented for k = d <= 2");
    return std::make_shared<IotaCochain>(std::move(f), d, max_level, nodes, alpha);
}

std::vector<TestFunction> test_dictionary(const Region& region, std::size_t count, int m, std::uint64_t seed) {
    const int d = static_cast<int>(region.lo.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TestFunction> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = make_rng(seed, i);
        Point c(d);
        for (int j = 0; j < d; ++j) c(j) = region.lo(j) + unit(rng) * (region.hi(j) - region.lo(j));
        const double r = 0.05 * std::pow(6.0, unit(rng));
        out.emplace_back(c, r, m);
    }
    return out;
}

InjectivityWitness injectivity_witness(const Cochain& a, const std::vector<TestFunction>& dictionary,
                                       const Region& region, std::size_t boxes, std::uint64_t seed,
                                       const EmbeddingOptions& opts) {
    const int d = a.d(), k = a.k();
    const auto sets = index_sets(d, k);
    InjectivityWitness w;
    for (const auto& psi : dictionary)
        for (const auto& J : sets) w.max_pairing = std::max(w.max_pairing, std::abs(pi_J(a, psi, J, opts)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < boxes; ++i) {
        auto rng = make_rng(seed ^ 0x5bd1e995u, i);
        Point lo(d), hi(d);
        for (int j = 0; j < d; ++j) {
            lo(j) = region.lo(j) + unit(rng) * (region.hi(j) - region.lo(j));
            hi(j) = region.lo(j) + unit(rng) * (region.hi(j) - region.lo(j));
        }
        const auto& J = sets[static_cast<std::size_t>(unit(rng) * sets.size()) % sets.size()];
        w.max_box = std::max(w.max_box, std::abs(a.eval_chain(axis_box(lo, hi, J), opts.tol)));
    }
    return w;
}

}  // namespace roughforms
