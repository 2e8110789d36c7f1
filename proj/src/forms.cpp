#include "roughforms/forms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "roughforms/errors.hpp"
#include "roughforms/parallel.hpp"
#include "roughforms/rng.hpp"

namespace roughforms {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::smooth: return "smooth";
        case Provenance::product: return "product";
        case Provenance::wedge: return "wedge";
        case Provenance::pullback: return "pullback";
        case Provenance::coboundary: return "coboundary";
        case Provenance::gaussian: return "gaussian";
        case Provenance::zero_form: return "zero_form";
        case Provenance::memo: return "memo";
        case Provenance::custom: return "custom";
    }
    return "custom";
}

std::string to_string(MeasureRule r) { return r == MeasureRule::vertex_average ? "vertex_average" : "barycenter"; }

MeasureRule measure_rule_by_name(const std::string& name) {
    if (name == "vertex_average") return MeasureRule::vertex_average;
    if (name == "barycenter") return MeasureRule::barycenter;
    throw InvalidArgument("unknown measure rule '" + name + "'");
}

void Cochain::check(const Simplex& s) const {
    if (s.k() != k_ || s.d() != d_)
        throw InvalidArgument(name_ + ": expected a " + std::to_string(k_) + "-simplex in R^" + std::to_string(d_) +
                              ", got a " + std::to_string(s.k()) + "-simplex in R^" + std::to_string(s.d()));
}

double Cochain::eval_chain(const Chain& c, double tol) const {
    if (c.empty()) return 0.0;
    const double each = tol / static_cast<double>(c.size());
    double v = 0;
    for (const auto& t : c) v += t.coeff * eval(t.simplex, each);
    return v;
}

SewnCochain::SewnCochain(GermPtr germ, int d, double alpha, double beta, Provenance provenance, std::string name,
                         FormOptions opts)
    : Cochain(germ->k(), d, alpha, beta, provenance, std::move(name)), germ_(std::move(germ)), opts_(std::move(opts)) {}

SewingResult SewnCochain::sew_result(const Simplex& s, double tol) const {
    check(s);
    SewOptions o;
    o.scheme = opts_.scheme;
    o.tol = tol;
    o.depth_max = opts_.depth_max;
    o.burn_in = opts_.burn_in;
    return sew(*germ_, s, o);
}

double SewnCochain::eval(const Simplex& s, double tol) const { return sew_result(s, tol).value; }

// ---------------------------------------------------------------- smooth forms

namespace {

void check_index(const std::vector<int>& I, int d) {
    for (std::size_t i = 0; i < I.size(); ++i) {
        if (I[i] < 0 || I[i] >= d) throw InvalidArgument("form index out of range");
        if (i > 0 && I[i] <= I[i - 1]) throw InvalidArgument("form index sets must be strictly increasing");
    }
}

class SmoothGerm : public Germ {
public:
    SmoothGerm(int k, std::vector<FormComponent> comps) : k_(k), comps_(std::move(comps)) {
        gamma = k + 2.0;
        eta = static_cast<double>(k);
        additive = std::all_of(comps_.begin(), comps_.end(), [](const FormComponent& c) { return c.constant; });
    }
    double eval(const Simplex& s, double) const override {
        if (k_ == 0) {
            double v = 0;
            for (const auto& c : comps_) v += c.f(s.vertex(0));
            return v;
        }
        const Point b = s.barycenter();
        double v = 0;
        for (const auto& c : comps_) v += c.f(b) * coordinate_projection(s, c.index);
        return v;
    }
    int k() const override { return k_; }

private:
    int k_;
    std::vector<FormComponent> comps_;
};

}  // namespace

SmoothForm::SmoothForm(int d, std::vector<FormComponent> components, FormOptions opts, std::string name)
    : SewnCochain(std::make_shared<SmoothGerm>(components.empty() ? 0 : static_cast<int>(components[0].index.size()),
                                               components),
                  d, 1.0,
                  std::all_of(components.begin(), components.end(), [](const FormComponent& c) { return c.constant; })
                      ? kInf
                      : 1.0,
                  Provenance::smooth, std::move(name), std::move(opts)),
      components_(std::move(components)) {}

std::shared_ptr<const SmoothForm> smooth_form(int d, std::vector<FormComponent> components, FormOptions opts,
                                              std::string name) {
    if (components.empty()) throw InvalidArgument("a smooth form needs at least one component");
    const std::size_t k = components[0].index.size();
    for (const auto& c : components) {
        if (c.index.size() != k) throw InvalidArgument("form components differ in degree");
        check_index(c.index, d);
    }
    if (static_cast<int>(k) > d) throw InvalidArgument("form degree exceeds ambient dimension");
    return std::make_shared<SmoothForm>(d, std::move(components), std::move(opts), std::move(name));
}

std::shared_ptr<const SmoothForm> smooth_form(int d, const std::vector<std::pair<std::vector<int>, expr::Expr>>& comps,
                                              FormOptions opts, std::string name) {
    std::vector<FormComponent> out;
    for (const auto& [I1, e] : comps) {
        if (e.max_var() > d)
            throw InvalidArgument("component uses x" + std::to_string(e.max_var()) + " in dimension " +
                                  std::to_string(d));
        FormComponent c;
        for (int i : I1) c.index.push_back(i - 1);
        c.f = [e](const Point& x) { return e(x); };
        c.constant = e.is_constant();
        if (!e.uses(expr::Op::Abs) && !e.uses(expr::Op::Weierstrass))
            for (int j = 1; j <= d; ++j) {
                const expr::Expr de = expr::differentiate(e, j);
                c.gradient.push_back([de](const Point& x) { return de(x); });
            }
        out.push_back(std::move(c));
    }
    return smooth_form(d, std::move(out), std::move(opts), std::move(name));
}

std::shared_ptr<const SmoothForm> smooth_exterior_derivative(const SmoothForm& a, FormOptions opts) {
    const int d = a.d();
    const int k = a.k();
    if (k >= d) throw InvalidArgument("exterior derivative of a top-degree form");
    std::map<std::vector<int>, std::vector<std::pair<int, std::function<double(const Point&)>>>> terms;
    for (const auto& c : a.components()) {
        if (c.constant) continue;
        if (static_cast<int>(c.gradient.size()) != d)
            throw NotDifferentiable("component without gradient in " + a.name());
        for (int j = 0; j < d; ++j) {
            if (std::find(c.index.begin(), c.index.end(), j) != c.index.end()) continue;
            std::vector<int> J = c.index;
            const int below = static_cast<int>(std::count_if(J.begin(), J.end(), [j](int i) { return i < j; }));
            J.push_back(j);
            std::sort(J.begin(), J.end());
            terms[J].push_back({below % 2 == 0 ? 1 : -1, c.gradient[j]});
        }
    }
    std::vector<FormComponent> out;
    for (auto& [J, parts] : terms) {
        FormComponent c;
        c.index = J;
        c.f = [parts](const Point& x) {
            double v = 0;
            for (const auto& [sign, g] : parts) v += sign * g(x);
            return v;
        };
        out.push_back(std::move(c));
    }
    if (out.empty()) {
        FormComponent zero;
        for (int i = 0; i <= k; ++i) zero.index.push_back(i);
        zero.f = [](const Point&) { return 0.0; };
        zero.constant = true;
        out.push_back(std::move(zero));
    }
    return smooth_form(d, std::move(out), std::move(opts), "d(" + a.name() + ")");
}

// ---------------------------------------------------------------- 0-forms and products

namespace {

class ZeroForm : public Cochain {
public:
    ZeroForm(HolderFunction g, int d)
        : Cochain(0, d, 1.0, g.is_constant ? kInf : g.gamma, Provenance::zero_form, "0-form " + g.name),
          g_(std::move(g)) {}
    double eval(const Simplex& s, double) const override {
        check(s);
        return g_(s.vertex(0));
    }

private:
    HolderFunction g_;
};

class ProductGerm : public Germ {
public:
    ProductGerm(HolderFunction f, CochainPtr a, MeasureRule rule) : f_(std::move(f)), a_(std::move(a)), rule_(rule) {
        gamma = f_.gamma + a_->k() - 1 + a_->alpha();
        eta = a_->k() - 1 + a_->alpha();
        additive = f_.is_constant || a_->k() == 0;
    }
    double eval(const Simplex& s, double tol) const override {
        return measure_average(f_, s, rule_) * a_->eval(s, tol);
    }
    int k() const override { return a_->k(); }

private:
    HolderFunction f_;
    CochainPtr a_;
    MeasureRule rule_;
};

}  // namespace

CochainPtr zero_form(const HolderFunction& g, int d) { return std::make_shared<ZeroForm>(g, d); }

double measure_average(const HolderFunction& f, const Simplex& s, MeasureRule rule) {
    if (rule == MeasureRule::barycenter || s.k() == 0) return f(s.barycenter());
    double v = 0;
    for (int i = 0; i <= s.k(); ++i) v += f(s.vertex(i));
    return v / (s.k() + 1);
}

GermPtr product_germ(const HolderFunction& f, CochainPtr a, MeasureRule rule) {
    return std::make_shared<ProductGerm>(f, std::move(a), rule);
}

std::shared_ptr<const SewnCochain> product(const HolderFunction& f, CochainPtr a, const ProductOptions& opts) {
    const double alpha = a->alpha(), gamma = f.gamma;
    if (!(alpha + gamma > 1) && !opts.allow_divergent && !f.is_constant)
        throw ExponentViolation("product needs alpha + gamma > 1, got alpha = " + std::to_string(alpha) +
                                ", gamma = " + std::to_string(gamma));
    const double beta = std::min(alpha + gamma - 1, a->beta());
    return std::make_shared<SewnCochain>(product_germ(f, a, opts.rule), a->d(), alpha, beta, Provenance::product,
                                         "(" + f.name + ")*" + a->name(), opts.form);
}

// ---------------------------------------------------------------- memo

namespace {

class MemoCochain : public Cochain {
public:
    MemoCochain(CochainPtr a, double quantum)
        : Cochain(a->k(), a->d(), a->alpha(), a->beta(), a->provenance(), a->name()), a_(std::move(a)),
          quantum_(quantum) {}

    double eval(const Simplex& s, double tol) const override {
        check(s);
        const int n = s.k() + 1, d = s.d();
        std::array<std::array<long long, kMaxDim>, kMaxDim + 1> q{};
        std::array<int, kMaxDim + 1> order{};
        for (int j = 0; j < n; ++j) {
            order[j] = j;
            for (int i = 0; i < d; ++i) q[j][i] = std::llround(s.vertex(j)(i) / quantum_);
        }
        std::sort(order.begin(), order.begin() + n, [&](int a, int b) {
            return std::lexicographical_compare(q[a].begin(), q[a].begin() + d, q[b].begin(), q[b].begin() + d);
        });
        const int sign = permutation_sign(std::vector<int>(order.begin(), order.begin() + n));
        std::string key;
        key.reserve(8 + 8 * n * d);
        const int bucket = tol > 0 ? std::ilogb(tol) : -2000;
        key.append(reinterpret_cast<const char*>(&bucket), sizeof bucket);
        for (int j = 0; j < n; ++j)
            key.append(reinterpret_cast<const char*>(q[order[j]].data()), sizeof(long long) * d);

        Shard& shard = shards_[std::hash<std::string>{}(key) % kShards];
        {
            std::shared_lock lock(shard.mutex);
            auto it = shard.map.find(key);
            if (it != shard.map.end()) return sign * it->second;
        }
        VertexMatrix v(d, n);
        for (int j = 0; j < n; ++j) v.col(j) = s.vertex(order[j]);
        const double value = a_->eval(Simplex(v), tol);
        {
            std::unique_lock lock(shard.mutex);
            if (shard.map.size() > kShardCapacity) shard.map.clear();
            shard.map.emplace(std::move(key), value);
        }
        return sign * value;
    }
    GermPtr germ() const override { return a_->germ(); }

private:
    static constexpr std::size_t kShards = 32;
    static constexpr std::size_t kShardCapacity = std::size_t(1) << 14;
    struct Shard {
        std::shared_mutex mutex;
        std::unordered_map<std::string, double> map;
    };
    CochainPtr a_;
    double quantum_;
    mutable std::array<Shard, kShards> shards_;
};

class CoboundaryCochain : public Cochain {
public:
    explicit CoboundaryCochain(CochainPtr a)
        : Cochain(a->k() + 1, a->d(), a->beta(), kInf, Provenance::coboundary, "d" + a->name()),
          a_(a->provenance() == Provenance::zero_form ? a : memoized(a)) {}
    double eval(const Simplex& s, double tol) const override {
        check(s);
        return a_->eval_chain(boundary(s), tol);
    }

private:
    CochainPtr a_;
};

class WedgeCochain : public Cochain {
public:
    WedgeCochain(CochainPtr fa, CochainPtr fda, int k, int d, double alpha, double beta, std::string name)
        : Cochain(k, d, alpha, beta, Provenance::wedge, std::move(name)), fa_(memoized(std::move(fa))),
          fda_(std::move(fda)) {}
    double eval(const Simplex& s, double tol) const override {
        check(s);
        if (!fda_) return fa_->eval_chain(boundary(s), tol);
        return fa_->eval_chain(boundary(s), tol / 2) - fda_->eval(s, tol / 2);
    }

private:
    CochainPtr fa_;
    CochainPtr fda_;
};

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

CochainPtr memoized(CochainPtr a, double quantum) {
    if (a->provenance() == Provenance::memo) return a;
    return std::make_shared<MemoCochain>(std::move(a), quantum);
}

CochainPtr coboundary(CochainPtr a) {
    if (a->k() >= a->d()) throw InvalidArgument("coboundary of a top-degree form");
    return std::make_shared<CoboundaryCochain>(std::move(a));
}

CochainPtr wedge_d(const HolderFunction& f, CochainPtr a, const ProductOptions& opts) {
    if (a->k() >= a->d()) throw InvalidArgument("df ^ A needs k < d");
    const double at = a->alpha() + f.gamma - 1, bt = a->beta() + f.gamma - 1;
    if (!(at > 0)) throw ExponentViolation("wedge needs alpha + gamma - 1 > 0, got " + fmt(at));
    if (!(bt > 0)) throw ExponentViolation("wedge needs beta + gamma - 1 > 0, got " + fmt(bt));
    CochainPtr fa = coboundary(product(f, a, opts));
    std::shared_ptr<const Cochain> fda;
    if (std::isfinite(a->beta())) fda = product(f, coboundary(a), opts);
    const int k = a->k() + 1, d = a->d();
    return std::make_shared<WedgeCochain>(product(f, a, opts), fda, k, d, std::min(at, a->beta()), bt,
                                          "d(" + f.name + ")^" + a->name());
}

CochainPtr zust_form(const HolderFunction& g0, const std::vector<HolderFunction>& gs, CochainPtr a,
                     const ProductOptions& opts) {
    const int n = static_cast<int>(gs.size());
    double sum = g0.gamma;
    for (const auto& g : gs) sum += g.gamma;
    if (!(a->alpha() + sum > n))
        throw ExponentViolation("Zust form needs alpha + sum(gamma_i) > n: " + fmt(a->alpha() + sum) + " <= " +
                                std::to_string(n));
    if (!(a->beta() + sum > n - 1))
        throw ExponentViolation("Zust form needs beta + sum(gamma_i) > n - 1: " + fmt(a->beta() + sum) +
                                " <= " + std::to_string(n - 1));
    if (a->k() + n > a->d()) throw InvalidArgument("Zust form degree exceeds the ambient dimension");
    CochainPtr b = std::move(a);
    for (int i = n - 1; i >= 0; --i) b = wedge_d(gs[i], b, opts);
    return product(g0, b, opts);
}

// ---------------------------------------------------------------- smooth maps and pullbacks

Eigen::MatrixXd SmoothMap::jac(const Point& x) const {
    if (jacobian) return jacobian(x);
    Eigen::MatrixXd j(d, m);
    for (int c = 0; c < m; ++c) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(c)));
        Point up = x, dn = x;
        up(c) += h;
        dn(c) -= h;
        j.col(c) = (F(up) - F(dn)) / (2 * h);
    }
    return j;
}

SmoothMap identity_map(int d) {
    SmoothMap f;
    f.m = f.d = d;
    f.F = [](const Point& x) { return x; };
    f.jacobian = [d](const Point&) { return Eigen::MatrixXd::Identity(d, d); };
    f.affine = true;
    f.name = "id";
    return f;
}

SmoothMap affine_map(const Eigen::MatrixXd& a, const Point& b) {
    if (a.rows() != b.size()) throw InvalidArgument("affine map shape mismatch");
    SmoothMap f;
    f.m = static_cast<int>(a.cols());
    f.d = static_cast<int>(a.rows());
    f.F = [a, b](const Point& x) { return Point(a * x + b); };
    f.jacobian = [a](const Point&) { return a; };
    f.affine = true;
    f.name = "affine";
    return f;
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner) {
    if (inner.d != outer.m) throw InvalidArgument("composition shape mismatch");
    SmoothMap f;
    f.m = inner.m;
    f.d = outer.d;
    f.F = [outer, inner](const Point& x) { return outer(inner(x)); };
    f.jacobian = [outer, inner](const Point& x) { return Eigen::MatrixXd(outer.jac(inner(x)) * inner.jac(x)); };
    f.eta = std::min(outer.eta, inner.eta);
    f.affine = outer.affine && inner.affine;
    f.name = outer.name + "∘" + inner.name;
    return f;
}

SmoothMap expression_map(int m, const std::vector<expr::Expr>& components, double eta) {
    SmoothMap f;
    f.m = m;
    f.d = static_cast<int>(components.size());
    for (const auto& c : components)
        if (c.max_var() > m) throw InvalidArgument("map component uses x" + std::to_string(c.max_var()));
    f.F = [components](const Point& x) {
        Point y(static_cast<int>(components.size()));
        for (std::size_t i = 0; i < components.size(); ++i) y(static_cast<int>(i)) = components[i](x);
        return y;
    };
    bool differentiable = true;
    for (const auto& c : components)
        differentiable = differentiable && !c.uses(expr::Op::Abs) && !c.uses(expr::Op::Weierstrass);
    if (differentiable) {
        std::vector<expr::Expr> partials;
        for (const auto& c : components)
            for (int j = 1; j <= m; ++j) partials.push_back(expr::differentiate(c, j));
        const int d = f.d;
        f.jacobian = [partials, d, m](const Point& x) {
            Eigen::MatrixXd j(d, m);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < m; ++c) j(r, c) = partials[r * m + c](x);
            return j;
        };
    }
    f.eta = eta;
    f.name = "expr";
    return f;
}

double jacobian_check(const SmoothMap& f, const Region& region, std::size_t points, std::uint64_t seed) {
    SmoothMap fd = f;
    fd.jacobian = nullptr;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0;
    for (std::size_t n = 0; n < points; ++n) {
        auto rng = make_rng(seed, n);
        Point x(f.m);
        for (int i = 0; i < f.m; ++i) x(i) = region.lo(i) + unit(rng) * (region.hi(i) - region.lo(i));
        const Eigen::MatrixXd a = f.jac(x), b = fd.jac(x);
        worst = std::max(worst, (a - b).norm() / std::max(1.0, a.norm()));
    }
    return worst;
}

Simplex push_forward(const SmoothMap& f, const Simplex& s) {
    if (s.d() != f.m) throw InvalidArgument("push_forward: simplex dimension does not match the map domain");
    VertexMatrix v(f.d, s.k() + 1);
    for (int j = 0; j <= s.k(); ++j) v.col(j) = f(s.vertex(j));
    return Simplex(v);
}

HolderFunction pullback(const SmoothMap& f, const HolderFunction& phi) {
    HolderFunction h;
    h.f = [f, phi](const Point& x) { return phi(f(x)); };
    h.gamma = phi.gamma;
    h.constant = kInf;
    h.is_constant = phi.is_constant;
    h.name = "F*(" + phi.name + ")";
    return h;
}

namespace {

class PullbackGerm : public Germ {
public:
    PullbackGerm(SmoothMap f, CochainPtr a) : f_(std::move(f)), a_(std::move(a)) {
        const double e = f_.eta, al = a_->alpha(), be = a_->beta();
        const int k = a_->k();
        gamma = std::min(k - 1 + al * (1 + e), k + be * (1 + e));
        eta = k - 1 + al;
        additive = f_.affine;
    }
    double eval(const Simplex& s, double tol) const override { return a_->eval(push_forward(f_, s), tol); }
    int k() const override { return a_->k(); }

private:
    SmoothMap f_;
    CochainPtr a_;
};

}  // namespace

std::shared_ptr<const SewnCochain> pullback(const SmoothMap& f, CochainPtr a, FormOptions opts) {
    if (a->d() != f.d) throw InvalidArgument("pullback: form and map target dimensions differ");
    if (a->k() > f.m) throw InvalidArgument("pullback: form degree exceeds the domain dimension");
    const double alpha = a->alpha();
    if (!(alpha > 1.0 / (1.0 + f.eta)))
        throw ExponentViolation("pullback needs alpha > 1/(1+eta), got alpha = " + fmt(alpha) + ", eta = " +
                                fmt(f.eta));
    const double beta = std::min(alpha * (1 + f.eta) - 1, a->beta());
    auto germ = std::make_shared<PullbackGerm>(f, a);
    return std::make_shared<SewnCochain>(germ, f.m, alpha, beta, Provenance::pullback, "F*" + a->name(),
                                         std::move(opts));
}

// ---------------------------------------------------------------- Stokes

namespace {

// Raw germ values as a cochain, so that faces shared by neighbouring children hit the memo.
class GermValues : public Cochain {
public:
    GermValues(GermPtr g, int d) : Cochain(g->k(), d, 1.0, kInf, Provenance::custom, "germ"), g_(std::move(g)) {}
    double eval(const Simplex& s, double tol) const override { return g_->eval(s, tol); }

private:
    GermPtr g_;
};

class BoundaryGerm : public Germ {
public:
    explicit BoundaryGerm(const Cochain& a) : a_(a) {
        if (auto g = a.germ()) faces_ = memoized(std::make_shared<GermValues>(g, a.d()));
    }
    double eval(const Simplex& s, double tol) const override {
        return faces_ ? faces_->eval_chain(boundary(s), tol) : a_.eval_chain(boundary(s), tol);
    }
    int k() const override { return a_.k() + 1; }

private:
    const Cochain& a_;
    CochainPtr faces_;
};

}  // namespace

StokesReport stokes_residual(const Cochain& a, const Simplex& omega, double tol, FormOptions opts) {
    if (omega.k() != a.k() + 1 || omega.d() != a.d()) throw InvalidArgument("stokes: ω must be a (k+1)-simplex");
    BoundaryGerm g(a);
    SewOptions o;
    o.scheme = opts.scheme;
    o.tol = tol / 2;
    o.depth_max = opts.depth_max;
    o.burn_in = opts.burn_in;
    StokesReport r;
    r.lhs = sew(g, omega, o).value;
    r.rhs = a.eval_chain(boundary(omega), tol / 2);
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

StokesReport stokes_residual_at_depth(const Cochain& a, const Simplex& omega, FormOptions opts, double tol) {
    if (omega.k() != a.k() + 1 || omega.d() != a.d()) throw InvalidArgument("stokes: ω must be a (k+1)-simplex");
    const GermPtr face = a.germ();
    if (!face) throw InvalidArgument("stokes: the form has no germ");
    const int lhs_depth = opts.depth_max > 0 ? opts.depth_max : default_depth_max(omega.k());
    const int rhs_depth = default_depth_max(a.k());
    BoundaryGerm g(a);
    StokesReport r;
    r.lhs = level_sums(g, omega, *opts.scheme, lhs_depth, tol).back();
    const Chain faces = boundary(omega);
    for (const auto& [c, f] : faces)
        r.rhs += c * (f.k() == 0 ? face->eval(f, tol) : level_sums(*face, f, *opts.scheme, rhs_depth, tol).back());
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

StokesReport stokes_residual(const Cochain& a, const Cochain& da, const Simplex& omega, double tol) {
    if (da.k() != a.k() + 1) throw InvalidArgument("stokes: dA must have degree k + 1");
    StokesReport r;
    r.lhs = da.eval(omega, tol / 2);
    r.rhs = a.eval_chain(boundary(omega), tol / 2);
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

// ---------------------------------------------------------------- norms

NormReport norm_estimate(const Cochain& a, double alpha, double beta, const SamplerSpec& spec, double tol) {
    const int k = a.k(), d = a.d();
    const bool with_boundary = k + 1 <= d;
    const double beta_n = std::isfinite(beta) ? beta : 1.0;
    struct Job {
        int band_index;
        int kind;  // 0 capped, 1 boundary, 2 uncapped
        std::uint64_t stream;
        int band;
    };
    std::vector<Job> jobs;
    for (std::size_t b = 0; b < spec.bands.size(); ++b)
        for (int i = 0; i < spec.per_band; ++i)
            for (int kind = 0; kind < 3; ++kind) {
                if (kind == 1 && !with_boundary) continue;
                const std::uint64_t stream =
                    (static_cast<std::uint64_t>(kind) << 56) + (static_cast<std::uint64_t>(spec.bands[b] + 64) << 32) + i;
                jobs.push_back({static_cast<int>(b), kind, stream, spec.bands[b]});
            }
    std::vector<double> r1(jobs.size(), 0.0), r2(jobs.size(), 0.0);
    parallel_for(jobs.size(), [&](std::size_t idx) {
        const Job& j = jobs[idx];
        auto rng = make_rng(spec.seed, j.stream);
        if (j.kind == 1) {
            const Simplex w = sample_simplex(rng, spec.region, k + 1, j.band, spec.max_ecc);
            const double m = mass(w, beta_n);
            r1[idx] = std::abs(a.eval_chain(boundary(w), tol * std::pow(w.diameter(), k))) / m;
            return;
        }
        const Simplex s = sample_simplex(rng, spec.region, k, j.band, j.kind == 0 ? spec.max_ecc : 1e4);
        const double v = std::abs(a.eval(s, tol * std::pow(s.diameter(), k)));
        r1[idx] = v / mass(s, alpha);
        r2[idx] = v / std::pow(s.diameter(), k - 1 + alpha);
    });
    NormReport rep;
    rep.alpha = alpha;
    rep.beta = beta;
    rep.ecc_cap = spec.max_ecc;
    for (int b : spec.bands) rep.bands.push_back(NormBand{b, 0, 0, 0, 0, 0});
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        const Job& j = jobs[idx];
        NormBand& nb = rep.bands[j.band_index];
        if (j.kind == 0) {
            nb.sup_mass = std::max(nb.sup_mass, r1[idx]);
            nb.sup_diam = std::max(nb.sup_diam, r2[idx]);
            ++nb.count;
            ++rep.samples;
        } else if (j.kind == 1) {
            nb.sup_boundary = std::max(nb.sup_boundary, r1[idx]);
            ++nb.boundary_count;
            ++rep.boundary_samples;
        } else {
            rep.uncapped_sup_mass = std::max(rep.uncapped_sup_mass, r1[idx]);
        }
    }
    for (const auto& nb : rep.bands) {
        rep.norm_alpha = std::max(rep.norm_alpha, nb.sup_mass);
        rep.norm_diam = std::max(rep.norm_diam, nb.sup_diam);
        rep.norm_boundary = std::max(rep.norm_boundary, nb.sup_boundary);
        if (nb.sup_diam > 0) rep.max_ratio = std::max(rep.max_ratio, nb.sup_mass / nb.sup_diam);
    }
    rep.uncapped_sup_mass = std::max(rep.uncapped_sup_mass, rep.norm_alpha);
    return rep;
}

std::string norm_report_csv(const NormReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "band,count,sup_mass,sup_diam,sup_boundary\n";
    for (const auto& b : r.bands)
        os << b.band << ',' << b.count << ',' << b.sup_mass << ',' << b.sup_diam << ',' << b.sup_boundary << '\n';
    return os.str();
}

// ---------------------------------------------------------------- flat norm bounds

namespace {

// Circumcenter of the points within their affine hull, if they are affinely independent.
std::optional<Point> circumcenter(const Eigen::MatrixXd& p, const std::vector<int>& idx) {
    const int m = static_cast<int>(idx.size()) - 1, d = static_cast<int>(p.rows());
    const Point p0 = p.col(idx[0]);
    if (m == 0) return p0;
    Eigen::MatrixXd e(d, m);
    for (int i = 0; i < m; ++i) e.col(i) = p.col(idx[i + 1]) - p0;
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) rhs(i) = e.col(i).squaredNorm();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(2.0 * e.transpose() * e);
    if (lu.rank() < m) return std::nullopt;
    return Point(p0 + e * lu.solve(rhs));
}

}  // namespace

double min_enclosing_radius(const Eigen::MatrixXd& p) {
    const int n = static_cast<int>(p.cols()), d = static_cast<int>(p.rows());
    if (n == 0) return 0.0;
    double best = kInf;
    const int max_size = std::min(n, d + 1);
    std::vector<int> idx;
    std::function<void(int)> rec = [&](int start) {
        if (!idx.empty()) {
            if (auto c = circumcenter(p, idx)) {
                const double r = (*c - p.col(idx[0])).norm();
                bool ok = r < best;
                for (int j = 0; j < n && ok; ++j) ok = (p.col(j) - *c).norm() <= r * (1 + 1e-12) + 1e-300;
                if (ok) best = r;
            }
        }
        if (static_cast<int>(idx.size()) == max_size) return;
        for (int j = start; j < n; ++j) {
            idx.push_back(j);
            rec(j + 1);
            idx.pop_back();
        }
    };
    rec(0);
    return best;
}

double flat_norm_upper(const Simplex& s, const Simplex& t, double alpha, double beta, double r) {
    if (s.k() != t.k() || s.d() != t.d()) throw InvalidArgument("flat_norm_upper: simplices differ in shape");
    const int k = s.k();
    double total = 0;
    for (int i = 0; i <= k; ++i) {
        const double mu = (s.vertex(i) - t.vertex(i)).norm();
        if (mu == 0) continue;
        const double a = k == 0 ? 0.0 : k * std::pow(r, k - 1) * std::pow(mu, alpha);
        const double b = std::isfinite(beta) ? std::pow(r, k) * std::pow(mu, beta) : 0.0;
        total += a + b;
    }
    return total;
}

double flat_norm_upper(const Simplex& s, const Simplex& t, double alpha, double beta) {
    if (s.k() != t.k() || s.d() != t.d()) throw InvalidArgument("flat_norm_upper: simplices differ in shape");
    Eigen::MatrixXd pts(s.d(), 2 * (s.k() + 1));
    pts << s.vertices(), t.vertices();
    return flat_norm_upper(s, t, alpha, beta, min_enclosing_radius(pts));
}

Point affine_interpolant(const SmoothMap& f, const Simplex& s, const Point& x) {
    const int k = s.k();
    Eigen::MatrixXd e(s.d(), k);
    for (int i = 0; i < k; ++i) e.col(i) = s.vertex(i + 1) - s.vertex(0);
    const Eigen::VectorXd t = e.colPivHouseholderQr().solve(Eigen::VectorXd(x - s.vertex(0)));
    Point y = (1.0 - t.sum()) * f(s.vertex(0));
    for (int i = 0; i < k; ++i) y += t(i) * f(s.vertex(i + 1));
    return y;
}

double interpolation_defect(const SmoothMap& f, const Simplex& s, double alpha, double beta) {
    double worst = 0;
    for (int depth = 1; depth <= 2; ++depth)
        for (const auto& c : iterate(*edgewise(), s, depth)) {
            VertexMatrix a(f.d, s.k() + 1);
            for (int j = 0; j <= s.k(); ++j) a.col(j) = affine_interpolant(f, s, c.simplex.vertex(j));
            worst = std::max(worst, flat_norm_upper(Simplex(a), push_forward(f, c.simplex), alpha, beta));
        }
    return worst;
}

PullbackProbe pullback_regularity_probe(const SmoothMap& f, int k, double alpha, double beta, const Region& region,
                                        std::size_t samples, std::uint64_t seed) {
    PullbackProbe p;
    p.predicted = std::min(k - 1 + alpha * (1 + f.eta), k + beta * (1 + f.eta));
    const int bands = 6;
    const std::size_t per_band = std::max<std::size_t>(1, samples / bands);
    std::vector<double> diam(bands * per_band), bound(bands * per_band);
    parallel_for(diam.size(), [&](std::size_t i) {
        const int band = 1 + static_cast<int>(i / per_band);
        auto rng = make_rng(seed, i);
        const Simplex s = sample_simplex(rng, region, k, band, 10.0);
        diam[i] = s.diameter();
        bound[i] = interpolation_defect(f, s, alpha, beta);
    });
    double top = 0;
    for (double b : bound) top = std::max(top, b);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < diam.size(); ++i) {
        p.diameters.push_back(diam[i]);
        p.bounds.push_back(bound[i]);
        if (bound[i] > 1e-12 * std::max(top, 1e-300) && bound[i] > 1e-200) {
            x.push_back(std::log(diam[i]));
            y.push_back(std::log(bound[i]));
        }
    }
    if (top < 1e-13 || x.size() < 3) throw DegenerateFit("interpolation defects vanish; nothing to fit");
    p.exponent = fit_line(x, y).first;
    return p;
}

// ---------------------------------------------------------------- catalog

const std::vector<CatalogEntry>& form_catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"dx", 2, 1, {{{1}, "1"}}},
        {"dy", 2, 1, {{{2}, "1"}}},
        {"x dy", 2, 1, {{{2}, "x1"}}},
        {"rotation", 2, 1, {{{1}, "-x2"}, {{2}, "x1"}}},
        {"wave", 2, 1, {{{1}, "sin(2*x2)"}, {{2}, "cos(x1 + x2)"}}},
        {"area", 2, 2, {{{1, 2}, "1"}}},
        {"bump area", 2, 2, {{{1, 2}, "exp(-x1^2 - x2^2)"}}},
        {"x dz", 3, 1, {{{3}, "x1"}}},
        {"helix", 3, 1, {{{1}, "sin(x3)"}, {{2}, "cos(x1*x3)"}, {{3}, "x1*x2"}}},
        {"dx^dz", 3, 2, {{{1, 3}, "1"}}},
        {"flux", 3, 2, {{{1, 2}, "x3"}, {{1, 3}, "sin(x1)"}, {{2, 3}, "x1*x2 + 1"}}},
    };
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : form_catalog())
        if (e.name == name) return e;
    throw UnknownIdentifier("unknown catalog form '" + name + "'");
}

std::shared_ptr<const SmoothForm> catalog_form(const std::string& name, FormOptions opts) {
    const CatalogEntry& e = catalog_entry(name);
    std::vector<std::pair<std::vector<int>, expr::Expr>> comps;
    for (const auto& [I, text] : e.components) comps.push_back({I, expr::parse(text)});
    return smooth_form(e.d, comps, std::move(opts), e.name);
}

}  // namespace roughforms
