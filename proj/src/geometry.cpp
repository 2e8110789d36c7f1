#include "roughforms/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace roughforms {

namespace {

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double gram_det(const EdgeMatrix& e) {
    if (e.cols() == 0) return 1.0;
    EdgeMatrix g = e.transpose() * e;
    return g.determinant();
}

}  // namespace

Simplex::Simplex(const VertexMatrix& vertices) : v_(vertices) {
    if (v_.rows() < 1 || v_.rows() > kMaxDim)
        throw UnsupportedDimension("ambient dimension must be in 1.." + std::to_string(kMaxDim));
    if (v_.cols() < 1 || v_.cols() > v_.rows() + 1)
        throw InvalidArgument("simplex needs between 1 and d+1 vertices");
}

Simplex Simplex::from_points(const std::vector<std::vector<double>>& points) {
    if (points.empty()) throw InvalidArgument("simplex needs at least one vertex");
    const auto d = points.front().size();
    if (d < 1 || d > static_cast<std::size_t>(kMaxDim))
        throw UnsupportedDimension("ambient dimension must be in 1.." + std::to_string(kMaxDim));
    if (points.size() > d + 1) throw InvalidArgument("simplex needs between 1 and d+1 vertices");
    VertexMatrix v(d, points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j].size() != d) throw InvalidArgument("vertices differ in dimension");
        for (std::size_t i = 0; i < d; ++i) v(i, j) = points[j][i];
    }
    return Simplex(v);
}

Simplex Simplex::from_points(std::initializer_list<std::initializer_list<double>> points) {
    std::vector<std::vector<double>> p;
    for (const auto& row : points) p.emplace_back(row);
    return from_points(p);
}

EdgeMatrix Simplex::edges() const {
    EdgeMatrix e(d(), k());
    for (int i = 0; i < k(); ++i) e.col(i) = v_.col(i + 1) - v_.col(0);
    return e;
}

Point Simplex::barycenter() const { return v_.rowwise().mean(); }

double Simplex::diameter() const {
    double m = 0;
    for (int i = 0; i < v_.cols(); ++i)
        for (int j = i + 1; j < v_.cols(); ++j) m = std::max(m, (v_.col(i) - v_.col(j)).squaredNorm());
    return std::sqrt(m);
}

double Simplex::gram_determinant() const { return gram_det(edges()); }

bool Simplex::degenerate() const {
    if (k() == 0) return false;
    const double diam = diameter();
    if (diam == 0) return true;
    return gram_determinant() <= 1e-12 * std::pow(diam, 2 * k());
}

Simplex Simplex::swapped(int i, int j) const {
    VertexMatrix v = v_;
    v.col(i).swap(v.col(j));
    return Simplex(v);
}

Simplex Simplex::reversed() const {
    if (k() < 1) throw InvalidArgument("a 0-simplex cannot be reoriented by vertex order");
    return swapped(0, 1);
}

Simplex Simplex::face(int i) const {
    VertexMatrix v(d(), k());
    for (int j = 0, c = 0; j <= k(); ++j)
        if (j != i) v.col(c++) = v_.col(j);
    return Simplex(v);
}

bool Simplex::operator==(const Simplex& other) const {
    return v_.rows() == other.v_.rows() && v_.cols() == other.v_.cols() && v_ == other.v_;
}

Chain::Chain(std::initializer_list<ChainTerm> terms) : terms_(terms) {}

void Chain::add(const Simplex& s, int coeff) {
    if (!terms_.empty() && (s.k() != k() || s.d() != d()))
        throw InvalidArgument("chain terms must share k and d");
    if (coeff != 0) terms_.push_back({coeff, s});
}

void Chain::append(const Chain& other, int coeff) {
    for (const auto& t : other) add(t.simplex, coeff * t.coeff);
}

int Chain::k() const { return terms_.empty() ? -1 : terms_.front().simplex.k(); }
int Chain::d() const { return terms_.empty() ? -1 : terms_.front().simplex.d(); }

Cube::Cube(Point b, EdgeMatrix f, double s, int sg) : base(std::move(b)), frame(std::move(f)), side(s), sign(sg) {
    if (frame.rows() != base.size()) throw InvalidArgument("cube frame and base differ in dimension");
    if (!(side > 0)) throw InvalidArgument("cube side must be positive");
    if (sign != 1 && sign != -1) throw InvalidArgument("cube sign must be +1 or -1");
    const EdgeMatrix g = frame.transpose() * frame;
    const EdgeMatrix id = EdgeMatrix::Identity(frame.cols(), frame.cols());
    if ((g - id).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("cube frame is not orthonormal");
}

Point Cube::center() const {
    return base + frame * Eigen::VectorXd::Constant(k(), side / 2);
}

Point Cube::at(const Eigen::VectorXd& u) const { return base + frame * u; }

double volume(const Simplex& s) {
    if (s.k() == 0) return 1.0;
    if (s.degenerate()) return 0.0;
    return std::sqrt(std::max(0.0, s.gram_determinant())) / factorial(s.k());
}

double diameter(const Simplex& s) { return s.diameter(); }

double height(const Simplex& s, int i) {
    const Point p = s.vertex(i);
    const Simplex f = s.face(i);
    if (f.k() == 0) return (p - f.vertex(0)).norm();
    const EdgeMatrix e = f.edges();
    const Point r = p - f.vertex(0);
    const Eigen::VectorXd coef = e.colPivHouseholderQr().solve(r);
    return (r - e * coef).norm();
}

MassReport mass_alpha(const Simplex& s, double alpha) {
    if (s.k() < 1) throw InvalidArgument("mass needs k >= 1");
    if (s.degenerate()) throw DegenerateSimplex("mass of a degenerate simplex");
    MassReport r;
    r.volume = volume(s);
    r.diameter = s.diameter();
    r.eccentricity = std::pow(r.diameter, s.k()) / r.volume;
    r.h = std::numeric_limits<double>::infinity();
    double max_face = 0;
    for (int i = 0; i <= s.k(); ++i) {
        const double fv = volume(s.face(i));
        const double hi = height(s, i);
        r.face_volumes.push_back(fv);
        r.heights.push_back(hi);
        max_face = std::max(max_face, fv);
        r.h = std::min(r.h, hi);
    }
    if (alpha == 0)
        r.mass = 1.0;
    else if (std::isinf(alpha))
        r.mass = 0.0;
    else
        r.mass = max_face * std::pow(r.h, alpha);
    return r;
}

double mass(const Simplex& s, double alpha) { return mass_alpha(s, alpha).mass; }

double eccentricity(const Simplex& s) {
    if (s.k() == 0) return 1.0;
    if (s.degenerate()) throw DegenerateSimplex("eccentricity of a degenerate simplex");
    return std::pow(s.diameter(), s.k()) / volume(s);
}

Chain boundary(const Simplex& s) {
    if (s.k() < 1) throw InvalidArgument("boundary needs k >= 1");
    Chain c;
    if (s.k() == 1) {
        c.add(s.face(0), 1);
        c.add(s.face(1), -1);
        return c;
    }
    for (int i = 0; i <= s.k(); ++i) {
        const Simplex f = s.face(i);
        c.add(i % 2 == 0 ? f : f.reversed(), 1);
    }
    return c;
}

Chain boundary(const Chain& chain) {
    Chain c;
    for (const auto& t : chain) c.append(boundary(t.simplex), t.coeff);
    return c;
}

double coordinate_projection(const Simplex& s, const std::vector<int>& index) {
    const int k = s.k();
    if (static_cast<int>(index.size()) != k) throw InvalidArgument("index set size must equal k");
    if (k == 0) return 1.0;
    const EdgeMatrix e = s.edges();
    EdgeMatrix m(k, k);
    for (int r = 0; r < k; ++r) {
        if (index[r] < 0 || index[r] >= s.d()) throw InvalidArgument("index out of range");
        m.row(r) = e.row(index[r]);
    }
    return m.determinant() / factorial(k);
}

int permutation_sign(const std::vector<int>& perm) {
    int sign = 1;
    std::vector<int> p = perm;
    for (std::size_t i = 0; i < p.size(); ++i)
        while (p[i] != static_cast<int>(i)) {
            std::swap(p[i], p[p[i]]);
            sign = -sign;
        }
    return sign;
}

std::vector<std::vector<int>> index_sets(int d, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(k);
    std::iota(cur.begin(), cur.end(), 0);
    if (k > d) return out;
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[i] == d - k + i) --i;
        if (i < 0) break;
        ++cur[i];
        for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

Chain parallelotope_to_chain(const Point& base, const EdgeMatrix& edges) {
    const int k = static_cast<int>(edges.cols());
    const int d = static_cast<int>(base.size());
    Chain c;
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        VertexMatrix v(d, k + 1);
        v.col(0) = base;
        for (int i = 0; i < k; ++i) v.col(i + 1) = v.col(i) + edges.col(perm[i]);
        Simplex s(v);
        if (k >= 1 && permutation_sign(perm) < 0) s = s.reversed();
        c.add(s, 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return c;
}

Chain cube_to_chain(const Cube& q) {
    Chain c = parallelotope_to_chain(q.base, q.frame * q.side);
    if (q.sign > 0) return c;
    Chain flipped;
    for (const auto& t : c) flipped.add(t.simplex.reversed(), t.coeff);
    return flipped;
}

Chain axis_box_to_chain(const Point& a, const Point& b, const std::vector<int>& axes) {
    EdgeMatrix e = EdgeMatrix::Zero(a.size(), axes.size());
    for (std::size_t j = 0; j < axes.size(); ++j) e(axes[j], j) = b(axes[j]) - a(axes[j]);
    return parallelotope_to_chain(a, e);
}

Point snap_to_grid(const Point& x, int n) {
    const double scale = std::ldexp(1.0, n);
    Point y(x.size());
    for (int i = 0; i < x.size(); ++i) y(i) = std::ceil(x(i) * scale - 0.5) / scale;
    return y;
}

Simplex snap_to_grid(const Simplex& s, int n) {
    VertexMatrix v = s.vertices();
    for (int j = 0; j < v.cols(); ++j) v.col(j) = snap_to_grid(Point(v.col(j)), n);
    return Simplex(v);
}

Eigen::VectorXd barycentric_coordinates(const Simplex& s, const Point& x) {
    if (s.k() != s.d()) throw InvalidArgument("barycentric coordinates need k = d");
    const EdgeMatrix e = s.edges();
    const Eigen::VectorXd t = e.partialPivLu().solve(x - s.vertex(0));
    Eigen::VectorXd lam(s.k() + 1);
    lam(0) = 1.0 - t.sum();
    lam.tail(s.k()) = t;
    return lam;
}

}  // namespace roughforms
