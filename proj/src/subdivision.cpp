#include "roughforms/subdivision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

namespace roughforms {

namespace {

struct ChildTemplate {
    Eigen::MatrixXd weights;  // (k+1)×(k+1), column j = barycentric weights of child vertex j
    int sign = 1;
};

using Templates = std::vector<ChildTemplate>;

Chain apply_templates(const Simplex& s, const Templates& t) {
    Chain c;
    const Eigen::MatrixXd v = s.vertices();
    for (const auto& child : t) {
        const VertexMatrix w = v * child.weights;
        c.add(Simplex(w), child.sign);
    }
    return c;
}

void sort_templates(Templates& t) {
    std::sort(t.begin(), t.end(), [](const ChildTemplate& a, const ChildTemplate& b) {
        const auto n = a.weights.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = a.weights(i % a.weights.rows(), i / a.weights.rows());
            const double y = b.weights(i % b.weights.rows(), i / b.weights.rows());
            if (x != y) return x > y;
        }
        return false;
    });
}

Templates make_edgewise(int k) {
    Templates out;
    std::vector<int> perm(k);
    for (int mask = 0; mask < (1 << k); ++mask) {
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<Eigen::VectorXd> pts;
            Eigen::VectorXd x(k);
            for (int j = 0; j < k; ++j) x(j) = ((mask >> j) & 1) ? 0.5 : 0.0;
            pts.push_back(x);
            for (int j = 0; j < k; ++j) {
                x(perm[j]) += 0.5;
                pts.push_back(x);
            }
            bool inside = true;
            for (const auto& p : pts) {
                if (p(0) > 1.0 || p(k - 1) < 0.0) inside = false;
                for (int j = 0; j + 1 < k; ++j)
                    if (p(j) < p(j + 1)) inside = false;
            }
            if (!inside) continue;
            ChildTemplate t;
            t.weights = Eigen::MatrixXd::Zero(k + 1, k + 1);
            for (int c = 0; c <= k; ++c) {
                const auto& p = pts[c];
                t.weights(0, c) = 1.0 - p(0);
                for (int j = 1; j < k; ++j) t.weights(j, c) = p(j - 1) - p(j);
                t.weights(k, c) = p(k - 1);
            }
            t.sign = permutation_sign(perm);
            out.push_back(t);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    sort_templates(out);
    return out;
}

Templates make_barycentric(int k) {
    Templates out;
    std::vector<int> perm(k + 1);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        ChildTemplate t;
        t.weights = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int j = 0; j <= k; ++j)
            for (int l = 0; l <= j; ++l) t.weights(perm[l], j) = 1.0 / (j + 1);
        t.sign = t.weights.determinant() > 0 ? 1 : -1;
        out.push_back(t);
    } while (std::next_permutation(perm.begin(), perm.end()));
    sort_templates(out);
    return out;
}

const Templates& edgewise_templates(int k) {
    static const std::vector<Templates> all = [] {
        std::vector<Templates> t(4);
        for (int k = 1; k <= 3; ++k) t[k] = make_edgewise(k);
        return t;
    }();
    return all[k];
}

const Templates& barycentric_templates(int k) {
    static std::mutex m;
    static std::vector<Templates> all(kMaxDim + 1);
    std::lock_guard<std::mutex> lock(m);
    if (all[k].empty()) all[k] = make_barycentric(k);
    return all[k];
}

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

Chain edgewise_children(const Simplex& s) {
    if (s.k() < 1) throw InvalidArgument("edgewise subdivision needs k >= 1");
    if (s.k() > 3) throw UnsupportedDimension("edgewise subdivision is implemented for k <= 3");
    return apply_templates(s, edgewise_templates(s.k()));
}

Chain barycentric_children(const Simplex& s) {
    if (s.k() < 1) throw InvalidArgument("barycentric subdivision needs k >= 1");
    return apply_templates(s, barycentric_templates(s.k()));
}

Chain EdgewiseScheme::children(const Simplex& s) const { return edgewise_children(s); }

std::optional<RegularityConstants> EdgewiseScheme::constants(const Simplex& s) const {
    if (s.k() <= 2) return RegularityConstants{0.5, 1.0};
    if (s.degenerate()) return std::nullopt;
    const SubdivisionStats st = stats(*this, s, 3);
    return RegularityConstants{st.c, st.norm_M};
}

Chain BarycentricScheme::children(const Simplex& s) const { return barycentric_children(s); }

int BarycentricScheme::cardinality(int k) const { return static_cast<int>(factorial(k + 1)); }

SchemePtr edgewise() {
    static const SchemePtr s = std::make_shared<EdgewiseScheme>();
    return s;
}

SchemePtr barycentric() {
    static const SchemePtr s = std::make_shared<BarycentricScheme>();
    return s;
}

SchemePtr scheme_by_name(const std::string& name) {
    if (name == "edgewise") return edgewise();
    if (name == "barycentric") return barycentric();
    throw InvalidArgument("unknown subdivision scheme '" + name + "'");
}

Chain iterate(const SubdivisionScheme& scheme, const Simplex& s, int levels, std::size_t cap) {
    if (levels < 0) throw InvalidArgument("iterate needs a non-negative level");
    const double total = std::pow(static_cast<double>(scheme.cardinality(s.k())), levels);
    if (total > static_cast<double>(cap))
        throw BudgetExceeded("iterate would produce " + std::to_string(total) + " simplices (cap " +
                             std::to_string(cap) + ")");
    Chain cur;
    cur.add(s, 1);
    for (int l = 0; l < levels; ++l) {
        Chain next;
        for (const auto& t : cur) next.append(scheme.children(t.simplex), t.coeff);
        cur = std::move(next);
    }
    return cur;
}

Chain split_edge(const Simplex& s, int i, int j, double t) {
    if (i == j || i < 0 || j < 0 || i > s.k() || j > s.k()) throw InvalidArgument("invalid split edge");
    const Point p = t * s.vertex(i) + (1.0 - t) * s.vertex(j);
    VertexMatrix a = s.vertices();
    VertexMatrix b = s.vertices();
    a.col(i) = p;
    b.col(j) = p;
    Chain c;
    c.add(Simplex(a), 1);
    c.add(Simplex(b), 1);
    return c;
}

Chain random_two_piece_split(const Simplex& s, std::mt19937_64& rng, double t_lo, double t_hi) {
    const int k = s.k();
    if (k < 1) throw InvalidArgument("split needs k >= 1");
    std::uniform_int_distribution<int> pick(0, k * (k + 1) / 2 - 1);
    int e = pick(rng);
    int i = 0, j = 1;
    for (int a = 0; a <= k; ++a)
        for (int b = a + 1; b <= k; ++b)
            if (e-- == 0) {
                i = a;
                j = b;
            }
    std::uniform_real_distribution<double> tt(t_lo, t_hi);
    const double t = t_hi > t_lo ? tt(rng) : t_lo;
    return split_edge(s, i, j, t);
}

SubdivisionStats stats(const SubdivisionScheme& scheme, const Simplex& s, int max_level, std::size_t cap) {
    if (max_level < 1) throw InvalidArgument("stats needs max_level >= 1");
    const double total = std::pow(static_cast<double>(scheme.cardinality(s.k())), max_level);
    if (total > static_cast<double>(cap))
        throw BudgetExceeded("stats would visit " + std::to_string(total) + " simplices");
    SubdivisionStats st;
    st.scheme = scheme.name();
    st.k = s.k();
    st.cardinality = scheme.cardinality(s.k());
    const double e0 = eccentricity(s);
    std::vector<Simplex> cur{s};
    for (int l = 1; l <= max_level; ++l) {
        LevelStats ls;
        ls.level = l;
        std::vector<Simplex> next;
        double vmin = std::numeric_limits<double>::infinity(), vmax = 0;
        for (const auto& p : cur) {
            const double dp = p.diameter();
            for (const auto& t : scheme.children(p)) {
                const Simplex& w = t.simplex;
                ls.c = std::max(ls.c, w.diameter() / dp);
                ls.ecc_ratio = std::max(ls.ecc_ratio, eccentricity(w) / e0);
                const double v = volume(w);
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
                next.push_back(w);
            }
        }
        ls.count = next.size();
        ls.vol_ratio = vmax / vmin;
        st.levels.push_back(ls);
        st.c = std::max(st.c, ls.c);
        st.norm_M = std::max(st.norm_M, ls.ecc_ratio);
        cur = std::move(next);
    }
    if (max_level >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = max_level;
        for (const auto& ls : st.levels) {
            const double x = std::log(static_cast<double>(ls.level));
            const double y = std::log(ls.vol_ratio);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        st.vol_ratio_growth = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return st;
}

Eigen::VectorXd WhitneyDecomposition::to_local(const Point& x) const {
    return frame.transpose() * (x - origin);
}

Point WhitneyDecomposition::to_ambient(const Eigen::VectorXd& y) const { return origin + frame * y; }

namespace {

struct Facets {
    Eigen::MatrixXd normals;  // (k+1)×k, unit outward normals
    Eigen::VectorXd offsets;  // normals·y <= offsets
};

Facets facets_of(const Eigen::MatrixXd& y) {
    // y: k×(k+1) flattened vertices
    const int k = static_cast<int>(y.rows());
    Facets f;
    f.normals.resize(k + 1, k);
    f.offsets.resize(k + 1);
    const Eigen::VectorXd centroid = y.rowwise().mean();
    for (int i = 0; i <= k; ++i) {
        // hyperplane through all vertices except i
        Eigen::MatrixXd pts(k, k);
        for (int j = 0, c = 0; j <= k; ++j)
            if (j != i) pts.col(c++) = y.col(j);
        Eigen::VectorXd n(k);
        if (k == 1) {
            n(0) = 1.0;
        } else {
            Eigen::MatrixXd e(k, k - 1);
            for (int j = 1; j < k; ++j) e.col(j - 1) = pts.col(j) - pts.col(0);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(e.transpose());
            n = lu.kernel().col(0);
        }
        n.normalize();
        double off = n.dot(pts.col(0));
        if (n.dot(centroid) > off) {
            n = -n;
            off = -off;
        }
        f.normals.row(i) = n.transpose();
        f.offsets(i) = off;
    }
    return f;
}

}  // namespace

WhitneyDecomposition whitney_cubes(const Simplex& s, int max_level) {
    const int k = s.k();
    const int d = s.d();
    if (k < 1) throw InvalidArgument("Whitney cubes need k >= 1");
    if (s.degenerate()) throw DegenerateSimplex("Whitney cubes of a degenerate simplex");
    WhitneyDecomposition w;
    w.origin = s.vertex(0);
    const EdgeMatrix e = s.edges();
    if (k == d) {
        w.frame = EdgeMatrix::Identity(d, d);
        w.sign = e.determinant() > 0 ? 1 : -1;
    } else {
        const Eigen::MatrixXd em = e;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(em);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
        const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k);
        for (int j = 0; j < k; ++j)
            if (r(j, j) < 0) q.col(j) = -q.col(j);
        w.frame = q;
        w.sign = 1;
    }
    w.volume = volume(s);
    Eigen::MatrixXd y(k, k + 1);
    for (int i = 0; i <= k; ++i) y.col(i) = w.to_local(s.vertex(i));
    const Facets f = facets_of(y);
    const double rootk = std::sqrt(static_cast<double>(k));

    const double diam = s.diameter();
    w.min_level = static_cast<int>(std::floor(-std::log2(diam)));
    w.max_level = std::max(max_level, w.min_level);
    const int nlev = w.max_level - w.min_level + 1;
    w.level_counts.assign(nlev, 0);
    w.remainder_counts.assign(nlev, 0);

    const Eigen::VectorXd lo = y.rowwise().minCoeff();
    const Eigen::VectorXd hi = y.rowwise().maxCoeff();
    const double side0 = std::ldexp(1.0, -w.min_level);
    Eigen::VectorXi m_lo(k), m_hi(k);
    for (int j = 0; j < k; ++j) {
        m_lo(j) = static_cast<int>(std::floor(lo(j) / side0));
        m_hi(j) = static_cast<int>(std::ceil(hi(j) / side0)) - 1;
    }

    // corner-wise signed distances give both containment and distance to the complement
    auto classify = [&](const Eigen::VectorXd& base, double side, double& dist, bool& outside) {
        dist = std::numeric_limits<double>::infinity();
        outside = false;
        for (int i = 0; i <= k; ++i) {
            double worst = std::numeric_limits<double>::infinity();
            double best = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < (1 << k); ++c) {
                double v = f.offsets(i);
                for (int j = 0; j < k; ++j) v -= f.normals(i, j) * (base(j) + (((c >> j) & 1) ? side : 0.0));
                worst = std::min(worst, v);
                best = std::max(best, v);
            }
            dist = std::min(dist, worst);
            if (best <= 0) outside = true;
        }
    };

    struct Pending {
        int level;
        Eigen::VectorXi m;
    };
    std::vector<Pending> stack;
    {
        Eigen::VectorXi m = m_lo;
        while (true) {
            stack.push_back({w.min_level, m});
            int j = 0;
            while (j < k && m(j) == m_hi(j)) {
                m(j) = m_lo(j);
                ++j;
            }
            if (j == k) break;
            ++m(j);
        }
        std::reverse(stack.begin(), stack.end());
    }
    while (!stack.empty()) {
        Pending p = stack.back();
        stack.pop_back();
        const double side = std::ldexp(1.0, -p.level);
        const Eigen::VectorXd base = p.m.cast<double>() * side;
        double dist;
        bool outside;
        classify(base, side, dist, outside);
        if (outside) continue;
        if (dist >= rootk * side) {
            WhitneyCube c;
            c.level = p.level;
            c.side = side;
            c.local_base = base;
            c.dist = dist;
            EdgeMatrix frame = w.frame;
            c.cube = Cube(w.to_ambient(base), frame, side, w.sign);
            w.cubes.push_back(c);
            w.covered_volume += std::pow(side, k);
            ++w.level_counts[p.level - w.min_level];
            continue;
        }
        if (p.level >= w.max_level) {
            ++w.remainder_counts[p.level - w.min_level];
            continue;
        }
        for (int c = (1 << k) - 1; c >= 0; --c) {
            Eigen::VectorXi m = 2 * p.m;
            for (int j = 0; j < k; ++j) m(j) += (c >> j) & 1;
            stack.push_back({p.level + 1, m});
        }
    }
    return w;
}

double whitney_bump_1d(double u) {
    const double a = std::abs(u);
    if (a <= 0.5) return 1.0;
    if (a >= 2.0 / 3.0) return 0.0;
    const double t = (2.0 / 3.0 - a) * 6.0;  // 1 at |u| = 1/2, 0 at |u| = 2/3
    const double f1 = std::exp(-1.0 / t);
    const double f0 = std::exp(-1.0 / (1.0 - t));
    return f1 / (f1 + f0);
}

WhitneyPartition::WhitneyPartition(const Simplex& s, int max_level) {
    if (s.k() != s.d() || s.d() > 2)
        throw UnsupportedDimension("Whitney partition of unity is implemented for k = d <= 2");
    dec_ = whitney_cubes(s, max_level);
    const std::size_t n = dec_.cubes.size();
    const int k = s.k();
    neighbours_.assign(n, {});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto lo = [&](std::size_t i, int j) { return dec_.cubes[i].local_base(j) - dec_.cubes[i].side / 6.0; };
    auto hi = [&](std::size_t i, int j) {
        return dec_.cubes[i].local_base(j) + dec_.cubes[i].side * (7.0 / 6.0);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lo(a, 0) < lo(b, 0) || (lo(a, 0) == lo(b, 0) && a < b);
    });
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = order[a];
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t j = order[b];
            if (lo(j, 0) >= hi(i, 0)) break;
            bool overlap = true;
            for (int c = 1; c < k; ++c)
                if (lo(j, c) >= hi(i, c) || lo(i, c) >= hi(j, c)) overlap = false;
            if (overlap) {
                neighbours_[i].push_back(j);
                neighbours_[j].push_back(i);
            }
        }
    }
    for (auto& nb : neighbours_) std::sort(nb.begin(), nb.end());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = dec_.cubes[i];
        Eigen::VectorXi m(k);
        for (int j = 0; j < k; ++j) m(j) = static_cast<int>(std::llround(c.local_base(j) / c.side));
        lookup_[key(c.level, m)] = i;
    }
}

std::uint64_t WhitneyPartition::key(int level, const Eigen::VectorXi& m) const {
    std::uint64_t h = static_cast<std::uint64_t>(level + 1024);
    for (int j = 0; j < m.size(); ++j) h = h * 0x100000001b3ULL ^ static_cast<std::uint64_t>(m(j) + (1 << 30));
    return h;
}

double WhitneyPartition::bump(std::size_t i, const Point& x) const {
    const auto& c = dec_.cubes[i];
    const Eigen::VectorXd y = dec_.to_local(x);
    double b = 1.0;
    for (int j = 0; j < y.size() && b > 0; ++j) b *= whitney_bump_1d((y(j) - c.local_base(j)) / c.side - 0.5);
    return b;
}

double WhitneyPartition::weight(std::size_t i, const Point& x) const {
    const double own = bump(i, x);
    if (own == 0) return 0.0;
    double total = own;
    for (std::size_t j : neighbours_[i]) total += bump(j, x);
    return own / total;
}

std::vector<std::size_t> WhitneyPartition::cubes_near(const Point& x) const {
    std::vector<std::size_t> out;
    const Eigen::VectorXd y = dec_.to_local(x);
    const int k = static_cast<int>(y.size());
    for (int level = dec_.min_level; level <= dec_.max_level; ++level) {
        const double side = std::ldexp(1.0, -level);
        Eigen::VectorXi m0(k);
        for (int j = 0; j < k; ++j) m0(j) = static_cast<int>(std::floor(y(j) / side));
        for (int c = 0; c < static_cast<int>(std::pow(3, k)); ++c) {
            Eigen::VectorXi m = m0;
            int r = c;
            for (int j = 0; j < k; ++j) {
                m(j) += r % 3 - 1;
                r /= 3;
            }
            auto it = lookup_.find(key(level, m));
            if (it != lookup_.end() && dec_.cubes[it->second].level == level &&
                (dec_.cubes[it->second].local_base - m.cast<double>() * side).cwiseAbs().maxCoeff() < 1e-9 * side &&
                bump(it->second, x) > 0)
                out.push_back(it->second);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double WhitneyPartition::sum(const Point& x) const {
    double s = 0;
    for (std::size_t i : cubes_near(x)) s += weight(i, x);
    return s;
}

}  // namespace roughforms
