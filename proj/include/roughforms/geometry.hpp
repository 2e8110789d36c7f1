#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <vector>

#include "roughforms/errors.hpp"

namespace roughforms {

/// Largest supported ambient dimension. Points and simplices live on the stack.
inline constexpr int kMaxDim = 4;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim + 1>;
using EdgeMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Oriented k-simplex in R^d. Columns of the vertex matrix are the vertices v_0..v_k;
/// orientation is the vertex order.
class Simplex {
public:
    Simplex() = default;
    explicit Simplex(const VertexMatrix& vertices);
    static Simplex from_points(const std::vector<std::vector<double>>& points);
    static Simplex from_points(std::initializer_list<std::initializer_list<double>> points);

    int k() const { return static_cast<int>(v_.cols()) - 1; }
    int d() const { return static_cast<int>(v_.rows()); }
    const VertexMatrix& vertices() const { return v_; }
    Point vertex(int i) const { return v_.col(i); }

    /// Columns v_i - v_0, i = 1..k.
    EdgeMatrix edges() const;
    Point barycenter() const;
    double diameter() const;
    double gram_determinant() const;
    /// Gram determinant at or below 1e-12 * diam^(2k).
    bool degenerate() const;

    Simplex swapped(int i, int j) const;
    /// The same point set with opposite orientation (k >= 1).
    Simplex reversed() const;
    /// The face opposite vertex i, vertex order otherwise kept.
    Simplex face(int i) const;

    bool operator==(const Simplex& other) const;

private:
    VertexMatrix v_;
};

struct ChainTerm {
    int coeff = 1;
    Simplex simplex;
};

/// Finite integer combination of oriented simplices of one k and d.
class Chain {
public:
    Chain() = default;
    Chain(std::initializer_list<ChainTerm> terms);

    void add(const Simplex& s, int coeff = 1);
    void append(const Chain& other, int coeff = 1);

    const std::vector<ChainTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    int k() const;
    int d() const;

    auto begin() const { return terms_.begin(); }
    auto end() const { return terms_.end(); }

private:
    std::vector<ChainTerm> terms_;
};

/// Isometric image of [0, side]^k. Frame columns are orthonormal directions.
struct Cube {
    Point base;
    EdgeMatrix frame;
    double side = 1.0;
    int sign = 1;

    Cube() = default;
    Cube(Point base, EdgeMatrix frame, double side, int sign = 1);
    int k() const { return static_cast<int>(frame.cols()); }
    int d() const { return static_cast<int>(base.size()); }
    Point center() const;
    /// Image of local coordinates u in [0, side]^k.
    Point at(const Eigen::VectorXd& u) const;
};

struct MassReport {
    double volume = 0;
    double diameter = 0;
    double h = 0;
    double mass = 0;
    double eccentricity = 0;
    std::vector<double> face_volumes;
    std::vector<double> heights;
};

double volume(const Simplex& s);
double diameter(const Simplex& s);
/// Distance from vertex i to the affine hull of the opposite face.
double height(const Simplex& s, int i);
MassReport mass_alpha(const Simplex& s, double alpha);
/// mass_alpha(s, alpha).mass without the report allocation.
double mass(const Simplex& s, double alpha);
double eccentricity(const Simplex& s);

/// ∂σ. Faces for k >= 2 carry coefficient +1 with the sign folded into vertex order;
/// for k = 1 the chain is [v1] - [v0].
Chain boundary(const Simplex& s);
Chain boundary(const Chain& c);

/// dx^I(σ) for a strictly increasing 0-based index set I with |I| = k.
double coordinate_projection(const Simplex& s, const std::vector<int>& index);

/// Kuhn triangulation of the parallelotope base + [0,1]^k·edges into k! simplices,
/// each oriented like the ordered edge frame.
Chain parallelotope_to_chain(const Point& base, const EdgeMatrix& edges);
Chain cube_to_chain(const Cube& q);
/// Axis box ⟦a, b⟧ spanned along the given axes; orientation is the product of the signs of b - a.
Chain axis_box_to_chain(const Point& a, const Point& b, const std::vector<int>& axes);

Simplex snap_to_grid(const Simplex& s, int n);
Point snap_to_grid(const Point& x, int n);

/// Sign of the permutation taking 0..n-1 to perm.
int permutation_sign(const std::vector<int>& perm);
/// All strictly increasing k-subsets of {0..d-1} in lexicographic order.
std::vector<std::vector<int>> index_sets(int d, int k);

/// Barycentric coordinates of x relative to a full-dimensional simplex (k = d).
Eigen::VectorXd barycentric_coordinates(const Simplex& s, const Point& x);

}  // namespace roughforms
