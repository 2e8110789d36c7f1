#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "roughforms/geometry.hpp"

namespace roughforms {

/// Constants of a strongly regular method as used by the sewing tail bound.
struct RegularityConstants {
    double c = 1.0;       // max child/parent diameter ratio
    double norm_M = 1.0;  // sup e(w)/e(σ) over all levels
};

/// A method of subdivision: σ ↦ M_1(σ). Children come back as a chain whose
/// coefficients fix orientation, so Σ coeff·[child] has the orientation of σ.
class SubdivisionScheme {
public:
    virtual ~SubdivisionScheme() = default;
    virtual Chain children(const Simplex& s) const = 0;
    virtual std::string name() const = 0;
    virtual int cardinality(int k) const = 0;
    /// Known constants for sewing tail bounds; empty when the method is not strongly regular.
    virtual std::optional<RegularityConstants> constants(const Simplex&) const { return std::nullopt; }
};

using SchemePtr = std::shared_ptr<const SubdivisionScheme>;

/// Edgewise (Freudenthal/Kuhn) subdivision into 2^k children, k <= 3.
class EdgewiseScheme : public SubdivisionScheme {
public:
    Chain children(const Simplex& s) const override;
    std::string name() const override { return "edgewise"; }
    int cardinality(int k) const override { return 1 << k; }
    std::optional<RegularityConstants> constants(const Simplex& s) const override;
};

/// Barycentric subdivision into (k+1)! children. Valid but not strongly regular.
class BarycentricScheme : public SubdivisionScheme {
public:
    Chain children(const Simplex& s) const override;
    std::string name() const override { return "barycentric"; }
    int cardinality(int k) const override;
};

SchemePtr edgewise();
SchemePtr barycentric();
SchemePtr scheme_by_name(const std::string& name);

Chain edgewise_children(const Simplex& s);
Chain barycentric_children(const Simplex& s);

inline constexpr std::size_t kDefaultIterateCap = std::size_t(1) << 22;

/// M_ℓ(σ) as a chain; ℓ = 0 gives σ itself.
Chain iterate(const SubdivisionScheme& scheme, const Simplex& s, int levels,
              std::size_t cap = kDefaultIterateCap);

/// Split σ at the point t·v_i + (1-t)·v_j of edge (i, j) into two simplices of the same orientation.
Chain split_edge(const Simplex& s, int i, int j, double t);
/// Edge split at a random edge and t drawn from [t_lo, t_hi].
Chain random_two_piece_split(const Simplex& s, std::mt19937_64& rng, double t_lo = 0.5, double t_hi = 0.5);

struct LevelStats {
    int level = 0;
    std::size_t count = 0;
    double c = 0;          // max child/parent diameter ratio from level-1 to level
    double ecc_ratio = 0;  // max e(w)/e(σ) at this level
    double vol_ratio = 0;  // max/min child volume at this level
};

struct SubdivisionStats {
    std::string scheme;
    int k = 0;
    int cardinality = 0;
    double c = 0;
    double norm_M = 0;
    std::vector<LevelStats> levels;
    /// Least-squares slope of log(vol_ratio) against log(level): polynomial growth order.
    double vol_ratio_growth = 0;
};

SubdivisionStats stats(const SubdivisionScheme& scheme, const Simplex& s, int max_level,
                       std::size_t cap = kDefaultIterateCap);

struct WhitneyCube {
    int level = 0;
    Cube cube;                  // embedded in R^d
    Eigen::VectorXd local_base; // lower corner in the flattened k-plane
    double side = 0;
    double dist = 0;            // distance to the complement inside the k-plane
};

/// Dyadic Whitney cubes of a simplex, computed after isometric flattening of its k-plane.
struct WhitneyDecomposition {
    Point origin;               // v_0
    EdgeMatrix frame;           // d×k orthonormal frame of the k-plane
    int sign = 1;               // orientation of σ relative to the frame
    std::vector<WhitneyCube> cubes;
    double volume = 0;          // Vol^k(σ)
    double covered_volume = 0;
    std::vector<std::size_t> level_counts;      // |I_n| indexed by n - min_level
    std::vector<std::size_t> remainder_counts;  // undecided cubes per level (|J_n| diagnostic)
    int min_level = 0;
    int max_level = 0;

    Eigen::VectorXd to_local(const Point& x) const;
    Point to_ambient(const Eigen::VectorXd& y) const;
};

WhitneyDecomposition whitney_cubes(const Simplex& s, int max_level);

/// Smooth partition of unity subordinate to the 4/3-dilated Whitney cubes (k = d <= 2).
class WhitneyPartition {
public:
    WhitneyPartition(const Simplex& s, int max_level);

    const WhitneyDecomposition& decomposition() const { return dec_; }
    std::size_t size() const { return dec_.cubes.size(); }
    /// φ_i at an ambient point.
    double weight(std::size_t i, const Point& x) const;
    /// Σ_i φ_i(x).
    double sum(const Point& x) const;
    /// Unnormalized bump of cube i (1 on the cube, 0 outside the dilated cube).
    double bump(std::size_t i, const Point& x) const;
    const std::vector<std::size_t>& neighbours(std::size_t i) const { return neighbours_[i]; }
    /// Indices of cubes whose dilated support contains x.
    std::vector<std::size_t> cubes_near(const Point& x) const;

private:
    WhitneyDecomposition dec_;
    std::vector<std::vector<std::size_t>> neighbours_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
    std::uint64_t key(int level, const Eigen::VectorXi& m) const;
};

/// Smooth cutoff: 1 on [-1/2, 1/2], 0 outside (-2/3, 2/3).
double whitney_bump_1d(double u);

}  // namespace roughforms
