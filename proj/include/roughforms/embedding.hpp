#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roughforms/forms.hpp"

namespace roughforms {

/// ψ(x) = r^{-d} (1 - |x - c|²/r²)₊^m, a C^{m-1} bump supported in the ball B_r(c).
class TestFunction {
public:
    TestFunction(Point center, double radius, int m);

    double operator()(const Point& x) const;
    /// D^J ψ for a set J of distinct 0-based coordinates, |J| <= m.
    double derivative(const Point& x, const std::vector<int>& J) const;

    const Point& center() const { return c_; }
    double radius() const { return r_; }
    int order() const { return m_; }
    int dim() const { return static_cast<int>(c_.size()); }

private:
    Point c_;
    double r_;
    int m_;
    double norm_;
};

struct EmbeddingOptions {
    int nodes = 24;                                // Gauss-Legendre nodes per axis
    std::size_t budget = std::size_t(1) << 22;     // max quadrature points
    double tol = 1e-6;                             // cochain evaluation tolerance per box
};

/// Oriented axis box ⟦a, b⟧ spanned along the coordinates J, as a chain of k! simplices.
Chain axis_box(const Point& a, const Point& b, const std::vector<int>& J);

/// ⟨π_J A, ψ⟩ = (-1)^{|J|} ∫_{E^{J^c}} ∫_{E^J} A(⟦w+a, w+a+v⟧) D^Jψ(w+a+v) dv dw, anchored at the
/// lower corner a = c_J - r of the support box so that every box is positively oriented.
double pi_J(const Cochain& a, const TestFunction& psi, const std::vector<int>& J, const EmbeddingOptions& opts = {});

/// ∫ f ψ by the same tensor quadrature.
double pair_function(const std::function<double(const Point&)>& f, const TestFunction& psi, int nodes = 24);

struct ScalingPoint {
    std::vector<int> J;
    double lambda = 0;
    double value = 0;  // max over centers of |⟨π_J A, ψ^λ_x⟩|
};

struct ScalingProbe {
    std::vector<ScalingPoint> points;
    double slope = 0;      // fitted d log|⟨π_J A, ψ^λ⟩| / d log λ
    double predicted = 0;  // α - 1
};

ScalingProbe embedding_scaling_probe(const Cochain& a, const std::vector<int>& J, const std::vector<Point>& centers,
                                     const std::vector<double>& lambdas, int m, const EmbeddingOptions& opts = {});
/// {"J": [...], "lambda": λ, "value": v} objects, one per point.
std::string scaling_probe_json(const ScalingProbe& p);

struct IotaResult {
    double value = 0;
    double tail = 0;  // uncovered volume × sup|F| on the quadrature nodes
    std::size_t cubes = 0;
    double volume = 0;
    double covered_volume = 0;
};

/// A_F(σ) = sign(σ) Σ_{n,i} ∫ F φ_{n,i} over Whitney levels up to max_level (k = d <= 2).
IotaResult iota(const std::function<double(const Point&)>& f, const Simplex& s, int max_level, int nodes = 2);

/// The cochain σ ↦ A_F(σ) on R^d.
CochainPtr iota_cochain(std::function<double(const Point&)> f, int d, int max_level, int nodes = 2,
                        double alpha = 1.0);

/// Dictionary of shifted and scaled bumps inside a region.
std::vector<TestFunction> test_dictionary(const Region& region, std::size_t count, int m, std::uint64_t seed);

struct InjectivityWitness {
    double max_pairing = 0;  // max over ψ and J of |⟨π_J A, ψ⟩|
    double max_box = 0;      // max over sampled axis boxes of |A(⟦a, b⟧)|
};

/// Pairings against the dictionary for every J, and A on random axis boxes in the region.
InjectivityWitness injectivity_witness(const Cochain& a, const std::vector<TestFunction>& dictionary,
                                       const Region& region, std::size_t boxes, std::uint64_t seed,
                                       const EmbeddingOptions& opts = {});

}  // namespace roughforms
