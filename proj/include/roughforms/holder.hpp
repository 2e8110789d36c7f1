#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "roughforms/geometry.hpp"
#include "roughforms/sewing.hpp"

namespace roughforms {

/// W(x) = Σ_{j=0}^{terms-1} 2^{-jγ} cos(2π·2^j⟨ξ_j, x⟩ + phase), unit vectors ξ_j drawn from the seed.
class Weierstrass {
public:
    Weierstrass(double gamma, std::uint64_t seed, int d, double phase = 0.0, int terms = 13);

    double operator()(const Point& x) const;
    double gamma() const { return gamma_; }
    std::uint64_t seed() const { return seed_; }
    double phase() const { return phase_; }
    int dim() const { return d_; }
    int terms() const { return static_cast<int>(weights_.size()); }
    const Point& direction(int j) const { return dirs_[j]; }
    /// terms·2^{1-γ}(2π)^γ, a bound on the γ-Hölder seminorm.
    double holder_constant() const;

private:
    double gamma_;
    std::uint64_t seed_;
    int d_;
    double phase_;
    std::vector<Point> dirs_;
    std::vector<double> weights_;
    std::vector<double> freqs_;
};

/// A scalar function on R^d with declared Hölder exponent γ and constant.
struct HolderFunction {
    std::function<double(const Point&)> f;
    double gamma = 1.0;
    double constant = 1.0;
    bool is_constant = false;
    std::string name;

    double operator()(const Point& x) const { return f(x); }
};

HolderFunction constant_function(double c);
/// x ↦ a·x + b.
HolderFunction affine_function(const Point& a, double b);
HolderFunction weierstrass_function(double gamma, std::uint64_t seed, int d, double phase = 0.0);

struct HolderCheck {
    double max_ratio = 0;  // max |f(x)-f(y)| / (C |x-y|^γ)
    std::size_t pairs = 0;
};

/// Spot check of the declared Hölder bound on random pairs with |x-y| in [2^-12, 1].
HolderCheck holder_spot_check(const HolderFunction& f, const Region& region, std::size_t pairs, std::uint64_t seed);

}  // namespace roughforms
