#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roughforms/geometry.hpp"
#include "roughforms/subdivision.hpp"

namespace roughforms {

/// A germ Ξ: a not necessarily additive, orientation-antisymmetric functional on k-simplices.
class Germ {
public:
    virtual ~Germ() = default;
    /// `tol` is the tolerance budget for any nested evaluation the germ performs.
    virtual double eval(const Simplex& s, double tol) const = 0;
    virtual int k() const = 0;

    /// Declared exponents and, optionally, a bound on ⟦δΞ⟧_γ for the analytic tail bound.
    std::optional<double> eta;
    std::optional<double> gamma;
    std::optional<double> delta_norm;
    /// The germ is exactly additive (a cochain); sewing returns Ξ(σ) at depth 0.
    bool additive = false;
};

using GermPtr = std::shared_ptr<const Germ>;
using GermFunction = std::function<double(const Simplex&, double)>;

GermPtr make_germ(int k, GermFunction f, std::optional<double> gamma = std::nullopt,
                  std::optional<double> eta = std::nullopt);
/// a·Ξ_1 + b·Ξ_2
GermPtr linear_combination(double a, GermPtr g1, double b, GermPtr g2);

struct SewOptions {
    SchemePtr scheme = edgewise();
    double tol = 1e-8;
    /// 0 selects the default for k: 14, 10, 7 for k = 1, 2, 3.
    int depth_max = 0;
    /// Levels before the no-convergence test starts.
    int burn_in = 4;
    bool use_analytic_tail = true;
};

int default_depth_max(int k);

struct SewingResult {
    double value = 0;
    double tail_bound = 0;
    int depth = 0;
    std::vector<double> level_values;
    std::string stop_rule;  // "additive", "analytic", "cauchy", "budget-tail"
};

/// Sewing along the scheme: limit of the level sums Σ_{w ∈ M_n(σ)} Ξ(w).
SewingResult sew(const Germ& germ, const Simplex& s, const SewOptions& opts = {});
/// Coefficient-weighted sum of sew over the chain, tolerance split evenly over terms.
double sew_chain(const Germ& germ, const Chain& c, const SewOptions& opts = {});
SewingResult sew_chain_result(const Germ& germ, const Chain& c, const SewOptions& opts = {});

/// Level sums S_0..S_depth without any stopping rule. `tol` is passed to nested evaluations.
std::vector<double> level_sums(const Germ& germ, const Simplex& s, const SubdivisionScheme& scheme, int depth,
                               double tol = 1e-8);

/// δ_{K;σ}Ξ = Ξ(σ) − Σ_{σ'∈K} Ξ(σ'); K must be a subdivision of σ (volume check, 1e-8 relative).
double defect(const Germ& germ, const Simplex& s, const Chain& K, double tol = 1e-8);

struct Region {
    Point lo;
    Point hi;
    static Region box(int d, double lo, double hi);
};

struct SamplerSpec {
    Region region;
    int k = 1;
    /// Dyadic bands b: sampled diameters lie in [2^{-b-1}, 2^{-b}].
    std::vector<int> bands{1, 2, 3, 4};
    int per_band = 25;
    double max_ecc = 50.0;
    std::uint64_t seed = 1;
    int scheme_depth = 3;
    int splits = 2;
    SchemePtr scheme = edgewise();
    /// Extra simplices added to every estimate (e.g. the simplices under test).
    std::vector<Simplex> extra;
};

struct GermNormEstimate {
    double eta_norm = 0;
    double delta_gamma_norm = 0;
    std::size_t simplices = 0;
    std::size_t families = 0;
    std::vector<int> bands;
    std::vector<double> band_eta;
    std::vector<double> band_delta;
};

/// Random simplex with diameter in the band, eccentricity at most max_ecc, centred in the region.
Simplex sample_simplex(std::mt19937_64& rng, const Region& region, int k, int band, double max_ecc);

GermNormEstimate estimate_germ_norms(const Germ& germ, const SamplerSpec& spec, double eta, double gamma);

struct ProbeResult {
    double rate = 0;                  // slope of log|increment| against level
    std::optional<double> predicted;  // (γ − k)·log c when γ and c are known
    std::vector<double> increments;
    int floor_level = -1;
};

/// Least-squares decay rate of the level increments of a single simplex.
ProbeResult convergence_probe(const Germ& germ, const Simplex& s, const SubdivisionScheme& scheme, int depth,
                              double tol = 1e-8);
/// Decay rate of the root-mean-square level increment over a family of simplices,
/// fitted over levels [fit_from, fit_to].
ProbeResult convergence_probe_family(const Germ& germ, const std::vector<Simplex>& family,
                                     const SubdivisionScheme& scheme, int depth, int fit_from, int fit_to,
                                     double tol = 1e-8);

/// Least-squares slope and intercept.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace roughforms
