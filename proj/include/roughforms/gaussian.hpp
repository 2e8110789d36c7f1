#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roughforms/forms.hpp"

namespace roughforms {

/// Fractional Gaussian field on the torus [0, L)^d with symbol (1 + 2π|p|/L)^{-θ}.
struct SpectralFieldSpec {
    int d = 2;
    double theta = 1.0;
    int N = 64;  // grid points per axis, a power of two; modes satisfy |p_j| < N/2
    double L = 1.0;
    std::uint64_t seed = 0;
};

void validate(const SpectralFieldSpec& spec);
/// (1 + 2π|p|/L)^{-θ}.
double spectral_weight(const SpectralFieldSpec& spec, const std::vector<int>& p);
/// Σ_p w(p)² / L^d over the truncated lattice: the pointwise variance.
double point_variance(const SpectralFieldSpec& spec);

struct ModeLattice;

/// One realization g(x) = L^{-d/2} Σ_p ĝ(p) e^{2πi p·x/L}, ĝ(-p) = conj ĝ(p).
class FieldSample {
public:
    FieldSample(SpectralFieldSpec spec, std::shared_ptr<const ModeLattice> lattice,
                std::vector<std::complex<double>> half);

    /// Deterministic field from explicit coefficients; the conjugate partners are implied.
    static FieldSample from_coefficients(const SpectralFieldSpec& spec,
                                         const std::vector<std::pair<std::vector<int>, std::complex<double>>>& modes);

    const SpectralFieldSpec& spec() const { return spec_; }
    std::complex<double> coefficient(const std::vector<int>& p) const;
    double operator()(const Point& x) const;
    /// ∫_σ g dVol_k, exact for the trigonometric polynomial.
    double integrate(const Simplex& s) const;

    /// Real-space values at L·i/N, row-major with the last axis fastest. Empty until synthesized.
    const std::vector<double>& grid() const { return grid_; }
    void synthesize_grid();

    const ModeLattice& lattice() const { return *lattice_; }
    const std::vector<std::complex<double>>& half_coefficients() const { return half_; }

private:
    SpectralFieldSpec spec_;
    std::shared_ptr<const ModeLattice> lattice_;
    std::vector<std::complex<double>> half_;
    std::vector<double> grid_;
};

FieldSample sample_field(const SpectralFieldSpec& spec, bool synthesize_grid = true);

/// ∫ g f over the torus by the periodic trapezoidal rule on the synthesized grid.
double pair_field(const FieldSample& g, const std::function<double(const Point&)>& f);

/// Writes path.bin (little-endian float64 grid) and path.json (header).
void write_field_raw(const FieldSample& g, const std::string& path);

struct SobolevNorm {
    double value = 0;       // ‖δ_Q‖_{H^{-θ}}
    double tail = 0;        // bound on the truncated part of the norm
    double squared = 0;
    double squared_tail = 0;
    double cutoff = 0;      // truncation radius in units of 1/side along the cube
};

/// ‖δ_Q‖_{H^{-θ}(R^d)} with symbol (1 + 2π|ξ|)^{-θ}, from the Fourier transform of the cube
/// measure. Needs θ > (d-k)/2 and 1 <= k <= 2. max_cutoff caps the truncation radius
/// (0 selects 65536 for k = 1 and 512 for k = 2).
SobolevNorm delta_Q_sobolev(const Cube& q, double theta, double max_cutoff = 0);

/// A(σ) = Σ_I dx^I(σ)/Vol(σ) · ∫_σ A_I. All components share d, N and L.
CochainPtr gaussian_form(std::vector<FieldSample> components, int k, double alpha, double beta);

struct GaussianFormSpec {
    int d = 2;
    int k = 1;
    double theta = 1.5;
    int N = 256;
    double L = 1.0;
    std::uint64_t seed = 0;
};

/// ᾱ = (θ - d/2 + 1) ∧ 1 and β̄ = (θ - d/2) ∧ 1.
std::pair<double, double> gaussian_exponents(int d, double theta);

/// One component per I ∈ C^d_k, each drawn with its own sub-seed of (seed, sample).
std::vector<FieldSample> sample_components(const GaussianFormSpec& spec, std::uint64_t sample = 0);
/// The Gaussian k-form of one sample, declared with (α, β) = (alpha_scale·ᾱ, β̄ ∨ 0).
CochainPtr gaussian_form(const GaussianFormSpec& spec, std::uint64_t sample = 0, double alpha_scale = 1.0);

struct MomentFit {
    std::string part;  // "cube" or "boundary"
    int q = 2;
    std::vector<double> scales;  // cube diameters
    std::vector<double> moments;
    std::vector<double> moment_ci;
    std::vector<std::size_t> counts;
    double slope = 0;
    double ci = 0;  // 95% bootstrap half-width of the slope
    std::optional<double> predicted;
    std::optional<bool> pass;
    bool fixed_field = false;
};

struct KolmogorovOptions {
    int q = 2;
    std::vector<double> scales{0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
    std::size_t n_samples = 200;
    std::uint64_t seed = 0;
    /// Reuse the sample-0 form and resample positions only.
    bool fixed_field = false;
    double region = 1.0;  // cube base points uniform in [0, region)^d
    int bootstrap = 400;
    double max_ci = 0.3;
    double slope_tol = 0.15;
};

using FormSampler = std::function<CochainPtr(std::uint64_t sample)>;

/// E|A(Q)|^q over random k-cubes and E|A(∂Q)|^q over random (k+1)-cubes per diameter, with
/// log-log slopes compared against the given predictions.
std::pair<MomentFit, MomentFit> kolmogorov_fit(const FormSampler& sampler, int d, int k,
                                               std::optional<std::array<double, 2>> predicted,
                                               const KolmogorovOptions& opts);
/// Gaussian forms with predictions q(k-1+ᾱ) and q(k+β̄); none when β̄ <= 0.
std::pair<MomentFit, MomentFit> kolmogorov_fit(const GaussianFormSpec& spec, const KolmogorovOptions& opts);

/// scale,moment,n,ci rows.
std::string moment_fit_csv(const MomentFit& fit);
/// {"part", "slope", "predicted", "pass", "ci", "fixed_field", ...}.
std::string moment_fit_json(const MomentFit& fit);

}  // namespace roughforms
