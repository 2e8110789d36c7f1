#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roughforms/expr.hpp"
#include "roughforms/geometry.hpp"
#include "roughforms/holder.hpp"
#include "roughforms/sewing.hpp"
#include "roughforms/subdivision.hpp"

namespace roughforms {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Provenance { smooth, product, wedge, pullback, coboundary, gaussian, zero_form, memo, custom };
std::string to_string(Provenance p);

/// Sewing settings shared by the cochains built from germs.
struct FormOptions {
    SchemePtr scheme = edgewise();
    int depth_max = 0;
    int burn_in = 4;
};

/// A rough k-form on R^d: additive, antisymmetric evaluation on simplices with a tolerance contract.
class Cochain {
public:
    Cochain(int k, int d, double alpha, double beta, Provenance provenance, std::string name)
        : k_(k), d_(d), alpha_(alpha), beta_(beta), provenance_(provenance), name_(std::move(name)) {}
    virtual ~Cochain() = default;

    /// A(σ) to absolute accuracy tol.
    virtual double eval(const Simplex& s, double tol = 1e-8) const = 0;
    /// The germ this cochain is sewn from, if any.
    virtual GermPtr germ() const { return nullptr; }

    /// Σ coeff·A(σ_i), tolerance split evenly.
    double eval_chain(const Chain& c, double tol = 1e-8) const;

    int k() const { return k_; }
    int d() const { return d_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    Provenance provenance() const { return provenance_; }
    const std::string& name() const { return name_; }

protected:
    void check(const Simplex& s) const;

private:
    int k_;
    int d_;
    double alpha_;
    double beta_;
    Provenance provenance_;
    std::string name_;
};

using CochainPtr = std::shared_ptr<const Cochain>;

/// A cochain given by the sewing of a germ.
class SewnCochain : public Cochain {
public:
    SewnCochain(GermPtr germ, int d, double alpha, double beta, Provenance provenance, std::string name,
                FormOptions opts);
    double eval(const Simplex& s, double tol = 1e-8) const override;
    SewingResult sew_result(const Simplex& s, double tol = 1e-8) const;
    GermPtr germ() const override { return germ_; }
    const FormOptions& options() const { return opts_; }

private:
    GermPtr germ_;
    FormOptions opts_;
};

/// f_I dx^I with a 0-based strictly increasing index set I.
struct FormComponent {
    std::vector<int> index;
    std::function<double(const Point&)> f;
    bool constant = false;
    /// Optional partial derivatives ∂_j f for j = 0..d-1, used for the classical exterior derivative.
    std::vector<std::function<double(const Point&)>> gradient;
};

/// Smooth form Σ_I f_I dx^I, sewn from the germ Σ_I f_I(bary σ)·dx^I(σ).
class SmoothForm : public SewnCochain {
public:
    SmoothForm(int d, std::vector<FormComponent> components, FormOptions opts, std::string name);
    const std::vector<FormComponent>& components() const { return components_; }

private:
    std::vector<FormComponent> components_;
};

std::shared_ptr<const SmoothForm> smooth_form(int d, std::vector<FormComponent> components, FormOptions opts = {},
                                              std::string name = "smooth");
/// Components as expressions in x1..xd, index sets 1-based as written in configs.
std::shared_ptr<const SmoothForm> smooth_form(int d, const std::vector<std::pair<std::vector<int>, expr::Expr>>& comps,
                                              FormOptions opts = {}, std::string name = "smooth");
/// Classical dA = Σ_I Σ_j ∂_j f_I dx^j ∧ dx^I; needs gradients on every non-constant component.
std::shared_ptr<const SmoothForm> smooth_exterior_derivative(const SmoothForm& a, FormOptions opts = {});

/// The 0-form v ↦ g(v), declared (1, γ_g).
CochainPtr zero_form(const HolderFunction& g, int d);

enum class MeasureRule { vertex_average, barycenter };
std::string to_string(MeasureRule r);
MeasureRule measure_rule_by_name(const std::string& name);

/// μ_σ(f)
double measure_average(const HolderFunction& f, const Simplex& s, MeasureRule rule);

struct ProductOptions {
    MeasureRule rule = MeasureRule::vertex_average;
    /// Build the germ even when α + γ <= 1 (divergence demonstrations only).
    bool allow_divergent = false;
    FormOptions form;
};

/// f·A sewn from μ_σ(f)·A(σ); declared (α, (α+γ-1)∧β), germ exponent γ + k - 1 + α.
std::shared_ptr<const SewnCochain> product(const HolderFunction& f, CochainPtr a, const ProductOptions& opts = {});
/// The germ μ_σ(f)·A(σ) alone.
GermPtr product_germ(const HolderFunction& f, CochainPtr a, MeasureRule rule);

/// dA(ω) := A(∂ω), memoizing face values; declared (β, ∞).
CochainPtr coboundary(CochainPtr a);

/// df∧A := d(f·A) − f·dA; declared ((α+γ-1)∧β, β+γ-1).
CochainPtr wedge_d(const HolderFunction& f, CochainPtr a, const ProductOptions& opts = {});

/// g_0·dg_1∧…∧dg_n∧A by iterated wedge_d and a final product.
CochainPtr zust_form(const HolderFunction& g0, const std::vector<HolderFunction>& gs, CochainPtr a,
                     const ProductOptions& opts = {});

/// F: R^m → R^d with Jacobian (analytic or central differences) and declared C^{1,η} exponent.
struct SmoothMap {
    int m = 0;
    int d = 0;
    std::function<Point(const Point&)> F;
    std::function<Eigen::MatrixXd(const Point&)> jacobian;
    double eta = 1.0;
    bool affine = false;
    std::string name;

    Point operator()(const Point& x) const { return F(x); }
    Eigen::MatrixXd jac(const Point& x) const;
};

SmoothMap identity_map(int d);
SmoothMap affine_map(const Eigen::MatrixXd& a, const Point& b);
/// outer ∘ inner
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);
/// Components as expressions in x1..xm; Jacobian by symbolic differentiation.
SmoothMap expression_map(int m, const std::vector<expr::Expr>& components, double eta = 1.0);
/// Max relative error of the Jacobian against central differences over sampled points.
double jacobian_check(const SmoothMap& f, const Region& region, std::size_t points, std::uint64_t seed);

/// F_*σ = [F(v_0), …, F(v_k)]
Simplex push_forward(const SmoothMap& f, const Simplex& s);
/// F*φ = φ∘F
HolderFunction pullback(const SmoothMap& f, const HolderFunction& phi);
/// F*A sewn from σ ↦ A(F_*σ); declared (α, (α(1+η)-1)∧β).
std::shared_ptr<const SewnCochain> pullback(const SmoothMap& f, CochainPtr a, FormOptions opts = {});

/// Thread-safe memo of a cochain keyed by quantized vertices, orientation-canonical, and tolerance bucket.
CochainPtr memoized(CochainPtr a, double quantum = 1e-12);

struct StokesReport {
    double lhs = 0;  // ∫_ω dA
    double rhs = 0;  // Σ_{F ∈ ∂ω} A(F)
    double residual = 0;
};

/// lhs sewn from the boundary germ w ↦ Σ_{F∈∂w} Ξ_A(F), rhs from per-face evaluation of A.
StokesReport stokes_residual(const Cochain& a, const Simplex& omega, double tol = 1e-8, FormOptions opts = {});
/// Germ-level Stokes at fixed depths without stopping rules: lhs is the level sum of the boundary
/// germ at depth_max (default for k+1), rhs the level sums of A's germ on the faces at the default
/// depth for k. Needs a germ.
StokesReport stokes_residual_at_depth(const Cochain& a, const Simplex& omega, FormOptions opts = {}, double tol = 1e-8);
/// lhs from an independently constructed dA.
StokesReport stokes_residual(const Cochain& a, const Cochain& da, const Simplex& omega, double tol = 1e-8);

struct NormBand {
    int band = 0;
    std::size_t count = 0;
    double sup_mass = 0;      // |A(σ)| / mass_α(σ)
    double sup_diam = 0;      // |A(σ)| / diam^{k-1+α}
    double sup_boundary = 0;  // |A(∂ω)| / mass_β(ω)
    std::size_t boundary_count = 0;
};

struct NormReport {
    double alpha = 0;
    double beta = 0;
    double norm_alpha = 0;     // max over bands of sup_mass
    double norm_diam = 0;      // max over bands of sup_diam
    double norm_boundary = 0;  // max over bands of sup_boundary
    double max_ratio = 0;      // max over bands of sup_mass / sup_diam
    double ecc_cap = 0;
    double uncapped_sup_mass = 0;
    std::size_t samples = 0;
    std::size_t boundary_samples = 0;
    std::vector<NormBand> bands;
};

NormReport norm_estimate(const Cochain& a, double alpha, double beta, const SamplerSpec& spec, double tol = 1e-8);
/// band,count,sup_mass,sup_diam,sup_boundary
std::string norm_report_csv(const NormReport& r);

/// Radius of the smallest ball containing the points (columns).
double min_enclosing_radius(const Eigen::MatrixXd& points);
/// Σ_i (k r^{k-1} μ_i^α + r^k μ_i^β) over the k+1 single-vertex moves from σ to σ'.
double flat_norm_upper(const Simplex& s, const Simplex& t, double alpha, double beta);
double flat_norm_upper(const Simplex& s, const Simplex& t, double alpha, double beta, double r);

struct PullbackProbe {
    double exponent = 0;
    double predicted = 0;  // (k-1+α(1+η)) ∧ (k+β(1+η))
    std::vector<double> diameters;
    std::vector<double> bounds;
};

/// Affine interpolant F^σ at a point of σ's affine hull.
Point affine_interpolant(const SmoothMap& f, const Simplex& s, const Point& x);
/// max over edgewise children σ' (depths 1, 2) of flat_norm_upper(F^σ_*σ', F_*σ').
double interpolation_defect(const SmoothMap& f, const Simplex& s, double alpha, double beta);
PullbackProbe pullback_regularity_probe(const SmoothMap& f, int k, double alpha, double beta, const Region& region,
                                        std::size_t samples, std::uint64_t seed = 1);

/// Named smooth forms used by tests, acceptance runs and the CLI.
struct CatalogEntry {
    std::string name;
    int d = 0;
    int k = 0;
    std::vector<std::pair<std::vector<int>, std::string>> components;  // 1-based index sets
};

const std::vector<CatalogEntry>& form_catalog();
const CatalogEntry& catalog_entry(const std::string& name);
std::shared_ptr<const SmoothForm> catalog_form(const std::string& name, FormOptions opts = {});

}  // namespace roughforms
