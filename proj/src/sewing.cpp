#include "roughforms/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roughforms/parallel.hpp"
#include "roughforms/rng.hpp"

namespace roughforms {

namespace {

class FunctionGerm : public Germ {
public:
    FunctionGerm(int k, GermFunction f) : k_(k), f_(std::move(f)) {}
    double eval(const Simplex& s, double tol) const override { return f_(s, tol); }
    int k() const override { return k_; }

private:
    int k_;
    GermFunction f_;
};

constexpr std::size_t kFrontierSize = 64;

// Level sums along a scheme. Levels up to the frontier are stored; deeper levels are
// reached by depth-first traversal of each frontier simplex, summed in frontier order.
class LevelEngine {
public:
    LevelEngine(const Germ& germ, const Simplex& s, const SubdivisionScheme& scheme, double tol)
        : germ_(germ), scheme_(scheme), tol_(tol), card_(scheme.cardinality(s.k())) {
        Chain c;
        c.add(s, 1);
        levels_.push_back(std::move(c));
    }

    double sum(int n) {
        const double hint = tol_ / std::pow(static_cast<double>(card_), n);
        while (static_cast<int>(levels_.size()) <= n && levels_.back().size() < kFrontierSize) {
            Chain next;
            for (const auto& t : levels_.back()) next.append(scheme_.children(t.simplex), t.coeff);
            levels_.push_back(std::move(next));
        }
        const int f = std::min<int>(n, static_cast<int>(levels_.size()) - 1);
        const Chain& base = levels_[f];
        std::vector<double> parts(base.size());
        parallel_for(base.size(), [&](std::size_t i) {
            const auto& t = base.terms()[i];
            parts[i] = subtree(t.simplex, t.coeff, n - f, hint);
        });
        double total = 0;
        for (double p : parts) total += p;
        return total;
    }

private:
    double subtree(const Simplex& s, int coeff, int depth, double hint) const {
        if (depth == 0) return coeff * germ_.eval(s, hint);
        double total = 0;
        for (const auto& t : scheme_.children(s)) total += subtree(t.simplex, coeff * t.coeff, depth - 1, hint);
        return total;
    }

    const Germ& germ_;
    const SubdivisionScheme& scheme_;
    double tol_;
    int card_;
    std::vector<Chain> levels_;
};

// Tail of a geometric continuation of the increments; rho_floor is the contraction the germ exponent predicts.
double geometric_tail(const std::vector<double>& inc, double rho_floor, bool rough) {
    const std::size_t n = inc.size();
    if (n == 0) return std::numeric_limits<double>::infinity();
    const double last = inc[n - 1];
    if (last == 0) return 0.0;
    if (n < 4) return std::numeric_limits<double>::infinity();
    double rho = rho_floor;
    for (std::size_t i = n - 3; i < n; ++i) {
        if (inc[i - 1] == 0) return std::numeric_limits<double>::infinity();
        rho = std::max(rho, inc[i] / inc[i - 1]);
    }
    if (rho >= 0.95) return std::numeric_limits<double>::infinity();
    // Rough germs: envelope at rate rho, so a last increment that fell faster than rho does not
    // lower the estimate.
    double base = last;
    if (rough)
        for (std::size_t j = 1; j < 4; ++j) base = std::max(base, inc[n - 1 - j] * std::pow(rho, double(j)));
    return base * rho / (1.0 - rho);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

GermPtr make_germ(int k, GermFunction f, std::optional<double> gamma, std::optional<double> eta) {
    auto g = std::make_shared<FunctionGerm>(k, std::move(f));
    g->gamma = gamma;
    g->eta = eta;
    return g;
}

GermPtr linear_combination(double a, GermPtr g1, double b, GermPtr g2) {
    if (g1->k() != g2->k()) throw InvalidArgument("germs differ in degree");
    auto g = std::make_shared<FunctionGerm>(g1->k(), [a, b, g1, g2](const Simplex& s, double tol) {
        return a * g1->eval(s, tol) + b * g2->eval(s, tol);
    });
    if (g1->gamma && g2->gamma) g->gamma = std::min(*g1->gamma, *g2->gamma);
    if (g1->eta && g2->eta) g->eta = std::min(*g1->eta, *g2->eta);
    g->additive = g1->additive && g2->additive;
    return g;
}

int default_depth_max(int k) {
    switch (k) {
        case 1: return 14;
        case 2: return 10;
        case 3: return 7;
        default: return 5;
    }
}

std::vector<double> level_sums(const Germ& germ, const Simplex& s, const SubdivisionScheme& scheme, int depth,
                               double tol) {
    LevelEngine engine(germ, s, scheme, tol);
    std::vector<double> out;
    for (int n = 0; n <= depth; ++n) out.push_back(engine.sum(n));
    return out;
}

SewingResult sew(const Germ& germ, const Simplex& s, const SewOptions& opts) {
    if (germ.k() != s.k()) throw InvalidArgument("germ degree does not match the simplex");
    SewingResult r;
    if (s.k() == 0 || germ.additive) {
        r.value = germ.eval(s, opts.tol);
        r.level_values = {r.value};
        r.stop_rule = "additive";
        return r;
    }
    if (s.degenerate()) {
        r.level_values = {0.0};
        r.stop_rule = "additive";
        return r;
    }
    const int k = s.k();
    const int depth_max = opts.depth_max > 0 ? opts.depth_max : default_depth_max(k);
    const SubdivisionScheme& scheme = *opts.scheme;
    const int card = scheme.cardinality(k);

    std::optional<RegularityConstants> constants;
    const bool analytic = opts.use_analytic_tail && germ.gamma && germ.delta_norm && *germ.gamma > k &&
                          (constants = scheme.constants(s)).has_value();
    double analytic_scale = 0, analytic_ratio = 1;
    if (analytic) {
        analytic_ratio = std::pow(constants->c, *germ.gamma - k);
        analytic_scale = card * constants->norm_M * *germ.delta_norm * std::pow(s.diameter(), *germ.gamma) /
                         (1.0 - analytic_ratio);
    }

    double rho_floor = 0;
    if (germ.gamma && *germ.gamma > k) {
        if (!constants) constants = scheme.constants(s);
        if (constants) rho_floor = std::pow(constants->c, *germ.gamma - k);
    }

    const bool rough = germ.gamma && *germ.gamma < k + 1;
    LevelEngine engine(germ, s, scheme, opts.tol);
    std::vector<double> inc;
    double tail = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= depth_max; ++n) {
        const double v = engine.sum(n);
        r.level_values.push_back(v);
        r.depth = n;
        r.value = v;
        if (n >= 1) inc.push_back(std::abs(v - r.level_values[n - 1]));
        if (analytic) {
            tail = analytic_scale * std::pow(analytic_ratio, n);
            if (tail < opts.tol) {
                r.tail_bound = tail;
                r.stop_rule = "analytic";
                return r;
            }
            continue;
        }
        tail = geometric_tail(inc, rho_floor, rough);
        const std::size_t m = inc.size();
        const bool settled = n >= opts.burn_in;
        const bool small = settled && m >= 3 && inc[m - 1] < opts.tol / 10 && inc[m - 2] < opts.tol / 10 &&
                           inc[m - 3] < opts.tol / 10;
        const bool contracting = settled && m >= 4 && tail < opts.tol && inc[m - 1] < inc[m - 2] &&
                                 inc[m - 2] < inc[m - 3] && inc[m - 3] < inc[m - 4];
        if (small || contracting) {
            r.tail_bound = std::isfinite(tail) ? tail : inc[m - 1];
            r.stop_rule = "cauchy";
            return r;
        }
        if (n > opts.burn_in && m >= 4 && inc[m - 1] > opts.tol / 10 && inc[m - 1] >= inc[m - 2] &&
            inc[m - 2] >= inc[m - 3] && inc[m - 3] >= inc[m - 4])
            throw NoConvergence("level increments grew over 3 consecutive levels (last " + fmt(inc[m - 1]) +
                                " at level " + std::to_string(n) + ")");
    }
    r.tail_bound = tail;
    if (tail <= opts.tol) {
        r.stop_rule = "budget-tail";
        return r;
    }
    throw BudgetExceeded("sewing reached depth " + std::to_string(depth_max) + " with tail bound " + fmt(tail) +
                         " > tol " + fmt(opts.tol));
}

SewingResult sew_chain_result(const Germ& germ, const Chain& c, const SewOptions& opts) {
    SewingResult r;
    r.stop_rule = "chain";
    if (c.empty()) return r;
    SewOptions o = opts;
    o.tol = opts.tol / static_cast<double>(c.size());
    for (const auto& t : c) {
        const SewingResult part = sew(germ, t.simplex, o);
        r.value += t.coeff * part.value;
        r.tail_bound += part.tail_bound;
        r.depth = std::max(r.depth, part.depth);
    }
    r.level_values = {r.value};
    return r;
}

double sew_chain(const Germ& germ, const Chain& c, const SewOptions& opts) {
    return sew_chain_result(germ, c, opts).value;
}

double defect(const Germ& germ, const Simplex& s, const Chain& K, double tol) {
    double vol = 0;
    for (const auto& t : K) vol += volume(t.simplex);
    const double v0 = volume(s);
    if (std::abs(vol - v0) > 1e-8 * std::max(v0, 1e-300))
        throw NotASubdivision("child volumes sum to " + fmt(vol) + ", simplex volume " + fmt(v0));
    double total = germ.eval(s, tol);
    for (const auto& t : K) total -= t.coeff * germ.eval(t.simplex, tol);
    return total;
}

Region Region::box(int d, double lo, double hi) {
    Region r;
    r.lo = Point::Constant(d, lo);
    r.hi = Point::Constant(d, hi);
    return r;
}

Simplex sample_simplex(std::mt19937_64& rng, const Region& region, int k, int band, double max_ecc) {
    const int d = static_cast<int>(region.lo.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        VertexMatrix v(d, k + 1);
        for (int j = 0; j <= k; ++j)
            for (int i = 0; i < d; ++i) v(i, j) = gauss(rng);
        Simplex s(v);
        if (k > 0 && (s.degenerate() || eccentricity(s) > max_ecc)) continue;
        const double target = std::ldexp(1.0, -band - 1) * std::pow(2.0, unit(rng));
        const double scale = k > 0 ? target / s.diameter() : 1.0;
        Point c(d);
        for (int i = 0; i < d; ++i) c(i) = region.lo(i) + unit(rng) * (region.hi(i) - region.lo(i));
        const Point b = s.barycenter();
        for (int j = 0; j <= k; ++j) v.col(j) = c + scale * (v.col(j) - b);
        return Simplex(v);
    }
    throw InvalidArgument("could not sample a simplex below the eccentricity cap");
}

GermNormEstimate estimate_germ_norms(const Germ& germ, const SamplerSpec& spec, double eta, double gamma) {
    const int k = spec.k;
    if (germ.k() != k) throw InvalidArgument("germ degree does not match the sampler");
    struct Sample {
        int band_index;
        Simplex s;
        std::uint64_t stream;
    };
    std::vector<Sample> samples;
    for (std::size_t b = 0; b < spec.bands.size(); ++b)
        for (int i = 0; i < spec.per_band; ++i) {
            const std::uint64_t stream = (static_cast<std::uint64_t>(spec.bands[b] + 64) << 32) + i;
            auto rng = make_rng(spec.seed, stream);
            samples.push_back({static_cast<int>(b), sample_simplex(rng, spec.region, k, spec.bands[b], spec.max_ecc),
                               stream});
        }
    for (std::size_t i = 0; i < spec.extra.size(); ++i)
        samples.push_back({-1, spec.extra[i], (std::uint64_t(1) << 62) + i});

    const double tol = 1e-10;
    std::vector<double> eta_ratio(samples.size()), delta_ratio(samples.size());
    std::vector<std::size_t> fam(samples.size());
    parallel_for(samples.size(), [&](std::size_t idx) {
        const Simplex& s = samples[idx].s;
        const double diam = s.diameter();
        const double xi = germ.eval(s, tol);
        eta_ratio[idx] = std::abs(xi) / std::pow(diam, eta);
        double worst = 0;
        std::size_t count = 0;
        auto consider = [&](const Chain& K) {
            double dsum = xi;
            for (const auto& t : K) dsum -= t.coeff * germ.eval(t.simplex, tol);
            worst = std::max(worst, std::abs(dsum) / (static_cast<double>(K.size()) * std::pow(diam, gamma)));
            ++count;
        };
        for (int depth = 1; depth <= spec.scheme_depth; ++depth) consider(iterate(*spec.scheme, s, depth));
        auto rng = make_rng(spec.seed ^ 0xa5a5a5a5ULL, samples[idx].stream);
        for (int j = 0; j < spec.splits; ++j) consider(random_two_piece_split(s, rng, 0.5, 0.5));
        delta_ratio[idx] = worst;
        fam[idx] = count;
    });

    GermNormEstimate est;
    est.bands = spec.bands;
    est.band_eta.assign(spec.bands.size(), 0.0);
    est.band_delta.assign(spec.bands.size(), 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        est.eta_norm = std::max(est.eta_norm, eta_ratio[i]);
        est.delta_gamma_norm = std::max(est.delta_gamma_norm, delta_ratio[i]);
        est.families += fam[i];
        const int b = samples[i].band_index;
        if (b >= 0) {
            est.band_eta[b] = std::max(est.band_eta[b], eta_ratio[i]);
            est.band_delta[b] = std::max(est.band_delta[b], delta_ratio[i]);
        }
    }
    est.simplices = samples.size();
    return est;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (x.size() < 2 || den == 0) throw DegenerateFit("need at least two distinct abscissae");
    const double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

namespace {

ProbeResult fit_increments(const std::vector<double>& inc, const std::vector<double>& scale_ref, int fit_from,
                           int fit_to) {
    ProbeResult p;
    p.increments = inc;
    double ref = 0;
    for (double v : scale_ref) ref = std::max(ref, std::abs(v));
    const double floor = std::max(1e-13 * ref, 1e-300);
    std::vector<double> x, y;
    for (int n = fit_from; n <= fit_to && n <= static_cast<int>(inc.size()); ++n) {
        if (inc[n - 1] <= floor) {
            p.floor_level = n;
            break;
        }
        x.push_back(n);
        y.push_back(std::log(inc[n - 1]));
    }
    if (x.size() < 3)
        throw DegenerateFit("level increments reach the floating-point floor at level " +
                            std::to_string(p.floor_level));
    p.rate = fit_line(x, y).first;
    return p;
}

}  // namespace

ProbeResult convergence_probe(const Germ& germ, const Simplex& s, const SubdivisionScheme& scheme, int depth,
                              double tol) {
    if (depth < 4) throw InvalidArgument("convergence_probe needs depth >= 4");
    const std::vector<double> sums = level_sums(germ, s, scheme, depth, tol);
    std::vector<double> inc;
    for (int n = 1; n <= depth; ++n) inc.push_back(std::abs(sums[n] - sums[n - 1]));
    ProbeResult p = fit_increments(inc, sums, 1, depth);
    if (germ.gamma)
        if (auto c = scheme.constants(s)) p.predicted = (*germ.gamma - s.k()) * std::log(c->c);
    return p;
}

ProbeResult convergence_probe_family(const Germ& germ, const std::vector<Simplex>& family,
                                     const SubdivisionScheme& scheme, int depth, int fit_from, int fit_to,
                                     double tol) {
    if (family.empty()) throw InvalidArgument("empty probe family");
    if (fit_from < 1 || fit_to > depth || fit_to - fit_from < 2) throw InvalidArgument("invalid fit window");
    std::vector<std::vector<double>> sums(family.size());
    parallel_for(family.size(), [&](std::size_t i) { sums[i] = level_sums(germ, family[i], scheme, depth, tol); });
    std::vector<double> rms(depth, 0.0), ref;
    for (const auto& s : sums) {
        for (int n = 1; n <= depth; ++n) rms[n - 1] += (s[n] - s[n - 1]) * (s[n] - s[n - 1]);
        ref.push_back(s.back());
    }
    for (double& v : rms) v = std::sqrt(v / static_cast<double>(family.size()));
    ProbeResult p = fit_increments(rms, ref, fit_from, fit_to);
    if (germ.gamma)
        if (auto c = scheme.constants(family.front())) p.predicted = (*germ.gamma - family.front().k()) * std::log(c->c);
    return p;
}

}  // namespace roughforms
