#include "roughforms/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "config.hpp"
#include "roughforms/embedding.hpp"
#include "roughforms/errors.hpp"
#include "roughforms/gaussian.hpp"
#include "roughforms/io.hpp"
#include "roughforms/parallel.hpp"

#ifndef ROUGHFORMS_VERSION
#define ROUGHFORMS_VERSION "0.0.0"
#endif

namespace roughforms::cli {

namespace fs = std::filesystem;
using config::Object;

namespace {

struct Context {
    std::optional<std::uint64_t> seed;
    fs::path base_dir;
    std::optional<fs::path> out_dir;
    FormOptions form_opts;
};

struct Output {
    Json result;
    std::vector<std::pair<std::string, std::string>> csv;
    std::optional<bool> pass;
};

bool is_validation_kind(const std::string& kind) {
    static const std::set<std::string> kinds{"SyntaxError",     "UnknownIdentifier",  "InvalidArgument",
                                             "DegenerateSimplex", "UnsupportedDimension", "ExponentViolation",
                                             "DomainError",     "NotDifferentiable",  "NotASubdivision"};
    return kinds.count(kind) > 0;
}

template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        if (is_validation_kind(e.kind())) throw ConfigError(path, e.what(), e.kind());
        throw;
    }
}

std::optional<bool> all_of(std::initializer_list<std::optional<bool>> gates) {
    std::optional<bool> out;
    for (const auto& g : gates)
        if (g) out = out.value_or(true) && *g;
    return out;
}

Json optional_json(const std::optional<bool>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::uint64_t read_seed(Object& o, const Context& ctx, std::uint64_t fallback = 0) {
    const auto v = o.get<std::uint64_t>("seed", fallback);
    return ctx.seed ? *ctx.seed : v;
}

void read_header(Object& o, const std::string& command) {
    if (const Json* c = o.find("command")) {
        if (config::as<std::string>(*c, o.at("command")) != command)
            throw ConfigError(o.at("command"), "config is for '" + c->get<std::string>() + "', not '" + command + "'");
    }
    o.get<std::string>("description", "");
}

void read_sewing(Object& o, Context& ctx) {
    const std::string scheme = o.get<std::string>("scheme", "edgewise");
    ctx.form_opts.scheme = at_path(o.at("scheme"), [&] { return scheme_by_name(scheme); });
    ctx.form_opts.depth_max = o.get<int>("depth_max", 0);
    if (ctx.form_opts.depth_max < 0) throw ConfigError(o.at("depth_max"), "depth_max must be >= 0");
    ctx.form_opts.burn_in = o.get<int>("burn_in", 4);
    if (ctx.form_opts.burn_in < 1) throw ConfigError(o.at("burn_in"), "burn_in must be >= 1");
}

double read_tol(Object& o, double fallback = 1e-6) {
    const double tol = o.get<double>("tol", fallback);
    if (!(tol > 0)) throw ConfigError(o.at("tol"), "tol must be positive");
    return tol;
}

int read_positive(Object& o, const std::string& key, int fallback) {
    const int v = o.get<int>(key, fallback);
    if (v < 1) throw ConfigError(o.at(key), key + " must be >= 1");
    return v;
}

// ---------------------------------------------------------------- expressions, forms, geometry

expr::Expr parse_expression(const Json& j, const std::string& path, int d = -1) {
    const std::string text = config::as<std::string>(j, path);
    const expr::Expr e = at_path(path, [&] { return expr::parse(text); });
    if (d >= 0 && e.max_var() > d)
        throw ConfigError(path, "expression uses x" + std::to_string(e.max_var()) + " but d = " + std::to_string(d));
    return e;
}

HolderFunction holder_from(const Json& j, const std::string& path, int d) {
    const expr::Expr e = parse_expression(j, path, d);
    return expr::to_holder(e, d);
}

std::vector<int> index_set(const Json& j, const std::string& path, int d, bool one_based = true) {
    std::vector<int> I = config::as_vector<int>(j, path);
    for (std::size_t i = 0; i < I.size(); ++i) {
        const int lo = one_based ? 1 : 0;
        if (I[i] < lo || I[i] >= d + lo)
            throw ConfigError(config::child_path(path, i),
                              "index out of range " + std::to_string(lo) + ".." + std::to_string(d + lo - 1));
        if (i > 0 && I[i] <= I[i - 1]) throw ConfigError(path, "indices must be strictly increasing");
        if (one_based) --I[i];
    }
    return I;
}

SmoothMap build_map(const Json& j, const std::string& path) {
    Object o(j, path);
    const int m = o.get<int>("m");
    if (m < 1 || m > kMaxDim) throw ConfigError(o.at("m"), "m must be in 1.." + std::to_string(kMaxDim));
    const Json& F = o.raw("F");
    if (!F.is_array() || F.empty() || F.size() > static_cast<std::size_t>(kMaxDim))
        throw ConfigError(o.at("F"), "F must list 1.." + std::to_string(kMaxDim) + " component expressions");
    std::vector<expr::Expr> comps;
    for (std::size_t i = 0; i < F.size(); ++i)
        comps.push_back(parse_expression(F[i], config::child_path(o.at("F"), i), m));
    const double eta = o.get<double>("eta", 1.0);
    if (!(eta > 0 && eta <= 1)) throw ConfigError(o.at("eta"), "eta must lie in (0, 1]");
    o.finish();
    return at_path(path, [&] { return expression_map(m, comps, eta); });
}

Region region_from(const Json& j, const std::string& path, int d) {
    Object o(j, path);
    auto bound = [&](const std::string& key) {
        const Json& v = o.raw(key);
        if (v.is_number()) return Point(Point::Constant(d, v.get<double>()));
        return config::point_from_json(v, o.at(key), d);
    };
    Region r;
    r.lo = bound("lo");
    r.hi = bound("hi");
    o.finish();
    for (int i = 0; i < d; ++i)
        if (!(r.lo(i) < r.hi(i))) throw ConfigError(path, "region needs lo < hi in every coordinate");
    return r;
}

CochainPtr build_form(const Json& j, const std::string& path, Context& ctx);

CochainPtr catalog(const std::string& name, const std::string& path, const Context& ctx) {
    return at_path(path, [&] { return CochainPtr(catalog_form(name, ctx.form_opts)); });
}

ProductOptions product_options(Object& o, const Context& ctx) {
    ProductOptions p;
    const std::string rule = o.get<std::string>("rule", "vertex_average");
    p.rule = at_path(o.at("rule"), [&] { return measure_rule_by_name(rule); });
    p.allow_divergent = o.get<bool>("allow_divergent", false);
    p.form = ctx.form_opts;
    return p;
}

CochainPtr build_form(const Json& j, const std::string& path, Context& ctx) {
    if (j.is_string()) return catalog(j.get<std::string>(), path, ctx);
    Object o(j, path);
    std::string type = o.has("catalog") ? "catalog" : "smooth";
    type = o.get<std::string>("type", type);
    CochainPtr out;
    if (type == "catalog") {
        out = catalog(o.get<std::string>("catalog"), o.at("catalog"), ctx);
    } else if (type == "smooth") {
        const int d = o.get<int>("d");
        if (d < 1 || d > kMaxDim) throw ConfigError(o.at("d"), "d must be in 1.." + std::to_string(kMaxDim));
        const Json& comps = o.raw("components");
        const std::string cpath = o.at("components");
        if (!comps.is_array() || comps.empty()) throw ConfigError(cpath, "expected a non-empty array");
        std::vector<std::pair<std::vector<int>, expr::Expr>> parsed;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            Object c(comps[i], config::child_path(cpath, i));
            std::vector<int> I = index_set(c.raw("index"), c.at("index"), d);
            for (int& x : I) ++x;
            if (!parsed.empty() && I.size() != parsed.front().first.size())
                throw ConfigError(c.at("index"), "all components need the same degree");
            parsed.emplace_back(I, parse_expression(c.raw("f"), c.at("f"), d));
            c.finish();
        }
        const std::string name = o.get<std::string>("name", "smooth");
        out = at_path(path, [&] { return CochainPtr(smooth_form(d, parsed, ctx.form_opts, name)); });
    } else if (type == "product" || type == "wedge_d") {
        const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
        const HolderFunction f = holder_from(o.raw("f"), o.at("f"), a->d());
        const ProductOptions p = product_options(o, ctx);
        out = at_path(path, [&] { return type == "product" ? CochainPtr(product(f, a, p)) : wedge_d(f, a, p); });
    } else if (type == "zust") {
        const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
        const HolderFunction g0 = holder_from(o.raw("g0"), o.at("g0"), a->d());
        const Json& gs = o.raw("gs");
        if (!gs.is_array()) throw ConfigError(o.at("gs"), "expected an array of expressions");
        std::vector<HolderFunction> hs;
        for (std::size_t i = 0; i < gs.size(); ++i)
            hs.push_back(holder_from(gs[i], config::child_path(o.at("gs"), i), a->d()));
        const ProductOptions p = product_options(o, ctx);
        out = at_path(path, [&] { return zust_form(g0, hs, a, p); });
    } else if (type == "pullback") {
        const SmoothMap map = build_map(o.raw("map"), o.at("map"));
        const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
        if (a->d() != map.d)
            throw ConfigError(o.at("form"), "form lives in R^" + std::to_string(a->d()) + " but the map targets R^" +
                                                std::to_string(map.d));
        out = at_path(path, [&] { return CochainPtr(pullback(map, a, ctx.form_opts)); });
    } else if (type == "coboundary") {
        const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
        out = coboundary(a);
    } else if (type == "zero") {
        const int d = o.get<int>("d");
        if (d < 1 || d > kMaxDim) throw ConfigError(o.at("d"), "d must be in 1.." + std::to_string(kMaxDim));
        const HolderFunction f = holder_from(o.raw("f"), o.at("f"), d);
        out = zero_form(f, d);
    } else if (type == "gaussian") {
        GaussianFormSpec s;
        s.d = o.get<int>("d", s.d);
        s.k = o.get<int>("k", s.k);
        s.theta = o.get<double>("theta", s.theta);
        s.N = o.get<int>("N", s.N);
        s.L = o.get<double>("L", s.L);
        s.seed = read_seed(o, ctx);
        const auto sample = o.get<std::uint64_t>("sample", 0);
        const double scale = o.get<double>("alpha_scale", 1.0);
        if (!(scale > 0 && scale <= 1)) throw ConfigError(o.at("alpha_scale"), "alpha_scale must lie in (0, 1]");
        out = at_path(path, [&] { return gaussian_form(s, sample, scale); });
    } else if (type == "iota") {
        const int d = o.get<int>("d", 1);
        if (d < 1 || d > 2) throw ConfigError(o.at("d"), "iota needs d in 1..2");
        const expr::Expr f = parse_expression(o.raw("f"), o.at("f"), d);
        const int levels = read_positive(o, "levels", 10);
        const int nodes = read_positive(o, "nodes", 2);
        out = iota_cochain([f](const Point& x) { return f(x); }, d, levels, nodes);
    } else {
        throw ConfigError(o.at("type"), "unknown form type '" + type + "'");
    }
    o.finish();
    return out;
}

Json read_json_file(const fs::path& file, const std::string& path) {
    std::ifstream in(file);
    if (!in) throw ConfigError(path, "cannot open '" + file.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path, "'" + file.string() + "' is not valid JSON: " + e.what());
    }
}

Chain build_geometry(const Json& j, const std::string& path, const Context& ctx) {
    if (!j.is_object()) throw ConfigError(path, "expected a simplex, chain, boundary or file object");
    if (j.contains("vertices")) {
        Chain c;
        c.add(simplex_from_json(j, path));
        return c;
    }
    if (j.contains("terms")) return chain_from_json(j, path);
    Object o(j, path);
    Chain out;
    if (o.has("boundary")) {
        const Chain inner = build_geometry(o.raw("boundary"), o.at("boundary"), ctx);
        if (inner.k() < 1) throw ConfigError(o.at("boundary"), "the boundary of a 0-chain is empty");
        out = boundary(inner);
    } else if (o.has("file")) {
        const std::string name = o.get<std::string>("file");
        const Json doc = read_json_file(ctx.base_dir / name, o.at("file"));
        out = build_geometry(doc, o.at("file"), ctx);
    } else {
        throw ConfigError(path, "expected one of 'vertices', 'terms', 'boundary' or 'file'");
    }
    o.finish();
    return out;
}

Simplex single_simplex(const Json& j, const std::string& path, const Context& ctx) {
    const Chain c = build_geometry(j, path, ctx);
    if (c.size() != 1 || c.terms().front().coeff != 1) throw ConfigError(path, "expected a single simplex");
    return c.terms().front().simplex;
}

void check_shape(const Chain& c, const Cochain& a, const std::string& path) {
    if (c.empty()) return;
    if (c.d() != a.d() || c.k() != a.k())
        throw ConfigError(path, "geometry is a " + std::to_string(c.k()) + "-chain in R^" + std::to_string(c.d()) +
                                    " but the form is a " + std::to_string(a.k()) + "-form on R^" +
                                    std::to_string(a.d()));
}

TestFunction test_function(const Json& j, const std::string& path, int d) {
    Object o(j, path);
    const Point c = config::point_from_json(o.raw("center"), o.at("center"), d);
    const double r = o.get<double>("radius");
    const int m = o.get<int>("m", 4);
    o.finish();
    return at_path(path, [&] { return TestFunction(c, r, m); });
}

// ---------------------------------------------------------------- evaluation helpers

struct Evaluated {
    double value = 0;
    std::optional<double> tail;
    Json terms = Json::array();
};

Evaluated evaluate(const CochainPtr& a, const Chain& c, double tol) {
    Evaluated ev;
    if (c.empty()) {
        ev.tail = 0.0;
        return ev;
    }
    const double part = tol / static_cast<double>(c.size());
    if (const auto sewn = std::dynamic_pointer_cast<const SewnCochain>(a)) {
        double tail = 0;
        for (const auto& t : c) {
            const SewingResult r = sewn->sew_result(t.simplex, part);
            ev.value += t.coeff * r.value;
            tail += std::abs(t.coeff) * r.tail_bound;
            ev.terms.push_back(Json{{"coeff", t.coeff}, {"sewing", to_json(r)}});
        }
        ev.tail = tail;
    } else {
        for (const auto& t : c) {
            const double v = a->eval(t.simplex, part);
            ev.value += t.coeff * v;
            ev.terms.push_back(Json{{"coeff", t.coeff}, {"value", v}});
        }
    }
    return ev;
}

struct Expectation {
    std::optional<double> expected;
    double rtol = 1e-6;
    double atol = 0;

    void read(Object& o) {
        expected = o.maybe<double>("expected");
        rtol = o.get<double>("rtol", rtol);
        atol = o.get<double>("atol", atol);
        if (rtol < 0) throw ConfigError(o.at("rtol"), "rtol must be >= 0");
        if (atol < 0) throw ConfigError(o.at("atol"), "atol must be >= 0");
    }
    std::optional<bool> check(double v) const {
        if (!expected) return std::nullopt;
        return std::abs(v - *expected) <= atol + rtol * std::abs(*expected);
    }
    void annotate(Json& r, double v) const {
        r["expected"] = optional_json(expected);
        r["error"] = expected ? Json(std::abs(v - *expected)) : Json(nullptr);
    }
};

Json form_info(const Cochain& a) {
    return Json{{"name", a.name()},
                {"provenance", to_string(a.provenance())},
                {"k", a.k()},
                {"d", a.d()},
                {"alpha", a.alpha()},
                {"beta", a.beta()}};
}

Json point_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

Json one_based(const std::vector<int>& J) {
    Json out = Json::array();
    for (int j : J) out.push_back(j + 1);
    return out;
}

// ---------------------------------------------------------------- commands

Output cmd_integrate(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
    const Chain c = build_geometry(o.raw("geometry"), o.at("geometry"), ctx);
    check_shape(c, *a, o.at("geometry"));
    Expectation ex;
    ex.read(o);
    o.finish();

    const Evaluated ev = evaluate(a, c, tol);
    Output out;
    out.pass = ex.check(ev.value);
    out.result = Json{{"command", "integrate"}, {"form", form_info(*a)}, {"tol", tol}, {"value", ev.value},
                      {"tail_bound", optional_json(ev.tail)}, {"terms", ev.terms}};
    ex.annotate(out.result, ev.value);
    out.result["pass"] = optional_json(out.pass);
    return out;
}

Output cmd_product(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
    const HolderFunction f = holder_from(o.raw("f"), o.at("f"), a->d());
    ProductOptions p = product_options(o, ctx);
    const Chain c = build_geometry(o.raw("geometry"), o.at("geometry"), ctx);
    check_shape(c, *a, o.at("geometry"));
    const bool compare = o.get<bool>("compare", false);
    Expectation ex;
    ex.read(o);
    o.finish();
    const CochainPtr fa = at_path(o.path(), [&] { return CochainPtr(product(f, a, p)); });

    const Evaluated ev = evaluate(fa, c, tol);
    Output out;
    out.result = Json{{"command", "product"},
                      {"form", form_info(*fa)},
                      {"f", f.name},
                      {"gamma", f.gamma},
                      {"rule", to_string(p.rule)},
                      {"tol", tol},
                      {"value", ev.value},
                      {"tail_bound", optional_json(ev.tail)},
                      {"terms", ev.terms}};
    std::optional<bool> agree;
    if (compare) {
        p.rule = p.rule == MeasureRule::vertex_average ? MeasureRule::barycenter : MeasureRule::vertex_average;
        const Evaluated other = evaluate(at_path(o.path(), [&] { return CochainPtr(product(f, a, p)); }), c, tol);
        const double diff = std::abs(ev.value - other.value);
        const double combined = 2 * tol + ev.tail.value_or(0) + other.tail.value_or(0);
        agree = diff <= combined;
        out.result["comparison"] = Json{{"rule", to_string(p.rule)},
                                        {"value", other.value},
                                        {"difference", diff},
                                        {"combined_tolerance", combined},
                                        {"agree", *agree}};
    }
    ex.annotate(out.result, ev.value);
    out.pass = all_of({ex.check(ev.value), agree});
    out.result["pass"] = optional_json(out.pass);
    return out;
}

Output cmd_pullback(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const SmoothMap map = build_map(o.raw("map"), o.at("map"));
    const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
    if (a->d() != map.d)
        throw ConfigError(o.at("form"), "form lives in R^" + std::to_string(a->d()) + " but the map targets R^" +
                                            std::to_string(map.d));
    const CochainPtr fa = at_path(o.path(), [&] { return CochainPtr(pullback(map, a, ctx.form_opts)); });
    std::optional<Chain> c;
    if (o.has("geometry")) {
        c = build_geometry(o.raw("geometry"), o.at("geometry"), ctx);
        check_shape(*c, *fa, o.at("geometry"));
    }
    struct Probe {
        int k;
        double alpha, beta;
        Region region;
        std::size_t samples;
        std::uint64_t seed;
    };
    std::optional<Probe> probe;
    if (o.has("probe")) {
        Object p = o.object("probe");
        Probe pr;
        pr.k = p.get<int>("k", a->k());
        pr.alpha = p.get<double>("alpha", a->alpha());
        pr.beta = p.get<double>("beta", std::isfinite(a->beta()) ? a->beta() : 1.0);
        pr.region = region_from(p.raw("region"), p.at("region"), map.m);
        pr.samples = p.get<std::size_t>("samples", 20);
        pr.seed = read_seed(p, ctx, 1);
        p.finish();
        probe = pr;
    }
    Expectation ex;
    ex.read(o);
    o.finish();
    if (!c && !probe) throw ConfigError(o.path(), "pullback needs 'geometry', 'probe' or both");

    Output out;
    out.result = Json{{"command", "pullback"}, {"form", form_info(*fa)}, {"eta", map.eta}, {"tol", tol}};
    std::optional<bool> value_pass;
    if (c) {
        const Evaluated ev = evaluate(fa, *c, tol);
        out.result["value"] = ev.value;
        out.result["tail_bound"] = optional_json(ev.tail);
        out.result["terms"] = ev.terms;
        ex.annotate(out.result, ev.value);
        value_pass = ex.check(ev.value);
    }
    if (probe) {
        const PullbackProbe pr = at_path(o.at("probe"), [&] {
            return pullback_regularity_probe(map, probe->k, probe->alpha, probe->beta, probe->region, probe->samples,
                                             probe->seed);
        });
        out.result["probe"] = Json{{"k", probe->k},
                                   {"alpha", probe->alpha},
                                   {"beta", probe->beta},
                                   {"exponent", pr.exponent},
                                   {"predicted", pr.predicted},
                                   {"diameters", pr.diameters},
                                   {"bounds", pr.bounds}};
    }
    out.pass = value_pass;
    out.result["pass"] = optional_json(out.pass);
    return out;
}

Output cmd_stokes(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
    CochainPtr da;
    if (o.has("da")) {
        da = build_form(o.raw("da"), o.at("da"), ctx);
        if (da->k() != a->k() + 1 || da->d() != a->d())
            throw ConfigError(o.at("da"), "da must be a (k+1)-form on the same space");
    }
    const Chain patches = build_geometry(o.raw("geometry"), o.at("geometry"), ctx);
    if (!patches.empty() && (patches.k() != a->k() + 1 || patches.d() != a->d()))
        throw ConfigError(o.at("geometry"), "stokes needs (k+1)-simplices in R^" + std::to_string(a->d()));
    const auto max_residual = o.maybe<double>("max_residual");
    o.finish();

    Json rows = Json::array();
    double worst = 0;
    for (const auto& t : patches) {
        const StokesReport r = da ? stokes_residual(*a, *da, t.simplex, tol)
                                  : stokes_residual(*a, t.simplex, tol, ctx.form_opts);
        worst = std::max(worst, r.residual);
        rows.push_back(Json{{"simplex", to_json(t.simplex)}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}});
    }
    Output out;
    if (max_residual) out.pass = worst < *max_residual;
    out.result = Json{{"command", "stokes"},     {"form", form_info(*a)},     {"independent_da", da != nullptr},
                      {"tol", tol},              {"patches", rows},          {"max_residual", worst},
                      {"threshold", optional_json(max_residual)}, {"pass", optional_json(out.pass)}};
    return out;
}

Output cmd_subdiv_stats(Object& o, Context& ctx) {
    const std::string name = o.get<std::string>("scheme", "edgewise");
    const SchemePtr scheme = at_path(o.at("scheme"), [&] { return scheme_by_name(name); });
    const Simplex s = single_simplex(o.raw("geometry"), o.at("geometry"), ctx);
    const int levels = read_positive(o, "levels", 6);
    const auto expect_c = o.maybe<double>("expect_c");
    const auto max_ecc_ratio = o.maybe<double>("max_ecc_ratio");
    o.finish();
    if (s.k() < 1) throw ConfigError(o.at("geometry"), "subdivision needs k >= 1");
    if (s.degenerate()) throw ConfigError(o.at("geometry"), "degenerate simplex");

    const SubdivisionStats st = stats(*scheme, s, levels);
    Output out;
    std::optional<bool> c_ok, ecc_ok;
    if (expect_c) c_ok = std::abs(st.c - *expect_c) <= 1e-12;
    if (max_ecc_ratio) ecc_ok = st.norm_M <= *max_ecc_ratio;
    out.pass = all_of({c_ok, ecc_ok});
    out.result = Json{{"command", "subdiv-stats"},
                      {"scheme", st.scheme},
                      {"k", st.k},
                      {"card", st.cardinality},
                      {"c", st.c},
                      {"norm_M", st.norm_M},
                      {"vol_ratio_growth", st.vol_ratio_growth},
                      {"records", to_json(st)},
                      {"pass", optional_json(out.pass)}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "scheme,k,level,card,c,ecc_ratio,vol_ratio\n";
    for (const auto& l : st.levels)
        csv << st.scheme << ',' << st.k << ',' << l.level << ',' << l.count << ',' << l.c << ',' << l.ecc_ratio << ','
            << l.vol_ratio << '\n';
    out.csv.emplace_back("subdiv.csv", csv.str());
    return out;
}

Output cmd_norms(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const CochainPtr a = build_form(o.raw("form"), o.at("form"), ctx);
    const double alpha = o.get<double>("alpha", a->alpha());
    const double beta = o.maybe<double>("beta").value_or(a->beta());
    if (!(alpha > 0 && alpha <= 1)) throw ConfigError(o.at("alpha"), "alpha must lie in (0, 1]");
    SamplerSpec spec;
    spec.k = a->k();
    {
        Object s = o.object("sampler");
        spec.region = region_from(s.raw("region"), s.at("region"), a->d());
        spec.bands = s.list<int>("bands", spec.bands);
        for (std::size_t i = 0; i < spec.bands.size(); ++i)
            if (spec.bands[i] < 0) throw ConfigError(config::child_path(s.at("bands"), i), "bands must be >= 0");
        spec.per_band = read_positive(s, "per_band", spec.per_band);
        spec.max_ecc = s.get<double>("max_ecc", spec.max_ecc);
        spec.seed = read_seed(s, ctx, spec.seed);
        spec.scheme_depth = s.get<int>("scheme_depth", spec.scheme_depth);
        spec.splits = s.get<int>("splits", spec.splits);
        spec.scheme = ctx.form_opts.scheme;
        s.finish();
    }
    const auto max_ratio = o.maybe<double>("max_ratio");
    if (max_ratio && !(*max_ratio >= 1)) throw ConfigError(o.at("max_ratio"), "max_ratio must be >= 1");
    o.finish();

    const NormReport r = norm_estimate(*a, alpha, beta, spec, tol);
    double lo = kInf, hi = 0;
    for (const auto& b : r.bands) {
        if (b.sup_diam <= 0 || b.sup_mass <= 0) continue;
        lo = std::min(lo, b.sup_mass / b.sup_diam);
        hi = std::max(hi, b.sup_mass / b.sup_diam);
    }
    Output out;
    if (max_ratio) out.pass = hi > 0 && hi <= *max_ratio && lo >= 1.0 / *max_ratio;
    out.result = Json{{"command", "norms"},
                      {"form", form_info(*a)},
                      {"tol", tol},
                      {"report", to_json(r)},
                      {"band_ratio_min", hi > 0 ? Json(lo) : Json(nullptr)},
                      {"band_ratio_max", hi > 0 ? Json(hi) : Json(nullptr)},
                      {"threshold", optional_json(max_ratio)},
                      {"pass", optional_json(out.pass)}};
    out.csv.emplace_back("norms.csv", norm_report_csv(r));
    return out;
}

Output cmd_flatnorm(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    const double tol = read_tol(o);
    const Simplex s = single_simplex(o.raw("a"), o.at("a"), ctx);
    const Simplex t = single_simplex(o.raw("b"), o.at("b"), ctx);
    if (s.k() != t.k() || s.d() != t.d()) throw ConfigError(o.at("b"), "a and b must have the same k and d");
    CochainPtr form;
    if (o.has("form")) {
        form = build_form(o.raw("form"), o.at("form"), ctx);
        Chain c;
        c.add(s);
        check_shape(c, *form, o.at("a"));
    }
    const double alpha = form ? o.get<double>("alpha", form->alpha()) : o.get<double>("alpha");
    const double beta = o.maybe<double>("beta").value_or(form ? form->beta() : kInf);
    const auto r = o.maybe<double>("r");
    if (r && !(*r > 0)) throw ConfigError(o.at("r"), "r must be positive");
    o.finish();

    double radius = 0;
    if (r) {
        radius = *r;
    } else {
        Eigen::MatrixXd pts(s.d(), 2 * (s.k() + 1));
        pts << s.vertices(), t.vertices();
        radius = min_enclosing_radius(pts);
    }
    const double upper = flat_norm_upper(s, t, alpha, beta, radius);
    Output out;
    out.result = Json{{"command", "flatnorm"}, {"a", to_json(s)},      {"b", to_json(t)},       {"alpha", alpha},
                      {"beta", std::isfinite(beta) ? Json(beta) : Json(nullptr)},           {"r", radius},
                      {"upper", upper}};
    if (form) {
        const double diff = std::abs(form->eval(s, tol / 2) - form->eval(t, tol / 2));
        out.result["form"] = form_info(*form);
        out.result["difference"] = diff;
        out.result["ratio"] = upper > 0 ? Json(diff / upper) : Json(nullptr);
    }
    out.result["pass"] = nullptr;
    return out;
}

Output cmd_embed(Object& o, Context& ctx) {
    read_sewing(o, ctx);
    EmbeddingOptions eo;
    eo.nodes = read_positive(o, "nodes", eo.nodes);
    eo.budget = o.get<std::size_t>("budget", eo.budget);
    eo.tol = read_tol(o, eo.tol);
    CochainPtr a;
    if (o.has("form")) a = build_form(o.raw("form"), o.at("form"), ctx);
    auto need_form = [&](const std::string& path) {
        if (!a) throw ConfigError(path, "requires a 'form'");
        return a->d();
    };

    struct Pairing {
        std::vector<int> J;
        TestFunction psi;
    };
    std::vector<Pairing> pairings;
    if (const Json* pj = o.find("pairings")) {
        const std::string path = o.at("pairings");
        if (!pj->is_array()) throw ConfigError(path, "expected an array");
        const int d = need_form(path);
        for (std::size_t i = 0; i < pj->size(); ++i) {
            Object p((*pj)[i], config::child_path(path, i));
            const std::vector<int> J = index_set(p.raw("J"), p.at("J"), d);
            if (static_cast<int>(J.size()) != a->k())
                throw ConfigError(p.at("J"), "J must have k = " + std::to_string(a->k()) + " entries");
            Json tf = Json{{"center", p.raw("center")}, {"radius", p.raw("radius")}};
            if (p.has("m")) tf["m"] = p.raw("m");
            pairings.push_back({J, test_function(tf, p.path(), d)});
            p.finish();
        }
    }

    struct Scaling {
        std::vector<int> J;
        std::vector<Point> centers;
        std::vector<double> lambdas;
        int m;
        double margin;
    };
    std::optional<Scaling> scaling;
    if (o.has("scaling")) {
        Object s = o.object("scaling");
        const int d = need_form(s.path());
        Scaling sc;
        sc.J = index_set(s.raw("J"), s.at("J"), d);
        if (static_cast<int>(sc.J.size()) != a->k())
            throw ConfigError(s.at("J"), "J must have k = " + std::to_string(a->k()) + " entries");
        const Json& cs = s.raw("centers");
        if (!cs.is_array() || cs.empty()) throw ConfigError(s.at("centers"), "expected a non-empty array of points");
        for (std::size_t i = 0; i < cs.size(); ++i)
            sc.centers.push_back(config::point_from_json(cs[i], config::child_path(s.at("centers"), i), d));
        sc.lambdas = s.list<double>("lambdas");
        if (sc.lambdas.size() < 2) throw ConfigError(s.at("lambdas"), "need at least two scales");
        for (std::size_t i = 0; i < sc.lambdas.size(); ++i)
            if (!(sc.lambdas[i] > 0)) throw ConfigError(config::child_path(s.at("lambdas"), i), "scales must be positive");
        sc.m = s.get<int>("m", 4);
        sc.margin = s.get<double>("margin", 0.15);
        s.finish();
        scaling = sc;
    }

    struct Iota {
        int d;
        expr::Expr f;
        int levels, nodes;
        TestFunction psi;
        double max_rel_error;
    };
    std::optional<Iota> iota_cfg;
    if (o.has("iota")) {
        Object s = o.object("iota");
        const int d = s.get<int>("d", 1);
        if (d < 1 || d > 2) throw ConfigError(s.at("d"), "iota needs d in 1..2");
        const expr::Expr f = parse_expression(s.raw("f"), s.at("f"), d);
        const int levels = read_positive(s, "levels", 12);
        const int nodes = read_positive(s, "nodes", 2);
        const TestFunction psi = test_function(s.raw("test_function"), s.at("test_function"), d);
        const double tol = s.get<double>("max_rel_error", 1e-2);
        s.finish();
        iota_cfg = Iota{d, f, levels, nodes, psi, tol};
    }
    o.finish();
    if (pairings.empty() && !scaling && !iota_cfg)
        throw ConfigError(o.path(), "embed needs at least one of 'pairings', 'scaling' or 'iota'");

    Output out;
    out.result = Json{{"command", "embed"}};
    if (a) out.result["form"] = form_info(*a);
    Json prows = Json::array();
    for (const auto& p : pairings) {
        const double v = at_path(o.at("pairings"), [&] { return pi_J(*a, p.psi, p.J, eo); });
        prows.push_back(Json{{"J", one_based(p.J)},
                             {"center", point_json(p.psi.center())},
                             {"radius", p.psi.radius()},
                             {"m", p.psi.order()},
                             {"value", v}});
    }
    out.result["pairings"] = prows;
    std::optional<bool> scaling_pass, iota_pass;
    if (scaling) {
        const ScalingProbe p = at_path(o.at("scaling"), [&] {
            return embedding_scaling_probe(*a, scaling->J, scaling->centers, scaling->lambdas, scaling->m, eo);
        });
        scaling_pass = p.slope >= p.predicted - scaling->margin;
        out.result["scaling"] = Json{{"points", Json::parse(scaling_probe_json(p))},
                                     {"slope", p.slope},
                                     {"predicted", p.predicted},
                                     {"margin", scaling->margin},
                                     {"pass", *scaling_pass}};
    }
    if (iota_cfg) {
        const auto f = iota_cfg->f;
        auto fn = [f](const Point& x) { return f(x); };
        const CochainPtr ia = iota_cochain(fn, iota_cfg->d, iota_cfg->levels, iota_cfg->nodes);
        std::vector<int> J(iota_cfg->d);
        for (int i = 0; i < iota_cfg->d; ++i) J[i] = i;
        const double v = at_path(o.at("iota"), [&] { return pi_J(*ia, iota_cfg->psi, J, eo); });
        const double oracle = pair_function(fn, iota_cfg->psi, eo.nodes);
        const double rel = std::abs(v - oracle) / std::max(std::abs(oracle), 1e-300);
        iota_pass = rel <= iota_cfg->max_rel_error;
        out.result["iota"] = Json{{"d", iota_cfg->d},
                                  {"f", f.str()},
                                  {"levels", iota_cfg->levels},
                                  {"value", v},
                                  {"oracle", oracle},
                                  {"rel_error", rel},
                                  {"max_rel_error", iota_cfg->max_rel_error},
                                  {"pass", *iota_pass}};
    }
    out.pass = all_of({scaling_pass, iota_pass});
    out.result["pass"] = optional_json(out.pass);
    return out;
}

Output cmd_gaussian_sample(Object& o, Context& ctx) {
    SpectralFieldSpec s;
    s.d = o.get<int>("d", s.d);
    s.theta = o.get<double>("theta", s.theta);
    s.N = o.get<int>("N", s.N);
    s.L = o.get<double>("L", s.L);
    s.seed = read_seed(o, ctx);
    at_path(o.path(), [&] {
        validate(s);
        return 0;
    });
    std::vector<Point> points;
    if (const Json* pj = o.find("points")) {
        if (!pj->is_array()) throw ConfigError(o.at("points"), "expected an array of points");
        for (std::size_t i = 0; i < pj->size(); ++i)
            points.push_back(config::point_from_json((*pj)[i], config::child_path(o.at("points"), i), s.d));
    }
    const auto name = o.maybe<std::string>("export");
    if (name) {
        if (name->empty() || name->find('/') != std::string::npos || name->front() == '.')
            throw ConfigError(o.at("export"), "export must be a plain file stem");
        if (!ctx.out_dir) throw ConfigError(o.at("export"), "export needs an output directory (--out)");
    }
    o.finish();

    const FieldSample g = sample_field(s, true);
    const auto& grid = g.grid();
    double mean = 0, lo = kInf, hi = -kInf;
    for (double v : grid) {
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    mean /= static_cast<double>(grid.size());
    double var = 0;
    for (double v : grid) var += (v - mean) * (v - mean);
    var /= static_cast<double>(grid.size());
    Json values = Json::array();
    for (const auto& p : points) values.push_back(Json{{"x", point_json(p)}, {"value", g(p)}});
    if (name) write_field_raw(g, (*ctx.out_dir / *name).string());

    Output out;
    out.result = Json{{"command", "gaussian-sample"},
                      {"d", s.d},
                      {"theta", s.theta},
                      {"N", s.N},
                      {"L", s.L},
                      {"seed", s.seed},
                      {"point_variance", point_variance(s)},
                      {"grid", Json{{"size", grid.size()}, {"mean", mean}, {"variance", var}, {"min", lo}, {"max", hi}}},
                      {"values", values},
                      {"export", name ? Json(*name) : Json(nullptr)},
                      {"pass", nullptr}};
    return out;
}

Output cmd_kolmogorov_fit(Object& o, Context& ctx) {
    GaussianFormSpec s;
    s.d = o.get<int>("d", s.d);
    s.k = o.get<int>("k", s.k);
    s.theta = o.get<double>("theta", s.theta);
    s.N = o.get<int>("N", s.N);
    s.L = o.get<double>("L", s.L);
    s.seed = read_seed(o, ctx);
    KolmogorovOptions k;
    k.seed = s.seed;
    k.q = o.get<int>("q", k.q);
    k.scales = o.list<double>("scales", k.scales);
    k.n_samples = o.get<std::size_t>("n_samples", k.n_samples);
    k.fixed_field = o.get<bool>("fixed_field", k.fixed_field);
    k.region = o.get<double>("region", k.region);
    k.bootstrap = o.get<int>("bootstrap", k.bootstrap);
    k.max_ci = o.get<double>("max_ci", k.max_ci);
    k.slope_tol = o.get<double>("slope_tol", k.slope_tol);
    o.finish();
    if (s.k < 1 || s.k >= s.d) throw ConfigError(o.at("k"), "k must satisfy 1 <= k < d");
    if (k.scales.size() < 2) throw ConfigError(o.at("scales"), "need at least two scales");
    for (std::size_t i = 0; i < k.scales.size(); ++i)
        if (!(k.scales[i] > 0)) throw ConfigError(config::child_path(o.at("scales"), i), "scales must be positive");
    if (k.n_samples < 2) throw ConfigError(o.at("n_samples"), "n_samples must be >= 2");
    if (k.bootstrap < 1) throw ConfigError(o.at("bootstrap"), "bootstrap must be >= 1");
    if (!(k.region > 0)) throw ConfigError(o.at("region"), "region must be positive");
    at_path(o.path(), [&] {
        validate(SpectralFieldSpec{s.d, s.theta, s.N, s.L, s.seed});
        return 0;
    });

    const auto [cube, bdry] = at_path(o.path(), [&] { return kolmogorov_fit(s, k); });
    const auto [alpha_bar, beta_bar] = gaussian_exponents(s.d, s.theta);
    Output out;
    out.pass = all_of({cube.pass, bdry.pass});
    out.result = Json{{"command", "kolmogorov-fit"},
                      {"d", s.d},
                      {"k", s.k},
                      {"theta", s.theta},
                      {"N", s.N},
                      {"L", s.L},
                      {"seed", s.seed},
                      {"alpha_bar", alpha_bar},
                      {"beta_bar", beta_bar},
                      {"cube", Json::parse(moment_fit_json(cube))},
                      {"boundary", Json::parse(moment_fit_json(bdry))},
                      {"pass", optional_json(out.pass)}};
    out.csv.emplace_back("cube.csv", moment_fit_csv(cube));
    out.csv.emplace_back("boundary.csv", moment_fit_csv(bdry));
    return out;
}

Output cmd_expr_check(Object& o, Context&) {
    std::vector<std::pair<std::string, expr::Expr>> exprs;
    const Json& list = o.raw("expressions");
    const std::string lpath = o.at("expressions");
    if (!list.is_array() || list.empty()) throw ConfigError(lpath, "expected a non-empty array of strings");
    int d_used = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = config::child_path(lpath, i);
        exprs.emplace_back(config::as<std::string>(list[i], path), parse_expression(list[i], path));
        d_used = std::max(d_used, exprs.back().second.max_var());
    }
    const int d = o.get<int>("d", std::max(d_used, 1));
    if (d < 1 || d > kMaxDim) throw ConfigError(o.at("d"), "d must be in 1.." + std::to_string(kMaxDim));
    if (d_used > d) throw ConfigError(o.at("d"), "expressions use x" + std::to_string(d_used));
    std::vector<Point> points;
    if (const Json* pj = o.find("points")) {
        if (!pj->is_array()) throw ConfigError(o.at("points"), "expected an array of points");
        for (std::size_t i = 0; i < pj->size(); ++i)
            points.push_back(config::point_from_json((*pj)[i], config::child_path(o.at("points"), i), d));
    }
    const bool derivatives = o.get<bool>("derivatives", true);
    o.finish();

    Json rows = Json::array();
    bool all_round_trip = true;
    for (const auto& [text, e] : exprs) {
        const std::string printed = e.str();
        const bool round_trip = expr::parse(printed) == e;
        all_round_trip = all_round_trip && round_trip;
        Json values = Json::array();
        for (const auto& p : points) values.push_back(e(p));
        Json row{{"text", text},
                 {"printed", printed},
                 {"round_trip", round_trip},
                 {"max_var", e.max_var()},
                 {"gamma", expr::to_holder(e, d).gamma},
                 {"values", values}};
        if (derivatives) {
            Json ds = Json::array();
            for (int j = 1; j <= d; ++j) {
                try {
                    const expr::Expr de = expr::differentiate(e, j);
                    Json dv = Json::array();
                    for (const auto& p : points) dv.push_back(de(p));
                    ds.push_back(Json{{"var", j}, {"expression", de.str()}, {"values", dv}});
                } catch (const NotDifferentiable& err) {
                    ds.push_back(Json{{"var", j}, {"error", err.kind()}, {"message", err.what()}});
                }
            }
            row["derivatives"] = ds;
        }
        rows.push_back(row);
    }
    Output out;
    out.pass = all_round_trip;
    out.result = Json{{"command", "expr-check"}, {"d", d}, {"expressions", rows}, {"pass", all_round_trip}};
    return out;
}

using Handler = Output (*)(Object&, Context&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> h{
        {"integrate", cmd_integrate},          {"product", cmd_product},
        {"pullback", cmd_pullback},            {"stokes", cmd_stokes},
        {"subdiv-stats", cmd_subdiv_stats},    {"norms", cmd_norms},
        {"flatnorm", cmd_flatnorm},            {"embed", cmd_embed},
        {"gaussian-sample", cmd_gaussian_sample}, {"kolmogorov-fit", cmd_kolmogorov_fit},
        {"expr-check", cmd_expr_check},
    };
    return h;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const fs::path& p, const std::string& contents) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
    f << contents;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, h] : handlers()) n.push_back(name);
        return n;
    }();
    return names;
}

std::string version() { return ROUGHFORMS_VERSION; }

int log_level() {
    const char* v = std::getenv("ROUGHFORMS_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "off" || s == "none") return -1;
    if (s == "error") return 0;
    if (s == "warn" || s == "warning") return 1;
    if (s == "info") return 2;
    if (s == "debug" || s == "trace") return 3;
    return 1;
}

void log(int level, const std::string& message) {
    static std::mutex mu;
    if (level > log_level()) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[roughforms " << names[std::clamp(level, 0, 3)] << "] " << message << '\n';
}

RunResult run(const std::string& command, const std::string& config_text, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    RunResult rr;
    Json error;
    Output out;

    Context ctx;
    ctx.seed = opts.seed;
    ctx.base_dir = opts.base_dir;
    if (opts.out_dir) ctx.out_dir = fs::path(*opts.out_dir);

    try {
        Handler handler = nullptr;
        for (const auto& [name, h] : handlers())
            if (name == command) handler = h;
        if (!handler) throw ConfigError("", "unknown command '" + command + "'", "UnknownCommand");
        if (opts.threads < 1) throw ConfigError("", "--threads must be >= 1", "InvalidArgument");
        set_threads(opts.threads);
        if (ctx.out_dir) fs::create_directories(*ctx.out_dir);

        Json cfg;
        try {
            cfg = Json::parse(config_text);
        } catch (const Json::parse_error& e) {
            throw ConfigError("", std::string("config is not valid JSON: ") + e.what(), "ParseError");
        }
        Object root(cfg, "");
        read_header(root, command);
        log(2, "running " + command);
        out = handler(root, ctx);
        rr.pass = out.pass;
        rr.result_json = dump(out.result);
        rr.csv = out.csv;
        rr.exit_code = opts.assert_mode && out.pass == false ? kAssertFailed : kOk;
        if (rr.exit_code == kAssertFailed) log(0, command + ": acceptance threshold not met");
    } catch (const ConfigError& e) {
        rr.exit_code = kValidation;
        error = Json{{"error", "ValidationError"}, {"cause", e.cause()}, {"path", e.path()}, {"message", e.what()}};
    } catch (const Error& e) {
        const std::string& k = e.kind();
        rr.exit_code = is_validation_kind(k) ? kValidation : kNumerical;
        if (k != "NoConvergence" && k != "BudgetExceeded" && rr.exit_code == kNumerical)
            log(2, k + " reported as a numerical failure");
        error = Json{{"error", k}, {"message", e.what()}};
    } catch (const fs::filesystem_error& e) {
        rr.exit_code = kValidation;
        error = Json{{"error", "ValidationError"}, {"cause", "OutputDirectory"}, {"path", ""}, {"message", e.what()}};
    } catch (const std::exception& e) {
        rr.exit_code = kInternal;
        error = Json{{"error", "InternalError"}, {"message", e.what()}};
    }
    if (!error.is_null()) {
        error["command"] = command;
        error["exit_code"] = rr.exit_code;
        rr.error_json = error.dump();
    }
    rr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (ctx.out_dir && fs::is_directory(*ctx.out_dir)) {
        try {
            if (rr.result_json.empty()) {
                write_file(*ctx.out_dir / "error.json", error.dump(2) + "\n");
            } else {
                write_file(*ctx.out_dir / "result.json", rr.result_json);
                for (const auto& [name, text] : rr.csv) write_file(*ctx.out_dir / name, text);
            }
            Json files = Json::array();
            files.push_back(rr.result_json.empty() ? "error.json" : "result.json");
            for (const auto& [name, text] : rr.csv) files.push_back(name);
            const Json meta{{"version", version()},
                            {"command", command},
                            {"started", started},
                            {"seconds", rr.seconds},
                            {"threads", opts.threads},
                            {"seed_override", opts.seed ? Json(*opts.seed) : Json(nullptr)},
                            {"assert", opts.assert_mode},
                            {"exit_code", rr.exit_code},
                            {"files", files}};
            write_file(*ctx.out_dir / "meta.json", dump(meta));
        } catch (const std::exception& e) {
            log(0, std::string("cannot write artifacts: ") + e.what());
            if (rr.exit_code == kOk) rr.exit_code = kInternal;
        }
    }
    log(2, command + " finished in " + std::to_string(rr.seconds) + " s with exit code " + std::to_string(rr.exit_code));
    return rr;
}

}  // namespace roughforms::cli
