#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "roughforms/cli.hpp"
#include "roughforms/errors.hpp"
#include "roughforms/expr.hpp"
#include "roughforms/forms.hpp"
#include "roughforms/gaussian.hpp"
#include "roughforms/subdivision.hpp"

namespace py = pybind11;
using namespace roughforms;

namespace {

using Points = std::vector<std::vector<double>>;

Simplex simplex(const Points& vertices) { return Simplex::from_points(vertices); }

Points points(const Simplex& s) {
    Points out;
    for (int j = 0; j <= s.k(); ++j) {
        const Point v = s.vertex(j);
        out.emplace_back(v.data(), v.data() + v.size());
    }
    return out;
}

Point point(const std::vector<double>& x) { return Eigen::Map<const Point>(x.data(), static_cast<Eigen::Index>(x.size())); }

py::dict run(const std::string& command, const std::string& config, std::optional<std::uint64_t> seed, int threads,
             bool assert_mode, std::optional<std::string> out_dir, const std::string& base_dir) {
    cli::RunOptions o;
    o.seed = seed;
    o.threads = threads;
    o.assert_mode = assert_mode;
    o.out_dir = std::move(out_dir);
    o.base_dir = base_dir;
    cli::RunResult r;
    {
        py::gil_scoped_release release;
        r = cli::run(command, config, o);
    }
    py::dict csv;
    for (const auto& [name, text] : r.csv) csv[py::str(name)] = text;
    py::dict out;
    out["exit_code"] = r.exit_code;
    out["result"] = r.result_json;
    out["error"] = r.error_json;
    out["csv"] = csv;
    out["pass"] = r.pass ? py::cast(*r.pass) : py::none();
    out["seconds"] = r.seconds;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Rough differential forms: sewing, products, pullbacks and Gaussian forms.";

    py::register_exception<Error>(m, "RoughformsError");

    m.def("version", &cli::version);
    m.def("commands", &cli::commands);
    m.def("run", &run, py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1,
          py::arg("assert_mode") = false, py::arg("out_dir") = py::none(), py::arg("base_dir") = ".",
          "Runs a batch command on a JSON config text; returns exit code, result and error JSON texts and CSV tables.");

    m.def("volume", [](const Points& v) { return volume(simplex(v)); });
    m.def("diameter", [](const Points& v) { return diameter(simplex(v)); });
    m.def("eccentricity", [](const Points& v) { return eccentricity(simplex(v)); });
    m.def("mass", [](const Points& v, double alpha) { return mass(simplex(v), alpha); }, py::arg("vertices"),
          py::arg("alpha"));
    m.def("boundary", [](const Points& v) {
        std::vector<std::pair<int, Points>> out;
        for (const auto& t : boundary(simplex(v))) out.emplace_back(t.coeff, points(t.simplex));
        return out;
    });

    m.def(
        "subdivide",
        [](const std::string& scheme, const Points& v, int levels) {
            std::vector<std::pair<int, Points>> out;
            for (const auto& t : iterate(*scheme_by_name(scheme), simplex(v), levels)) out.emplace_back(t.coeff, points(t.simplex));
            return out;
        },
        py::arg("scheme"), py::arg("vertices"), py::arg("levels") = 1);
    m.def(
        "subdivision_stats",
        [](const std::string& scheme, const Points& v, int levels) {
            const SubdivisionStats st = stats(*scheme_by_name(scheme), simplex(v), levels);
            py::dict d;
            d["scheme"] = st.scheme;
            d["k"] = st.k;
            d["card"] = st.cardinality;
            d["c"] = st.c;
            d["norm_M"] = st.norm_M;
            std::vector<double> ecc;
            for (const auto& l : st.levels) ecc.push_back(l.ecc_ratio);
            d["ecc_ratio"] = ecc;
            return d;
        },
        py::arg("scheme"), py::arg("vertices"), py::arg("levels") = 6);

    m.def("catalog", [] {
        std::vector<std::string> names;
        for (const auto& e : form_catalog()) names.push_back(e.name);
        return names;
    });
    m.def(
        "integrate",
        [](const std::string& form, const Points& v, double tol) {
            const auto a = catalog_form(form);
            py::gil_scoped_release release;
            return a->eval(simplex(v), tol);
        },
        py::arg("form"), py::arg("vertices"), py::arg("tol") = 1e-8, "Integral of a catalog form over a simplex.");
    m.def(
        "integrate_product",
        [](double gamma, std::uint64_t seed, const std::string& form, const Points& v, double tol,
           const std::string& rule) {
            const auto a = catalog_form(form);
            ProductOptions o;
            o.rule = measure_rule_by_name(rule);
            const auto p = product(weierstrass_function(gamma, seed, a->d()), a, o);
            py::gil_scoped_release release;
            return p->eval(simplex(v), tol);
        },
        py::arg("gamma"), py::arg("seed"), py::arg("form"), py::arg("vertices"), py::arg("tol") = 1e-6,
        py::arg("rule") = "vertex_average", "Young product of a Weierstrass function with a catalog form.");
    m.def(
        "pullback_integrate",
        [](const std::vector<std::string>& map, const std::string& form, const Points& v, double tol) {
            std::vector<expr::Expr> comps;
            for (const auto& c : map) comps.push_back(expr::parse(c));
            const int m_dim = static_cast<int>(v.empty() ? 0 : v.front().size());
            const auto p = pullback(expression_map(m_dim, comps), catalog_form(form));
            py::gil_scoped_release release;
            return p->eval(simplex(v), tol);
        },
        py::arg("map"), py::arg("form"), py::arg("vertices"), py::arg("tol") = 1e-6,
        "Integral of the pullback of a catalog form by a map given as expressions in x1..xm.");
    m.def(
        "stokes_residual",
        [](const std::string& form, const Points& v, double tol) {
            const StokesReport r = stokes_residual(*catalog_form(form), simplex(v), tol);
            return std::make_tuple(r.lhs, r.rhs, r.residual);
        },
        py::arg("form"), py::arg("vertices"), py::arg("tol") = 1e-8);

    m.def("evaluate", [](const std::string& text, const std::vector<double>& x) { return expr::parse(text)(point(x)); });
    m.def("differentiate",
          [](const std::string& text, int var) { return expr::differentiate(expr::parse(text), var).str(); });

    m.def(
        "delta_q_sobolev",
        [](int d, int k, double side, double theta) {
            EdgeMatrix frame = EdgeMatrix::Zero(d, k);
            for (int i = 0; i < k; ++i) frame(i, i) = 1;
            return delta_Q_sobolev(Cube(Point::Zero(d), frame, side), theta).value;
        },
        py::arg("d"), py::arg("k"), py::arg("side"), py::arg("theta"));
    m.def("gaussian_exponents", &gaussian_exponents, py::arg("d"), py::arg("theta"));
    m.def(
        "point_variance",
        [](int d, double theta, int N, double L) { return point_variance(SpectralFieldSpec{d, theta, N, L, 0}); },
        py::arg("d"), py::arg("theta"), py::arg("N") = 64, py::arg("L") = 1.0);
}
