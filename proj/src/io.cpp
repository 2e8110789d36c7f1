#include "roughforms/io.hpp"

#include "config.hpp"

namespace roughforms {

namespace config {

std::string child_path(const std::string& path, const std::string& key) {
    std::string escaped;
    for (char c : key) {
        if (c == '~') escaped += "~0";
        else if (c == '/') escaped += "~1";
        else escaped += c;
    }
    return path + "/" + escaped;
}

std::string child_path(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

Object::Object(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
}

bool Object::has(const std::string& key) const { return j_.contains(key); }

const Json& Object::raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required field '" + key + "'");
    used_.insert(key);
    return j_.at(key);
}

const Json* Object::find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
}

void Object::finish() const {
    for (const auto& item : j_.items())
        if (!used_.count(item.key())) throw ConfigError(at(item.key()), "unknown field '" + item.key() + "'");
}

Point point_from_json(const Json& j, const std::string& path, int d) {
    const auto v = as_vector<double>(j, path);
    if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
        throw ConfigError(path, "a point needs 1.." + std::to_string(kMaxDim) + " coordinates");
    if (d >= 0 && static_cast<int>(v.size()) != d)
        throw ConfigError(path, "expected " + std::to_string(d) + " coordinates, got " + std::to_string(v.size()));
    Point p(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<int>(i)) = v[i];
    return p;
}

}  // namespace config

Json to_json(const Simplex& s) {
    Json vs = Json::array();
    for (int j = 0; j <= s.k(); ++j) {
        Json v = Json::array();
        for (int i = 0; i < s.d(); ++i) v.push_back(s.vertices()(i, j));
        vs.push_back(v);
    }
    return Json{{"d", s.d()}, {"k", s.k()}, {"vertices", vs}};
}

Json to_json(const Chain& c) {
    Json terms = Json::array();
    for (const auto& t : c) terms.push_back(Json{{"coeff", t.coeff}, {"simplex", to_json(t.simplex)}});
    return Json{{"terms", terms}};
}

Json to_json(const SewingResult& r) {
    return Json{{"value", r.value},
                {"tail_bound", r.tail_bound},
                {"depth", r.depth},
                {"level_values", r.level_values},
                {"stop_rule", r.stop_rule}};
}

Json to_json(const NormReport& r) {
    Json bands = Json::array();
    for (const auto& b : r.bands)
        bands.push_back(Json{{"band", b.band},
                             {"count", b.count},
                             {"sup_mass", b.sup_mass},
                             {"sup_diam", b.sup_diam},
                             {"sup_boundary", b.sup_boundary},
                             {"boundary_count", b.boundary_count}});
    return Json{{"alpha", r.alpha},
                {"beta", r.beta},
                {"norm_alpha", r.norm_alpha},
                {"norm_diam", r.norm_diam},
                {"norm_boundary", r.norm_boundary},
                {"max_ratio", r.max_ratio},
                {"ecc_cap", r.ecc_cap},
                {"uncapped_sup_mass", r.uncapped_sup_mass},
                {"samples", r.samples},
                {"boundary_samples", r.boundary_samples},
                {"bands", bands}};
}

Json to_json(const SubdivisionStats& s) {
    Json records = Json::array();
    for (const auto& l : s.levels)
        records.push_back(Json{{"scheme", s.scheme},
                               {"k", s.k},
                               {"level", l.level},
                               {"card", l.count},
                               {"c", l.c},
                               {"ecc_ratio", l.ecc_ratio},
                               {"vol_ratio", l.vol_ratio}});
    return records;
}

Simplex simplex_from_json(const Json& j, const std::string& path) {
    config::Object o(j, path);
    const Json& vs = o.raw("vertices");
    const std::string vpath = o.at("vertices");
    if (!vs.is_array() || vs.empty()) throw ConfigError(vpath, "expected a non-empty array of points");
    const auto d = o.maybe<int>("d");
    const auto k = o.maybe<int>("k");
    o.finish();
    std::vector<std::vector<double>> pts;
    int dim = d ? *d : -1;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const Point p = config::point_from_json(vs[i], config::child_path(vpath, i), dim);
        dim = static_cast<int>(p.size());
        pts.emplace_back(p.data(), p.data() + p.size());
    }
    if (pts.size() > static_cast<std::size_t>(dim) + 1)
        throw ConfigError(vpath, "a simplex in R^" + std::to_string(dim) + " has at most " + std::to_string(dim + 1) +
                                     " vertices");
    if (k && *k != static_cast<int>(pts.size()) - 1)
        throw ConfigError(o.at("k"), "k = " + std::to_string(*k) + " but " + std::to_string(pts.size()) +
                                         " vertices were given");
    return Simplex::from_points(pts);
}

Chain chain_from_json(const Json& j, const std::string& path) {
    config::Object o(j, path);
    const Json& terms = o.raw("terms");
    const std::string tpath = o.at("terms");
    o.finish();
    if (!terms.is_array()) throw ConfigError(tpath, "expected an array");
    Chain c;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        config::Object t(terms[i], config::child_path(tpath, i));
        const int coeff = t.get<int>("coeff", 1);
        const Simplex s = simplex_from_json(t.raw("simplex"), t.at("simplex"));
        t.finish();
        if (!c.empty() && (s.k() != c.k() || s.d() != c.d()))
            throw ConfigError(t.at("simplex"), "chain terms must share k and d");
        c.add(s, coeff);
    }
    return c;
}

}  // namespace roughforms
