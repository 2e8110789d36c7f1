#pragma once

#include <string>

#include "json.hpp"
#include "roughforms/errors.hpp"
#include "roughforms/forms.hpp"
#include "roughforms/subdivision.hpp"

namespace roughforms {

using Json = nlohmann::ordered_json;

/// A config or input value that fails validation; `path` is a JSON pointer into the document.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what, std::string cause = "ValidationError")
        : Error("ValidationError", what), path_(std::move(path)), cause_(std::move(cause)) {}
    const std::string& path() const { return path_; }
    /// The library error kind that triggered the failure, or "ValidationError".
    const std::string& cause() const { return cause_; }

private:
    std::string path_;
    std::string cause_;
};

/// {"d", "k", "vertices": [[...], ...]}
Json to_json(const Simplex& s);
/// {"terms": [{"coeff", "simplex"}, ...]}
Json to_json(const Chain& c);
/// {"value", "tail_bound", "depth", "level_values", "stop_rule"}
Json to_json(const SewingResult& r);
Json to_json(const NormReport& r);
/// One {scheme, k, level, card, c, ecc_ratio, vol_ratio} record per level.
Json to_json(const SubdivisionStats& s);

Simplex simplex_from_json(const Json& j, const std::string& path = "");
Chain chain_from_json(const Json& j, const std::string& path = "");

}  // namespace roughforms
