#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roughforms/io.hpp"

namespace roughforms::config {

std::string child_path(const std::string& path, const std::string& key);
std::string child_path(const std::string& path, std::size_t index);

template <class T>
T as(const Json& j, const std::string& path);

template <>
inline double as<double>(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

template <>
inline int as<int>(const Json& j, const std::string& path) {
    if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(path, "integer out of range");
        return static_cast<int>(v);
    }
    throw ConfigError(path, "expected an integer");
}

template <>
inline std::uint64_t as<std::uint64_t>(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) throw ConfigError(path, "expected a non-negative integer");
    throw ConfigError(path, "expected an integer");
}

template <>
inline bool as<bool>(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

template <>
inline std::string as<std::string>(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

template <class T>
std::vector<T> as_vector(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as<T>(j[i], child_path(path, i)));
    return out;
}

/// Strict view of a JSON object: every key must be consumed before finish().
class Object {
public:
    Object(const Json& j, std::string path);

    const std::string& path() const { return path_; }
    std::string at(const std::string& key) const { return child_path(path_, key); }
    bool has(const std::string& key) const;
    const Json& raw(const std::string& key);
    const Json* find(const std::string& key);

    template <class T>
    T get(const std::string& key) {
        return as<T>(raw(key), at(key));
    }
    template <class T>
    T get(const std::string& key, T fallback) {
        const Json* v = find(key);
        return v ? as<T>(*v, at(key)) : fallback;
    }
    template <class T>
    std::optional<T> maybe(const std::string& key) {
        const Json* v = find(key);
        if (!v || v->is_null()) return std::nullopt;
        return as<T>(*v, at(key));
    }
    template <class T>
    std::vector<T> list(const std::string& key) {
        return as_vector<T>(raw(key), at(key));
    }
    template <class T>
    std::vector<T> list(const std::string& key, std::vector<T> fallback) {
        const Json* v = find(key);
        return v ? as_vector<T>(*v, at(key)) : fallback;
    }
    Object object(const std::string& key) { return Object(raw(key), at(key)); }

    /// Rejects any key that was never read.
    void finish() const;

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Point point_from_json(const Json& j, const std::string& path, int d = -1);

}  // namespace roughforms::config
