#pragma once

#include <vector>

namespace roughforms {

/// Gauss-Legendre rule on [0, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Cached n-point rule.
const GaussRule& gauss_legendre(int n);

}  // namespace roughforms
