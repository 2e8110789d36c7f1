#include "roughforms/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "roughforms/errors.hpp"

namespace roughforms {

namespace {

GaussRule compute(int n) {
    const double pi = std::acos(-1.0);
    GaussRule r;
    for (int i = 1; i <= n; ++i) {
        double z = std::cos(pi * (i - 0.25) / (n + 0.5)), dp = 1;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x.push_back(0.5 * (1 - z));
        r.w.push_back(1.0 / ((1 - z * z) * dp * dp));
    }
    return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("Gauss-Legendre rule needs n >= 1");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
    return it->second;
}

}  // namespace roughforms
