#include "roughforms/holder.hpp"

#include <cmath>
#include <numbers>

#include "roughforms/errors.hpp"
#include "roughforms/rng.hpp"

namespace roughforms {

Weierstrass::Weierstrass(double gamma, std::uint64_t seed, int d, double phase, int terms)
    : gamma_(gamma), seed_(seed), d_(d), phase_(phase) {
    if (!(gamma > 0 && gamma <= 1)) throw InvalidArgument("Weierstrass exponent must lie in (0, 1]");
    if (d < 1 || d > kMaxDim) throw UnsupportedDimension("Weierstrass dimension out of range");
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < terms; ++j) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(j));
        Point xi(d);
        do {
            for (int i = 0; i < d; ++i) xi(i) = gauss(rng);
        } while (xi.norm() < 1e-3);
        dirs_.push_back(xi / xi.norm());
        weights_.push_back(std::pow(2.0, -j * gamma));
        freqs_.push_back(2 * std::numbers::pi * std::ldexp(1.0, j));
    }
}

double Weierstrass::operator()(const Point& x) const {
    if (x.size() != d_) throw InvalidArgument("Weierstrass evaluated at a point of wrong dimension");
    double s = 0;
    for (std::size_t j = 0; j < weights_.size(); ++j) s += weights_[j] * std::cos(freqs_[j] * dirs_[j].dot(x) + phase_);
    return s;
}

double Weierstrass::holder_constant() const {
    return static_cast<double>(weights_.size()) * std::pow(2.0, 1 - gamma_) * std::pow(2 * std::numbers::pi, gamma_);
}

HolderFunction constant_function(double c) {
    HolderFunction h;
    h.f = [c](const Point&) { return c; };
    h.gamma = 1.0;
    h.constant = 0.0;
    h.is_constant = true;
    h.name = "const";
    return h;
}

HolderFunction affine_function(const Point& a, double b) {
    HolderFunction h;
    h.f = [a, b](const Point& x) { return a.dot(x) + b; };
    h.gamma = 1.0;
    h.constant = a.norm();
    h.is_constant = a.norm() == 0;
    h.name = "affine";
    return h;
}

HolderFunction weierstrass_function(double gamma, std::uint64_t seed, int d, double phase) {
    auto w = std::make_shared<Weierstrass>(gamma, seed, d, phase);
    HolderFunction h;
    h.f = [w](const Point& x) { return (*w)(x); };
    h.gamma = gamma;
    h.constant = w->holder_constant();
    h.name = "weierstrass";
    return h;
}

HolderCheck holder_spot_check(const HolderFunction& f, const Region& region, std::size_t pairs, std::uint64_t seed) {
    const int d = static_cast<int>(region.lo.size());
    HolderCheck out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t n = 0; n < pairs; ++n) {
        auto rng = make_rng(seed, n);
        Point x(d), dir(d);
        for (int i = 0; i < d; ++i) {
            x(i) = region.lo(i) + unit(rng) * (region.hi(i) - region.lo(i));
            dir(i) = gauss(rng);
        }
        const double r = std::ldexp(1.0, -12) * std::pow(2.0, 12 * unit(rng));
        const Point y = x + r * dir / dir.norm();
        const double bound = f.constant * std::pow(r, f.gamma);
        const double diff = std::abs(f(x) - f(y));
        out.max_ratio = std::max(out.max_ratio, bound > 0 ? diff / bound : (diff > 0 ? INFINITY : 0.0));
        ++out.pairs;
    }
    return out;
}

}  // namespace roughforms
