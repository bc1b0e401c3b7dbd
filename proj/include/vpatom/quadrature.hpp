#pragma once

// Gauss-Legendre nodes/weights (Newton iteration on Legendre polynomials).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vpatom {

struct QuadratureRule {
    std::vector<double> x; // nodes
    std::vector<double> w; // weights
};

// n-point Gauss-Legendre rule on [-1, 1].
inline QuadratureRule gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: order must be positive");
    QuadratureRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi-style initial guess, then Newton on P_n.
        double z = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - static_cast<double>(j) * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

// Gauss-Legendre rule mapped to [a, b].
inline QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
    QuadratureRule rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < n; ++i) {
        rule.x[i] = mid + half * rule.x[i];
        rule.w[i] *= half;
    }
    return rule;
}

} // namespace vpatom
