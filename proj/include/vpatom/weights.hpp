#pragma once

// Weight-function machinery used by the moment diagnostics, plus the
// two-point inequality checks that underpin the interaction lower bounds.
//
// The base profile is g(r) = r - arctan(r) with
//   g'(r)  = r^2/(1+r^2),        g''(r) = 2r/(1+r^2)^2,
// rescaled to g_R(x) = R^3 g(|x|/R).  Key identities:
//   grad g_R(x) = (|x|^2 / (1+|x|^2/R^2)) * x/|x|^3
//   grad g_R(x) . x/|x|^3 = 1/(1+|x|^2/R^2)
//   Hess g_R = R g''(r/R) w(x)w(x)^T + (R^2 g'(r/R)/r)(I - w(x)w(x)^T) >= 0.

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>

#include "quadrature.hpp"

namespace vpatom {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct WeightParams {
    double R = 1.0;
    WeightParams() = default;
    explicit WeightParams(double radius) : R(radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("WeightParams: R must be positive");
    }
};

// g and radial derivatives.
inline double g_profile(double r) { return r - std::atan(r); }
inline double g_prime(double r) { return r * r / (1.0 + r * r); }
inline double g_double_prime(double r) {
    const double d = 1.0 + r * r;
    return 2.0 * r / (d * d);
}

// Scaled profile g_R(x) = R^3 g(|x|/R) and friends, as functions of r = |x|.
inline double g_R(double r, const WeightParams& p) { return p.R * p.R * p.R * g_profile(r / p.R); }
inline double g_R_prime(double r, const WeightParams& p) { return p.R * p.R * g_prime(r / p.R); }
inline double g_R_double_prime(double r, const WeightParams& p) { return p.R * g_double_prime(r / p.R); }

// Moment weight 1/(1 + (r/R)^2); this is g_R'(r)/r^2.
inline double moment_weight(double r, const WeightParams& p) {
    const double s = r / p.R;
    return 1.0 / (1.0 + s * s);
}

// Laplacian of g_R at radius r (both Hessian eigenvalue branches).
inline double laplacian_g_R(double r, const WeightParams& p) {
    return g_R_double_prime(r, p) + 2.0 * g_R_prime(r, p) / r;
}

inline Vec3 grad_gR(const Vec3& x, const WeightParams& p) {
    const double r = norm(x);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    const double c = g_R_prime(r, p) / r;
    return {c * x[0], c * x[1], c * x[2]};
}

inline std::array<std::array<double, 3>, 3> hess_gR(const Vec3& x, const WeightParams& p) {
    const double r = norm(x);
    if (r == 0.0) throw std::invalid_argument("hess_gR: undefined at the origin");
    const double lam_rad = g_R_double_prime(r, p);   // along x/|x|
    const double lam_tan = g_R_prime(r, p) / r;      // tangential (double)
    std::array<std::array<double, 3>, 3> h{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double proj = x[i] * x[j] / (r * r);
            h[i][j] = lam_rad * proj + lam_tan * ((i == j ? 1.0 : 0.0) - proj);
        }
    }
    return h;
}

// Phase-space weight w_R(x, xi) = grad g_R(x) . xi.
inline double w_R(const Vec3& x, const Vec3& xi, const WeightParams& p) {
    return dot(grad_gR(x, p), xi);
}

// Quadratic form xi . Hess g_R(x) xi split into radial/tangential velocity
// parts; used by the phase-space dispersion term.  w is the radial velocity
// component, vt2 the squared tangential speed.
inline double hess_quadratic_form(double r, double w, double vt2, const WeightParams& p) {
    return g_R_double_prime(r, p) * w * w + (g_R_prime(r, p) / r) * vt2;
}

struct InequalityMargin {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0; // lhs - rhs
    bool ok = false;
};

// Two-point bound for the unscaled profile:
//   (g'(|x|) x/|x| - g'(|y|) y/|y|) . (x-y)/|x-y|^3
//      >= (1/2) (g'(|x|)/|x|^2) (g'(|y|)/|y|^2).
inline InequalityMargin check_ll1(const Vec3& x, const Vec3& y, double tol_scale = 1e-12) {
    const double rx = norm(x), ry = norm(y);
    if (rx == 0.0 || ry == 0.0) throw std::invalid_argument("check_ll1: points must be nonzero");
    Vec3 d{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
    const double dist = norm(d);
    if (dist == 0.0) throw std::invalid_argument("check_ll1: points must be distinct");
    const double gx = g_prime(rx) / rx, gy = g_prime(ry) / ry;
    Vec3 field{gx * x[0] - gy * y[0], gx * x[1] - gy * y[1], gx * x[2] - gy * y[2]};
    InequalityMargin m;
    m.lhs = dot(field, d) / (dist * dist * dist);
    m.rhs = 0.5 * (g_prime(rx) / (rx * rx)) * (g_prime(ry) / (ry * ry));
    m.margin = m.lhs - m.rhs;
    m.ok = m.margin >= -tol_scale * std::max(1.0, std::abs(m.rhs));
    return m;
}

namespace detail {

// Integrand of the sphere-averaged two-point kernel at cosine u between the
// directions, radii r and s:
//   k(u) = [g'(r)(r - s u) + g'(s)(s - r u)] / (r^2 + s^2 - 2 r s u)^{3/2}.
inline double sphere_kernel_integrand(double r, double s, double u) {
    const double d2 = r * r + s * s - 2.0 * r * s * u;
    const double d = std::sqrt(d2);
    return (g_prime(r) * (r - s * u) + g_prime(s) * (s - r * u)) / (d2 * d);
}

} // namespace detail

// Sphere average of the two-point kernel over both unit spheres, evaluated
// in closed form.  Substituting t = |x - y| turns the cosine integral into
//   (1/(2 r s)) Int_{|r-s|}^{r+s} [ A/t^2 + B ] dt,
//   A = (r^2 - s^2) (g'(r)/(2r) - g'(s)/(2s)),  B = g'(r)/(2r) + g'(s)/(2s),
// which removes the |x-y| -> 0 singularity entirely.
inline double sphere_avg_kernel(double r, double s) {
    if (!(r > 0.0) || !(s > 0.0))
        throw std::invalid_argument("sphere_avg_kernel: radii must be positive");
    const double br = 0.5 * g_prime(r) / r, bs = 0.5 * g_prime(s) / s;
    const double B = br + bs;
    const double diff = std::abs(r - s);
    if (diff < 1e-12 * (r + s)) {
        // Diagonal limit: A -> 0 like (r-s)^2, leaving B/r.
        return B / (0.5 * (r + s));
    }
    const double A = (r * r - s * s) * (br - bs);
    const double tmin = diff, tmax = r + s;
    return (A * (1.0 / tmin - 1.0 / tmax) + 2.0 * B * std::min(r, s)) / (2.0 * r * s);
}

// Sphere-averaged two-point bound:
//   avg over unit spheres of the ll1 kernel >= (g'(r)/r^2)(g'(s)/s^2),
// with the left side evaluated by Gauss-Legendre quadrature in the cosine.
// The substitution u = 1 - 2 v^2 absorbs the inverse-square-root singularity
// that appears at u -> 1 when r = s.
inline InequalityMargin check_ll2(double r, double s, std::size_t quadrature_order = 64) {
    if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("check_ll2: radii must be positive");
    if (quadrature_order < 2) throw std::invalid_argument("check_ll2: order must be >= 2");
    const QuadratureRule rule = gauss_legendre(quadrature_order, 0.0, 1.0);
    double lhs = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double v = rule.x[i];
        const double u = 1.0 - 2.0 * v * v;
        lhs += rule.w[i] * 4.0 * v * detail::sphere_kernel_integrand(r, s, u);
    }
    lhs *= 0.5; // the 1/2 of the cosine average over [-1, 1]
    InequalityMargin m;
    m.lhs = lhs;
    m.rhs = (g_prime(r) / (r * r)) * (g_prime(s) / (s * s));
    m.margin = m.lhs - m.rhs;
    // Quadrature tolerance: the substituted integrand is smooth, so the rule
    // converges fast; keep a conservative floor for low orders.
    const double tol = std::max(1e-12, 1e-4 / std::pow(static_cast<double>(quadrature_order), 3.0));
    m.ok = m.margin >= -tol * std::max(1.0, std::abs(m.rhs));
    return m;
}

// Dimension-family bound in R^nu:
//   (|x|^{nu-1} x/|x| - |y|^{nu-1} y/|y|) . (x-y)/|x-y|^nu >= 2^{2-nu},
// checked here for nu-dimensional points supplied as buffers.
inline InequalityMargin check_nu_inequality(const double* x, const double* y, std::size_t nu,
                                            double tol_scale = 1e-12) {
    if (nu < 2) throw std::invalid_argument("check_nu_inequality: nu must be >= 2");
    double rx2 = 0.0, ry2 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < nu; ++i) {
        rx2 += x[i] * x[i];
        ry2 += y[i] * y[i];
        const double di = x[i] - y[i];
        d2 += di * di;
    }
    const double rx = std::sqrt(rx2), ry = std::sqrt(ry2), dist = std::sqrt(d2);
    if (rx == 0.0 || ry == 0.0 || dist == 0.0)
        throw std::invalid_argument("check_nu_inequality: points must be nonzero and distinct");
    const double cx = std::pow(rx, static_cast<double>(nu) - 2.0);
    const double cy = std::pow(ry, static_cast<double>(nu) - 2.0);
    double num = 0.0;
    for (std::size_t i = 0; i < nu; ++i) num += (cx * x[i] - cy * y[i]) * (x[i] - y[i]);
    InequalityMargin m;
    m.lhs = num / std::pow(dist, static_cast<double>(nu));
    m.rhs = std::pow(2.0, 2.0 - static_cast<double>(nu));
    m.margin = m.lhs - m.rhs;
    m.ok = m.margin >= -tol_scale * std::max(1.0, std::abs(m.rhs));
    return m;
}

inline InequalityMargin check_nu_inequality(const Vec3& x, const Vec3& y, double tol_scale = 1e-12) {
    return check_nu_inequality(x.data(), y.data(), 3, tol_scale);
}

} // namespace vpatom
