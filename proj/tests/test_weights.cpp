#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <vpatom/quadrature.hpp>
#include <vpatom/weights.hpp>

using namespace vpatom;

namespace {

Vec3 random_point(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    return {g(rng), g(rng), g(rng)};
}

} // namespace

TEST_CASE("gauss_legendre integrates polynomials to machine precision") {
    const QuadratureRule rule = gauss_legendre(8, 0.0, 1.0);
    for (int k = 0; k <= 15; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i)
            sum += rule.w[i] * std::pow(rule.x[i], k);
        CHECK(sum == Catch::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
    const QuadratureRule wide = gauss_legendre(16, -2.0, 5.0);
    double total = 0.0;
    for (double w : wide.w) total += w;
    CHECK(total == Catch::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("profile values and derivatives") {
    CHECK(g_profile(0.0) == 0.0);
    CHECK(g_profile(1.0) == Catch::Approx(0.21460183660255169).epsilon(1e-14));
    CHECK(g_profile(10.0) == Catch::Approx(8.5288723256962654).epsilon(1e-14));
    CHECK(g_prime(2.0) == Catch::Approx(0.8).epsilon(1e-15));
    CHECK(g_double_prime(1.0) == Catch::Approx(0.5).epsilon(1e-15));

    // Finite-difference consistency of the derivative chain.
    const double h = 1e-6;
    for (double r : {0.3, 1.0, 2.7, 9.0}) {
        CHECK(g_prime(r) ==
              Catch::Approx((g_profile(r + h) - g_profile(r - h)) / (2 * h)).epsilon(1e-8));
        CHECK(g_double_prime(r) ==
              Catch::Approx((g_prime(r + h) - g_prime(r - h)) / (2 * h)).epsilon(1e-8));
    }
}

TEST_CASE("scaled profile identities") {
    const WeightParams p(3.5);
    for (double r : {0.2, 1.0, 3.5, 11.0}) {
        CHECK(g_R(r, p) == Catch::Approx(p.R * p.R * p.R * g_profile(r / p.R)).epsilon(1e-15));
        // g_R'(r) / r^2 is the moment weight 1/(1 + (r/R)^2).
        CHECK(g_R_prime(r, p) / (r * r) == Catch::Approx(moment_weight(r, p)).epsilon(1e-14));
        CHECK(moment_weight(r, p) <= 1.0);
        CHECK(moment_weight(r, p) <= (p.R * p.R) / (r * r) + 1e-15);
    }
    // Unscaled limit: R -> infinity recovers r^2/ (1+..) -> ... the weight
    // tends to 1 on any fixed radius.
    CHECK(moment_weight(2.0, WeightParams(1e8)) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient and Hessian match finite differences") {
    std::mt19937_64 rng(123);
    const WeightParams p(2.0);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        Vec3 x = random_point(rng, 1.7);
        if (norm(x) < 0.1) continue;
        const Vec3 grad = grad_gR(x, p);
        auto hess = hess_gR(x, p);
        for (int d = 0; d < 3; ++d) {
            Vec3 xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            const double fd = (g_R(norm(xp), p) - g_R(norm(xm), p)) / (2 * h);
            CHECK(grad[d] == Catch::Approx(fd).margin(1e-7));
            const Vec3 gp = grad_gR(xp, p), gm = grad_gR(xm, p);
            for (int e = 0; e < 3; ++e)
                CHECK(hess[e][d] == Catch::Approx((gp[e] - gm[e]) / (2 * h)).margin(1e-7));
        }
    }
}

TEST_CASE("Hessian is positive semidefinite and matches the split form") {
    std::mt19937_64 rng(77);
    const WeightParams p(1.3);
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 x = random_point(rng, 2.0);
        const double r = norm(x);
        if (r < 1e-3) continue;
        Vec3 xi = random_point(rng, 3.0);
        auto hess = hess_gR(x, p);
        double quad = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) quad += xi[i] * hess[i][j] * xi[j];
        CHECK(quad >= -1e-14 * dot(xi, xi));

        // Split xi into radial and tangential parts and compare with the
        // (r, w, vt^2) form used by the kinetic diagnostics.
        const double w = dot(xi, x) / r;
        const double vt2 = dot(xi, xi) - w * w;
        CHECK(quad == Catch::Approx(hess_quadratic_form(r, w, vt2, p))
                          .margin(1e-12 * std::max(1.0, std::abs(quad))));
    }
}

TEST_CASE("two-point bound at frozen configurations") {
    // Antipodal pair on the unit sphere: field term 2 g'(1) / |x-y|^2 over
    // distance 2 gives 1/4; the product side gives g'(1)^2 / 2 = 1/8.
    const Vec3 x{1.0, 0.0, 0.0}, y{-1.0, 0.0, 0.0};
    const InequalityMargin m = check_ll1(x, y);
    CHECK(m.lhs == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(m.rhs == Catch::Approx(0.125).epsilon(1e-15));
    CHECK(m.ok);

    // Very asymmetric pair: bound still holds.
    const InequalityMargin far = check_ll1({100.0, 0.0, 0.0}, {0.0, 0.01, 0.0});
    CHECK(far.ok);
}

TEST_CASE("two-point bound over random pairs") {
    std::mt19937_64 rng(20260825u);
    for (int trial = 0; trial < 20000; ++trial) {
        const double scale = std::exp(std::uniform_real_distribution<double>(-4.0, 4.0)(rng));
        Vec3 x = random_point(rng, scale);
        Vec3 y = random_point(rng, scale);
        if (norm(x) < 1e-12 || norm(y) < 1e-12) continue;
        Vec3 d{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
        if (norm(d) < 1e-10 * scale) continue;
        const InequalityMargin m = check_ll1(x, y);
        INFO("x = (" << x[0] << ", " << x[1] << ", " << x[2] << ")  y = (" << y[0] << ", " << y[1]
                     << ", " << y[2] << ")");
        CHECK(m.ok);
    }
}

TEST_CASE("sphere-averaged kernel closed form matches quadrature") {
    // Integrate the cosine average directly with the singularity-absorbing
    // substitution u = 1 - 2 v^2 and compare with the closed form.
    auto quadrature_avg = [](double r, double s) {
        const QuadratureRule rule = gauss_legendre(512, 0.0, 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double v = rule.x[i];
            acc += rule.w[i] * 4.0 * v * detail::sphere_kernel_integrand(r, s, 1.0 - 2.0 * v * v);
        }
        return 0.5 * acc;
    };
    for (double r : {0.3, 1.0, 2.4}) {
        for (double s : {0.5, 1.0, 7.0}) {
            CHECK(sphere_avg_kernel(r, s) == Catch::Approx(quadrature_avg(r, s)).epsilon(1e-10));
        }
    }
    // Diagonal limit equals g'(r)/r^2.
    CHECK(sphere_avg_kernel(2.0, 2.0) ==
          Catch::Approx(quadrature_avg(2.0, 2.0 + 1e-9)).epsilon(1e-7));
}

TEST_CASE("sphere-averaged bound on a radius grid") {
    for (double r = 0.1; r < 30.0; r *= 1.35) {
        for (double s = 0.1; s < 30.0; s *= 1.35) {
            const InequalityMargin m64 = check_ll2(r, s, 64);
            const InequalityMargin m256 = check_ll2(r, s, 256);
            INFO("r = " << r << " s = " << s);
            CHECK(m64.ok);
            CHECK(m256.ok);
            // The two quadrature orders agree on the smooth substituted
            // integrand.
            CHECK(m64.lhs == Catch::Approx(m256.lhs).epsilon(1e-9));
        }
    }
}

TEST_CASE("dimension-family bound: frozen antipodal equality cases") {
    // In any dimension, antipodal pairs realise the constant 2^{2-nu}.
    for (std::size_t nu = 2; nu <= 5; ++nu) {
        std::vector<double> x(nu, 0.0), y(nu, 0.0);
        x[0] = 1.7;
        y[0] = -1.7;
        const InequalityMargin m = check_nu_inequality(x.data(), y.data(), nu);
        CHECK(m.lhs == Catch::Approx(std::pow(2.0, 2.0 - static_cast<double>(nu))).epsilon(1e-13));
        CHECK(m.margin == Catch::Approx(0.0).margin(1e-13));
        CHECK(m.ok);
    }
    // 3D overload agrees with the buffer form.
    const Vec3 a{0.4, -1.0, 0.2}, b{2.0, 0.3, -0.7};
    const InequalityMargin via3 = check_nu_inequality(a, b);
    const InequalityMargin viaBuf = check_nu_inequality(a.data(), b.data(), 3);
    CHECK(via3.lhs == viaBuf.lhs);
    CHECK(via3.rhs == 0.5);
}

TEST_CASE("dimension-family bound over random pairs") {
    std::mt19937_64 rng(3141592u);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t nu = 2; nu <= 5; ++nu) {
        for (int trial = 0; trial < 10000; ++trial) {
            std::vector<double> x(nu), y(nu);
            const double sx = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
            const double sy = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
            for (std::size_t d = 0; d < nu; ++d) {
                x[d] = sx * g(rng);
                y[d] = sy * g(rng);
            }
            double rx = 0.0, ry = 0.0, dd = 0.0;
            for (std::size_t d = 0; d < nu; ++d) {
                rx += x[d] * x[d];
                ry += y[d] * y[d];
                dd += (x[d] - y[d]) * (x[d] - y[d]);
            }
            if (rx < 1e-20 || ry < 1e-20 || dd < 1e-20) continue;
            const InequalityMargin m = check_nu_inequality(x.data(), y.data(), nu);
            INFO("nu = " << nu << " trial = " << trial);
            CHECK(m.ok);
        }
    }
}
