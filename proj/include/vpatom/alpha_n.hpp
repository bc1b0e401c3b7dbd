#pragma once

// Estimator for the configuration constant
//   alpha_n = inf over x_1..x_n in R^3 of
//     [ sum_{i<j} (|x_i|^2 + |x_j|^2)/|x_i - x_j| ] / [ (n-1) sum_i |x_i| ].
//
// The ratio is invariant under joint rescaling, so configurations are gauged
// to sum_i |x_i| = 1.  Minimisation is a derivative-free Nelder-Mead simplex
// search restarted from seeded random configurations; near-coincident points
// are pushed apart by a smooth penalty instead of letting 1/|x_i-x_j| blow up.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace vpatom {

struct AlphaNEstimate {
    std::size_t n = 0;
    double value = 0.0;
    std::vector<double> configuration; // 3n coordinates, gauged to sum |x_i| = 1
    std::size_t restarts = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double nam_ratio_raw(const std::vector<double>& x, std::size_t n, double coincidence_eps,
                            double* penalty_out) {
    double denom = 0.0;
    std::vector<double> radii(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = &x[3 * i];
        radii[i] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        denom += radii[i];
    }
    double num = 0.0, penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[3 * i] - x[3 * j];
            const double dy = x[3 * i + 1] - x[3 * j + 1];
            const double dz = x[3 * i + 2] - x[3 * j + 2];
            const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
            const double safe = std::max(dist, coincidence_eps * std::max(1.0, denom));
            num += (radii[i] * radii[i] + radii[j] * radii[j]) / safe;
            if (dist < coincidence_eps * std::max(1.0, denom))
                penalty += (coincidence_eps * std::max(1.0, denom) - dist);
        }
    }
    if (penalty_out) *penalty_out = penalty;
    if (denom <= 0.0) return 1e30;
    return num / ((static_cast<double>(n) - 1.0) * denom);
}

} // namespace detail

// Scale-invariant objective value for an explicit configuration.
inline double nam_ratio(const std::vector<double>& coords, std::size_t n) {
    if (coords.size() != 3 * n || n < 2)
        throw std::invalid_argument("nam_ratio: need 3n coordinates with n >= 2");
    return detail::nam_ratio_raw(coords, n, 0.0, nullptr);
}

inline AlphaNEstimate estimate_alpha_N(std::size_t n, std::size_t restarts = 64,
                                       std::uint64_t seed = 20260825u,
                                       std::size_t max_iter = 4000) {
    if (n < 2) throw std::invalid_argument("estimate_alpha_N: n must be >= 2");
    const std::size_t dim = 3 * n;
    const double coincidence_eps = 1e-9;

    auto objective = [&](std::vector<double>& pt) {
        // Gauge each evaluation point to sum |x_i| = 1 so the simplex cannot
        // drift along the scale-invariance ray.
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = &pt[3 * i];
            total += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        if (total < 1e-12) return 1e30;
        for (double& c : pt) c /= total;
        double penalty = 0.0;
        const double v = detail::nam_ratio_raw(pt, n, coincidence_eps, &penalty);
        return v + 1e3 * penalty;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    AlphaNEstimate best;
    best.n = n;
    best.value = 1e30;
    best.restarts = restarts;
    best.seed = seed;

    for (std::size_t restart = 0; restart < restarts; ++restart) {
        // Random start plus standard Nelder-Mead (reflection 1, expansion 2,
        // contraction 1/2, shrink 1/2).
        std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(dim));
        std::vector<double> fvals(dim + 1);
        for (std::size_t v = 0; v <= dim; ++v) {
            for (std::size_t d = 0; d < dim; ++d) simplex[v][d] = gauss(rng);
            fvals[v] = objective(simplex[v]);
        }
        std::vector<std::size_t> order(dim + 1);
        std::vector<double> centroid(dim), cand(dim), cand2(dim);
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            for (std::size_t v = 0; v <= dim; ++v) order[v] = v;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
            const std::size_t lo = order[0], hi = order[dim], second_hi = order[dim - 1];
            if (std::abs(fvals[hi] - fvals[lo]) < 1e-13 * (1.0 + std::abs(fvals[lo]))) break;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t v = 0; v <= dim; ++v) {
                if (v == hi) continue;
                for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[v][d];
            }
            for (double& c : centroid) c /= static_cast<double>(dim);

            for (std::size_t d = 0; d < dim; ++d)
                cand[d] = centroid[d] + (centroid[d] - simplex[hi][d]);
            double f_ref = objective(cand);
            if (f_ref < fvals[lo]) {
                for (std::size_t d = 0; d < dim; ++d)
                    cand2[d] = centroid[d] + 2.0 * (centroid[d] - simplex[hi][d]);
                double f_exp = objective(cand2);
                if (f_exp < f_ref) {
                    simplex[hi] = cand2;
                    fvals[hi] = f_exp;
                } else {
                    simplex[hi] = cand;
                    fvals[hi] = f_ref;
                }
            } else if (f_ref < fvals[second_hi]) {
                simplex[hi] = cand;
                fvals[hi] = f_ref;
            } else {
                for (std::size_t d = 0; d < dim; ++d)
                    cand2[d] = centroid[d] + 0.5 * (simplex[hi][d] - centroid[d]);
                double f_con = objective(cand2);
                if (f_con < fvals[hi]) {
                    simplex[hi] = cand2;
                    fvals[hi] = f_con;
                } else {
                    for (std::size_t v = 0; v <= dim; ++v) {
                        if (v == lo) continue;
                        for (std::size_t d = 0; d < dim; ++d)
                            simplex[v][d] = simplex[lo][d] + 0.5 * (simplex[v][d] - simplex[lo][d]);
                        fvals[v] = objective(simplex[v]);
                    }
                }
            }
        }
        std::size_t lo = 0;
        for (std::size_t v = 1; v <= dim; ++v)
            if (fvals[v] < fvals[lo]) lo = v;
        if (fvals[lo] < best.value) {
            best.value = fvals[lo];
            best.configuration = simplex[lo];
        }
    }
    // Report the clean ratio of the gauged best configuration (no penalty).
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = &best.configuration[3 * i];
        total += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    }
    for (double& c : best.configuration) c /= total;
    best.value = nam_ratio(best.configuration, n);
    return best;
}

} // namespace vpatom
