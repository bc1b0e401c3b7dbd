#pragma once

// Logarithmically spaced radial grid.  Nodes are cell centres in log space;
// cell edges sit at the geometric means, so integration with the node volume
// vol_i = 4 pi r_i^2 (e_{i+1} - e_i) is the midpoint rule in log r (second
// order, exact bookkeeping against the transport sweeps which conserve
// sum_i f_i (e_{i+1} - e_i) per row).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vpatom {

struct RadialGrid {
    std::vector<double> r;      // node radii (log-midpoints), size M
    std::vector<double> edge;   // cell edges, size M+1
    std::vector<double> dr;     // edge[i+1] - edge[i]
    std::vector<double> vol;    // 4 pi r_i^2 dr_i

    RadialGrid() = default;

    RadialGrid(double r_min, double r_max, std::size_t m) {
        if (!(r_min > 0.0) || !(r_max > r_min) || m < 4)
            throw std::invalid_argument("RadialGrid: need 0 < r_min < r_max and M >= 4");
        const double lmin = std::log(r_min), lmax = std::log(r_max);
        const double dl = (lmax - lmin) / static_cast<double>(m);
        edge.resize(m + 1);
        r.resize(m);
        dr.resize(m);
        vol.resize(m);
        for (std::size_t i = 0; i <= m; ++i) edge[i] = std::exp(lmin + dl * static_cast<double>(i));
        const double pi = 3.14159265358979323846;
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = std::exp(lmin + dl * (static_cast<double>(i) + 0.5));
            dr[i] = edge[i + 1] - edge[i];
            vol[i] = 4.0 * pi * r[i] * r[i] * dr[i];
        }
    }

    std::size_t size() const { return r.size(); }
    double r_min() const { return edge.front(); }
    double r_max() const { return edge.back(); }
};

} // namespace vpatom
