#pragma once

// Conservative semi-Lagrangian remap of cell averages under a constant shift.
//
// Each cell carries a parabolic reconstruction whose edge values come from
// the derivative of the quartic through five neighbouring points of the
// cumulative mass function (the classic piecewise-parabolic construction,
// valid on nonuniform grids), then monotonised so the parabola stays inside
// the hull of the neighbouring averages.  New averages are exact integrals
// of the reconstruction over the shifted cells, so
//   * total mass is conserved to rounding (boundary crossings reported),
//   * values stay within [min, max] of the local old data (no new extrema),
//   * a constant profile is reproduced exactly for any shift,
// and the shift may exceed one cell width (no CFL restriction).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vpatom {

struct RemapWorkspace {
    std::vector<double> cum;   // cumulative mass at edges, size n+1
    std::vector<double> fl;    // left edge value per cell
    std::vector<double> fr;    // right edge value per cell
};

struct RemapResult {
    double lost_left = 0.0;   // mass displaced past the left end of the data
    double lost_right = 0.0;  // mass displaced past the right end
};

namespace detail {

// Derivative at xm = x[2] of the quartic through (x[k], y[k]), k = 0..4,
// via Newton divided differences.
inline double quartic_derivative_center(const double* x, const double* y) {
    double c01 = (y[1] - y[0]) / (x[1] - x[0]);
    double c12 = (y[2] - y[1]) / (x[2] - x[1]);
    double c23 = (y[3] - y[2]) / (x[3] - x[2]);
    double c34 = (y[4] - y[3]) / (x[4] - x[3]);
    double c012 = (c12 - c01) / (x[2] - x[0]);
    double c123 = (c23 - c12) / (x[3] - x[1]);
    double c234 = (c34 - c23) / (x[4] - x[2]);
    double c0123 = (c123 - c012) / (x[3] - x[0]);
    double c1234 = (c234 - c123) / (x[4] - x[1]);
    double c01234 = (c1234 - c0123) / (x[4] - x[0]);
    const double xm = x[2];
    const double d0 = xm - x[0], d1 = xm - x[1], d2 = xm - x[2], d3 = xm - x[3];
    // P'(xm) for Newton form with nodes x0..x3 (d2 = 0 kills most products).
    double deriv = c01;
    deriv += c012 * (d0 + d1);
    deriv += c0123 * (d0 * d1 + d2 * (d0 + d1));
    deriv += c01234 * (d0 * d1 * d2 + d3 * (d0 * d1 + d2 * (d0 + d1)));
    return deriv;
}

} // namespace detail

// Remap averages `avg` on `edges` (size n+1) by shift s into `out`.
// Data outside [edges[0], edges[n]] is vacuum.  The caller supplies any ghost
// cells as part of the line.  `out` may not alias `avg`.
inline RemapResult ppm_remap(const double* edges, const double* avg, std::size_t n, double s,
                             double* out, RemapWorkspace& ws) {
    if (n < 5) throw std::invalid_argument("ppm_remap: need at least 5 cells");
    ws.cum.resize(n + 1);
    ws.fl.resize(n);
    ws.fr.resize(n);

    ws.cum[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        ws.cum[i + 1] = ws.cum[i] + avg[i] * (edges[i + 1] - edges[i]);
    const double total = ws.cum[n];

    // Edge point values (shared by the two adjacent cells before limiting).
    std::vector<double>& fl = ws.fl;
    std::vector<double>& fr = ws.fr;
    for (std::size_t e = 1; e < n; ++e) {
        double v;
        if (e >= 2 && e + 2 <= n) {
            v = detail::quartic_derivative_center(&edges[e - 2], &ws.cum[e - 2]);
        } else {
            // Near the line ends fall back to the average of the two cells.
            const double hl = edges[e] - edges[e - 1], hr = edges[e + 1] - edges[e];
            v = (avg[e - 1] * hr + avg[e] * hl) / (hl + hr);
        }
        const double lo = std::min(avg[e - 1], avg[e]);
        const double hi = std::max(avg[e - 1], avg[e]);
        v = std::min(hi, std::max(lo, v));
        fr[e - 1] = v;
        fl[e] = v;
    }
    fl[0] = avg[0];
    fr[n - 1] = avg[n - 1];

    // Monotonise each parabola.
    for (std::size_t i = 0; i < n; ++i) {
        const double a = avg[i];
        double l = fl[i], r = fr[i];
        if ((r - a) * (a - l) <= 0.0) {
            l = r = a;
        } else {
            const double d = r - l;
            const double f6 = 6.0 * (a - 0.5 * (l + r));
            if (d * f6 > d * d)
                l = 3.0 * a - 2.0 * r;
            else if (-(d * d) > d * f6)
                r = 3.0 * a - 2.0 * l;
        }
        fl[i] = l;
        fr[i] = r;
    }

    // Cumulative reconstruction mass from the left end to point p (clamped).
    std::size_t walk = 0;
    auto cum_at = [&](double p) -> double {
        if (p <= edges[0]) return 0.0;
        if (p >= edges[n]) return total;
        while (edges[walk + 1] < p) ++walk;
        while (edges[walk] > p) --walk; // safety; p positions are nondecreasing
        const std::size_t j = walk;
        const double h = edges[j + 1] - edges[j];
        const double th = (p - edges[j]) / h;
        const double l = fl[j], df = fr[j] - l;
        const double f6 = 6.0 * (avg[j] - 0.5 * (l + fr[j]));
        const double part = l * th + 0.5 * (df + f6) * th * th - (f6 / 3.0) * th * th * th;
        return ws.cum[j] + part * h;
    };

    double prev = cum_at(edges[0] - s);
    const double first = prev;
    for (std::size_t i = 0; i < n; ++i) {
        const double next = cum_at(edges[i + 1] - s);
        out[i] = (next - prev) / (edges[i + 1] - edges[i]);
        prev = next;
    }
    RemapResult res;
    // Mass of old data displaced beyond the line ends.
    res.lost_left = first;                 // originally in [edges[0], edges[0]-s) for s<0
    res.lost_right = total - prev;         // originally in (edges[n]-s, edges[n]] for s>0
    return res;
}

} // namespace vpatom
