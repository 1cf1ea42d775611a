#pragma once
// Shared test utilities: independent oracles live here, not in the library.

#include <cmath>
#include <functional>
#include <vector>

#include <floornav/grid.hpp>
#include <floornav/rng.hpp>

namespace testutil {

// All-pairs Euclidean dilation oracle (independent of floornav::inflate).
inline floornav::GridMap inflate_bruteforce(const floornav::GridMap& map, double radius) {
    floornav::GridMap out = map;
    double reach = radius + 0.5 * map.resolution;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            bool occ = false;
            for (int rr = 0; rr < map.height && !occ; ++rr)
                for (int cc = 0; cc < map.width; ++cc) {
                    if (map.at(cc, rr) == floornav::Cell::Free) continue;
                    double dx = (cc - c) * map.resolution;
                    double dy = (rr - r) * map.resolution;
                    if (std::sqrt(dx * dx + dy * dy) <= reach) {
                        occ = true;
                        break;
                    }
                }
            out.set(c, r, occ ? floornav::Cell::Occupied : floornav::Cell::Free);
        }
    }
    return out;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_diff(const std::function<double()>& loss,
                                       std::vector<double>& params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        double keep = params[i];
        params[i] = keep + h;
        double up = loss();
        params[i] = keep - h;
        double down = loss();
        params[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                            double floor = 1e-6) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

inline floornav::GridMap random_grid(floornav::Rng& rng, int w, int h, double obstacle_frac,
                                     double resolution = 0.1) {
    floornav::GridMap g(w, h, resolution);
    for (auto& c : g.cells)
        if (rng.uniform01() < obstacle_frac) c = floornav::Cell::Occupied;
    return g;
}

}  // namespace testutil
