#pragma once

#include <random>
#include <vector>

#include "ppde/path_space.hpp"

namespace testsupport {

// Gaussian random walk started at the origin, scaled by `scale`.
inline ppde::DiscretePath random_path(std::mt19937_64& rng, const ppde::Grid& g, int d, double scale) {
    std::normal_distribution<double> N01(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(g.cells() + 1) * d, 0.0);
    double sd = scale * std::sqrt(g.step());
    for (int k = 1; k <= g.cells(); ++k)
        for (int a = 0; a < d; ++a) v[k * d + a] = v[(k - 1) * d + a] + sd * N01(rng);
    return ppde::DiscretePath(g, d, v);
}

}  // namespace testsupport
