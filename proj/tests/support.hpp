#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "clusterguard/fof.hpp"
#include "clusterguard/particles.hpp"

namespace cgtest {

using clusterguard::CounterRng;
using clusterguard::ParticleSet;

inline ParticleSet uniform_set(std::size_t n, std::uint64_t seed, double edge = 1.0) {
    CounterRng rng(seed, 99);
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = edge * rng.uniform();
        y[i] = edge * rng.uniform();
        z[i] = edge * rng.uniform();
    }
    return ParticleSet(x, y, z);
}

inline ParticleSet make_set(const std::vector<std::array<double, 3>>& pts) {
    std::vector<double> x, y, z;
    for (const auto& p : pts) {
        x.push_back(p[0]);
        y.push_back(p[1]);
        z.push_back(p[2]);
    }
    return ParticleSet(x, y, z);
}

// O(N^2) adjacency + BFS, labels = smallest index of each component.
inline std::vector<std::size_t> brute_components(const ParticleSet& p, double b) {
    const std::size_t n = p.size();
    std::vector<std::size_t> label(n, SIZE_MAX);
    const double b2 = b * b;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != SIZE_MAX) continue;
        std::vector<std::size_t> stack{s};
        label[s] = s;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (label[j] != SIZE_MAX) continue;
                const double dx = p.xs()[i] - p.xs()[j], dy = p.ys()[i] - p.ys()[j], dz = p.zs()[i] - p.zs()[j];
                if (dx * dx + dy * dy + dz * dz <= b2) {
                    label[j] = s;
                    stack.push_back(j);
                }
            }
        }
    }
    return label;
}

}  // namespace cgtest
