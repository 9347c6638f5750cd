// Brute-force reference implementations of the texture matrices, written
// without the library's traversal helpers.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <vector>

#include "crlm/core/rng.hpp"
#include "crlm/radiomics/texture.hpp"

namespace oracle {

using namespace crlm;
using namespace crlm::radiomics;

struct Vox {
    long x, y, z;
    int level;
};

inline std::vector<Vox> masked(const GrayGrid& g) {
    std::vector<Vox> out;
    const Dims d = g.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                if (g.levels.at(x, y, z) > 0)
                    out.push_back({long(x), long(y), long(z), g.levels.at(x, y, z)});
    return out;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// All ordered voxel pairs whose offset equals +/- d*distance.
inline CountMatrix naive_glcm(const GrayGrid& g, const Direction& d, int distance) {
    CountMatrix m;
    const auto vs = masked(g);
    for (const auto& a : vs)
        for (const auto& b : vs) {
            const long ox = b.x - a.x, oy = b.y - a.y, oz = b.z - a.z;
            const bool fwd = ox == d.dx * distance && oy == d.dy * distance && oz == d.dz * distance;
            const bool back = ox == -d.dx * distance && oy == -d.dy * distance && oz == -d.dz * distance;
            if (fwd || back) ++m[{a.level, static_cast<std::size_t>(b.level)}];
        }
    return m;
}

// Runs = connected components of same-level voxels linked by the direction offset.
inline CountMatrix naive_glrlm(const GrayGrid& g, const Direction& d) {
    const auto vs = masked(g);
    UnionFind uf(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = 0; j < vs.size(); ++j)
            if (vs[i].level == vs[j].level && vs[j].x - vs[i].x == d.dx && vs[j].y - vs[i].y == d.dy &&
                vs[j].z - vs[i].z == d.dz)
                uf.unite(i, j);
    std::map<std::size_t, std::size_t> size;
    for (std::size_t i = 0; i < vs.size(); ++i) ++size[uf.find(i)];
    CountMatrix m;
    for (const auto& [root, n] : size) ++m[{vs[root].level, n}];
    return m;
}

inline CountMatrix naive_glszm(const GrayGrid& g) {
    const auto vs = masked(g);
    UnionFind uf(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            const long cheb = std::max({std::labs(vs[i].x - vs[j].x), std::labs(vs[i].y - vs[j].y),
                                        std::labs(vs[i].z - vs[j].z)});
            if (cheb == 1 && vs[i].level == vs[j].level) uf.unite(i, j);
        }
    std::map<std::size_t, std::size_t> size;
    for (std::size_t i = 0; i < vs.size(); ++i) ++size[uf.find(i)];
    CountMatrix m;
    for (const auto& [root, n] : size) ++m[{vs[root].level, n}];
    return m;
}

inline GrayGrid random_grid(Rng& rng, Dims d, int ng, double fill) {
    Volume<int> lv(d, {}, 0);
    for (std::size_t i = 0; i < lv.size(); ++i)
        if (rng.uniform() < fill) lv[i] = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(ng)));
    return {lv, ng, false};
}

}  // namespace oracle
