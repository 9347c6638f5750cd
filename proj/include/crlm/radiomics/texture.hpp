#pragma once

// Gray-level texture matrices (co-occurrence, run-length, size-zone) over a
// discretized lesion, and the features derived from them.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <vector>

#include "crlm/radiomics/features.hpp"

namespace crlm::radiomics {

struct Direction {
    int dx = 0, dy = 0, dz = 0;
    friend bool operator==(const Direction&, const Direction&) = default;
};

// The 13 unique 3D neighbour directions (one of each +/- pair, first non-zero
// component positive).
inline const std::vector<Direction>& all_directions() {
    static const std::vector<Direction> dirs = {
        {1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},   {1, -1, 0}, {1, 0, 1},   {1, 0, -1},
        {0, 1, 1},  {0, 1, -1}, {1, 1, 1},  {1, 1, -1},  {1, -1, 1}, {1, -1, -1},
    };
    return dirs;
}

// Sparse integer count matrix keyed by (gray level, second index).
using CountMatrix = std::map<std::pair<int, std::size_t>, std::uint64_t>;

struct TextureOptions {
    int distance = 1;
    bool symmetric = true;
    std::vector<Direction> directions = all_directions();
};

namespace detail {

inline int level_at(const GrayGrid& g, long x, long y, long z) {
    if (!g.levels.in_bounds(x, y, z)) return 0;
    return g.levels.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z));
}

template <typename F>
void for_each_voxel(const GrayGrid& g, F&& f) {
    const Dims d = g.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const int level = g.levels.at(x, y, z);
                if (level > 0) f(static_cast<long>(x), static_cast<long>(y), static_cast<long>(z), level);
            }
}

inline double safe_log2_term(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// GLCM

inline CountMatrix glcm_counts(const GrayGrid& g, const Direction& dir, int distance, bool symmetric) {
    require(distance >= 1, ErrorCode::InvalidArgument, "GLCM distance must be >= 1");
    CountMatrix m;
    detail::for_each_voxel(g, [&](long x, long y, long z, int i) {
        const int j = detail::level_at(g, x + dir.dx * distance, y + dir.dy * distance, z + dir.dz * distance);
        if (j == 0) return;
        ++m[{i, static_cast<std::size_t>(j)}];
        if (symmetric) ++m[{j, static_cast<std::size_t>(i)}];
    });
    return m;
}

struct GlcmFeatures {
    double contrast = 0, correlation = 0, joint_entropy = 0, homogeneity = 0, joint_energy = 0, dissimilarity = 0,
           joint_average = 0;
};

inline GlcmFeatures glcm_matrix_features(const CountMatrix& counts) {
    double total = 0;
    for (const auto& [ij, c] : counts) total += static_cast<double>(c);
    require(total > 0, ErrorCode::NoPairs, "GLCM has no voxel pairs");
    GlcmFeatures f;
    double mu_x = 0, mu_y = 0;
    for (const auto& [ij, c] : counts) {
        const double p = static_cast<double>(c) / total;
        mu_x += ij.first * p;
        mu_y += static_cast<double>(ij.second) * p;
    }
    double var_x = 0, var_y = 0, cov = 0;
    for (const auto& [ij, c] : counts) {
        const double p = static_cast<double>(c) / total;
        const double i = ij.first;
        const double j = static_cast<double>(ij.second);
        const double diff = std::fabs(i - j);
        f.contrast += p * diff * diff;
        f.dissimilarity += p * diff;
        f.homogeneity += p / (1.0 + diff);
        f.joint_energy += p * p;
        f.joint_entropy -= detail::safe_log2_term(p);
        var_x += p * (i - mu_x) * (i - mu_x);
        var_y += p * (j - mu_y) * (j - mu_y);
        cov += p * (i - mu_x) * (j - mu_y);
    }
    f.joint_average = mu_x;
    const double denom = std::sqrt(var_x * var_y);
    f.correlation = denom > 0 ? cov / denom : 1.0;
    return f;
}

// Features per direction, averaged over directions that contain pairs.
inline RadiomicFeatureSet glcm_features(const GrayGrid& g, const TextureOptions& opt = {}) {
    GlcmFeatures sum;
    int used = 0;
    for (const auto& dir : opt.directions) {
        const auto counts = glcm_counts(g, dir, opt.distance, opt.symmetric);
        if (counts.empty()) continue;
        const auto f = glcm_matrix_features(counts);
        sum.contrast += f.contrast;
        sum.correlation += f.correlation;
        sum.joint_entropy += f.joint_entropy;
        sum.homogeneity += f.homogeneity;
        sum.joint_energy += f.joint_energy;
        sum.dissimilarity += f.dissimilarity;
        sum.joint_average += f.joint_average;
        ++used;
    }
    require(used > 0, ErrorCode::NoPairs, "no masked voxel pairs at distance " + std::to_string(opt.distance));
    const double k = used;
    RadiomicFeatureSet out;
    const auto c = FeatureCategory::glcm;
    out.add("glcm_contrast", c, sum.contrast / k);
    out.add("glcm_correlation", c, sum.correlation / k);
    out.add("glcm_joint_entropy", c, sum.joint_entropy / k);
    out.add("glcm_homogeneity", c, sum.homogeneity / k);
    out.add("glcm_joint_energy", c, sum.joint_energy / k);
    out.add("glcm_dissimilarity", c, sum.dissimilarity / k);
    out.add("glcm_joint_average", c, sum.joint_average / k);
    return out;
}

// ---------------------------------------------------------------------------
// GLRLM: (gray level, run length) -> number of maximal runs along a direction.

inline CountMatrix glrlm_counts(const GrayGrid& g, const Direction& dir) {
    CountMatrix m;
    detail::for_each_voxel(g, [&](long x, long y, long z, int level) {
        if (detail::level_at(g, x - dir.dx, y - dir.dy, z - dir.dz) == level) return;  // not a run start
        std::size_t len = 1;
        while (detail::level_at(g, x + dir.dx * static_cast<long>(len), y + dir.dy * static_cast<long>(len),
                                z + dir.dz * static_cast<long>(len)) == level)
            ++len;
        ++m[{level, len}];
    });
    return m;
}

struct GlrlmFeatures {
    double short_run_emphasis = 0, long_run_emphasis = 0, gray_level_nonuniformity = 0,
           run_length_nonuniformity = 0, run_percentage = 0;
};

inline GlrlmFeatures glrlm_matrix_features(const CountMatrix& counts, std::size_t n_voxels) {
    double runs = 0;
    std::map<int, double> by_level;
    std::map<std::size_t, double> by_length;
    GlrlmFeatures f;
    for (const auto& [key, c] : counts) {
        const double n = static_cast<double>(c);
        const double len = static_cast<double>(key.second);
        runs += n;
        f.short_run_emphasis += n / (len * len);
        f.long_run_emphasis += n * len * len;
        by_level[key.first] += n;
        by_length[key.second] += n;
    }
    require(runs > 0, ErrorCode::EmptyInput, "run-length matrix is empty");
    for (const auto& [l, n] : by_level) f.gray_level_nonuniformity += n * n;
    for (const auto& [l, n] : by_length) f.run_length_nonuniformity += n * n;
    f.short_run_emphasis /= runs;
    f.long_run_emphasis /= runs;
    f.gray_level_nonuniformity /= runs;
    f.run_length_nonuniformity /= runs;
    f.run_percentage = runs / static_cast<double>(n_voxels);
    return f;
}

inline std::size_t masked_voxels(const GrayGrid& g) {
    std::size_t n = 0;
    for (auto v : g.levels.voxels()) n += v > 0;
    return n;
}

inline RadiomicFeatureSet glrlm_features(const GrayGrid& g,
                                         const std::vector<Direction>& directions = all_directions()) {
    const std::size_t n_voxels = masked_voxels(g);
    require(n_voxels > 0, ErrorCode::EmptyInput, "empty mask");
    GlrlmFeatures sum;
    for (const auto& dir : directions) {
        const auto f = glrlm_matrix_features(glrlm_counts(g, dir), n_voxels);
        sum.short_run_emphasis += f.short_run_emphasis;
        sum.long_run_emphasis += f.long_run_emphasis;
        sum.gray_level_nonuniformity += f.gray_level_nonuniformity;
        sum.run_length_nonuniformity += f.run_length_nonuniformity;
        sum.run_percentage += f.run_percentage;
    }
    const double k = static_cast<double>(directions.size());
    RadiomicFeatureSet out;
    const auto c = FeatureCategory::glrlm;
    out.add("glrlm_short_run_emphasis", c, sum.short_run_emphasis / k);
    out.add("glrlm_long_run_emphasis", c, sum.long_run_emphasis / k);
    out.add("glrlm_gray_level_nonuniformity", c, sum.gray_level_nonuniformity / k);
    out.add("glrlm_run_length_nonuniformity", c, sum.run_length_nonuniformity / k);
    out.add("glrlm_run_percentage", c, sum.run_percentage / k);
    return out;
}

// ---------------------------------------------------------------------------
// GLSZM: (gray level, zone size) -> number of 26-connected same-level zones.

inline CountMatrix glszm_counts(const GrayGrid& g) {
    const Dims d = g.dims();
    std::vector<std::uint8_t> seen(d.count(), 0);
    CountMatrix m;
    std::vector<std::array<long, 3>> stack;
    detail::for_each_voxel(g, [&](long x, long y, long z, int level) {
        const std::size_t start = g.levels.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                                 static_cast<std::size_t>(z));
        if (seen[start]) return;
        seen[start] = 1;
        std::size_t size = 0;
        stack.assign(1, {x, y, z});
        while (!stack.empty()) {
            const auto [cx, cy, cz] = stack.back();
            stack.pop_back();
            ++size;
            for (long oz = -1; oz <= 1; ++oz)
                for (long oy = -1; oy <= 1; ++oy)
                    for (long ox = -1; ox <= 1; ++ox) {
                        if (!ox && !oy && !oz) continue;
                        const long nx = cx + ox, ny = cy + oy, nz = cz + oz;
                        if (detail::level_at(g, nx, ny, nz) != level) continue;
                        const std::size_t idx = g.levels.index(static_cast<std::size_t>(nx),
                                                               static_cast<std::size_t>(ny),
                                                               static_cast<std::size_t>(nz));
                        if (seen[idx]) continue;
                        seen[idx] = 1;
                        stack.push_back({nx, ny, nz});
                    }
        }
        ++m[{level, size}];
    });
    return m;
}

inline RadiomicFeatureSet glszm_features(const GrayGrid& g) {
    const std::size_t n_voxels = masked_voxels(g);
    require(n_voxels > 0, ErrorCode::EmptyInput, "empty mask");
    const auto counts = glszm_counts(g);
    double zones = 0, sae = 0, lae = 0;
    std::map<int, double> by_level;
    std::map<std::size_t, double> by_size;
    for (const auto& [key, c] : counts) {
        const double n = static_cast<double>(c);
        const double s = static_cast<double>(key.second);
        zones += n;
        sae += n / (s * s);
        lae += n * s * s;
        by_level[key.first] += n;
        by_size[key.second] += n;
    }
    double entropy = 0, gln = 0, szn = 0;
    for (const auto& [key, c] : counts) entropy -= detail::safe_log2_term(static_cast<double>(c) / zones);
    for (const auto& [l, n] : by_level) gln += n * n;
    for (const auto& [s, n] : by_size) szn += n * n;
    RadiomicFeatureSet out;
    const auto c = FeatureCategory::glszm;
    out.add("glszm_small_area_emphasis", c, sae / zones);
    out.add("glszm_large_area_emphasis", c, lae / zones);
    out.add("glszm_zone_entropy", c, entropy);
    out.add("glszm_zone_percentage", c, zones / static_cast<double>(n_voxels));
    out.add("glszm_gray_level_nonuniformity", c, gln / zones);
    out.add("glszm_size_zone_nonuniformity", c, szn / zones);
    return out;
}

}  // namespace crlm::radiomics
