#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "crlm/core/numeric.hpp"
#include "crlm/radiomics/discretize.hpp"

namespace crlm::radiomics {

enum class FeatureCategory { firstorder, shape, glcm, glrlm, glszm };

inline std::string to_string(FeatureCategory c) {
    switch (c) {
        case FeatureCategory::firstorder: return "firstorder";
        case FeatureCategory::shape: return "shape";
        case FeatureCategory::glcm: return "glcm";
        case FeatureCategory::glrlm: return "glrlm";
        case FeatureCategory::glszm: return "glszm";
    }
    return "firstorder";
}

struct Feature {
    std::string name;
    FeatureCategory category;
    double value = 0.0;
};

// Ordered list of named features for one lesion (or one aggregate).
struct RadiomicFeatureSet {
    std::string lesion_id;
    std::vector<Feature> features;

    void add(std::string name, FeatureCategory cat, double value) {
        features.push_back({std::move(name), cat, value});
    }

    void append(const RadiomicFeatureSet& other) {
        features.insert(features.end(), other.features.begin(), other.features.end());
    }

    const Feature* find(const std::string& name) const {
        for (const auto& f : features)
            if (f.name == name) return &f;
        return nullptr;
    }

    double at(const std::string& name) const {
        const auto* f = find(name);
        require(f != nullptr, ErrorCode::MissingColumn, "feature '" + name + "' not present");
        return f->value;
    }
};

// ---------------------------------------------------------------------------
// First-order statistics over masked HU values.

inline RadiomicFeatureSet firstorder_features(const HuVolume& volume, const LesionMask& mask,
                                              const DiscretizationSpec& spec = default_discretization()) {
    require_same_dims(volume.dims(), mask.dims());
    std::vector<double> xs;
    for (std::size_t i = 0; i < volume.size(); ++i)
        if (mask.voxels[i]) xs.push_back(volume[i]);
    require(!xs.empty(), ErrorCode::EmptyInput, "mask '" + mask.lesion_id + "' has no foreground voxels");
    const double n = static_cast<double>(xs.size());
    const double mean = numeric::mean(xs);
    double m2 = 0, m3 = 0, m4 = 0, energy = 0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        energy += x * x;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    const GrayGrid grid = discretize(volume, mask, spec);
    std::map<int, std::size_t> hist;
    for (std::size_t i = 0; i < grid.levels.size(); ++i)
        if (grid.levels[i] > 0) ++hist[grid.levels[i]];
    double entropy = 0.0;
    for (const auto& [level, count] : hist) {
        const double p = static_cast<double>(count) / n;
        entropy -= p * std::log2(p);
    }

    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    RadiomicFeatureSet out{mask.lesion_id, {}};
    const auto c = FeatureCategory::firstorder;
    out.add("firstorder_mean", c, mean);
    out.add("firstorder_variance", c, m2);
    out.add("firstorder_skewness", c, skewness);
    out.add("firstorder_kurtosis", c, kurtosis);
    out.add("firstorder_energy", c, energy);
    out.add("firstorder_entropy", c, entropy);
    out.add("firstorder_minimum", c, *lo);
    out.add("firstorder_maximum", c, *hi);
    out.add("firstorder_range", c, *hi - *lo);
    out.add("firstorder_median", c, numeric::median(xs));
    out.add("firstorder_rms", c, std::sqrt(energy / n));
    return out;
}

// ---------------------------------------------------------------------------
// Shape descriptors from the voxelized mask.

namespace detail {
constexpr int face_offsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

inline bool foreground(const LesionMask& m, long x, long y, long z) {
    return m.voxels.in_bounds(x, y, z) &&
           m.voxels.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) != 0;
}
}  // namespace detail

inline RadiomicFeatureSet shape_features(const LesionMask& mask, const Spacing& spacing) {
    const Dims d = mask.dims();
    const double face_area[3] = {spacing.sy * spacing.sz, spacing.sx * spacing.sz, spacing.sx * spacing.sy};
    std::size_t count = 0;
    double area = 0.0;
    std::vector<std::array<double, 3>> surface;
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (!mask.voxels.at(x, y, z)) continue;
                ++count;
                bool exposed = false;
                for (int f = 0; f < 6; ++f) {
                    const auto& o = detail::face_offsets[f];
                    if (!detail::foreground(mask, static_cast<long>(x) + o[0], static_cast<long>(y) + o[1],
                                            static_cast<long>(z) + o[2])) {
                        area += face_area[f / 2];
                        exposed = true;
                    }
                }
                if (exposed)
                    surface.push_back({static_cast<double>(x) * spacing.sx, static_cast<double>(y) * spacing.sy,
                                       static_cast<double>(z) * spacing.sz});
            }
    require(count > 0, ErrorCode::EmptyInput, "mask '" + mask.lesion_id + "' has no foreground voxels");

    double max_sq = 0.0;
    for (std::size_t a = 0; a < surface.size(); ++a)
        for (std::size_t b = a + 1; b < surface.size(); ++b) {
            const double dx = surface[a][0] - surface[b][0];
            const double dy = surface[a][1] - surface[b][1];
            const double dz = surface[a][2] - surface[b][2];
            max_sq = std::max(max_sq, dx * dx + dy * dy + dz * dz);
        }
    const double volume = static_cast<double>(count) * spacing.sx * spacing.sy * spacing.sz;
    const double sphericity = std::cbrt(std::numbers::pi) * std::pow(6.0 * volume, 2.0 / 3.0) / area;

    RadiomicFeatureSet out{mask.lesion_id, {}};
    const auto c = FeatureCategory::shape;
    out.add("shape_voxel_volume", c, volume);
    out.add("shape_surface_area", c, area);
    out.add("shape_surface_volume_ratio", c, area / volume);
    out.add("shape_maximum_3d_diameter", c, std::sqrt(max_sq));
    out.add("shape_sphericity", c, sphericity);
    return out;
}

}  // namespace crlm::radiomics
