#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "crlm/radiomics/volume.hpp"

namespace crlm::radiomics {

struct DiscretizationSpec {
    std::optional<double> bin_width;
    std::optional<int> n_bins;

    static DiscretizationSpec fixed_width(double w) { return {w, std::nullopt}; }
    static DiscretizationSpec fixed_count(int n) { return {std::nullopt, n}; }

    void validate() const {
        require(bin_width.has_value() != n_bins.has_value(), ErrorCode::InvalidArgument,
                "exactly one of bin_width / n_bins must be set");
        require(!bin_width || *bin_width > 0, ErrorCode::InvalidArgument, "bin_width must be positive");
        require(!n_bins || *n_bins > 0, ErrorCode::InvalidArgument, "n_bins must be positive");
    }
};

inline DiscretizationSpec default_discretization() { return DiscretizationSpec::fixed_width(25.0); }

// Gray levels 1..n_levels inside the mask, 0 outside.
struct GrayGrid {
    Volume<int> levels;
    int n_levels = 1;
    bool constant = false;  // masked intensities were all equal under fixed-bin-count

    const Dims& dims() const noexcept { return levels.dims(); }
};

inline GrayGrid discretize(const HuVolume& volume, const LesionMask& mask, const DiscretizationSpec& spec) {
    spec.validate();
    require_same_dims(volume.dims(), mask.dims());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t n = 0;
    for (std::size_t i = 0; i < volume.size(); ++i) {
        if (!mask.voxels[i]) continue;
        lo = std::min(lo, volume[i]);
        hi = std::max(hi, volume[i]);
        ++n;
    }
    require(n > 0, ErrorCode::EmptyInput, "mask '" + mask.lesion_id + "' has no foreground voxels");

    GrayGrid g{Volume<int>(volume.dims(), volume.spacing(), 0), 1, false};
    int max_level = 1;
    const bool by_count = spec.n_bins.has_value();
    if (by_count && hi == lo) g.constant = true;
    for (std::size_t i = 0; i < volume.size(); ++i) {
        if (!mask.voxels[i]) continue;
        int level;
        if (!by_count) {
            level = static_cast<int>(std::floor((volume[i] - lo) / *spec.bin_width)) + 1;
        } else if (g.constant) {
            level = 1;
        } else {
            const int nb = *spec.n_bins;
            level = static_cast<int>(std::floor((volume[i] - lo) / (hi - lo) * nb)) + 1;
            level = std::min(level, nb);
        }
        g.levels[i] = level;
        max_level = std::max(max_level, level);
    }
    g.n_levels = by_count && !g.constant ? *spec.n_bins : max_level;
    return g;
}

}  // namespace crlm::radiomics
