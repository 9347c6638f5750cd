#pragma once

// Synthetic CT-like phantoms: a liver-density background with ellipsoidal
// hypodense lesions, used for demos and end-to-end tests.

#include <cmath>
#include <string>
#include <vector>

#include "crlm/core/rng.hpp"
#include "crlm/radiomics/volume.hpp"

namespace crlm::radiomics {

struct PhantomSpec {
    Dims dims{32, 32, 16};
    Spacing spacing{0.8, 0.8, 2.5};
    int n_lesions = 2;
    double liver_hu = 55.0;
    double lesion_hu = 20.0;
    double noise_sd = 12.0;
};

struct Phantom {
    HuVolume volume;
    std::vector<LesionMask> masks;
};

inline Phantom make_phantom(std::uint64_t seed, const PhantomSpec& spec = {}) {
    require(spec.n_lesions >= 1, ErrorCode::InvalidArgument, "phantom needs at least one lesion");
    Rng rng(seed);
    const Dims d = spec.dims;
    Phantom p{HuVolume(d, spec.spacing, 0.0), {}};
    for (std::size_t i = 0; i < p.volume.size(); ++i) p.volume[i] = rng.normal(spec.liver_hu, spec.noise_sd);

    for (int k = 0; k < spec.n_lesions; ++k) {
        // Centers in the inner region so lesions stay inside the grid.
        const double cx = rng.uniform(0.3, 0.7) * static_cast<double>(d.nx);
        const double cy = rng.uniform(0.3, 0.7) * static_cast<double>(d.ny);
        const double cz = rng.uniform(0.3, 0.7) * static_cast<double>(d.nz);
        const double rx = rng.uniform(2.0, 5.0), ry = rng.uniform(2.0, 5.0), rz = rng.uniform(1.5, 3.0);
        const double contrast = spec.lesion_hu + rng.normal(0.0, 5.0);
        LesionMask m{Volume<std::uint8_t>(d, spec.spacing, 0), "L" + std::to_string(k + 1)};
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x) {
                    const double ux = (static_cast<double>(x) - cx) / rx;
                    const double uy = (static_cast<double>(y) - cy) / ry;
                    const double uz = (static_cast<double>(z) - cz) / rz;
                    const double r2 = ux * ux + uy * uy + uz * uz;
                    if (r2 > 1.0) continue;
                    m.voxels.at(x, y, z) = 1;
                    // Rim is brighter than the necrotic core.
                    p.volume.at(x, y, z) = contrast + 15.0 * r2 + rng.normal(0.0, spec.noise_sd);
                }
        if (m.count() == 0) m.voxels.at(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy),
                                        static_cast<std::size_t>(cz)) = 1;
        p.masks.push_back(std::move(m));
    }
    return p;
}

}  // namespace crlm::radiomics
