#include <gtest/gtest.h>

#include <array>
#include <numeric>

#include "crlm/core/rng.hpp"
#include "crlm/radiomics/extract.hpp"
#include "crlm/radiomics/phantom.hpp"
#include "texture_oracle.hpp"

using namespace crlm;
using namespace crlm::radiomics;
using namespace oracle;

namespace {

template <typename T>
Volume<T> rotate_z(const Volume<T>& v) {
    const Dims d = v.dims();
    Volume<T> out(Dims{d.ny, d.nx, d.nz}, Spacing{v.spacing().sy, v.spacing().sx, v.spacing().sz}, T{});
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) out.at(d.ny - 1 - y, x, z) = v.at(x, y, z);
    return out;
}

template <typename T>
Volume<T> rotate_x(const Volume<T>& v) {
    const Dims d = v.dims();
    Volume<T> out(Dims{d.nx, d.nz, d.ny}, Spacing{v.spacing().sx, v.spacing().sz, v.spacing().sy}, T{});
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) out.at(x, d.nz - 1 - z, y) = v.at(x, y, z);
    return out;
}

void expect_same_texture(const RadiomicFeatureSet& a, const RadiomicFeatureSet& b) {
    ASSERT_EQ(a.features.size(), b.features.size());
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        const auto& f = a.features[i];
        if (f.category == FeatureCategory::firstorder || f.category == FeatureCategory::shape) continue;
        EXPECT_NEAR(f.value, b.features[i].value, 1e-9 * std::max(1.0, std::fabs(f.value))) << f.name;
    }
}

}  // namespace

TEST(TextureOracle, GlcmMatchesPairEnumeration) {
    Rng rng(2024);
    for (int t = 0; t < 40; ++t) {
        const auto g = random_grid(rng, {4, 4, 4}, 1 + static_cast<int>(rng.index(4)), rng.uniform(0.3, 1.0));
        for (const auto& d : all_directions())
            for (int dist : {1, 2}) ASSERT_EQ(glcm_counts(g, d, dist, true), naive_glcm(g, d, dist));
    }
}

TEST(TextureOracle, GlrlmMatchesUnionFindRuns) {
    Rng rng(77);
    for (int t = 0; t < 40; ++t) {
        const auto g = random_grid(rng, {4, 4, 4}, 1 + static_cast<int>(rng.index(4)), rng.uniform(0.3, 1.0));
        for (const auto& d : all_directions()) ASSERT_EQ(glrlm_counts(g, d), naive_glrlm(g, d));
    }
}

TEST(TextureOracle, GlszmMatchesUnionFindZones) {
    Rng rng(5);
    for (int t = 0; t < 60; ++t) {
        const auto g = random_grid(rng, {4, 4, 4}, 1 + static_cast<int>(rng.index(4)), rng.uniform(0.2, 1.0));
        if (masked(g).empty()) continue;
        ASSERT_EQ(glszm_counts(g), naive_glszm(g));
    }
}

TEST(TextureOracle, GlcmFeaturesFromNaiveCounts) {
    Rng rng(31);
    const auto g = random_grid(rng, {4, 4, 4}, 4, 1.0);
    double contrast = 0, energy = 0;
    for (const auto& d : all_directions()) {
        const auto m = naive_glcm(g, d, 1);
        double total = 0;
        for (const auto& [ij, c] : m) total += double(c);
        for (const auto& [ij, c] : m) {
            const double p = double(c) / total;
            const double diff = ij.first - double(ij.second);
            contrast += p * diff * diff;
            energy += p * p;
        }
    }
    const auto f = glcm_features(g);
    EXPECT_NEAR(f.at("glcm_contrast"), contrast / 13.0, 1e-12);
    EXPECT_NEAR(f.at("glcm_joint_energy"), energy / 13.0, 1e-12);
}

TEST(TextureInvariance, HuOffsetUnderFixedBinCount) {
    const auto ph = make_phantom(12);
    std::vector<double> shifted(ph.volume.voxels());
    for (auto& v : shifted) v += 317.25;
    const HuVolume moved(ph.volume.dims(), ph.volume.spacing(), shifted);
    ExtractionOptions opt;
    opt.discretization = DiscretizationSpec::fixed_count(16);
    expect_same_texture(extract_lesion_features(ph.volume, ph.masks[0], opt),
                        extract_lesion_features(moved, ph.masks[0], opt));
}

TEST(TextureInvariance, NinetyDegreeRotations) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto ph = make_phantom(seed);
        const auto& mask = ph.masks[0];
        const auto base = extract_lesion_features(ph.volume, mask);
        const LesionMask mz{rotate_z(mask.voxels), mask.lesion_id};
        const LesionMask mx{rotate_x(mask.voxels), mask.lesion_id};
        expect_same_texture(base, extract_lesion_features(rotate_z(ph.volume), mz));
        expect_same_texture(base, extract_lesion_features(rotate_x(ph.volume), mx));
        // shape is spacing-aware; the phantom uses isotropic voxels
        EXPECT_NEAR(base.at("shape_maximum_3d_diameter"),
                    extract_lesion_features(rotate_z(ph.volume), mz).at("shape_maximum_3d_diameter"), 1e-9);
    }
}
