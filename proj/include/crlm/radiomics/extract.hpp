#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "crlm/core/matrix.hpp"
#include "crlm/core/text.hpp"
#include "crlm/radiomics/texture.hpp"

namespace crlm::radiomics {

struct ExtractionOptions {
    DiscretizationSpec discretization = default_discretization();
    TextureOptions texture;
};

// All five categories for one lesion, in a fixed order.
inline RadiomicFeatureSet extract_lesion_features(const HuVolume& volume, const LesionMask& mask,
                                                  const ExtractionOptions& opt = {}) {
    require_same_dims(volume.dims(), mask.dims());
    RadiomicFeatureSet out = firstorder_features(volume, mask, opt.discretization);
    out.append(shape_features(mask, volume.spacing()));
    const GrayGrid grid = discretize(volume, mask, opt.discretization);
    out.append(glcm_features(grid, opt.texture));
    out.append(glrlm_features(grid, opt.texture.directions));
    out.append(glszm_features(grid));
    out.lesion_id = mask.lesion_id;
    return out;
}

inline double lesion_volume_mm3(const RadiomicFeatureSet& f) { return f.at("shape_voxel_volume"); }

struct AggregatedFeatures {
    RadiomicFeatureSet largest;
    RadiomicFeatureSet weighted;
};

inline AggregatedFeatures aggregate_lesions(const std::vector<RadiomicFeatureSet>& per_lesion,
                                            const std::vector<double>& volumes_mm3) {
    require(!per_lesion.empty(), ErrorCode::EmptyInput, "no lesions to aggregate");
    require(per_lesion.size() == volumes_mm3.size(), ErrorCode::DimensionMismatch,
            "aggregate_lesions: " + std::to_string(per_lesion.size()) + " feature sets but " +
                std::to_string(volumes_mm3.size()) + " volumes");
    std::size_t best = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < per_lesion.size(); ++i) {
        require(volumes_mm3[i] > 0, ErrorCode::InvalidArgument, "lesion volume must be positive");
        total += volumes_mm3[i];
        if (volumes_mm3[i] > volumes_mm3[best] ||
            (volumes_mm3[i] == volumes_mm3[best] && per_lesion[i].lesion_id < per_lesion[best].lesion_id))
            best = i;
    }
    AggregatedFeatures out;
    out.largest = per_lesion[best];
    out.weighted.lesion_id = "weighted";
    for (const auto& f : per_lesion[0].features) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per_lesion.size(); ++i) acc += volumes_mm3[i] * per_lesion[i].at(f.name);
        out.weighted.add(f.name, f.category, acc / total);
    }
    return out;
}

// Lin's concordance correlation with population moments.
inline double ccc(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), ErrorCode::DimensionMismatch, "ccc needs aligned non-empty arms");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
        cov += (a[i] - ma) * (b[i] - mb);
    }
    va /= n;
    vb /= n;
    cov /= n;
    const double denom = va + vb + (ma - mb) * (ma - mb);
    if (denom == 0.0) return 1.0;  // identical constants
    return 2.0 * cov / denom;
}

struct CccReport {
    std::vector<std::string> features;
    std::vector<double> values;
    std::vector<std::string> retained;
};

// Columns of a and b are features, rows are patients (same order in both).
inline CccReport ccc_filter(const Matrix& a, const Matrix& b, const std::vector<std::string>& names,
                            double threshold = 0.85) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch,
            "ccc_filter: arms have different shapes");
    require(names.size() == a.cols(), ErrorCode::DimensionMismatch, "ccc_filter: feature name count");
    CccReport r;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const auto ca = a.column(j);
        const auto cb = b.column(j);
        const double c = ccc(ca, cb);
        r.features.push_back(names[j]);
        r.values.push_back(c);
        if (c >= threshold) r.retained.push_back(names[j]);
    }
    return r;
}

// One-voxel erosion with a 6-connected structuring element. Voxels on the
// volume border count as exposed. Falls back to the input when what is left
// has no two 26-adjacent voxels, since texture needs at least one pair.
inline LesionMask erode_mask(const LesionMask& mask) {
    const Dims d = mask.dims();
    LesionMask out{Volume<std::uint8_t>(d, mask.voxels.spacing(), 0), mask.lesion_id};
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (!mask.voxels.at(x, y, z)) continue;
                bool interior = true;
                for (const auto& o : detail::face_offsets)
                    if (!detail::foreground(mask, static_cast<long>(x) + o[0], static_cast<long>(y) + o[1],
                                            static_cast<long>(z) + o[2]))
                        interior = false;
                if (interior) out.voxels.at(x, y, z) = 1;
            }
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (!out.voxels.at(x, y, z)) continue;
                for (const auto& dir : all_directions())
                    if (detail::foreground(out, static_cast<long>(x) + dir.dx, static_cast<long>(y) + dir.dy,
                                           static_cast<long>(z) + dir.dz))
                        return out;
            }
    return mask;
}

// ---------------------------------------------------------------------------
// Long-format CSV: patient_id, lesion_id, feature, value, category

struct FeatureRow {
    std::string patient_id;
    std::string lesion_id;
    std::string feature;
    double value = 0.0;
    std::string category;
};

inline std::vector<FeatureRow> to_rows(const std::string& patient_id, const RadiomicFeatureSet& set) {
    std::vector<FeatureRow> rows;
    for (const auto& f : set.features)
        rows.push_back({patient_id, set.lesion_id, f.name, f.value, to_string(f.category)});
    return rows;
}

inline std::string features_long_csv(const std::vector<FeatureRow>& rows, const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "patient_id,lesion_id,feature,value,category\n";
    for (const auto& r : rows)
        out += join_csv({r.patient_id, r.lesion_id, r.feature, format_double(r.value), r.category}) + "\n";
    return out;
}

inline std::vector<FeatureRow> parse_features_long_csv(const std::string& text) {
    const auto rows = parse_csv_text(text);
    require(!rows.empty(), ErrorCode::ParseError, "feature CSV is empty");
    const std::vector<std::string> expect = {"patient_id", "lesion_id", "feature", "value", "category"};
    require(rows[0] == expect, ErrorCode::ParseError, "feature CSV header must be " + join_csv(expect));
    std::vector<FeatureRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        require(rows[i].size() == 5, ErrorCode::ParseError, "feature CSV row " + std::to_string(i) + " has wrong width");
        const auto v = parse_double(rows[i][3]);
        require(v.has_value(), ErrorCode::ParseError, "feature CSV row " + std::to_string(i) + ": bad value");
        out.push_back({rows[i][0], rows[i][1], rows[i][2], *v, rows[i][4]});
    }
    return out;
}

}  // namespace crlm::radiomics
