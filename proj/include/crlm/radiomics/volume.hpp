#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/core/error.hpp"
#include "crlm/core/text.hpp"

namespace crlm::radiomics {

struct Dims {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t count() const noexcept { return nx * ny * nz; }
    std::string str() const {
        return "(" + std::to_string(nx) + ", " + std::to_string(ny) + ", " + std::to_string(nz) + ")";
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

// Voxel grid stored with x varying fastest: index = x + nx * (y + ny * z).
template <typename T>
class Volume {
public:
    Volume() = default;
    Volume(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing), voxels_(dims.count(), fill) {
        validate();
    }
    Volume(Dims dims, Spacing spacing, std::vector<T> voxels)
        : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
        validate();
    }

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return voxels_.size(); }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return x + dims_.nx * (y + dims_.ny * z);
    }
    T& at(std::size_t x, std::size_t y, std::size_t z) { return voxels_[index(x, y, z)]; }
    const T& at(std::size_t x, std::size_t y, std::size_t z) const { return voxels_[index(x, y, z)]; }

    bool in_bounds(long x, long y, long z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && static_cast<std::size_t>(x) < dims_.nx &&
               static_cast<std::size_t>(y) < dims_.ny && static_cast<std::size_t>(z) < dims_.nz;
    }

    T& operator[](std::size_t i) { return voxels_[i]; }
    const T& operator[](std::size_t i) const { return voxels_[i]; }
    const std::vector<T>& voxels() const noexcept { return voxels_; }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    void validate() const {
        require(dims_.nx > 0 && dims_.ny > 0 && dims_.nz > 0, ErrorCode::InvalidArgument, "volume dims must be positive");
        require(spacing_.sx > 0 && spacing_.sy > 0 && spacing_.sz > 0, ErrorCode::InvalidArgument,
                "volume spacing must be positive");
        require(voxels_.size() == dims_.count(), ErrorCode::DimensionMismatch,
                "voxel count " + std::to_string(voxels_.size()) + " != nx*ny*nz for dims " + dims_.str());
    }

    Dims dims_;
    Spacing spacing_;
    std::vector<T> voxels_;
};

using HuVolume = Volume<double>;

struct LesionMask {
    Volume<std::uint8_t> voxels;
    std::string lesion_id;

    const Dims& dims() const noexcept { return voxels.dims(); }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : voxels.voxels()) n += v != 0;
        return n;
    }
};

inline void require_same_dims(const Dims& volume, const Dims& mask) {
    require(volume == mask, ErrorCode::DimensionMismatch,
            "mask dims " + mask.str() + " do not match volume dims " + volume.str());
}

// ---------------------------------------------------------------------------
// Container: little-endian float32 raw file + JSON sidecar
// {"dims": [nx, ny, nz], "spacing": [sx, sy, sz], "hu_offset": h, "data": "x.raw"}.
// Stored values v map to HU as v + hu_offset.

struct RawContainer {
    Dims dims;
    Spacing spacing;
    double hu_offset = 0.0;
    std::vector<float> values;
    nlohmann::json sidecar;
};

namespace detail {
inline std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}
}  // namespace detail

inline RawContainer read_container(const std::string& sidecar_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, sidecar_path + ": " + e.what());
    }
    RawContainer c;
    c.sidecar = j;
    require(j.contains("dims") && j["dims"].size() == 3, ErrorCode::ParseError, sidecar_path + ": dims must have 3 entries");
    require(j.contains("spacing") && j["spacing"].size() == 3, ErrorCode::ParseError,
            sidecar_path + ": spacing must have 3 entries");
    c.dims = {j["dims"][0].get<std::size_t>(), j["dims"][1].get<std::size_t>(), j["dims"][2].get<std::size_t>()};
    c.spacing = {j["spacing"][0].get<double>(), j["spacing"][1].get<double>(), j["spacing"][2].get<double>()};
    c.hu_offset = j.value("hu_offset", 0.0);
    std::filesystem::path raw = j.contains("data") ? std::filesystem::path(j["data"].get<std::string>())
                                                   : std::filesystem::path(sidecar_path).replace_extension(".raw");
    if (raw.is_relative() && j.contains("data")) raw = std::filesystem::path(sidecar_path).parent_path() / raw;
    const std::string bytes = read_file(raw.string());
    require(bytes.size() == c.dims.count() * 4, ErrorCode::DimensionMismatch,
            raw.string() + ": expected " + std::to_string(c.dims.count() * 4) + " bytes for dims " + c.dims.str() +
                ", found " + std::to_string(bytes.size()));
    c.values.resize(c.dims.count());
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        std::uint32_t w;
        std::memcpy(&w, bytes.data() + 4 * i, 4);
        if constexpr (std::endian::native == std::endian::big) w = detail::byteswap32(w);
        std::memcpy(&c.values[i], &w, 4);
    }
    return c;
}

inline void write_container(const std::string& sidecar_path, const Dims& dims, const Spacing& spacing,
                            const std::vector<float>& values, double hu_offset,
                            const nlohmann::json& extra = nlohmann::json::object()) {
    require(values.size() == dims.count(), ErrorCode::DimensionMismatch, "container value count");
    const auto raw = std::filesystem::path(sidecar_path).replace_extension(".raw");
    std::string bytes(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t w;
        std::memcpy(&w, &values[i], 4);
        if constexpr (std::endian::native == std::endian::big) w = detail::byteswap32(w);
        std::memcpy(bytes.data() + 4 * i, &w, 4);
    }
    write_file(raw.string(), bytes);
    nlohmann::json j = extra;
    j["dims"] = {dims.nx, dims.ny, dims.nz};
    j["spacing"] = {spacing.sx, spacing.sy, spacing.sz};
    j["hu_offset"] = hu_offset;
    j["data"] = raw.filename().string();
    write_file(sidecar_path, j.dump(2) + "\n");
}

inline HuVolume read_volume(const std::string& sidecar_path) {
    auto c = read_container(sidecar_path);
    std::vector<double> hu(c.values.size());
    for (std::size_t i = 0; i < hu.size(); ++i) hu[i] = static_cast<double>(c.values[i]) + c.hu_offset;
    return HuVolume(c.dims, c.spacing, std::move(hu));
}

inline LesionMask read_mask(const std::string& sidecar_path) {
    auto c = read_container(sidecar_path);
    std::vector<std::uint8_t> bits(c.values.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const float v = c.values[i];
        require(v == 0.0f || v == 1.0f, ErrorCode::ParseError, sidecar_path + ": mask values must be 0 or 1");
        bits[i] = v != 0.0f;
    }
    LesionMask m{Volume<std::uint8_t>(c.dims, c.spacing, std::move(bits)), ""};
    m.lesion_id = c.sidecar.value("lesion_id", std::filesystem::path(sidecar_path).stem().string());
    return m;
}

inline void write_volume(const std::string& sidecar_path, const HuVolume& v, double hu_offset = 0.0) {
    std::vector<float> vals(v.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<float>(v[i] - hu_offset);
    write_container(sidecar_path, v.dims(), v.spacing(), vals, hu_offset);
}

inline void write_mask(const std::string& sidecar_path, const LesionMask& m) {
    std::vector<float> vals(m.voxels.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = m.voxels[i] ? 1.0f : 0.0f;
    write_container(sidecar_path, m.dims(), m.voxels.spacing(), vals, 0.0, {{"lesion_id", m.lesion_id}});
}

}  // namespace crlm::radiomics
