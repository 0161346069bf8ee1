#pragma once

#include <string>
#include <vector>

#include "geofield/energy.hpp"

namespace geofield {

// GFLD: "GFLD", u32 version, u32 d, u32 dims[d], f64 origin[d], f64 spacing,
// u64 m, m x (f32 re, f32 im), u64 flag count, u64 flag indices. Little-endian.
void write_field(const ComplexField& field, const std::string& path);
ComplexField read_field(const std::string& path);

// GSPC: "GSPC", u32 version, u32 d, u32 dims[d], f64 spacing, f64 origin[d],
// u64 m', m' x (f32 re, f32 im) in window row-major order.
void write_spectrum(const TruncatedSpectrum& spectrum, const std::string& path);
void write_spectrum(const Spectrum& spectrum, const std::string& path);
TruncatedSpectrum read_spectrum(const std::string& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

std::string base64_encode(const void* data, std::size_t len);
std::string base64_decode(const std::string& text);

// Row-major w x h values, row 0 at the top. Masked cells are drawn grey.
void write_heatmap_png(const std::string& path, std::size_t w, std::size_t h, const std::vector<double>& values,
                       const std::vector<std::uint8_t>& mask);
void write_heatmap_csv(const std::string& path, std::size_t w, std::size_t h, const std::vector<double>& values,
                       const std::vector<std::uint8_t>& mask);

struct ManifestPart {
    std::string id;
    std::string role;  // "fixed" or "moving"
    std::string solid;
    std::string solid_sha256;
    KernelSpec kernel;
    SampleGrid grid;
    Aabb support;
    std::string field, field_sha256;
    std::string spectrum, spectrum_sha256;
    std::vector<std::string> vector, vector_sha256;
};

struct AssetManifest {
    std::string dir;  // directory the relative paths resolve against
    std::vector<ManifestPart> parts;
    std::string scene;  // built-in scene id, empty for user solids

    const ManifestPart& part(const std::string& id) const;
    const ManifestPart& by_role(const std::string& role) const;
};

std::string manifest_json(const AssetManifest& m);
void write_manifest(const AssetManifest& m, const std::string& path);
// Parses and checks every referenced hash; throws Error on mismatch.
AssetManifest load_manifest(const std::string& path);
PartAsset load_part_asset(const AssetManifest& m, const ManifestPart& part);

std::string kernel_family_name(const KernelSpec& k);
std::string kernel_structure_name(const KernelSpec& k);

}  // namespace geofield
