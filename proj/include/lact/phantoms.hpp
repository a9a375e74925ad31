#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lact/geometry.hpp"
#include "lact/grid.hpp"
#include "lact/metadata.hpp"
#include "lact/projector.hpp"

namespace lact {

enum class PhantomKind { ellipse_set, shepp_logan_like, random_blobs };

PhantomKind phantom_kind_from_string(const std::string& s);
std::string to_string(PhantomKind k);

struct PhantomSpec {
    PhantomKind kind = PhantomKind::shepp_logan_like;
    int height = 128;
    int width = 128;
    uint64_t seed = 0;
    double intensity_lo = 0.0;
    double intensity_hi = 1.0;
    int num_ellipses = 8; // ellipse_set only
};

/// One ellipse of the analytic phantom table: additive intensity, half-axes,
/// center and rotation in the [-1, 1]^2 normalized frame.
struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
};

/// The canonical ten-ellipse head phantom layout (modified contrast values).
const std::array<Ellipse, 10>& shepp_logan_ellipses();

/// Additive ellipse-sum value at a normalized point (analytic form; the
/// rasterizer samples it at pixel centres).
double ellipse_sum_at(const std::vector<Ellipse>& ellipses, double x, double y);

Image generate_phantom(const PhantomSpec& spec);

struct DatasetEntry {
    std::string image;
    std::string full_sinogram;
    std::string masked_sinogram;
    std::string mask;
    int metadata_index = 0;
    int phantom_index = 0;
    double range_deg = 0.0;
};

struct DatasetManifest {
    std::string geometry; // relative path
    std::string metadata; // relative path
    std::vector<double> truncation_ranges_deg;
    std::vector<DatasetEntry> entries;
};

/// For each phantom x range: write image, full sinogram, masked sinogram,
/// mask and an auto-generated metadata record; returns (and writes) the
/// manifest. Regeneration under the same seeds is byte-identical.
DatasetManifest build_dataset(const std::vector<PhantomSpec>& specs, const ScanGeometry& geometry,
                              const std::vector<double>& ranges_deg, const NoiseSpec& noise,
                              const std::string& out_dir);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

} // namespace lact
