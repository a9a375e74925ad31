#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lact/errors.hpp"

namespace lact {

enum class BeamType { parallel, fan };

std::string to_string(BeamType b);
BeamType beam_type_from_string(const std::string& s);

/// Scan geometry: beam configuration, view angles and detector layout.
/// Immutable after construction; shared freely across workers.
struct ScanGeometry {
    BeamType beam_type = BeamType::parallel;
    int num_views = 0;
    int num_bins = 0;
    std::vector<double> view_angles; // degrees, strictly increasing within one rotation
    double source_to_center_mm = 0.0; // fan only
    double source_to_detector_mm = 0.0; // fan only
    double detector_pitch = 1.0; // physical bin width, model units
    int image_height = 0;
    int image_width = 0;
    double pixel_size = 1.0;
    double span_deg = 0.0; // one full rotation for this scan (180 or 360)

    double rotation_span_deg() const {
        if (span_deg > 0.0) return span_deg;
        return beam_type == BeamType::parallel ? 180.0 : 360.0;
    }

    /// Radius of the circle circumscribing the image, model units.
    double fov_radius() const;

    /// Throws config_error when any invariant is violated.
    void validate() const;
};

/// Binary per-view keep/drop selector for angular truncation.
struct AngularMask {
    std::vector<uint8_t> keep; // exactly 0 or 1 per view
    double angular_range_deg = 0.0;
    double span_deg = 360.0; // rotation span of the owning geometry

    int kept_count() const {
        int n = 0;
        for (uint8_t k : keep) n += k;
        return n;
    }
};

/// Known presets: ctrate_fan, clinical_fan, parallel.
ScanGeometry make_geometry_preset(const std::string& name);

/// Parallel-beam builder; angles spread uniformly over span_deg starting at 0.
/// span_deg is 180 for a standard half rotation; 360 is allowed so conjugate
/// rays exist explicitly.
ScanGeometry make_parallel_geometry(int num_views, int num_bins, int image_height,
                                    int image_width, double pixel_size = 1.0,
                                    double span_deg = 180.0);

/// Fan-beam builder with a flat detector; pitch is derived so the detector
/// covers the image field of view when pitch <= 0.
ScanGeometry make_fan_geometry(int num_views, int num_bins, int image_height, int image_width,
                               double pixel_size, double source_to_center_mm,
                               double source_to_detector_mm, double pitch = 0.0);

/// Keeps the contiguous arc [start_deg, start_deg + angular_range_deg),
/// cyclic over the rotation span.
AngularMask make_mask(const ScanGeometry& geometry, double angular_range_deg,
                      double start_deg = 0.0);

AngularMask mask_complement(const AngularMask& mask);

/// Quarter-resolution companion geometry: image and bins divided by factor,
/// physical extents preserved, views unchanged.
ScanGeometry downscale_geometry(const ScanGeometry& geometry, int factor);

} // namespace lact
