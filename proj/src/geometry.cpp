#include "lact/geometry.hpp"

#include <cmath>

namespace lact {

std::string to_string(BeamType b) { return b == BeamType::parallel ? "parallel" : "fan"; }

BeamType beam_type_from_string(const std::string& s) {
    if (s == "parallel") return BeamType::parallel;
    if (s == "fan") return BeamType::fan;
    throw config_error("unknown beam type '" + s + "' (expected parallel or fan)");
}

double ScanGeometry::fov_radius() const {
    return 0.5 * pixel_size * std::hypot(static_cast<double>(image_height),
                                         static_cast<double>(image_width));
}

void ScanGeometry::validate() const {
    if (num_views <= 0 || num_bins <= 0)
        throw config_error("geometry requires positive num_views and num_bins");
    if (static_cast<int>(view_angles.size()) != num_views)
        throw config_error("geometry: num_views != length(view_angles)");
    for (int i = 1; i < num_views; ++i)
        if (view_angles[i] <= view_angles[i - 1])
            throw config_error("geometry: view angles must be strictly increasing");
    if (view_angles.back() - view_angles.front() >= rotation_span_deg() + 1e-9)
        throw config_error("geometry: view angles exceed one rotation");
    if (image_height <= 0 || image_width <= 0)
        throw config_error("geometry: image size must be positive");
    if (pixel_size <= 0.0 || detector_pitch <= 0.0)
        throw config_error("geometry: pixel_size and detector_pitch must be positive");
    if (beam_type == BeamType::fan) {
        if (!(source_to_detector_mm > source_to_center_mm && source_to_center_mm > 0.0))
            throw config_error("fan geometry requires source_to_detector > source_to_center > 0");
        // Detector must cover the FOV: the fan through the FOV circle edge,
        // projected onto the flat detector, must land inside the last bin.
        double r = fov_radius();
        if (r < source_to_center_mm) {
            double need = source_to_detector_mm * std::tan(std::asin(r / source_to_center_mm));
            if (0.5 * num_bins * detector_pitch < need - 1e-9)
                throw config_error("fan geometry: detector does not cover the field of view");
        } else {
            throw config_error("fan geometry: source inside the field of view");
        }
    } else {
        if (0.5 * num_bins * detector_pitch < fov_radius() - 1e-9)
            throw config_error("parallel geometry: detector does not cover the field of view");
    }
}

namespace {

std::vector<double> uniform_angles(int n, double start_deg, double span_deg) {
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = start_deg + span_deg * i / n;
    return a;
}

} // namespace

ScanGeometry make_parallel_geometry(int num_views, int num_bins, int image_height,
                                    int image_width, double pixel_size, double span_deg) {
    if (num_views <= 0 || num_bins <= 0)
        throw config_error("make_parallel_geometry: views and bins must be positive");
    if (span_deg <= 0.0 || span_deg > 360.0 + 1e-9)
        throw config_error("make_parallel_geometry: span must be in (0, 360]");
    ScanGeometry g;
    g.beam_type = BeamType::parallel;
    g.num_views = num_views;
    g.num_bins = num_bins;
    g.span_deg = span_deg;
    g.view_angles = uniform_angles(num_views, 0.0, span_deg);
    g.image_height = image_height;
    g.image_width = image_width;
    g.pixel_size = pixel_size;
    // Detector spans the FOV diameter with a small margin.
    g.detector_pitch = 2.0 * g.fov_radius() * 1.02 / num_bins;
    g.validate();
    return g;
}

ScanGeometry make_fan_geometry(int num_views, int num_bins, int image_height, int image_width,
                               double pixel_size, double source_to_center_mm,
                               double source_to_detector_mm, double pitch) {
    ScanGeometry g;
    g.beam_type = BeamType::fan;
    g.num_views = num_views;
    g.num_bins = num_bins;
    g.span_deg = 360.0;
    g.view_angles = uniform_angles(num_views, 0.0, 360.0);
    g.image_height = image_height;
    g.image_width = image_width;
    g.pixel_size = pixel_size;
    g.source_to_center_mm = source_to_center_mm;
    g.source_to_detector_mm = source_to_detector_mm;
    if (pitch > 0.0) {
        g.detector_pitch = pitch;
    } else {
        double r = g.fov_radius();
        if (r >= source_to_center_mm)
            throw config_error("make_fan_geometry: source inside the field of view");
        double half_width = source_to_detector_mm * std::tan(std::asin(r / source_to_center_mm));
        g.detector_pitch = 2.0 * half_width * 1.05 / num_bins;
    }
    g.validate();
    return g;
}

ScanGeometry make_geometry_preset(const std::string& name) {
    if (name == "ctrate_fan") {
        // 512x512 slices scanned over 1000 views of a 360 degree rotation,
        // 900 detector bins. Source distances are not part of the public
        // parameter set; chosen so the fan comfortably clears the image.
        int n = 512;
        double pixel = 1.0;
        double r = 0.5 * pixel * std::hypot(double(n), double(n));
        return make_fan_geometry(1000, 900, n, n, pixel, 2.5 * r, 5.0 * r);
    }
    if (name == "clinical_fan") {
        // GE scanner: 984 views, 835 elements, 625.6 mm / 1097.0 mm.
        // Image grid 512^2 at 0.8 mm covers a 409.6 mm reconstruction circle.
        return make_fan_geometry(984, 835, 512, 512, 0.8, 625.6, 1097.0);
    }
    if (name == "parallel") {
        return make_parallel_geometry(180, 367, 256, 256, 1.0, 180.0);
    }
    throw config_error("unknown geometry preset '" + name +
                       "' (expected ctrate_fan, clinical_fan or parallel)");
}

AngularMask make_mask(const ScanGeometry& geometry, double angular_range_deg, double start_deg) {
    double span = geometry.rotation_span_deg();
    if (angular_range_deg <= 0.0 || angular_range_deg > span + 1e-9)
        throw config_error("mask width must be in (0, " + std::to_string(span) + "] degrees");
    AngularMask m;
    m.angular_range_deg = angular_range_deg;
    m.span_deg = span;
    m.keep.resize(geometry.num_views, 0);
    for (int i = 0; i < geometry.num_views; ++i) {
        double rel = std::fmod(geometry.view_angles[i] - start_deg, span);
        if (rel < 0.0) rel += span;
        m.keep[i] = rel < angular_range_deg ? 1 : 0;
    }
    return m;
}

AngularMask mask_complement(const AngularMask& mask) {
    AngularMask c;
    c.span_deg = mask.span_deg;
    c.angular_range_deg = mask.span_deg - mask.angular_range_deg;
    c.keep.resize(mask.keep.size());
    for (size_t i = 0; i < mask.keep.size(); ++i) c.keep[i] = mask.keep[i] ? 0 : 1;
    return c;
}

ScanGeometry downscale_geometry(const ScanGeometry& geometry, int factor) {
    if (factor <= 0) throw config_error("downscale_geometry: factor must be positive");
    if (geometry.image_height % factor || geometry.image_width % factor ||
        geometry.num_bins % factor)
        throw config_error("downscale_geometry: image size and bins must divide by factor");
    ScanGeometry g = geometry;
    g.image_height /= factor;
    g.image_width /= factor;
    g.num_bins /= factor;
    g.pixel_size *= factor;
    g.detector_pitch *= factor;
    g.validate();
    return g;
}

} // namespace lact
