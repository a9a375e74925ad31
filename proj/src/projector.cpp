#include "lact/projector.hpp"

#include <cmath>

#include "lact/random.hpp"

namespace lact {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ray {
    double ox, oy; // first sample position
    double dx, dy; // per-sample advance
    int samples;
    double step; // integration weight per sample
};

// Clip a ray (origin o, unit direction d) against the circle of radius r
// centred at the origin and lay out midpoint samples with the given step.
inline Ray clip_to_circle(double ox, double oy, double dx, double dy, double r, double step) {
    Ray ray{0, 0, 0, 0, 0, step};
    double tc = -(ox * dx + oy * dy); // closest approach along the ray
    double px = ox + tc * dx, py = oy + tc * dy;
    double d2 = px * px + py * py;
    if (d2 >= r * r) return ray;
    double half = std::sqrt(r * r - d2);
    double t0 = tc - half;
    int n = static_cast<int>(std::ceil(2.0 * half / step));
    ray.samples = n;
    ray.ox = ox + (t0 + 0.5 * step) * dx;
    ray.oy = oy + (t0 + 0.5 * step) * dy;
    ray.dx = step * dx;
    ray.dy = step * dy;
    return ray;
}

// Geometry of one (view, bin) ray. The image is centred at the origin,
// row 0 at +y, column 0 at -x.
inline Ray make_ray(const ScanGeometry& g, int view, int bin) {
    double step = 0.5 * g.pixel_size;
    double r = g.fov_radius() + g.pixel_size;
    double theta = g.view_angles[view] * kPi / 180.0;
    double ct = std::cos(theta), st = std::sin(theta);
    if (g.beam_type == BeamType::parallel) {
        double s = (bin - 0.5 * (g.num_bins - 1)) * g.detector_pitch;
        // detector axis (ct, st); ray direction perpendicular to it
        return clip_to_circle(s * ct, s * st, -st, ct, r, step);
    }
    double sx = g.source_to_center_mm * ct;
    double sy = g.source_to_center_mm * st;
    double cx = sx - g.source_to_detector_mm * ct; // detector centre
    double cy = sy - g.source_to_detector_mm * st;
    double u = (bin - 0.5 * (g.num_bins - 1)) * g.detector_pitch;
    double px = cx - u * st, py = cy + u * ct;
    double dx = px - sx, dy = py - sy;
    double len = std::hypot(dx, dy);
    return clip_to_circle(sx, sy, dx / len, dy / len, r, step);
}

inline void check_image(const Image& image, const ScanGeometry& g, const char* op) {
    if (image.height() != g.image_height || image.width() != g.image_width)
        throw shape_error(std::string(op) + ": image does not match geometry image_size");
}

inline void check_sino(const Sinogram& s, const ScanGeometry& g, const char* op) {
    if (s.views() != g.num_views || s.bins() != g.num_bins)
        throw shape_error(std::string(op) + ": sinogram does not match geometry");
}

} // namespace

void forward_project_into(const Image& image, const ScanGeometry& geometry, Sinogram& out) {
    check_image(image, geometry, "forward_project");
    if (out.views() != geometry.num_views || out.bins() != geometry.num_bins)
        out = Sinogram(geometry.num_views, geometry.num_bins);
    const int h = image.height(), w = image.width();
    const double inv_pix = 1.0 / geometry.pixel_size;
    const double half_w = 0.5 * (w - 1), half_h = 0.5 * (h - 1);
    const double* img = image.grid.data();

    for (int v = 0; v < geometry.num_views; ++v) {
        for (int b = 0; b < geometry.num_bins; ++b) {
            Ray ray = make_ray(geometry, v, b);
            double x = ray.ox, y = ray.oy;
            double acc = 0.0;
            for (int k = 0; k < ray.samples; ++k, x += ray.dx, y += ray.dy) {
                double fc = x * inv_pix + half_w;
                double fr = half_h - y * inv_pix;
                int c0 = static_cast<int>(std::floor(fc));
                int r0 = static_cast<int>(std::floor(fr));
                double wc = fc - c0, wr = fr - r0;
                if (r0 >= 0 && r0 < h && c0 >= 0 && c0 < w)
                    acc += (1 - wr) * (1 - wc) * img[r0 * w + c0];
                if (r0 >= 0 && r0 < h && c0 + 1 >= 0 && c0 + 1 < w)
                    acc += (1 - wr) * wc * img[r0 * w + c0 + 1];
                if (r0 + 1 >= 0 && r0 + 1 < h && c0 >= 0 && c0 < w)
                    acc += wr * (1 - wc) * img[(r0 + 1) * w + c0];
                if (r0 + 1 >= 0 && r0 + 1 < h && c0 + 1 >= 0 && c0 + 1 < w)
                    acc += wr * wc * img[(r0 + 1) * w + c0 + 1];
            }
            out(v, b) = acc * ray.step;
        }
    }
    if (!out.grid.all_finite()) throw numeric_error("forward_project produced non-finite values");
}

void back_project_into(const Sinogram& sinogram, const ScanGeometry& geometry, Image& out) {
    check_sino(sinogram, geometry, "back_project");
    if (out.height() != geometry.image_height || out.width() != geometry.image_width)
        out = Image(geometry.image_height, geometry.image_width);
    else
        out.grid.fill(0.0);
    const int h = out.height(), w = out.width();
    const double inv_pix = 1.0 / geometry.pixel_size;
    const double half_w = 0.5 * (w - 1), half_h = 0.5 * (h - 1);
    double* img = out.grid.data();

    for (int v = 0; v < geometry.num_views; ++v) {
        for (int b = 0; b < geometry.num_bins; ++b) {
            double val = sinogram(v, b);
            if (val == 0.0) continue;
            Ray ray = make_ray(geometry, v, b);
            double contrib = val * ray.step;
            double x = ray.ox, y = ray.oy;
            for (int k = 0; k < ray.samples; ++k, x += ray.dx, y += ray.dy) {
                double fc = x * inv_pix + half_w;
                double fr = half_h - y * inv_pix;
                int c0 = static_cast<int>(std::floor(fc));
                int r0 = static_cast<int>(std::floor(fr));
                double wc = fc - c0, wr = fr - r0;
                if (r0 >= 0 && r0 < h && c0 >= 0 && c0 < w)
                    img[r0 * w + c0] += (1 - wr) * (1 - wc) * contrib;
                if (r0 >= 0 && r0 < h && c0 + 1 >= 0 && c0 + 1 < w)
                    img[r0 * w + c0 + 1] += (1 - wr) * wc * contrib;
                if (r0 + 1 >= 0 && r0 + 1 < h && c0 >= 0 && c0 < w)
                    img[(r0 + 1) * w + c0] += wr * (1 - wc) * contrib;
                if (r0 + 1 >= 0 && r0 + 1 < h && c0 + 1 >= 0 && c0 + 1 < w)
                    img[(r0 + 1) * w + c0 + 1] += wr * wc * contrib;
            }
        }
    }
    if (!out.grid.all_finite()) throw numeric_error("back_project produced non-finite values");
}

Sinogram forward_project(const Image& image, const ScanGeometry& geometry) {
    Sinogram out;
    forward_project_into(image, geometry, out);
    return out;
}

Image back_project(const Sinogram& sinogram, const ScanGeometry& geometry) {
    Image out;
    back_project_into(sinogram, geometry, out);
    return out;
}

void mask_rows(Sinogram& sinogram, const AngularMask& mask) {
    if (static_cast<int>(mask.keep.size()) != sinogram.views())
        throw shape_error("mask_rows: mask length does not match sinogram views");
    for (int v = 0; v < sinogram.views(); ++v)
        if (!mask.keep[v])
            for (int b = 0; b < sinogram.bins(); ++b) sinogram(v, b) = 0.0;
}

Sinogram apply_masked(const Image& image, const ScanGeometry& geometry, const AngularMask& mask) {
    Sinogram s = forward_project(image, geometry);
    mask_rows(s, mask);
    return s;
}

Sinogram simulate_measurement(const Sinogram& sinogram, const NoiseSpec& noise) {
    if (noise.sigma < 0.0) throw config_error("simulate_measurement: sigma must be >= 0");
    if (noise.sigma == 0.0) return sinogram;
    Sinogram out = sinogram;
    CounterRng rng(noise.seed);
    for (size_t i = 0; i < out.grid.size(); ++i)
        out.grid.values()[i] += noise.sigma * rng.gaussian(0, i);
    return out;
}

} // namespace lact
