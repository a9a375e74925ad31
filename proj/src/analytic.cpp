#include "lact/analytic.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace lact {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place iterative radix-2 FFT; length must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

size_t next_pow2(size_t n) {
    size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// |f| response sampled on the DFT grid for sample spacing `pitch`, with an
// optional Hann rolloff below cutoff * Nyquist.
std::vector<double> make_filter(size_t m, double pitch, const FilterSpec& spec) {
    if (spec.cutoff_fraction <= 0.0 || spec.cutoff_fraction > 1.0)
        throw config_error("filter cutoff_fraction must be in (0, 1]");
    std::vector<double> h(m, 0.0);
    double df = 1.0 / (static_cast<double>(m) * pitch);
    double f_cut = spec.cutoff_fraction * 0.5 / pitch;
    for (size_t k = 0; k < m; ++k) {
        double f = df * static_cast<double>(k <= m / 2 ? k : m - k);
        if (f > f_cut + 1e-15) continue;
        double w = spec.kind == FilterKind::ramp_hann
                       ? 0.5 * (1.0 + std::cos(kPi * f / f_cut))
                       : 1.0;
        h[k] = f * w;
    }
    return h;
}

// Ramp-filter every row of the sinogram, zero-padded to >= 2x bins.
Grid filter_rows(const Grid& sino, double pitch, const FilterSpec& spec) {
    size_t n = static_cast<size_t>(sino.cols());
    size_t m = next_pow2(2 * n);
    std::vector<double> h = make_filter(m, pitch, spec);
    Grid out(sino.rows(), sino.cols());
    std::vector<std::complex<double>> buf(m);
    for (int v = 0; v < sino.rows(); ++v) {
        for (size_t i = 0; i < m; ++i)
            buf[i] = i < n ? std::complex<double>(sino(v, static_cast<int>(i)), 0.0) : 0.0;
        fft_inplace(buf, false);
        for (size_t i = 0; i < m; ++i) buf[i] *= h[i];
        fft_inplace(buf, true);
        for (size_t i = 0; i < n; ++i) out(v, static_cast<int>(i)) = buf[i].real();
    }
    return out;
}

std::vector<uint8_t> kept_views(const Sinogram& s, const ScanGeometry& g,
                                const AngularMask* mask) {
    if (mask) {
        if (static_cast<int>(mask->keep.size()) != g.num_views)
            throw shape_error("fbp_reconstruct: mask length does not match geometry");
        return mask->keep;
    }
    std::vector<uint8_t> keep(g.num_views, 0);
    for (int v = 0; v < g.num_views; ++v)
        for (int b = 0; b < s.bins(); ++b)
            if (s(v, b) != 0.0) {
                keep[v] = 1;
                break;
            }
    return keep;
}

Image fbp_parallel(const Grid& q, const ScanGeometry& g, const std::vector<uint8_t>& keep,
                   int kept) {
    Image out(g.image_height, g.image_width, 0.0);
    double span_rad = g.rotation_span_deg() * kPi / 180.0;
    double dtheta = span_rad / static_cast<double>(kept);
    // A 360-degree parallel set covers every line twice.
    if (g.rotation_span_deg() > 180.0 + 1e-9) dtheta *= 0.5;
    double half_w = 0.5 * (g.image_width - 1), half_h = 0.5 * (g.image_height - 1);
    double inv_pitch = 1.0 / g.detector_pitch;
    double bin_center = 0.5 * (g.num_bins - 1);
    for (int v = 0; v < g.num_views; ++v) {
        if (!keep[v]) continue;
        double theta = g.view_angles[v] * kPi / 180.0;
        double ct = std::cos(theta), st = std::sin(theta);
        for (int r = 0; r < g.image_height; ++r) {
            double y = (half_h - r) * g.pixel_size;
            for (int c = 0; c < g.image_width; ++c) {
                double x = (c - half_w) * g.pixel_size;
                double s = x * ct + y * st;
                double fb = s * inv_pitch + bin_center;
                int b0 = static_cast<int>(std::floor(fb));
                double w = fb - b0;
                double val = 0.0;
                if (b0 >= 0 && b0 < g.num_bins) val += (1.0 - w) * q(v, b0);
                if (b0 + 1 >= 0 && b0 + 1 < g.num_bins) val += w * q(v, b0 + 1);
                out(r, c) += val * dtheta;
            }
        }
    }
    return out;
}

Image fbp_fan(const Sinogram& sino, const ScanGeometry& g, const std::vector<uint8_t>& keep,
              int kept, const FilterSpec& spec) {
    // Flat-detector fan FBP on the virtual detector through the isocenter:
    // cosine-weight, ramp-filter, then distance-weighted backprojection.
    double dso = g.source_to_center_mm;
    double mag = dso / g.source_to_detector_mm;
    double pitch_iso = g.detector_pitch * mag;
    double bin_center = 0.5 * (g.num_bins - 1);

    Grid weighted(sino.views(), sino.bins());
    for (int v = 0; v < sino.views(); ++v)
        for (int b = 0; b < sino.bins(); ++b) {
            double s = (b - bin_center) * pitch_iso;
            weighted(v, b) = sino(v, b) * dso / std::sqrt(dso * dso + s * s);
        }
    Grid q = filter_rows(weighted, pitch_iso, spec);

    Image out(g.image_height, g.image_width, 0.0);
    double dbeta = 2.0 * kPi / static_cast<double>(kept);
    double half_w = 0.5 * (g.image_width - 1), half_h = 0.5 * (g.image_height - 1);
    for (int v = 0; v < g.num_views; ++v) {
        if (!keep[v]) continue;
        double beta = g.view_angles[v] * kPi / 180.0;
        double cb = std::cos(beta), sb = std::sin(beta);
        for (int r = 0; r < g.image_height; ++r) {
            double y = (half_h - r) * g.pixel_size;
            for (int c = 0; c < g.image_width; ++c) {
                double x = (c - half_w) * g.pixel_size;
                double u_dist = dso - x * cb - y * sb; // pixel depth along central ray
                if (u_dist <= 1e-9) continue;
                double t = y * cb - x * sb;
                double s_iso = dso * t / u_dist;
                double fb = s_iso / pitch_iso + bin_center;
                int b0 = static_cast<int>(std::floor(fb));
                double w = fb - b0;
                double val = 0.0;
                if (b0 >= 0 && b0 < g.num_bins) val += (1.0 - w) * q(v, b0);
                if (b0 + 1 >= 0 && b0 + 1 < g.num_bins) val += w * q(v, b0 + 1);
                double U = u_dist / dso;
                out(r, c) += val * dbeta / (U * U);
            }
        }
    }
    // A full fan rotation measures every line twice.
    out.grid *= 0.5;
    return out;
}

} // namespace

Image fbp_reconstruct(const Sinogram& sinogram, const ScanGeometry& geometry,
                      const FilterSpec& filter, const AngularMask* mask) {
    if (sinogram.views() != geometry.num_views || sinogram.bins() != geometry.num_bins)
        throw shape_error("fbp_reconstruct: sinogram does not match geometry");
    std::vector<uint8_t> keep = kept_views(sinogram, geometry, mask);
    int kept = 0;
    for (uint8_t k : keep) kept += k;
    if (kept == 0) return Image(geometry.image_height, geometry.image_width, 0.0);

    if (geometry.beam_type == BeamType::parallel) {
        Grid q = filter_rows(sinogram.grid, geometry.detector_pitch, filter);
        return fbp_parallel(q, geometry, keep, kept);
    }
    return fbp_fan(sinogram, geometry, keep, kept, filter);
}

AuxMethod default_aux_method(const ScanGeometry& geometry) {
    return geometry.beam_type == BeamType::parallel ? AuxMethod::conjugate_symmetry
                                                    : AuxMethod::angular_interpolation;
}

namespace {

// Cyclic angular distance in [0, span).
double cyc(double a, double span) {
    double r = std::fmod(a, span);
    return r < 0.0 ? r + span : r;
}

} // namespace

Sinogram synthesize_aux_sinogram(const Sinogram& measured, const AngularMask& mask,
                                 const ScanGeometry& geometry, AuxMethod method) {
    if (measured.views() != geometry.num_views || measured.bins() != geometry.num_bins)
        throw shape_error("synthesize_aux_sinogram: sinogram does not match geometry");
    if (static_cast<int>(mask.keep.size()) != geometry.num_views)
        throw shape_error("synthesize_aux_sinogram: mask does not match geometry");
    int kept = 0;
    for (uint8_t k : mask.keep) kept += k;
    if (kept == 0) throw config_error("synthesize_aux_sinogram: mask keeps no views");

    Sinogram out = measured;
    if (kept == geometry.num_views) return out;

    double span = geometry.rotation_span_deg();
    std::vector<int> kept_idx;
    for (int v = 0; v < geometry.num_views; ++v)
        if (mask.keep[v]) kept_idx.push_back(v);

    // Per-bin linear interpolation between the nearest kept views, cyclic in
    // angle. Used directly for angular_interpolation and as the fallback for
    // conjugate rays without a kept partner.
    auto interpolate_view = [&](int v) {
        double a = cyc(geometry.view_angles[v], span);
        int before = -1, after = -1;
        double best_before = span + 1.0, best_after = span + 1.0;
        for (int k : kept_idx) {
            double ak = cyc(geometry.view_angles[k], span);
            double fwd = cyc(a - ak, span);  // distance going backwards to k
            double bwd = cyc(ak - a, span);  // distance going forwards to k
            if (fwd < best_before) {
                best_before = fwd;
                before = k;
            }
            if (bwd < best_after) {
                best_after = bwd;
                after = k;
            }
        }
        double gap = best_before + best_after;
        double w = gap > 0.0 ? best_before / gap : 0.0;
        for (int b = 0; b < geometry.num_bins; ++b)
            out(v, b) = measured(before, b) + w * (measured(after, b) - measured(before, b));
    };

    auto conjugate_fill = [&](int v) -> bool {
        // parallel-beam identity: y(theta + 180, s) = y(theta, -s)
        double target = cyc(geometry.view_angles[v] + 180.0, 360.0);
        double tol = 0.51 * span / geometry.num_views;
        for (int k : kept_idx) {
            double ak = cyc(geometry.view_angles[k], 360.0);
            double d = std::fabs(cyc(ak - target + 180.0, 360.0) - 180.0);
            if (d <= tol) {
                for (int b = 0; b < geometry.num_bins; ++b)
                    out(v, b) = measured(k, geometry.num_bins - 1 - b);
                return true;
            }
        }
        return false;
    };

    bool allow_conjugate =
        method == AuxMethod::conjugate_symmetry && geometry.beam_type == BeamType::parallel;
    for (int v = 0; v < geometry.num_views; ++v) {
        if (mask.keep[v]) continue;
        if (allow_conjugate && conjugate_fill(v)) continue;
        interpolate_view(v);
    }
    return out;
}

} // namespace lact
