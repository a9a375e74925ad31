#include "lact/resample.hpp"

#include <algorithm>
#include <cmath>

namespace lact {

Image downsample_average(const Image& image, int factor) {
    if (factor <= 0) throw config_error("downsample_average: factor must be positive");
    if (image.height() % factor || image.width() % factor)
        throw shape_error("downsample_average: dimensions must divide by factor");
    Image out(image.height() / factor, image.width() / factor);
    double inv = 1.0 / (factor * factor);
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c) {
            double s = 0.0;
            for (int i = 0; i < factor; ++i)
                for (int j = 0; j < factor; ++j) s += image(r * factor + i, c * factor + j);
            out(r, c) = s * inv;
        }
    return out;
}

Sinogram downsample_sinogram_bins(const Sinogram& sinogram, int factor) {
    if (factor <= 0) throw config_error("downsample_sinogram_bins: factor must be positive");
    if (sinogram.bins() % factor)
        throw shape_error("downsample_sinogram_bins: bins must divide by factor");
    Sinogram out(sinogram.views(), sinogram.bins() / factor);
    double inv = 1.0 / factor;
    for (int v = 0; v < sinogram.views(); ++v)
        for (int b = 0; b < out.bins(); ++b) {
            double s = 0.0;
            for (int j = 0; j < factor; ++j) s += sinogram(v, b * factor + j);
            out(v, b) = s * inv;
        }
    return out;
}

Image upsample_bilinear(const Image& image, int factor) {
    if (factor <= 0) throw config_error("upsample_bilinear: factor must be positive");
    int H = image.height() * factor, W = image.width() * factor;
    Image out(H, W);
    // Output pixel centres map to input coordinates so that block centres align.
    double scale = 1.0 / factor;
    for (int r = 0; r < H; ++r) {
        double fr = (r + 0.5) * scale - 0.5;
        int r0 = static_cast<int>(std::floor(fr));
        double wr = fr - r0;
        int ra = std::clamp(r0, 0, image.height() - 1);
        int rb = std::clamp(r0 + 1, 0, image.height() - 1);
        for (int c = 0; c < W; ++c) {
            double fc = (c + 0.5) * scale - 0.5;
            int c0 = static_cast<int>(std::floor(fc));
            double wc = fc - c0;
            int ca = std::clamp(c0, 0, image.width() - 1);
            int cb = std::clamp(c0 + 1, 0, image.width() - 1);
            double top = image(ra, ca) + wc * (image(ra, cb) - image(ra, ca));
            double bot = image(rb, ca) + wc * (image(rb, cb) - image(rb, ca));
            out(r, c) = top + wr * (bot - top);
        }
    }
    return out;
}

} // namespace lact
