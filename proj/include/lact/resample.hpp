#pragma once

#include "lact/grid.hpp"

namespace lact {

/// Block-average downsampling; dimensions must divide by factor.
Image downsample_average(const Image& image, int factor);

/// Average groups of `factor` adjacent detector bins; views unchanged.
Sinogram downsample_sinogram_bins(const Sinogram& sinogram, int factor);

/// Bilinear upsampling by an integer factor. Uses the lerp form
/// a + w*(b - a), so constant inputs reproduce bit-exactly.
Image upsample_bilinear(const Image& image, int factor);

} // namespace lact
