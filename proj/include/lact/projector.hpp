#pragma once

#include <cstdint>

#include "lact/geometry.hpp"
#include "lact/grid.hpp"

namespace lact {

/// Additive Gaussian measurement noise.
struct NoiseSpec {
    double sigma = 0.0;
    uint64_t seed = 0;
};

/// Discrete line integrals of the image along every (view, bin) ray.
/// Ray-driven with bilinear interpolation, sampling step = pixel_size / 2.
Sinogram forward_project(const Image& image, const ScanGeometry& geometry);

/// Exact adjoint of forward_project (same samples, same weights, transposed).
Image back_project(const Sinogram& sinogram, const ScanGeometry& geometry);

/// forward_project followed by zeroing the dropped views.
Sinogram apply_masked(const Image& image, const ScanGeometry& geometry, const AngularMask& mask);

/// Adds i.i.d. Gaussian noise of standard deviation noise.sigma; sigma = 0
/// returns the input unchanged. Deterministic under a fixed seed.
Sinogram simulate_measurement(const Sinogram& sinogram, const NoiseSpec& noise);

/// Zero the rows of a sinogram whose mask entry is 0 (in place).
void mask_rows(Sinogram& sinogram, const AngularMask& mask);

// Allocation-free variants used inside iterative solvers.
void forward_project_into(const Image& image, const ScanGeometry& geometry, Sinogram& out);
void back_project_into(const Sinogram& sinogram, const ScanGeometry& geometry, Image& out);

} // namespace lact
