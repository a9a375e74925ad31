#pragma once

#include "lact/geometry.hpp"
#include "lact/grid.hpp"

namespace lact {

enum class FilterKind { ramp, ramp_hann };

struct FilterSpec {
    FilterKind kind = FilterKind::ramp_hann;
    double cutoff_fraction = 1.0; // of the detector Nyquist frequency
};

/// Filtered backprojection. Dropped views must be zero rows; when `mask` is
/// given the angular weight is span / kept_count (kept views only), otherwise
/// rows with any nonzero entry count as kept.
Image fbp_reconstruct(const Sinogram& sinogram, const ScanGeometry& geometry,
                      const FilterSpec& filter, const AngularMask* mask = nullptr);

enum class AuxMethod { conjugate_symmetry, angular_interpolation };

/// Fill the dropped views of a measured sinogram. Kept rows pass through
/// bit-exactly. conjugate_symmetry uses the parallel-beam identity
/// y(theta+180, s) = y(theta, -s) where the conjugate view is kept and falls
/// back to interpolation elsewhere (always for fan beams).
Sinogram synthesize_aux_sinogram(const Sinogram& measured, const AngularMask& mask,
                                 const ScanGeometry& geometry, AuxMethod method);

/// Default aux method per beam type: conjugate symmetry for parallel,
/// angular interpolation for fan.
AuxMethod default_aux_method(const ScanGeometry& geometry);

} // namespace lact
