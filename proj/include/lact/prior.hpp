#pragma once

#include "lact/grid.hpp"

namespace lact {

/// Conditioning bundle passed to a prior at every sampling step.
struct PriorInput {
    double sigma = 0.0;         // current noise scale
    const Image* coarse = nullptr; // upsampled Stage-I image (Stage II only)
    const Grid* tokens = nullptr;  // metadata token matrix; null or 0-row = unconditional
};

/// Velocity/score estimator plugged into the sampling loops. Implementations
/// must be pure and safe to share across threads.
class PriorModel {
  public:
    virtual ~PriorModel() = default;

    /// Fill image-shaped velocity and score estimates for the noisy input.
    virtual void evaluate(const Image& x, const PriorInput& in, Image& velocity,
                          Image& score) const = 0;
};

} // namespace lact
