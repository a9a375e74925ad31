#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lact/geometry.hpp"
#include "lact/grid.hpp"
#include "lact/optim.hpp"
#include "lact/prior.hpp"

namespace lact {

enum class ScheduleKind { karras_like, linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Decreasing noise scales; sigmas has num_steps + 1 entries ending at 0.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::karras_like;
    int num_steps = 0;
    std::vector<double> sigmas;
};

/// karras_like interpolates in sigma^(1/7) space; linear is uniform.
NoiseSchedule make_schedule(ScheduleKind kind, int num_steps, double sigma_min, double sigma_max);

struct StepTrace {
    int step = 0;
    double sigma = 0.0;
    double pre_norm = 0.0;       // |x| after the denoise update
    double pre_objective = 0.0;  // consistency objective before the ADMM pass
    double post_objective = 0.0; // and after
    double psnr_db = 0.0;        // vs reference when one is supplied
    double ssim_val = 0.0;
    bool has_metrics = false;
};

struct StageOutput {
    Image image;
    std::vector<StepTrace> trace; // length num_steps
};

struct SamplerOptions {
    uint64_t seed = 0;
    bool stochastic = true;   // the sqrt(omega dt) eps term of the update
    bool warm_start = true;   // carry ADMM state across steps
    const Image* reference = nullptr; // enables per-step PSNR/SSIM in the trace
};

/// Stage I: metadata-only conditioning at the quarter-resolution geometry.
/// measured/y_aux must already live on geometry_lowres.
StageOutput sample_stage1(const PriorModel& prior, const Grid& metadata_tokens,
                          const Sinogram& measured, const Sinogram* y_aux,
                          const AngularMask& mask, const ScanGeometry& geometry_lowres,
                          const NoiseSchedule& schedule, const ConsistencyConfig& cfg,
                          const SamplerOptions& opts);

/// Stage II: conditioned on the 4x-upsampled coarse image and metadata, at
/// full resolution. The default Stage-II config has lambda2 = 0, so only
/// the measured arc constrains the iterate.
StageOutput sample_stage2(const PriorModel& prior, const Image& coarse,
                          const Grid& metadata_tokens, const Sinogram& measured,
                          const AngularMask& mask, const ScanGeometry& geometry,
                          const NoiseSchedule& schedule, const ConsistencyConfig& cfg,
                          const SamplerOptions& opts);

/// Delimited trace table: step sigma pre_norm post_objective.
std::string format_trace(const StageOutput& out);

/// Delimited per-step metric curve: step psnr ssim (reference runs only).
std::string format_metric_curve(const StageOutput& out);

} // namespace lact
