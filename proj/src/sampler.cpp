#include "lact/sampler.hpp"

#include <cmath>
#include <sstream>

#include "lact/config.hpp"
#include "lact/metrics.hpp"
#include "lact/random.hpp"
#include "lact/resample.hpp"

namespace lact {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "karras_like") return ScheduleKind::karras_like;
    if (s == "linear") return ScheduleKind::linear;
    throw config_error("unknown schedule kind '" + s + "'");
}

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::karras_like ? "karras_like" : "linear";
}

NoiseSchedule make_schedule(ScheduleKind kind, int num_steps, double sigma_min,
                            double sigma_max) {
    if (num_steps < 1) throw config_error("make_schedule: num_steps must be >= 1");
    if (!(sigma_min > 0.0 && sigma_min < sigma_max))
        throw config_error("make_schedule: need 0 < sigma_min < sigma_max");
    NoiseSchedule s;
    s.kind = kind;
    s.num_steps = num_steps;
    s.sigmas.resize(num_steps + 1);
    if (num_steps == 1) {
        s.sigmas[0] = sigma_max;
    } else if (kind == ScheduleKind::karras_like) {
        const double inv_rho = 1.0 / 7.0;
        double a = std::pow(sigma_max, inv_rho);
        double b = std::pow(sigma_min, inv_rho);
        for (int i = 0; i < num_steps; ++i) {
            double t = static_cast<double>(i) / (num_steps - 1);
            s.sigmas[i] = std::pow(a + t * (b - a), 7.0);
        }
    } else {
        for (int i = 0; i < num_steps; ++i) {
            double t = static_cast<double>(i) / (num_steps - 1);
            s.sigmas[i] = sigma_max + t * (sigma_min - sigma_max);
        }
    }
    s.sigmas[num_steps] = 0.0;
    for (int i = 0; i < num_steps; ++i)
        if (!(s.sigmas[i] > s.sigmas[i + 1]))
            throw config_error("make_schedule: sigmas are not strictly decreasing");
    return s;
}

namespace {

// Shared EDM-style loop: velocity/score denoise update, then the ADMM
// consistency correction, once per schedule step.
StageOutput run_loop(const PriorModel& prior, const Grid& tokens, const Image* coarse,
                     const Sinogram& measured, const Sinogram* y_aux, const AngularMask& mask,
                     const ScanGeometry& geometry, const NoiseSchedule& schedule,
                     const ConsistencyConfig& cfg, const SamplerOptions& opts) {
    cfg.validate();
    if (schedule.num_steps < 1 ||
        static_cast<int>(schedule.sigmas.size()) != schedule.num_steps + 1)
        throw config_error("sampler: malformed schedule");
    if (measured.views() != geometry.num_views || measured.bins() != geometry.num_bins)
        throw shape_error("sampler: measured sinogram does not match geometry");

    CounterRng rng(opts.seed);
    Image x(geometry.image_height, geometry.image_width);
    rng.fill_gaussian(x.grid, 0, schedule.sigmas[0]);

    PriorInput pin;
    pin.coarse = coarse;
    pin.tokens = (tokens.rows() > 0) ? &tokens : nullptr;

    AdmmState state;
    StageOutput out;
    out.trace.reserve(schedule.num_steps);
    Image velocity, score;

    for (int i = 0; i < schedule.num_steps; ++i) {
        double sigma = schedule.sigmas[i];
        double dt = sigma - schedule.sigmas[i + 1];
        pin.sigma = sigma;
        prior.evaluate(x, pin, velocity, score);
        if (!velocity.grid.all_finite() || !score.grid.all_finite())
            throw numeric_error("sampler: prior returned non-finite values at step " +
                                std::to_string(i));
        // x <- x + dt (v + omega/2 s) + sqrt(omega dt) eps
        x.grid.axpy(dt, velocity.grid);
        x.grid.axpy(0.5 * sigma * dt, score.grid);
        if (opts.stochastic) {
            double amp = std::sqrt(sigma * dt);
            for (size_t k = 0; k < x.grid.size(); ++k)
                x.grid.values()[k] += amp * rng.gaussian(static_cast<uint64_t>(i) + 1, k);
        }
        if (!x.grid.all_finite())
            throw numeric_error("sampler: non-finite iterate at step " + std::to_string(i));

        StepTrace t;
        t.step = i;
        t.sigma = sigma;
        t.pre_norm = x.grid.norm2();
        double lam2 = effective_lambda2(cfg, i);
        t.pre_objective = consistency_objective(x, &x, measured, y_aux, mask, geometry,
                                                cfg.lambda1, lam2, cfg.mu);
        if (!opts.warm_start) state = AdmmState{};
        Image xc = consistency_step(x, measured, y_aux, mask, geometry, cfg, i, state);
        t.post_objective = consistency_objective(xc, &x, measured, y_aux, mask, geometry,
                                                 cfg.lambda1, lam2, cfg.mu);
        x = std::move(xc);
        if (opts.reference) {
            double range = opts.reference->grid.max_value() - opts.reference->grid.min_value();
            if (range <= 0.0) range = 1.0;
            t.psnr_db = psnr(x, *opts.reference, range);
            t.ssim_val = ssim(x, *opts.reference, range);
            t.has_metrics = true;
        }
        out.trace.push_back(t);
    }
    out.image = std::move(x);
    return out;
}

} // namespace

StageOutput sample_stage1(const PriorModel& prior, const Grid& metadata_tokens,
                          const Sinogram& measured, const Sinogram* y_aux,
                          const AngularMask& mask, const ScanGeometry& geometry_lowres,
                          const NoiseSchedule& schedule, const ConsistencyConfig& cfg,
                          const SamplerOptions& opts) {
    return run_loop(prior, metadata_tokens, nullptr, measured, y_aux, mask, geometry_lowres,
                    schedule, cfg, opts);
}

StageOutput sample_stage2(const PriorModel& prior, const Image& coarse,
                          const Grid& metadata_tokens, const Sinogram& measured,
                          const AngularMask& mask, const ScanGeometry& geometry,
                          const NoiseSchedule& schedule, const ConsistencyConfig& cfg,
                          const SamplerOptions& opts) {
    Image coarse_up = upsample_bilinear(coarse, 4);
    if (coarse_up.height() != geometry.image_height || coarse_up.width() != geometry.image_width)
        throw shape_error("sample_stage2: 4x coarse image does not match geometry image_size");
    return run_loop(prior, metadata_tokens, &coarse_up, measured, nullptr, mask, geometry,
                    schedule, cfg, opts);
}

std::string format_trace(const StageOutput& out) {
    std::ostringstream os;
    os << "step\tsigma\tpre_norm\tpost_objective\n";
    for (const auto& t : out.trace)
        os << t.step << "\t" << format_double(t.sigma) << "\t" << format_double(t.pre_norm)
           << "\t" << format_double(t.post_objective) << "\n";
    return os.str();
}

std::string format_metric_curve(const StageOutput& out) {
    std::ostringstream os;
    os << "step\tpsnr\tssim\n";
    for (const auto& t : out.trace) {
        if (!t.has_metrics) throw config_error("trace has no per-step metrics (no reference)");
        os << t.step << "\t" << format_double(t.psnr_db) << "\t" << format_double(t.ssim_val)
           << "\n";
    }
    return os.str();
}

} // namespace lact
