#pragma once

#include <optional>
#include <string>

#include "lact/analytic.hpp"
#include "lact/config.hpp"
#include "lact/geometry.hpp"
#include "lact/metadata.hpp"
#include "lact/optim.hpp"
#include "lact/prior_net.hpp"
#include "lact/sampler.hpp"

namespace lact {

enum class ReconMethod { fbp, admm_tv, diffusion };

ReconMethod recon_method_from_string(const std::string& s);
std::string to_string(ReconMethod m);

/// Everything a reconstruction run needs, resolvable to/from one config
/// document. The emitted manifest is itself a valid config: re-running it
/// reproduces the outputs bit-exactly.
struct RunConfig {
    // [run]
    ReconMethod method = ReconMethod::fbp;
    uint64_t seed = 0;
    int jobs = 1;
    FilterSpec fbp_filter;
    int admm_outer_iters = 15;
    std::string aux_method = "default"; // default | conjugate_symmetry | angular_interpolation
    // [io]
    std::string sinogram_path;
    std::string mask_path;
    std::string out_dir = ".";
    std::string reference_path; // optional, enables per-step metric curves
    // [geometry], [mask] resolved inline
    ScanGeometry geometry;
    AngularMask mask;
    // [consistency.stage1] / [consistency.stage2]
    ConsistencyConfig stage1 = ConsistencyConfig::stage1_defaults();
    ConsistencyConfig stage2 = ConsistencyConfig::stage2_defaults();
    // [schedule]
    ScheduleKind schedule_kind = ScheduleKind::karras_like;
    int num_steps = 40;
    double sigma_min = 0.01;
    double sigma_max = 20.0;
    bool stochastic = true;
    bool warm_start = true;
    // [prior]
    ToyPriorKind prior_kind = ToyPriorKind::tiny_block_net;
    ToyPriorConfig prior_cfg;
    int embed_dim = 0;    // set = prior channels when 0
    int embed_tokens = 6;
    uint64_t embed_seed = 11;
    // [metadata]
    std::string metadata_path;
    int metadata_index = 0;
    unsigned ablate = 0; // categories subtracted at load time
    // [metrics]
    int nmi_bins = 256;

    ConfigDoc to_doc() const;
    static RunConfig from_doc(const ConfigDoc& doc);
};

void consistency_to_section(const ConsistencyConfig& c, ConfigSection& s);
ConsistencyConfig consistency_from_section(const ConfigSection& s);

struct DiffusionResult {
    Image image;
    StageOutput stage1;
    StageOutput stage2;
};

/// Full two-stage pipeline: Stage I at quarter resolution, one extra ADMM
/// correction, 4x upsample, Stage II at full resolution.
DiffusionResult run_diffusion(const RunConfig& rc, const Sinogram& measured,
                              const Grid& metadata_tokens, const Image* reference);

/// Build the metadata token matrix for a run (empty when no metadata file).
Grid resolve_tokens(const RunConfig& rc);

} // namespace lact
