#include "lact/pipeline.hpp"

#include "lact/random.hpp"
#include "lact/resample.hpp"
#include "lact/serialize.hpp"

namespace lact {

ReconMethod recon_method_from_string(const std::string& s) {
    if (s == "fbp") return ReconMethod::fbp;
    if (s == "admm-tv") return ReconMethod::admm_tv;
    if (s == "diffusion") return ReconMethod::diffusion;
    throw config_error("unknown method '" + s + "' (valid methods: fbp, admm-tv, diffusion)");
}

std::string to_string(ReconMethod m) {
    switch (m) {
        case ReconMethod::fbp: return "fbp";
        case ReconMethod::admm_tv: return "admm-tv";
        case ReconMethod::diffusion: return "diffusion";
    }
    return "?";
}

namespace {

std::string prior_kind_to_string(ToyPriorKind k) {
    switch (k) {
        case ToyPriorKind::zero: return "zero";
        case ToyPriorKind::tv_denoiser: return "tv_denoiser";
        case ToyPriorKind::tiny_block_net: return "tiny_block_net";
    }
    return "?";
}

ToyPriorKind prior_kind_from_string(const std::string& s) {
    if (s == "zero") return ToyPriorKind::zero;
    if (s == "tv_denoiser") return ToyPriorKind::tv_denoiser;
    if (s == "tiny_block_net") return ToyPriorKind::tiny_block_net;
    throw config_error("unknown prior kind '" + s + "'");
}

std::string category_csv(unsigned mask) {
    std::string out;
    auto add = [&](MetaCategory c, const char* name) {
        if (!(mask & static_cast<unsigned>(c))) return;
        if (!out.empty()) out += ",";
        out += name;
    };
    add(MetaCategory::Phy, "phy");
    add(MetaCategory::Demo, "demo");
    add(MetaCategory::Diag, "diag");
    return out;
}

} // namespace

void consistency_to_section(const ConsistencyConfig& c, ConfigSection& s) {
    s.set_double("lambda1", c.lambda1);
    s.set_double("lambda2_0", c.lambda2_0);
    s.set_double("lambda2_decay_gamma", c.lambda2_decay_gamma);
    s.set_double("mu", c.mu);
    s.set_double("rho", c.rho);
    s.set_int("K", c.K);
    s.set_int("cg_iters", c.cg_iters);
    s.set_double("cg_tol", c.cg_tol);
}

ConsistencyConfig consistency_from_section(const ConfigSection& s) {
    s.reject_unknown_keys({"lambda1", "lambda2_0", "lambda2_decay_gamma", "mu", "rho", "K",
                           "cg_iters", "cg_tol"});
    ConsistencyConfig c;
    c.lambda1 = s.get_double("lambda1");
    c.lambda2_0 = s.get_double("lambda2_0");
    c.lambda2_decay_gamma = s.get_double("lambda2_decay_gamma");
    c.mu = s.get_double("mu");
    c.rho = s.get_double("rho");
    c.K = s.get_int("K");
    c.cg_iters = s.get_int("cg_iters");
    c.cg_tol = s.get_double("cg_tol");
    c.validate();
    return c;
}

ConfigDoc RunConfig::to_doc() const {
    ConfigDoc doc;
    ConfigSection& run = doc.section("run");
    run.set("method", lact::to_string(method));
    run.set_int("seed", static_cast<long long>(seed));
    run.set_int("jobs", jobs);
    run.set("fbp_filter", fbp_filter.kind == FilterKind::ramp ? "ramp" : "ramp_hann");
    run.set_double("fbp_cutoff_fraction", fbp_filter.cutoff_fraction);
    run.set_int("admm_outer_iters", admm_outer_iters);
    run.set("aux_method", aux_method);

    ConfigSection& io = doc.section("io");
    io.set("sinogram", sinogram_path);
    io.set("mask", mask_path);
    io.set("out_dir", out_dir);
    if (!reference_path.empty()) io.set("reference", reference_path);

    geometry_to_section(geometry, doc.section("geometry"));
    mask_to_section(mask, doc.section("mask"));
    consistency_to_section(stage1, doc.section("consistency.stage1"));
    consistency_to_section(stage2, doc.section("consistency.stage2"));

    ConfigSection& sch = doc.section("schedule");
    sch.set("kind", lact::to_string(schedule_kind));
    sch.set_int("num_steps", num_steps);
    sch.set_double("sigma_min", sigma_min);
    sch.set_double("sigma_max", sigma_max);
    sch.set_bool("stochastic", stochastic);
    sch.set_bool("warm_start", warm_start);

    ConfigSection& pr = doc.section("prior");
    pr.set("kind", prior_kind_to_string(prior_kind));
    pr.set_double("tv_strength", prior_cfg.tv_strength);
    pr.set_int("channels", prior_cfg.channels);
    pr.set_int("d_h", prior_cfg.d_h);
    pr.set_int("prior_seed", static_cast<long long>(prior_cfg.seed));
    pr.set_int("embed_dim", embed_dim);
    pr.set_int("embed_tokens", embed_tokens);
    pr.set_int("embed_seed", static_cast<long long>(embed_seed));

    ConfigSection& md = doc.section("metadata");
    md.set("path", metadata_path);
    md.set_int("record_index", metadata_index);
    md.set("ablate", category_csv(ablate));

    doc.section("metrics").set_int("nmi_bins", nmi_bins);
    return doc;
}

RunConfig RunConfig::from_doc(const ConfigDoc& doc) {
    // geometry and mask are mandatory; everything else falls back to the
    // defaults echoed by to_doc. Unknown sections are as suspect as unknown
    // keys and are rejected the same way.
    static const std::vector<std::string> kSections = {
        "run",      "io",    "geometry", "mask",   "consistency.stage1",
        "consistency.stage2", "schedule", "prior", "metadata", "metrics"};
    for (const auto& s : doc.sections) {
        bool known = false;
        for (const auto& k : kSections) known = known || s.name == k;
        if (!known) throw config_error("unknown section [" + s.name + "]");
    }

    RunConfig rc;
    if (const ConfigSection* run = doc.find_section("run")) {
        run->reject_unknown_keys({"method", "seed", "jobs", "fbp_filter", "fbp_cutoff_fraction",
                                  "admm_outer_iters", "aux_method"});
        rc.method = recon_method_from_string(run->get_or("method", "fbp"));
        rc.seed = static_cast<uint64_t>(run->get_int_or("seed", 0));
        rc.jobs = run->get_int_or("jobs", 1);
        std::string fk = run->get_or("fbp_filter", "ramp_hann");
        if (fk == "ramp") rc.fbp_filter.kind = FilterKind::ramp;
        else if (fk == "ramp_hann") rc.fbp_filter.kind = FilterKind::ramp_hann;
        else throw config_error("unknown fbp_filter '" + fk + "'");
        rc.fbp_filter.cutoff_fraction = run->get_double_or("fbp_cutoff_fraction", 1.0);
        rc.admm_outer_iters = run->get_int_or("admm_outer_iters", 15);
        rc.aux_method = run->get_or("aux_method", "default");
    }

    if (const ConfigSection* io = doc.find_section("io")) {
        io->reject_unknown_keys({"sinogram", "mask", "out_dir", "reference"});
        rc.sinogram_path = io->get_or("sinogram", "");
        rc.mask_path = io->get_or("mask", "");
        rc.out_dir = io->get_or("out_dir", ".");
        rc.reference_path = io->get_or("reference", "");
    }

    rc.geometry = geometry_from_section(doc.require_section("geometry"));
    rc.mask = mask_from_section(doc.require_section("mask"));
    if (const ConfigSection* s1 = doc.find_section("consistency.stage1"))
        rc.stage1 = consistency_from_section(*s1);
    if (const ConfigSection* s2 = doc.find_section("consistency.stage2"))
        rc.stage2 = consistency_from_section(*s2);

    if (const ConfigSection* sch = doc.find_section("schedule")) {
        sch->reject_unknown_keys(
            {"kind", "num_steps", "sigma_min", "sigma_max", "stochastic", "warm_start"});
        rc.schedule_kind = schedule_kind_from_string(sch->get_or("kind", "karras_like"));
        rc.num_steps = sch->get_int_or("num_steps", 40);
        rc.sigma_min = sch->get_double_or("sigma_min", 0.01);
        rc.sigma_max = sch->get_double_or("sigma_max", 20.0);
        rc.stochastic = sch->get_bool_or("stochastic", true);
        rc.warm_start = sch->get_bool_or("warm_start", true);
    }

    if (const ConfigSection* pr = doc.find_section("prior")) {
        pr->reject_unknown_keys({"kind", "tv_strength", "channels", "d_h", "prior_seed",
                                 "embed_dim", "embed_tokens", "embed_seed"});
        rc.prior_kind = prior_kind_from_string(pr->get_or("kind", "tiny_block_net"));
        rc.prior_cfg.tv_strength = pr->get_double_or("tv_strength", 0.1);
        rc.prior_cfg.channels = pr->get_int_or("channels", 4);
        rc.prior_cfg.d_h = pr->get_int_or("d_h", 4);
        rc.prior_cfg.seed = static_cast<uint64_t>(pr->get_int_or("prior_seed", 17));
        rc.embed_dim = pr->get_int_or("embed_dim", 0);
        rc.embed_tokens = pr->get_int_or("embed_tokens", 6);
        rc.embed_seed = static_cast<uint64_t>(pr->get_int_or("embed_seed", 11));
    }

    if (const ConfigSection* md = doc.find_section("metadata")) {
        md->reject_unknown_keys({"path", "record_index", "ablate"});
        rc.metadata_path = md->get_or("path", "");
        rc.metadata_index = md->get_int_or("record_index", 0);
        rc.ablate = parse_category_list(md->get_or("ablate", ""));
    }

    if (const ConfigSection* me = doc.find_section("metrics")) {
        me->reject_unknown_keys({"nmi_bins"});
        rc.nmi_bins = me->get_int_or("nmi_bins", 256);
    }
    return rc;
}

Grid resolve_tokens(const RunConfig& rc) {
    if (rc.metadata_path.empty()) return Grid();
    std::vector<MetadataRecord> records = load_records(rc.metadata_path);
    if (rc.metadata_index < 0 || rc.metadata_index >= static_cast<int>(records.size()))
        throw config_error("metadata record_index out of range");
    MetadataRecord r = records[rc.metadata_index];
    r.enabled_categories &= ~rc.ablate;
    int dim = rc.embed_dim > 0 ? rc.embed_dim : rc.prior_cfg.channels;
    return embed_metadata(r, dim, rc.embed_tokens, rc.embed_seed, true);
}

DiffusionResult run_diffusion(const RunConfig& rc, const Sinogram& measured,
                              const Grid& metadata_tokens, const Image* reference) {
    const ScanGeometry& geom = rc.geometry;
    const AngularMask& mask = rc.mask;

    AuxMethod aux = rc.aux_method == "conjugate_symmetry" ? AuxMethod::conjugate_symmetry
                    : rc.aux_method == "angular_interpolation"
                        ? AuxMethod::angular_interpolation
                        : default_aux_method(geom);
    Sinogram y_aux = synthesize_aux_sinogram(measured, mask, geom, aux);

    ScanGeometry geom_lo = downscale_geometry(geom, 4);
    Sinogram measured_lo = downsample_sinogram_bins(measured, 4);
    Sinogram y_aux_lo = downsample_sinogram_bins(y_aux, 4);

    std::shared_ptr<PriorModel> prior = make_toy_prior(rc.prior_kind, rc.prior_cfg);
    NoiseSchedule schedule =
        make_schedule(rc.schedule_kind, rc.num_steps, rc.sigma_min, rc.sigma_max);

    Image ref_lo;
    SamplerOptions opt1;
    opt1.seed = splitmix64(rc.seed ^ 0x5741a6e1ULL);
    opt1.stochastic = rc.stochastic;
    opt1.warm_start = rc.warm_start;
    if (reference) {
        ref_lo = downsample_average(*reference, 4);
        // per-step SSIM needs at least an 11x11 window
        if (ref_lo.height() >= 11 && ref_lo.width() >= 11) opt1.reference = &ref_lo;
    }

    DiffusionResult res;
    res.stage1 = sample_stage1(*prior, metadata_tokens, measured_lo, &y_aux_lo, mask, geom_lo,
                               schedule, rc.stage1, opt1);

    // final ADMM correction of the coarse image before it conditions Stage II
    AdmmState state;
    Image coarse = consistency_step(res.stage1.image, measured_lo, &y_aux_lo, mask, geom_lo,
                                    rc.stage1, rc.num_steps, state);

    SamplerOptions opt2 = opt1;
    opt2.seed = splitmix64(rc.seed ^ 0x57a6e2ULL);
    opt2.reference = reference;
    res.stage2 = sample_stage2(*prior, coarse, metadata_tokens, measured, mask, geom, schedule,
                               rc.stage2, opt2);
    res.image = res.stage2.image;
    return res;
}

} // namespace lact
