// lact: limited-angle CT reconstruction toolkit CLI.
// Exit codes: 0 ok, 2 configuration/usage error, 3 numeric failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lact/analytic.hpp"
#include "lact/config.hpp"
#include "lact/io.hpp"
#include "lact/metrics.hpp"
#include "lact/phantoms.hpp"
#include "lact/pipeline.hpp"
#include "lact/serialize.hpp"

namespace fs = std::filesystem;
using namespace lact;

namespace {

std::vector<double> parse_range_list(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

void write_image_outputs(const std::string& dir, const std::string& stem, const Image& img,
                         double win_lo, double win_hi) {
    write_image(dir + "/" + stem + ".grid", img);
    write_pgm16(dir + "/" + stem + ".pgm", img, win_lo, win_hi);
}

// ---- phantom ----

int cmd_phantom(const std::string& kind, int size, uint64_t seed, double lo, double hi,
                int num_ellipses, const std::string& out) {
    PhantomSpec spec;
    spec.kind = phantom_kind_from_string(kind);
    spec.height = spec.width = size;
    spec.seed = seed;
    spec.intensity_lo = lo;
    spec.intensity_hi = hi;
    spec.num_ellipses = num_ellipses;
    Image img = generate_phantom(spec);
    write_image(out, img);
    std::cout << "wrote " << out << " (" << size << "x" << size << ")\n";
    return 0;
}

// ---- dataset ----

int cmd_dataset(const std::string& out_dir, const std::string& preset,
                const std::string& geometry_path, int num_phantoms, const std::string& kind,
                int size, const std::string& ranges_csv, double noise_sigma, uint64_t seed) {
    ScanGeometry geom;
    if (!geometry_path.empty()) {
        geom = load_geometry(geometry_path);
    } else if (!preset.empty()) {
        geom = make_geometry_preset(preset);
    } else {
        // fan default so the full 60..360 degree range list applies; bins
        // divisible by 4 keep the quarter-resolution stage available
        int bins = ((static_cast<int>(size * 1.5) + 3) / 4) * 4;
        double r = 0.5 * std::hypot(static_cast<double>(size), static_cast<double>(size));
        geom = make_fan_geometry(360, bins, size, size, 1.0, 2.5 * r, 5.0 * r);
    }
    if (geom.image_height != size || geom.image_width != size) {
        // scale a preset-shaped geometry onto the requested grid
        geom.image_height = geom.image_width = size;
        if (geom.beam_type == BeamType::fan)
            geom = make_fan_geometry(geom.num_views, geom.num_bins, size, size, geom.pixel_size,
                                     geom.source_to_center_mm, geom.source_to_detector_mm);
        else
            geom = make_parallel_geometry(geom.num_views, geom.num_bins, size, size,
                                          geom.pixel_size, geom.rotation_span_deg());
    }
    std::vector<PhantomSpec> specs;
    for (int i = 0; i < num_phantoms; ++i) {
        PhantomSpec s;
        s.kind = phantom_kind_from_string(kind);
        s.height = s.width = size;
        s.seed = seed + static_cast<uint64_t>(i);
        specs.push_back(s);
    }
    NoiseSpec noise;
    noise.sigma = noise_sigma;
    noise.seed = seed;
    DatasetManifest m = build_dataset(specs, geom, parse_range_list(ranges_csv), noise, out_dir);
    std::cout << "wrote " << m.entries.size() << " entries to " << out_dir << "\n";
    return 0;
}

// ---- project / mask / aux-sino ----

int cmd_project(const std::string& image_path, const std::string& geometry_path,
                const std::string& out) {
    ScanGeometry geom = load_geometry(geometry_path);
    Image img = read_image(image_path);
    write_sinogram(out, forward_project(img, geom));
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_mask(const std::string& geometry_path, double range, double start,
             const std::string& out_mask, const std::string& apply_path,
             const std::string& out_sino) {
    ScanGeometry geom = load_geometry(geometry_path);
    AngularMask mask = make_mask(geom, range, start);
    if (!out_mask.empty()) save_mask(out_mask, mask);
    if (!apply_path.empty()) {
        if (out_sino.empty()) throw config_error("--apply requires --out-sinogram");
        Sinogram s = read_sinogram(apply_path);
        mask_rows(s, mask);
        write_sinogram(out_sino, s);
    }
    std::cout << "mask keeps " << mask.kept_count() << "/" << mask.keep.size() << " views\n";
    return 0;
}

int cmd_aux_sino(const std::string& sino_path, const std::string& mask_path,
                 const std::string& geometry_path, const std::string& method,
                 const std::string& out) {
    ScanGeometry geom = load_geometry(geometry_path);
    AngularMask mask = load_mask(mask_path);
    Sinogram measured = read_sinogram(sino_path);
    AuxMethod m = method == "conjugate_symmetry" ? AuxMethod::conjugate_symmetry
                  : method == "angular_interpolation" ? AuxMethod::angular_interpolation
                                                      : default_aux_method(geom);
    write_sinogram(out, synthesize_aux_sinogram(measured, mask, geom, m));
    std::cout << "wrote " << out << "\n";
    return 0;
}

// ---- recon ----

int cmd_recon(RunConfig rc, double win_lo, double win_hi) {
    if (rc.sinogram_path.empty()) throw config_error("recon requires a sinogram");
    Sinogram measured = read_sinogram(rc.sinogram_path);
    fs::create_directories(rc.out_dir);

    // manifest first: a run is reproducible from its manifest alone
    atomic_write_text(rc.out_dir + "/manifest.cfg", rc.to_doc().serialize());

    Image out;
    if (rc.method == ReconMethod::fbp) {
        out = fbp_reconstruct(measured, rc.geometry, rc.fbp_filter, &rc.mask);
    } else if (rc.method == ReconMethod::admm_tv) {
        out = admm_tv_reconstruct(measured, rc.mask, rc.geometry, rc.stage1,
                                  rc.admm_outer_iters);
    } else {
        Grid tokens = resolve_tokens(rc);
        Image reference;
        bool has_ref = !rc.reference_path.empty();
        if (has_ref) reference = read_image(rc.reference_path);
        DiffusionResult res =
            run_diffusion(rc, measured, tokens, has_ref ? &reference : nullptr);
        out = res.image;
        atomic_write_text(rc.out_dir + "/stage1_trace.tsv", format_trace(res.stage1));
        atomic_write_text(rc.out_dir + "/stage2_trace.tsv", format_trace(res.stage2));
        write_image_outputs(rc.out_dir, "stage1", res.stage1.image, win_lo, win_hi);
        auto has_metrics = [](const StageOutput& s) {
            return !s.trace.empty() && s.trace.front().has_metrics;
        };
        if (has_metrics(res.stage1))
            atomic_write_text(rc.out_dir + "/stage1_metrics.tsv",
                              format_metric_curve(res.stage1));
        if (has_metrics(res.stage2))
            atomic_write_text(rc.out_dir + "/stage2_metrics.tsv",
                              format_metric_curve(res.stage2));
    }
    write_image_outputs(rc.out_dir, "recon", out, win_lo, win_hi);
    std::cout << "wrote " << rc.out_dir << "/recon.grid\n";
    return 0;
}

// ---- metrics ----

struct SlicePair {
    std::string id;
    std::string recon, ref;
};

int cmd_metrics(const std::string& recon_path, const std::string& ref_path,
                const std::string& recon_dir, const std::string& ref_dir, int nmi_bins,
                int jobs, const std::string& out_path) {
    std::vector<SlicePair> pairs;
    if (!recon_path.empty() && !ref_path.empty()) {
        pairs.push_back({fs::path(recon_path).stem().string(), recon_path, ref_path});
    } else if (!recon_dir.empty() && !ref_dir.empty()) {
        std::vector<std::string> missing;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(recon_dir))
            if (e.path().extension() == ".grid") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            fs::path ref = fs::path(ref_dir) / f.filename();
            if (!fs::exists(ref)) {
                missing.push_back(f.filename().string());
                continue;
            }
            pairs.push_back({f.stem().string(), f.string(), ref.string()});
        }
        if (!missing.empty()) {
            std::ostringstream msg;
            msg << "unmatched slice ids:";
            for (const auto& m : missing) msg << " " << m;
            throw config_error(msg.str());
        }
    } else {
        throw config_error("metrics requires --recon/--ref or --recon-dir/--ref-dir");
    }
    if (pairs.empty()) throw config_error("metrics: no slice pairs found");

    // evaluate slices concurrently up to the --jobs bound; results land in
    // slots indexed by slice so the table order is deterministic
    std::vector<MetricReport> reports(pairs.size());
    int workers = std::max(1, std::min<int>(jobs, static_cast<int>(pairs.size())));
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= pairs.size()) return;
            Image rec = read_image(pairs[i].recon);
            Image ref = read_image(pairs[i].ref);
            reports[i] = evaluate_pair(rec, ref, nmi_bins);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::ostringstream table;
    table << "slice_id\tSSIM\tRMSE\tPSNR\tnMI\tPCC\n";
    for (size_t i = 0; i < pairs.size(); ++i) {
        const MetricReport& r = reports[i];
        table << pairs[i].id << "\t" << format_double(r.ssim) << "\t" << format_double(r.nrmse)
              << "\t" << format_double(r.psnr_db) << "\t" << format_double(r.nmi) << "\t"
              << format_double(r.pcc) << "\n";
    }
    MetricReport mean = average_reports(reports);
    table << "mean\t" << format_double(mean.ssim) << "\t" << format_double(mean.nrmse) << "\t"
          << format_double(mean.psnr_db) << "\t" << format_double(mean.nmi) << "\t"
          << format_double(mean.pcc) << "\n";
    std::cout << table.str();
    if (!out_path.empty()) atomic_write_text(out_path, table.str());
    return 0;
}

// ---- trace ----

struct Curve {
    std::vector<int> steps;
    std::vector<double> psnr, ssim;
};

Curve read_curve(const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    Curve c;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        int step;
        double p, s;
        if (!(ls >> step >> p >> s)) throw config_error("malformed curve line in " + path);
        c.steps.push_back(step);
        c.psnr.push_back(p);
        c.ssim.push_back(s);
    }
    return c;
}

int cmd_trace(const std::string& with_path, const std::string& without_path,
              const std::string& out_path) {
    Curve a = read_curve(with_path);
    Curve b = read_curve(without_path);
    if (a.steps.size() != b.steps.size())
        throw config_error("trace: step counts differ (" + std::to_string(a.steps.size()) +
                           " vs " + std::to_string(b.steps.size()) + ")");
    std::ostringstream table;
    table << "step\tpsnr_with\tssim_with\tpsnr_without\tssim_without\tdpsnr\tdssim\n";
    int diverge_step = -1;
    double max_dpsnr = 0.0, max_dssim = 0.0;
    for (size_t i = 0; i < a.steps.size(); ++i) {
        double dp = a.psnr[i] - b.psnr[i];
        double ds = a.ssim[i] - b.ssim[i];
        if (diverge_step < 0 && (dp != 0.0 || ds != 0.0)) diverge_step = a.steps[i];
        max_dpsnr = std::max(max_dpsnr, std::fabs(dp));
        max_dssim = std::max(max_dssim, std::fabs(ds));
        table << a.steps[i] << "\t" << format_double(a.psnr[i]) << "\t"
              << format_double(a.ssim[i]) << "\t" << format_double(b.psnr[i]) << "\t"
              << format_double(b.ssim[i]) << "\t" << format_double(dp) << "\t"
              << format_double(ds) << "\n";
    }
    table << "# first_diverging_step = " << diverge_step << "\n";
    table << "# max_abs_dpsnr = " << format_double(max_dpsnr) << "\n";
    table << "# max_abs_dssim = " << format_double(max_dssim) << "\n";
    std::cout << table.str();
    if (!out_path.empty()) atomic_write_text(out_path, table.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"limited-angle CT reconstruction toolkit"};
    app.require_subcommand(1);

    // phantom
    auto* ph = app.add_subcommand("phantom", "generate a synthetic phantom");
    std::string ph_kind = "shepp_logan_like", ph_out = "phantom.grid";
    int ph_size = 128, ph_ellipses = 8;
    uint64_t ph_seed = 0;
    double ph_lo = 0.0, ph_hi = 1.0;
    ph->add_option("--kind", ph_kind, "ellipse_set | shepp_logan_like | random_blobs");
    ph->add_option("--size", ph_size);
    ph->add_option("--seed", ph_seed);
    ph->add_option("--lo", ph_lo);
    ph->add_option("--hi", ph_hi);
    ph->add_option("--num-ellipses", ph_ellipses);
    ph->add_option("--out", ph_out);

    // dataset
    auto* ds = app.add_subcommand("dataset", "simulate a truncated-sinogram dataset");
    std::string ds_out = "dataset", ds_preset, ds_geom, ds_kind = "shepp_logan_like";
    std::string ds_ranges = "60,90,120,150,180,360";
    int ds_num = 2, ds_size = 128;
    double ds_noise = 0.0;
    uint64_t ds_seed = 0;
    ds->add_option("--out-dir", ds_out);
    ds->add_option("--geometry-preset", ds_preset, "ctrate_fan | clinical_fan | parallel");
    ds->add_option("--geometry", ds_geom, "geometry config file");
    ds->add_option("--num-phantoms", ds_num);
    ds->add_option("--kind", ds_kind);
    ds->add_option("--size", ds_size);
    ds->add_option("--ranges", ds_ranges, "comma-separated degrees");
    ds->add_option("--noise-sigma", ds_noise);
    ds->add_option("--seed", ds_seed);

    // project
    auto* pj = app.add_subcommand("project", "forward-project an image");
    std::string pj_img, pj_geom, pj_out = "sino.grid";
    pj->add_option("--image", pj_img)->required();
    pj->add_option("--geometry", pj_geom)->required();
    pj->add_option("--out", pj_out);

    // mask
    auto* mk = app.add_subcommand("mask", "build an angular mask / apply it");
    std::string mk_geom, mk_out = "mask.cfg", mk_apply, mk_out_sino;
    double mk_range = 90.0, mk_start = 0.0;
    mk->add_option("--geometry", mk_geom)->required();
    mk->add_option("--range", mk_range);
    mk->add_option("--start", mk_start);
    mk->add_option("--out", mk_out);
    mk->add_option("--apply", mk_apply, "sinogram to mask");
    mk->add_option("--out-sinogram", mk_out_sino);

    // aux-sino
    auto* ax = app.add_subcommand("aux-sino", "synthesize the unmeasured-arc sinogram");
    std::string ax_sino, ax_mask, ax_geom, ax_method = "default", ax_out = "aux.grid";
    ax->add_option("--sinogram", ax_sino)->required();
    ax->add_option("--mask", ax_mask)->required();
    ax->add_option("--geometry", ax_geom)->required();
    ax->add_option("--method", ax_method, "conjugate_symmetry | angular_interpolation");
    ax->add_option("--out", ax_out);

    // recon
    auto* rc_cmd = app.add_subcommand("recon", "reconstruct from a masked sinogram");
    std::string rc_config, rc_method, rc_sino, rc_mask, rc_geom, rc_outdir, rc_meta, rc_ref,
        rc_ablate;
    int rc_steps = -1, rc_record = -1;
    long long rc_seed = -1;
    double rc_win_lo = -1000.0, rc_win_hi = 1000.0;
    rc_cmd->add_option("--config", rc_config, "run config / manifest to start from");
    rc_cmd->add_option("--method", rc_method, "fbp | admm-tv | diffusion");
    rc_cmd->add_option("--sinogram", rc_sino);
    rc_cmd->add_option("--mask", rc_mask);
    rc_cmd->add_option("--geometry", rc_geom);
    rc_cmd->add_option("--out", rc_outdir);
    rc_cmd->add_option("--metadata", rc_meta);
    rc_cmd->add_option("--record-index", rc_record);
    rc_cmd->add_option("--ablate", rc_ablate, "subtract categories: phy,demo,diag");
    std::string rc_prior;
    rc_cmd->add_option("--prior", rc_prior, "zero | tv_denoiser | tiny_block_net");
    rc_cmd->add_option("--reference", rc_ref, "per-step metric curves against this image");
    rc_cmd->add_option("--steps", rc_steps);
    rc_cmd->add_option("--seed", rc_seed);
    int rc_jobs = 0;
    rc_cmd->add_option("--jobs", rc_jobs, "echoed in the manifest; slices run per-process");
    rc_cmd->add_option("--window-lo", rc_win_lo);
    rc_cmd->add_option("--window-hi", rc_win_hi);

    // metrics
    auto* mt = app.add_subcommand("metrics", "evaluate reconstructions against references");
    std::string mt_recon, mt_ref, mt_recon_dir, mt_ref_dir, mt_out;
    int mt_bins = 256;
    mt->add_option("--recon", mt_recon);
    mt->add_option("--ref", mt_ref);
    mt->add_option("--recon-dir", mt_recon_dir);
    mt->add_option("--ref-dir", mt_ref_dir);
    int mt_jobs = 1;
    mt->add_option("--nmi-bins", mt_bins);
    mt->add_option("--jobs", mt_jobs, "parallel slice evaluations");
    mt->add_option("--out", mt_out);

    // trace
    auto* tr = app.add_subcommand("trace", "compare with/without-metadata convergence curves");
    std::string tr_with, tr_without, tr_out;
    tr->add_option("--with", tr_with)->required();
    tr->add_option("--without", tr_without)->required();
    tr->add_option("--out", tr_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ph->parsed())
            return cmd_phantom(ph_kind, ph_size, ph_seed, ph_lo, ph_hi, ph_ellipses, ph_out);
        if (ds->parsed())
            return cmd_dataset(ds_out, ds_preset, ds_geom, ds_num, ds_kind, ds_size, ds_ranges,
                               ds_noise, ds_seed);
        if (pj->parsed()) return cmd_project(pj_img, pj_geom, pj_out);
        if (mk->parsed())
            return cmd_mask(mk_geom, mk_range, mk_start, mk_out, mk_apply, mk_out_sino);
        if (ax->parsed()) return cmd_aux_sino(ax_sino, ax_mask, ax_geom, ax_method, ax_out);
        if (rc_cmd->parsed()) {
            RunConfig rc;
            if (!rc_config.empty()) {
                rc = RunConfig::from_doc(ConfigDoc::parse(read_text(rc_config)));
                if (!rc_geom.empty()) rc.geometry = load_geometry(rc_geom);
                if (!rc_mask.empty()) rc.mask = load_mask(rc_mask);
            } else {
                if (rc_geom.empty() || rc_mask.empty())
                    throw config_error("recon needs --config or --geometry and --mask");
                rc.geometry = load_geometry(rc_geom);
                rc.mask = load_mask(rc_mask);
            }
            if (!rc_method.empty()) rc.method = recon_method_from_string(rc_method);
            if (!rc_sino.empty()) rc.sinogram_path = rc_sino;
            if (!rc_outdir.empty()) rc.out_dir = rc_outdir;
            if (!rc_meta.empty()) rc.metadata_path = rc_meta;
            if (rc_record >= 0) rc.metadata_index = rc_record;
            if (!rc_ablate.empty()) rc.ablate = parse_category_list(rc_ablate);
            if (!rc_prior.empty()) {
                if (rc_prior == "zero") rc.prior_kind = ToyPriorKind::zero;
                else if (rc_prior == "tv_denoiser") rc.prior_kind = ToyPriorKind::tv_denoiser;
                else if (rc_prior == "tiny_block_net") rc.prior_kind = ToyPriorKind::tiny_block_net;
                else throw config_error("unknown prior '" + rc_prior + "'");
            }
            if (!rc_ref.empty()) rc.reference_path = rc_ref;
            if (rc_steps > 0) rc.num_steps = rc_steps;
            if (rc_seed >= 0) rc.seed = static_cast<uint64_t>(rc_seed);
            if (rc_jobs > 0) rc.jobs = rc_jobs;
            return cmd_recon(rc, rc_win_lo, rc_win_hi);
        }
        if (mt->parsed())
            return cmd_metrics(mt_recon, mt_ref, mt_recon_dir, mt_ref_dir, mt_bins, mt_jobs, mt_out);
        if (tr->parsed()) return cmd_trace(tr_with, tr_without, tr_out);
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
