#include "lact/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "lact/config.hpp"
#include "lact/io.hpp"
#include "lact/serialize.hpp"

namespace lact {

PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "ellipse_set") return PhantomKind::ellipse_set;
    if (s == "shepp_logan_like") return PhantomKind::shepp_logan_like;
    if (s == "random_blobs") return PhantomKind::random_blobs;
    throw config_error("unknown phantom kind '" + s + "'");
}

std::string to_string(PhantomKind k) {
    switch (k) {
        case PhantomKind::ellipse_set: return "ellipse_set";
        case PhantomKind::shepp_logan_like: return "shepp_logan_like";
        case PhantomKind::random_blobs: return "random_blobs";
    }
    return "?";
}

const std::array<Ellipse, 10>& shepp_logan_ellipses() {
    // intensity, a, b, x0, y0, phi (modified contrast set)
    static const std::array<Ellipse, 10> table = {{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
        {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
        {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
        {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    }};
    return table;
}

double ellipse_sum_at(const std::vector<Ellipse>& ellipses, double x, double y) {
    double v = 0.0;
    for (const auto& e : ellipses) {
        double phi = e.phi_deg * 3.14159265358979323846 / 180.0;
        double c = std::cos(phi), s = std::sin(phi);
        double dx = x - e.x0, dy = y - e.y0;
        double xr = dx * c + dy * s;
        double yr = -dx * s + dy * c;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
    }
    return v;
}

namespace {

// Pixel centres mapped to the normalized [-1, 1]^2 frame, y up.
inline double norm_x(int j, int w) { return (2.0 * (j + 0.5) / w) - 1.0; }
inline double norm_y(int i, int h) { return 1.0 - (2.0 * (i + 0.5) / h); }

Image rasterize_ellipses(const std::vector<Ellipse>& es, const PhantomSpec& spec,
                         bool clamp_unit) {
    Image img(spec.height, spec.width);
    double lo = spec.intensity_lo, hi = spec.intensity_hi;
    for (int i = 0; i < spec.height; ++i)
        for (int j = 0; j < spec.width; ++j) {
            double raw = ellipse_sum_at(es, norm_x(j, spec.width), norm_y(i, spec.height));
            if (clamp_unit) raw = std::clamp(raw, 0.0, 1.0);
            img(i, j) = lo + (hi - lo) * raw;
        }
    return img;
}

} // namespace

Image generate_phantom(const PhantomSpec& spec) {
    if (spec.intensity_hi <= spec.intensity_lo)
        throw config_error("generate_phantom: intensity range is empty");
    if (spec.height <= 0 || spec.width <= 0)
        throw config_error("generate_phantom: size must be positive");

    std::mt19937_64 rng(spec.seed);
    switch (spec.kind) {
        case PhantomKind::shepp_logan_like: {
            const auto& t = shepp_logan_ellipses();
            return rasterize_ellipses(std::vector<Ellipse>(t.begin(), t.end()), spec, false);
        }
        case PhantomKind::ellipse_set: {
            std::uniform_real_distribution<double> pos(-0.6, 0.6);
            std::uniform_real_distribution<double> axis(0.05, 0.4);
            std::uniform_real_distribution<double> angle(0.0, 180.0);
            std::uniform_real_distribution<double> inten(0.1, 0.4);
            std::vector<Ellipse> es;
            es.reserve(spec.num_ellipses);
            for (int k = 0; k < spec.num_ellipses; ++k)
                es.push_back({inten(rng), axis(rng), axis(rng), pos(rng), pos(rng), angle(rng)});
            return rasterize_ellipses(es, spec, true);
        }
        case PhantomKind::random_blobs: {
            std::uniform_real_distribution<double> pos(-0.7, 0.7);
            std::uniform_real_distribution<double> width(0.1, 0.35);
            std::uniform_real_distribution<double> amp(0.2, 0.6);
            const int blobs = 8;
            std::vector<std::array<double, 4>> bs;
            for (int k = 0; k < blobs; ++k) bs.push_back({pos(rng), pos(rng), width(rng), amp(rng)});
            Image img(spec.height, spec.width);
            double peak = 0.0;
            for (int i = 0; i < spec.height; ++i)
                for (int j = 0; j < spec.width; ++j) {
                    double x = norm_x(j, spec.width), y = norm_y(i, spec.height);
                    double v = 0.0;
                    for (const auto& b : bs) {
                        double dx = x - b[0], dy = y - b[1];
                        v += b[3] * std::exp(-0.5 * (dx * dx + dy * dy) / (b[2] * b[2]));
                    }
                    img(i, j) = v;
                    peak = std::max(peak, v);
                }
            double lo = spec.intensity_lo, hi = spec.intensity_hi;
            double inv = peak > 0.0 ? 1.0 / peak : 1.0;
            for (double& v : img.grid.values()) v = lo + (hi - lo) * (v * inv);
            return img;
        }
    }
    throw config_error("generate_phantom: unknown kind");
}

namespace {

std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

MetadataRecord synthesize_record(std::mt19937_64& rng, double range_deg, int slice_idx) {
    static const std::vector<std::string> kDiseases = {
        "lung opacity",      "lung nodule",  "lymphadenopathy",
        "consolidation",     "atelectasis",  "pleural effusion",
        "cardiomegaly",      "pulmonary fibrotic sequela"};
    static const std::vector<std::string> kImpressions = {
        "Trachea open, left lung partially collapsed, large pleural effusion",
        "Heart size mildly enlarged, no focal consolidation",
        "Scattered ground-glass opacities in both lower lobes",
        "Calcified granuloma in the right upper lobe, otherwise clear",
        "Small bilateral effusions with adjacent atelectasis"};
    std::uniform_int_distribution<int> age(25, 88);
    std::uniform_int_distribution<int> sexd(0, 1);
    std::uniform_int_distribution<int> nd(1, 3);
    std::uniform_int_distribution<size_t> di(0, kDiseases.size() - 1);
    std::uniform_int_distribution<size_t> imp(0, kImpressions.size() - 1);
    std::uniform_int_distribution<int> expo(300, 900);
    std::uniform_int_distribution<int> cur(100, 400);

    MetadataRecord r;
    r.scan_angle_deg = range_deg;
    r.exposure_time = std::to_string(expo(rng)) + " ms";
    r.tube_current = std::to_string(cur(rng)) + " mA";
    r.slice_idx = slice_idx;
    r.age = age(rng);
    r.sex = sexd(rng) ? "male" : "female";
    int n = nd(rng);
    for (int k = 0; k < n; ++k) {
        std::string d = kDiseases[di(rng)];
        bool dup = false;
        for (const auto& existing : r.diseases) dup = dup || existing == d;
        if (!dup) r.diseases.push_back(d);
    }
    r.impressions = kImpressions[imp(rng)];
    r.enable(MetaCategory::Phy);
    r.enable(MetaCategory::Demo);
    r.enable(MetaCategory::Diag);
    return r;
}

} // namespace

DatasetManifest build_dataset(const std::vector<PhantomSpec>& specs, const ScanGeometry& geometry,
                              const std::vector<double>& ranges_deg, const NoiseSpec& noise,
                              const std::string& out_dir) {
    if (specs.empty() || ranges_deg.empty())
        throw config_error("build_dataset: need at least one spec and one range");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw config_error("build_dataset: cannot create '" + out_dir + "': " + ec.message());

    DatasetManifest m;
    m.geometry = "geometry.cfg";
    m.metadata = "metadata.records";
    m.truncation_ranges_deg = ranges_deg;
    save_geometry(out_dir + "/geometry.cfg", geometry);

    std::vector<MetadataRecord> records;
    int entry_idx = 0;
    for (size_t p = 0; p < specs.size(); ++p) {
        Image img = generate_phantom(specs[p]);
        if (img.height() != geometry.image_height || img.width() != geometry.image_width)
            throw shape_error("build_dataset: phantom size does not match geometry");
        Sinogram full = forward_project(img, geometry);
        for (double range : ranges_deg) {
            std::string tag = zero_pad(entry_idx, 3);
            DatasetEntry e;
            e.phantom_index = static_cast<int>(p);
            e.range_deg = range;
            e.metadata_index = entry_idx;
            e.image = "image_" + tag + ".grid";
            e.full_sinogram = "sino_full_" + tag + ".grid";
            e.masked_sinogram = "sino_masked_" + tag + ".grid";
            e.mask = "mask_" + tag + ".cfg";

            AngularMask mask = make_mask(geometry, range, 0.0);
            NoiseSpec entry_noise = noise;
            entry_noise.seed = noise.seed + static_cast<uint64_t>(entry_idx) * 7919;
            Sinogram noisy = simulate_measurement(full, entry_noise);
            Sinogram masked = noisy;
            mask_rows(masked, mask);

            write_image(out_dir + "/" + e.image, img);
            write_sinogram(out_dir + "/" + e.full_sinogram, noisy);
            write_sinogram(out_dir + "/" + e.masked_sinogram, masked);
            save_mask(out_dir + "/" + e.mask, mask);

            std::mt19937_64 rec_rng(noise.seed ^ (0x9e3779b97f4a7c15ULL +
                                                  static_cast<uint64_t>(entry_idx)));
            records.push_back(synthesize_record(rec_rng, range, entry_idx));
            m.entries.push_back(e);
            ++entry_idx;
        }
    }
    save_records(out_dir + "/metadata.records", records);
    save_manifest(out_dir + "/manifest.cfg", m);
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    ConfigDoc doc;
    ConfigSection& d = doc.section("dataset");
    d.set("geometry", m.geometry);
    d.set("metadata", m.metadata);
    std::ostringstream rs;
    for (size_t i = 0; i < m.truncation_ranges_deg.size(); ++i) {
        if (i) rs << ",";
        rs << format_double(m.truncation_ranges_deg[i]);
    }
    d.set("ranges", rs.str());
    d.set_int("count", static_cast<long long>(m.entries.size()));
    for (size_t i = 0; i < m.entries.size(); ++i) {
        ConfigSection& s = doc.section("entry." + std::to_string(i));
        const DatasetEntry& e = m.entries[i];
        s.set("image", e.image);
        s.set("full_sinogram", e.full_sinogram);
        s.set("masked_sinogram", e.masked_sinogram);
        s.set("mask", e.mask);
        s.set_int("metadata_index", e.metadata_index);
        s.set_int("phantom_index", e.phantom_index);
        s.set_double("range_deg", e.range_deg);
    }
    atomic_write_text(path, doc.serialize());
}

DatasetManifest load_manifest(const std::string& path) {
    ConfigDoc doc = ConfigDoc::parse(read_text(path));
    const ConfigSection& d = doc.require_section("dataset");
    DatasetManifest m;
    m.geometry = d.require("geometry");
    m.metadata = d.require("metadata");
    std::istringstream rs(d.require("ranges"));
    std::string tok;
    while (std::getline(rs, tok, ',')) m.truncation_ranges_deg.push_back(std::stod(tok));
    int count = d.get_int("count");
    for (int i = 0; i < count; ++i) {
        const ConfigSection& s = doc.require_section("entry." + std::to_string(i));
        DatasetEntry e;
        e.image = s.require("image");
        e.full_sinogram = s.require("full_sinogram");
        e.masked_sinogram = s.require("masked_sinogram");
        e.mask = s.require("mask");
        e.metadata_index = s.get_int("metadata_index");
        e.phantom_index = s.get_int("phantom_index");
        e.range_deg = s.get_double("range_deg");
        m.entries.push_back(e);
    }
    return m;
}

} // namespace lact
