#include "lact/serialize.hpp"

#include <sstream>

#include "lact/io.hpp"

namespace lact {

namespace {

const std::vector<std::string> kGeometryKeys = {
    "beam_type",      "num_views",           "num_bins",
    "angles_mode",    "angles_start_deg",    "angles_span_deg",
    "view_angles",    "source_to_center_mm", "source_to_detector_mm",
    "detector_pitch", "image_height",        "image_width",
    "pixel_size",     "rotation_span_deg"};

const std::vector<std::string> kMaskKeys = {"angular_range_deg", "span_deg", "keep"};

bool is_uniform(const ScanGeometry& g, double& start, double& span) {
    start = g.view_angles.empty() ? 0.0 : g.view_angles.front();
    // try the span implied by the first step
    if (g.num_views < 2) {
        span = g.rotation_span_deg();
        return true;
    }
    span = (g.view_angles[1] - start) * g.num_views;
    for (int i = 0; i < g.num_views; ++i)
        if (g.view_angles[i] != start + span * i / g.num_views) return false;
    return true;
}

std::vector<double> regen_uniform(int n, double start, double span) {
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = start + span * i / n;
    return a;
}

} // namespace

void geometry_to_section(const ScanGeometry& g, ConfigSection& s) {
    s.set("beam_type", to_string(g.beam_type));
    s.set_int("num_views", g.num_views);
    s.set_int("num_bins", g.num_bins);
    double start = 0.0, span = 0.0;
    if (is_uniform(g, start, span)) {
        s.set("angles_mode", "uniform");
        s.set_double("angles_start_deg", start);
        s.set_double("angles_span_deg", span);
    } else {
        s.set("angles_mode", "explicit");
        std::ostringstream list;
        for (int i = 0; i < g.num_views; ++i) {
            if (i) list << ",";
            list << format_double(g.view_angles[i]);
        }
        s.set("view_angles", list.str());
    }
    if (g.beam_type == BeamType::fan) {
        s.set_double("source_to_center_mm", g.source_to_center_mm);
        s.set_double("source_to_detector_mm", g.source_to_detector_mm);
    }
    s.set_double("detector_pitch", g.detector_pitch);
    s.set_int("image_height", g.image_height);
    s.set_int("image_width", g.image_width);
    s.set_double("pixel_size", g.pixel_size);
    s.set_double("rotation_span_deg", g.rotation_span_deg());
}

ScanGeometry geometry_from_section(const ConfigSection& s) {
    s.reject_unknown_keys(kGeometryKeys);
    ScanGeometry g;
    g.beam_type = beam_type_from_string(s.require("beam_type"));
    g.num_views = s.get_int("num_views");
    g.num_bins = s.get_int("num_bins");
    std::string mode = s.get_or("angles_mode", "uniform");
    if (mode == "uniform") {
        g.view_angles = regen_uniform(g.num_views, s.get_double_or("angles_start_deg", 0.0),
                                      s.get_double_or("angles_span_deg",
                                                      g.beam_type == BeamType::parallel ? 180.0
                                                                                        : 360.0));
    } else if (mode == "explicit") {
        std::istringstream list(s.require("view_angles"));
        std::string tok;
        while (std::getline(list, tok, ',')) g.view_angles.push_back(std::stod(tok));
    } else {
        throw config_error("unknown angles_mode '" + mode + "'");
    }
    if (g.beam_type == BeamType::fan) {
        g.source_to_center_mm = s.get_double("source_to_center_mm");
        g.source_to_detector_mm = s.get_double("source_to_detector_mm");
    }
    g.detector_pitch = s.get_double("detector_pitch");
    g.image_height = s.get_int("image_height");
    g.image_width = s.get_int("image_width");
    g.pixel_size = s.get_double("pixel_size");
    g.span_deg = s.get_double_or("rotation_span_deg",
                                 g.beam_type == BeamType::parallel ? 180.0 : 360.0);
    g.validate();
    return g;
}

void mask_to_section(const AngularMask& m, ConfigSection& s) {
    s.set_double("angular_range_deg", m.angular_range_deg);
    s.set_double("span_deg", m.span_deg);
    std::string bits(m.keep.size(), '0');
    for (size_t i = 0; i < m.keep.size(); ++i)
        if (m.keep[i]) bits[i] = '1';
    s.set("keep", bits);
}

AngularMask mask_from_section(const ConfigSection& s) {
    s.reject_unknown_keys(kMaskKeys);
    AngularMask m;
    m.angular_range_deg = s.get_double("angular_range_deg");
    m.span_deg = s.get_double("span_deg");
    const std::string& bits = s.require("keep");
    m.keep.resize(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1')
            throw config_error("mask keep string must contain only 0 and 1");
        m.keep[i] = bits[i] == '1' ? 1 : 0;
    }
    return m;
}

void save_geometry(const std::string& path, const ScanGeometry& g) {
    ConfigDoc doc;
    geometry_to_section(g, doc.section("geometry"));
    atomic_write_text(path, doc.serialize());
}

ScanGeometry load_geometry(const std::string& path) {
    ConfigDoc doc = ConfigDoc::parse(read_text(path));
    return geometry_from_section(doc.require_section("geometry"));
}

void save_mask(const std::string& path, const AngularMask& m) {
    ConfigDoc doc;
    mask_to_section(m, doc.section("mask"));
    atomic_write_text(path, doc.serialize());
}

AngularMask load_mask(const std::string& path) {
    ConfigDoc doc = ConfigDoc::parse(read_text(path));
    return mask_from_section(doc.require_section("mask"));
}

} // namespace lact
