#include <doctest.h>

#include "lact/geometry.hpp"
#include "lact/serialize.hpp"

using namespace lact;

TEST_CASE("geometry presets carry the documented view/bin counts") {
    ScanGeometry ct = make_geometry_preset("ctrate_fan");
    CHECK(ct.num_views == 1000);
    CHECK(ct.num_bins == 900);
    CHECK(ct.beam_type == BeamType::fan);

    ScanGeometry cl = make_geometry_preset("clinical_fan");
    CHECK(cl.num_views == 984);
    CHECK(cl.num_bins == 835);
    CHECK(cl.source_to_center_mm == doctest::Approx(625.6));
    CHECK(cl.source_to_detector_mm == doctest::Approx(1097.0));

    ScanGeometry par = make_geometry_preset("parallel");
    CHECK(par.num_views == 180);
    CHECK(par.rotation_span_deg() == doctest::Approx(180.0));

    CHECK_THROWS_AS(make_geometry_preset("helical"), config_error);
}

TEST_CASE("parallel builder echoes caller sizes") {
    ScanGeometry g = make_parallel_geometry(4, 3, 8, 8, 1.0, 180.0);
    CHECK(g.view_angles.size() == 4);
    CHECK(g.num_bins == 3);
}

TEST_CASE("geometry invariants are enforced") {
    CHECK_THROWS_AS(make_fan_geometry(8, 16, 16, 16, 1.0, 100.0, 50.0), config_error);
    CHECK_THROWS_AS(make_fan_geometry(8, 16, 16, 16, 1.0, 5.0, 50.0), config_error);
    ScanGeometry g = make_parallel_geometry(8, 16, 8, 8);
    g.view_angles[3] = g.view_angles[2]; // not strictly increasing
    CHECK_THROWS_AS(g.validate(), config_error);
}

TEST_CASE("mask kept counts match the angle-counting oracle") {
    ScanGeometry ct = make_geometry_preset("ctrate_fan");

    AngularMask full = make_mask(ct, 360.0, 0.0);
    CHECK(full.kept_count() == 1000);

    AngularMask m90 = make_mask(ct, 90.0, 0.0);
    int count90 = 0;
    for (double a : ct.view_angles)
        if (a >= 0.0 && a < 90.0) ++count90;
    CHECK(m90.kept_count() == count90);
    CHECK(m90.kept_count() == 250);

    AngularMask m60 = make_mask(ct, 60.0, 0.0);
    int count60 = 0;
    for (double a : ct.view_angles)
        if (a < 60.0) ++count60;
    CHECK(m60.kept_count() == count60);
    CHECK(std::abs(m60.kept_count() - 167) <= 1);

    CHECK_THROWS_AS(make_mask(ct, 0.0, 0.0), config_error);
    CHECK_THROWS_AS(make_mask(ct, 400.0, 0.0), config_error);
}

TEST_CASE("mask keeps a single contiguous arc, cyclically") {
    ScanGeometry ct = make_geometry_preset("ctrate_fan");
    AngularMask m = make_mask(ct, 90.0, 315.0); // wraps through 360
    CHECK(m.kept_count() == 250);
    // count transitions around the cycle: exactly one 0->1 and one 1->0
    int transitions = 0;
    for (size_t i = 0; i < m.keep.size(); ++i)
        if (m.keep[i] != m.keep[(i + 1) % m.keep.size()]) ++transitions;
    CHECK(transitions == 2);
}

TEST_CASE("mask complement partitions the views") {
    ScanGeometry ct = make_geometry_preset("ctrate_fan");
    AngularMask full = make_mask(ct, 360.0, 0.0);
    AngularMask none = mask_complement(full);
    CHECK(none.kept_count() == 0);

    AngularMask m90 = make_mask(ct, 90.0, 0.0);
    AngularMask c = mask_complement(m90);
    CHECK(c.kept_count() == 750);
    for (size_t i = 0; i < m90.keep.size(); ++i)
        CHECK(static_cast<int>(m90.keep[i]) + static_cast<int>(c.keep[i]) == 1);

    AngularMask cc = mask_complement(c);
    CHECK(cc.keep == m90.keep);
    CHECK(cc.angular_range_deg == doctest::Approx(m90.angular_range_deg));
}

TEST_CASE("masks over several seeds partition exactly") {
    ScanGeometry g = make_parallel_geometry(97, 31, 16, 16);
    for (int s = 0; s < 20; ++s) {
        double range = 10.0 + 160.0 * (s / 20.0);
        double start = 37.0 * s;
        AngularMask m = make_mask(g, range, start);
        AngularMask c = mask_complement(m);
        for (size_t i = 0; i < m.keep.size(); ++i) {
            CHECK((m.keep[i] == 0 || m.keep[i] == 1));
            CHECK(static_cast<int>(m.keep[i]) + static_cast<int>(c.keep[i]) == 1);
        }
    }
}

TEST_CASE("geometry serialization round-trips bit-exactly") {
    for (const char* name : {"ctrate_fan", "clinical_fan", "parallel"}) {
        ScanGeometry g = make_geometry_preset(name);
        ConfigDoc doc;
        geometry_to_section(g, doc.section("geometry"));
        ScanGeometry back = geometry_from_section(
            ConfigDoc::parse(doc.serialize()).require_section("geometry"));
        CHECK(back.beam_type == g.beam_type);
        CHECK(back.num_views == g.num_views);
        CHECK(back.num_bins == g.num_bins);
        CHECK(back.view_angles == g.view_angles); // bit-exact
        CHECK(back.detector_pitch == g.detector_pitch);
        CHECK(back.pixel_size == g.pixel_size);
        CHECK(back.source_to_center_mm == g.source_to_center_mm);
        CHECK(back.image_height == g.image_height);
    }
}

TEST_CASE("downscale_geometry halves twice") {
    ScanGeometry g = make_geometry_preset("ctrate_fan");
    ScanGeometry lo = downscale_geometry(g, 4);
    CHECK(lo.num_views == g.num_views);
    CHECK(lo.num_bins == g.num_bins / 4);
    CHECK(lo.image_height == g.image_height / 4);
    CHECK(lo.pixel_size == doctest::Approx(4.0 * g.pixel_size));
    CHECK_THROWS_AS(downscale_geometry(make_geometry_preset("clinical_fan"), 4), config_error);
}
