#include <doctest.h>

#include <filesystem>

#include "lact/config.hpp"
#include "lact/io.hpp"
#include "lact/pipeline.hpp"
#include "lact/random.hpp"
#include "lact/serialize.hpp"

using namespace lact;

TEST_CASE("grid files round-trip float32 payloads bit-exactly") {
    Grid g(7, 5);
    CounterRng rng(1);
    for (size_t i = 0; i < g.size(); ++i)
        g.values()[i] = static_cast<float>(rng.gaussian(0, i)); // f32-representable
    write_grid("/tmp/lact_test.grid", g);
    Grid back = read_grid("/tmp/lact_test.grid");
    CHECK(back == g);
}

TEST_CASE("grid reader rejects foreign files") {
    atomic_write_text("/tmp/lact_not_a_grid", "hello world, definitely not a grid");
    CHECK_THROWS_AS(read_grid("/tmp/lact_not_a_grid"), config_error);
    CHECK_THROWS_AS(read_grid("/tmp/lact_missing_file"), config_error);
}

TEST_CASE("pgm export writes a 16-bit header and clamps the window") {
    Image im(4, 6, 0.0);
    im(0, 0) = -2000.0; // below window
    im(0, 1) = 2000.0;  // above window
    write_pgm16("/tmp/lact_test.pgm", im, -1000.0, 1000.0);
    std::string bytes = read_text("/tmp/lact_test.pgm");
    CHECK(bytes.rfind("P5\n6 4\n65535\n", 0) == 0);
    size_t off = std::string("P5\n6 4\n65535\n").size();
    // first pixel clamps to 0, second to 65535 (big-endian pairs)
    CHECK(static_cast<unsigned char>(bytes[off + 0]) == 0);
    CHECK(static_cast<unsigned char>(bytes[off + 1]) == 0);
    CHECK(static_cast<unsigned char>(bytes[off + 2]) == 255);
    CHECK(static_cast<unsigned char>(bytes[off + 3]) == 255);
}

TEST_CASE("atomic text writes leave no temp files behind") {
    std::string path = "/tmp/lact_test_atomic.txt";
    atomic_write_text(path, "payload");
    CHECK(read_text(path) == "payload");
    int temps = 0;
    for (const auto& e : std::filesystem::directory_iterator("/tmp"))
        if (e.path().filename().string().rfind("lact_test_atomic.txt.tmp", 0) == 0) ++temps;
    CHECK(temps == 0);
}

TEST_CASE("config documents parse and round-trip") {
    std::string text =
        "# comment\n[alpha]\nkey_one = 1\nkey_two = hello world\n\n[beta.gamma]\nx = 2.5\n";
    ConfigDoc doc = ConfigDoc::parse(text);
    CHECK(doc.sections.size() == 2);
    CHECK(doc.require_section("alpha").get_int("key_one") == 1);
    CHECK(doc.require_section("alpha").require("key_two") == "hello world");
    CHECK(doc.require_section("beta.gamma").get_double("x") == 2.5);

    ConfigDoc again = ConfigDoc::parse(doc.serialize());
    CHECK(again == doc);
}

TEST_CASE("config parser reports line numbers and duplicates") {
    try {
        ConfigDoc::parse("[a]\nkey = 1\nkey = 2\n");
        FAIL("expected duplicate-key error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(ConfigDoc::parse("key = 1\n"), parse_error);     // outside section
    CHECK_THROWS_AS(ConfigDoc::parse("[a]\nnot a pair\n"), parse_error);
    CHECK_THROWS_AS(ConfigDoc::parse("[a]\n[a]\n"), parse_error);    // duplicate section
}

TEST_CASE("unknown keys are rejected by schema checks") {
    ConfigDoc doc = ConfigDoc::parse("[geometry]\nbeam_type = parallel\nbogus = 1\n");
    CHECK_THROWS_AS(geometry_from_section(doc.require_section("geometry")), config_error);
}

TEST_CASE("doubles survive serialization exactly") {
    double values[] = {0.1, 1.0 / 3.0, 625.6, 1097.0, 2.2250738585072014e-308, 1e300};
    for (double v : values) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("mask save/load round-trips") {
    ScanGeometry g = make_geometry_preset("ctrate_fan");
    AngularMask m = make_mask(g, 90.0, 45.0);
    save_mask("/tmp/lact_test_mask.cfg", m);
    AngularMask back = load_mask("/tmp/lact_test_mask.cfg");
    CHECK(back.keep == m.keep);
    CHECK(back.angular_range_deg == m.angular_range_deg);
    CHECK(back.span_deg == m.span_deg);
}

TEST_CASE("run config resolves to an identical document after a round trip") {
    RunConfig rc;
    rc.method = ReconMethod::diffusion;
    rc.seed = 424242;
    rc.geometry = make_fan_geometry(48, 48, 32, 32, 1.0, 60.0, 120.0);
    rc.mask = make_mask(rc.geometry, 90.0, 0.0);
    rc.sinogram_path = "in/sino.grid";
    rc.out_dir = "out";
    rc.metadata_path = "meta.records";
    rc.ablate = parse_category_list("demo");
    rc.num_steps = 12;
    rc.stage1.cg_iters = 17;

    ConfigDoc doc = rc.to_doc();
    RunConfig back = RunConfig::from_doc(doc);
    ConfigDoc doc2 = back.to_doc();
    CHECK(doc2 == doc);
    CHECK(doc2.serialize() == doc.serialize());
    // the stage defaults survive the round trip
    CHECK(back.stage1.K == 2);
    CHECK(back.stage1.lambda1 == 4.0);
    CHECK(back.stage1.lambda2_0 == 20.0);
    CHECK(back.stage1.rho == 1.0);
    CHECK(back.stage2.K == 6);
    CHECK(back.stage2.lambda1 == 2.0);
    CHECK(back.stage2.lambda2_0 == 0.0);
    CHECK(back.stage2.rho == 0.2);
}

TEST_CASE("run config rejects unknown keys and sections") {
    RunConfig rc;
    rc.geometry = make_parallel_geometry(8, 16, 8, 8);
    rc.mask = make_mask(rc.geometry, 90.0, 0.0);
    ConfigDoc doc = rc.to_doc();
    doc.section("schedule").set("mystery", "1");
    CHECK_THROWS_AS(RunConfig::from_doc(doc), config_error);

    ConfigDoc doc2 = rc.to_doc();
    doc2.section("scheduel").set("num_steps", "4"); // misspelled section
    CHECK_THROWS_AS(RunConfig::from_doc(doc2), config_error);
}

TEST_CASE("minimal hand-written configs resolve with defaults") {
    RunConfig full;
    full.geometry = make_parallel_geometry(8, 16, 8, 8);
    full.mask = make_mask(full.geometry, 90.0, 0.0);
    ConfigDoc doc;
    geometry_to_section(full.geometry, doc.section("geometry"));
    mask_to_section(full.mask, doc.section("mask"));
    RunConfig rc = RunConfig::from_doc(doc);
    CHECK(rc.stage1.K == 2);
    CHECK(rc.stage2.rho == 0.2);
    CHECK(rc.num_steps == 40);
    CHECK(rc.method == ReconMethod::fbp);
}
