#include <doctest.h>

#include <random>

#include "lact/metadata.hpp"

using namespace lact;

namespace {

MetadataRecord sample_record() {
    MetadataRecord r;
    r.scan_angle_deg = 90.0;
    r.exposure_time = "500 ms";
    r.tube_current = "200 mA";
    r.slice_idx = 142;
    r.age = 63;
    r.sex = "male";
    r.diseases = {"lung opacity", "consolidation"};
    r.impressions = "Trachea open, left lung partially collapsed, large pleural effusion";
    r.enable(MetaCategory::Phy);
    r.enable(MetaCategory::Demo);
    r.enable(MetaCategory::Diag);
    return r;
}

} // namespace

TEST_CASE("physics sentence renders byte-exactly") {
    MetadataRecord r = sample_record();
    r.disable(MetaCategory::Demo);
    r.disable(MetaCategory::Diag);
    CHECK(render_prompt(r) ==
          "CT Parameters: Scan angle is 90 degree, exposure time is 500 ms, "
          "X-Ray tube current is 200 mA.");
}

TEST_CASE("demography/diagnosis sentence renders byte-exactly") {
    MetadataRecord r = sample_record();
    r.disable(MetaCategory::Phy);
    CHECK(render_prompt(r) ==
          "142th slice of 63 years old male with lung opacity, consolidation: "
          "Trachea open, left lung partially collapsed, large pleural effusion.");
}

TEST_CASE("full prompt joins categories with single spaces in order") {
    MetadataRecord r = sample_record();
    std::string p = render_prompt(r);
    CHECK(p ==
          "CT Parameters: Scan angle is 90 degree, exposure time is 500 ms, "
          "X-Ray tube current is 200 mA. 142th slice of 63 years old male with "
          "lung opacity, consolidation: Trachea open, left lung partially "
          "collapsed, large pleural effusion.");
}

TEST_CASE("disabled categories leave no template residue") {
    MetadataRecord r = sample_record();
    r.disable(MetaCategory::Phy);
    std::string p = render_prompt(r);
    CHECK(p.find("CT Parameters") == std::string::npos);
    CHECK(p.find("Scan angle") == std::string::npos);
    CHECK(p.find("exposure") == std::string::npos);

    MetadataRecord demo_only = sample_record();
    demo_only.disable(MetaCategory::Phy);
    demo_only.disable(MetaCategory::Diag);
    std::string pd = render_prompt(demo_only);
    CHECK(pd == "142th slice of 63 years old male.");
    CHECK(pd.find("with") == std::string::npos);
    CHECK(pd.find(":") == std::string::npos);

    MetadataRecord none = sample_record();
    none.enabled_categories = 0;
    CHECK(render_prompt(none).empty());
}

TEST_CASE("render is deterministic") {
    MetadataRecord r = sample_record();
    CHECK(render_prompt(r) == render_prompt(r));
}

TEST_CASE("missing fields of enabled categories are named") {
    MetadataRecord r = sample_record();
    r.exposure_time.clear();
    try {
        render_prompt(r);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("exposure_time") != std::string::npos);
    }
    MetadataRecord r2 = sample_record();
    r2.diseases.clear();
    try {
        render_prompt(r2);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("diseases") != std::string::npos);
    }
}

TEST_CASE("empty file parses to an empty list") {
    CHECK(parse_records("").empty());
    CHECK(parse_records("  \n # comment only\n").empty());
}

TEST_CASE("records round-trip bit-exactly") {
    std::vector<MetadataRecord> rs = {sample_record()};
    rs[0].impressions = "line one\nwith \"quotes\" and \\backslash";
    std::string text = serialize_records(rs);
    std::vector<MetadataRecord> back = parse_records(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == rs[0]);
    // serialize again: identical bytes
    CHECK(serialize_records(back) == text);
}

TEST_CASE("property: random records round-trip") {
    std::mt19937_64 mt(77);
    std::uniform_int_distribution<int> ints(0, 200);
    std::uniform_int_distribution<int> catd(0, 7);
    auto word = [&](int n) {
        std::string w;
        for (int i = 0; i < n; ++i) w += static_cast<char>('a' + ints(mt) % 26);
        return w;
    };
    for (int t = 0; t < 50; ++t) {
        MetadataRecord r;
        r.scan_angle_deg = ints(mt) * 0.7;
        r.exposure_time = word(4) + " ms";
        r.tube_current = word(3) + " mA";
        r.slice_idx = ints(mt);
        r.age = ints(mt) % 100;
        r.sex = t % 3 == 0 ? "male" : (t % 3 == 1 ? "female" : word(6));
        int nd = ints(mt) % 4;
        for (int d = 0; d < nd; ++d) r.diseases.push_back(word(5) + " " + word(4));
        r.impressions = word(8) + ", " + word(5);
        r.enabled_categories = static_cast<unsigned>(catd(mt));
        std::vector<MetadataRecord> back = parse_records(serialize_records({r}));
        REQUIRE(back.size() == 1);
        CHECK(back[0] == r);
    }
}

TEST_CASE("malformed age names the field with a line number") {
    std::string text = "record {\n  age = abc\n}\n";
    try {
        parse_records(text);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("age") != std::string::npos);
        CHECK(e.line() == 2);
    }
}

TEST_CASE("unknown fields are rejected in strict mode") {
    std::string text = "record {\n  bogus = 1\n}\n";
    CHECK_THROWS_AS(parse_records(text), parse_error);
}

TEST_CASE("category list parsing") {
    CHECK(parse_category_list("") == 0u);
    CHECK(parse_category_list("phy") == static_cast<unsigned>(MetaCategory::Phy));
    CHECK(parse_category_list("phy,demo,diag") ==
          (static_cast<unsigned>(MetaCategory::Phy) | static_cast<unsigned>(MetaCategory::Demo) |
           static_cast<unsigned>(MetaCategory::Diag)));
    CHECK_THROWS_AS(parse_category_list("phys"), config_error);
}
