#include <doctest.h>

#include <cmath>

#include "lact/analytic.hpp"
#include "lact/phantoms.hpp"
#include "lact/projector.hpp"
#include "lact/random.hpp"

using namespace lact;

namespace {

double rmse(const Image& a, const Image& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.grid.size(); ++i) {
        double d = a.grid.values()[i] - b.grid.values()[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.grid.size()));
}

} // namespace

TEST_CASE("fbp of a zero sinogram is a zero image") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    Image rec = fbp_reconstruct(Sinogram(24, 21, 0.0), g, FilterSpec{});
    for (double v : rec.grid.values()) CHECK(v == 0.0);
}

TEST_CASE("fbp is linear in the sinogram") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    CounterRng rng(4);
    Sinogram s1(24, 21), s2(24, 21);
    rng.fill_gaussian(s1.grid, 0);
    rng.fill_gaussian(s2.grid, 1);
    AngularMask full = make_mask(g, 180.0, 0.0);
    Sinogram combo(24, 21);
    for (size_t i = 0; i < combo.grid.size(); ++i)
        combo.grid.values()[i] = 2.0 * s1.grid.values()[i] - 0.5 * s2.grid.values()[i];
    Image r1 = fbp_reconstruct(s1, g, FilterSpec{}, &full);
    Image r2 = fbp_reconstruct(s2, g, FilterSpec{}, &full);
    Image rc = fbp_reconstruct(combo, g, FilterSpec{}, &full);
    for (size_t i = 0; i < rc.grid.size(); ++i)
        CHECK(rc.grid.values()[i] ==
              doctest::Approx(2.0 * r1.grid.values()[i] - 0.5 * r2.grid.values()[i])
                  .epsilon(1e-9));
}

TEST_CASE("full-view smooth phantom reconstructs under 5% with ramp_hann") {
    int n = 256;
    ScanGeometry g = make_parallel_geometry(360, 367, n, n, 1.0, 180.0);
    PhantomSpec spec;
    spec.kind = PhantomKind::random_blobs;
    spec.height = spec.width = n;
    spec.seed = 3;
    Image ph = generate_phantom(spec);
    Sinogram s = forward_project(ph, g);
    Image rec = fbp_reconstruct(s, g, FilterSpec{FilterKind::ramp_hann, 1.0});
    CHECK(rmse(rec, ph) < 0.05);
}

TEST_CASE("masked fbp is strictly worse than full-view") {
    int n = 128;
    ScanGeometry g = make_parallel_geometry(180, 195, n, n, 1.0, 180.0);
    PhantomSpec spec;
    spec.kind = PhantomKind::shepp_logan_like;
    spec.height = spec.width = n;
    Image ph = generate_phantom(spec);
    Sinogram full = forward_project(ph, g);
    Image rec_full = fbp_reconstruct(full, g, FilterSpec{});

    AngularMask m = make_mask(g, 90.0, 0.0);
    Sinogram masked = full;
    mask_rows(masked, m);
    Image rec_masked = fbp_reconstruct(masked, g, FilterSpec{}, &m);
    CHECK(rmse(rec_masked, ph) > rmse(rec_full, ph));
}

TEST_CASE("fan-beam fbp reconstructs the phantom") {
    int n = 128;
    ScanGeometry g = make_fan_geometry(360, 256, n, n, 1.0, 226.0, 452.0);
    PhantomSpec spec;
    spec.kind = PhantomKind::random_blobs;
    spec.height = spec.width = n;
    spec.seed = 11;
    Image ph = generate_phantom(spec);
    Sinogram s = forward_project(ph, g);
    Image rec = fbp_reconstruct(s, g, FilterSpec{FilterKind::ramp_hann, 1.0});
    CHECK(rmse(rec, ph) < 0.05);
}

TEST_CASE("aux sinogram: full mask passes through unchanged") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    CounterRng rng(9);
    Sinogram s(24, 21);
    rng.fill_gaussian(s.grid, 0);
    AngularMask full = make_mask(g, 180.0, 0.0);
    Sinogram aux = synthesize_aux_sinogram(s, full, g, AuxMethod::angular_interpolation);
    CHECK(aux.grid == s.grid);
}

TEST_CASE("aux sinogram never modifies kept rows") {
    ScanGeometry g = make_parallel_geometry(32, 21, 16, 16);
    CounterRng rng(10);
    Sinogram s(32, 21);
    rng.fill_gaussian(s.grid, 0);
    AngularMask m = make_mask(g, 90.0, 0.0);
    mask_rows(s, m);
    for (AuxMethod method : {AuxMethod::conjugate_symmetry, AuxMethod::angular_interpolation}) {
        Sinogram aux = synthesize_aux_sinogram(s, m, g, method);
        for (int v = 0; v < g.num_views; ++v)
            if (m.keep[v])
                for (int b = 0; b < g.num_bins; ++b) CHECK(aux(v, b) == s(v, b));
    }
}

TEST_CASE("conjugate symmetry fills with the flipped conjugate view") {
    // 360-degree parallel set so each view has an explicit conjugate
    int n = 64;
    ScanGeometry g = make_parallel_geometry(72, 95, n, n, 1.0, 360.0);
    PhantomSpec spec;
    spec.kind = PhantomKind::shepp_logan_like;
    spec.height = spec.width = n;
    Image ph = generate_phantom(spec);
    Sinogram full = forward_project(ph, g);

    AngularMask m = make_mask(g, 180.0, 0.0);
    Sinogram masked = full;
    mask_rows(masked, m);
    Sinogram aux = synthesize_aux_sinogram(masked, m, g, AuxMethod::conjugate_symmetry);
    // every dropped view v has conjugate at v - 36 (180 deg earlier), kept
    for (int v = 0; v < g.num_views; ++v) {
        if (m.keep[v]) continue;
        int conj = v - 36;
        REQUIRE(conj >= 0);
        for (int b = 0; b < g.num_bins; ++b)
            CHECK(aux(v, b) == doctest::Approx(masked(conj, g.num_bins - 1 - b)).epsilon(1e-12));
    }
}

TEST_CASE("angular interpolation reproduces linear-in-view sinograms") {
    ScanGeometry g = make_parallel_geometry(40, 11, 16, 16);
    Sinogram s(40, 11);
    for (int v = 0; v < 40; ++v)
        for (int b = 0; b < 11; ++b) s(v, b) = 3.0 * v + 0.5 * b;
    AngularMask m = make_mask(g, 180.0, 0.0);
    // drop a contiguous interior block of views
    for (int v = 10; v < 20; ++v) m.keep[v] = 0;
    Sinogram masked = s;
    mask_rows(masked, m);
    Sinogram aux = synthesize_aux_sinogram(masked, m, g, AuxMethod::angular_interpolation);
    for (int v = 10; v < 20; ++v)
        for (int b = 0; b < 11; ++b) CHECK(aux(v, b) == doctest::Approx(s(v, b)).epsilon(1e-10));
}

TEST_CASE("conjugate symmetry on fan beams falls back to interpolation") {
    ScanGeometry g = make_fan_geometry(40, 21, 16, 16, 1.0, 40.0, 80.0);
    Sinogram s(40, 21);
    for (int v = 0; v < 40; ++v)
        for (int b = 0; b < 21; ++b) s(v, b) = 2.0 * v + b;
    AngularMask m = make_mask(g, 180.0, 0.0);
    Sinogram masked = s;
    mask_rows(masked, m);
    Sinogram conj = synthesize_aux_sinogram(masked, m, g, AuxMethod::conjugate_symmetry);
    Sinogram interp = synthesize_aux_sinogram(masked, m, g, AuxMethod::angular_interpolation);
    CHECK(conj.grid == interp.grid);
}

TEST_CASE("aux sinogram rejects empty masks") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    AngularMask none = mask_complement(make_mask(g, 180.0, 0.0));
    Sinogram s(24, 21, 0.0);
    CHECK_THROWS_AS(synthesize_aux_sinogram(s, none, g, AuxMethod::angular_interpolation),
                    config_error);
}

TEST_CASE("default aux method follows beam type") {
    CHECK(default_aux_method(make_parallel_geometry(8, 16, 8, 8)) ==
          AuxMethod::conjugate_symmetry);
    CHECK(default_aux_method(make_fan_geometry(8, 16, 8, 8, 1.0, 40, 80)) ==
          AuxMethod::angular_interpolation);
}
