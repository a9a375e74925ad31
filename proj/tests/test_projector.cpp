#include <doctest.h>

#include <cmath>

#include "lact/projector.hpp"
#include "lact/random.hpp"

using namespace lact;

namespace {

Image random_image(int h, int w, uint64_t seed) {
    Image im(h, w);
    CounterRng rng(seed);
    rng.fill_gaussian(im.grid, 0);
    return im;
}

Sinogram random_sino(const ScanGeometry& g, uint64_t seed) {
    Sinogram s(g.num_views, g.num_bins);
    CounterRng rng(seed);
    rng.fill_gaussian(s.grid, 1);
    return s;
}

} // namespace

TEST_CASE("zero image projects to zero sinogram") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    Sinogram s = forward_project(Image(16, 16, 0.0), g);
    for (double v : s.grid.values()) CHECK(v == 0.0);
}

TEST_CASE("forward projection is linear") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Image x1 = random_image(16, 16, seed);
        Image x2 = random_image(16, 16, 1000 + seed);
        double a = 1.7, b = -0.6;
        Image combo(16, 16);
        for (size_t i = 0; i < combo.grid.size(); ++i)
            combo.grid.values()[i] = a * x1.grid.values()[i] + b * x2.grid.values()[i];
        Sinogram s1 = forward_project(x1, g);
        Sinogram s2 = forward_project(x2, g);
        Sinogram sc = forward_project(combo, g);
        double worst = 0.0, scale = 0.0;
        for (size_t i = 0; i < sc.grid.size(); ++i) {
            double want = a * s1.grid.values()[i] + b * s2.grid.values()[i];
            worst = std::max(worst, std::fabs(sc.grid.values()[i] - want));
            scale = std::max(scale, std::fabs(want));
        }
        CHECK(worst <= 1e-10 * std::max(scale, 1.0));
    }
}

TEST_CASE("analytic disk chords, parallel beam") {
    int n = 256;
    ScanGeometry g = make_parallel_geometry(8, 367, n, n, 1.0, 180.0);
    g.detector_pitch = 1.0; // integer bin offsets keep bins off the tangent rim
    g.validate();
    double r = 80.0;
    Image disk(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x = j - 0.5 * (n - 1), y = 0.5 * (n - 1) - i;
            if (x * x + y * y <= r * r) disk(i, j) = 1.0;
        }
    Sinogram s = forward_project(disk, g);
    double peak = 2.0 * r;
    for (int v = 0; v < g.num_views; ++v)
        for (int b = 0; b < g.num_bins; ++b) {
            double off = (b - 0.5 * (g.num_bins - 1)) * g.detector_pitch;
            if (std::fabs(off) < r) {
                double expect = 2.0 * std::sqrt(r * r - off * off);
                CHECK(std::fabs(s(v, b) - expect) <= 0.02 * peak);
            } else if (std::fabs(off) > r + 2.0) {
                CHECK(std::fabs(s(v, b)) <= 0.02 * peak);
            }
        }
}

TEST_CASE("single center pixel reads its path length on the central ray") {
    ScanGeometry g = make_parallel_geometry(4, 9, 3, 3, 1.0, 180.0);
    Image im(3, 3);
    im(1, 1) = 1.0;
    Sinogram s = forward_project(im, g);
    int central = (g.num_bins - 1) / 2;
    for (int v = 0; v < g.num_views; ++v) {
        CHECK(s(v, central) > 0.5);
        CHECK(s(v, central) < 2.1);
    }
    // axis-aligned view: the central ray integrates the unit pixel's
    // bilinear tent along a straight column, total mass 1
    CHECK(s(0, central) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("adjoint identity on random instances, both geometries") {
    ScanGeometry gp = make_parallel_geometry(24, 19, 16, 16);
    ScanGeometry gf = make_fan_geometry(24, 19, 16, 16, 1.0, 40.0, 80.0);
    for (const ScanGeometry& g : {gp, gf}) {
        for (uint64_t seed = 0; seed < 20; ++seed) {
            Image x = random_image(16, 16, seed);
            Sinogram u = random_sino(g, 500 + seed);
            Sinogram ax = forward_project(x, g);
            Image atu = back_project(u, g);
            double lhs = ax.grid.dot(u.grid);
            double rhs = x.grid.dot(atu.grid);
            CHECK(std::fabs(lhs - rhs) <= 1e-6 * ax.grid.norm2() * u.grid.norm2());
        }
    }
}

TEST_CASE("back projection basics") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    Image z = back_project(Sinogram(24, 21, 0.0), g);
    for (double v : z.grid.values()) CHECK(v == 0.0);

    Image bp = back_project(Sinogram(24, 21, 1.0), g);
    for (int i = 6; i < 10; ++i)
        for (int j = 6; j < 10; ++j) CHECK(bp(i, j) > 0.0);
}

TEST_CASE("masked projection zeroes exactly the dropped views") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    Image x = random_image(16, 16, 7);
    Sinogram full = forward_project(x, g);

    AngularMask all = make_mask(g, 180.0, 0.0);
    Sinogram same = apply_masked(x, g, all);
    CHECK(same.grid == full.grid);

    AngularMask m = make_mask(g, 90.0, 0.0);
    Sinogram masked = apply_masked(x, g, m);
    for (int v = 0; v < g.num_views; ++v)
        for (int b = 0; b < g.num_bins; ++b) {
            if (m.keep[v]) CHECK(masked(v, b) == full(v, b));
            else CHECK(masked(v, b) == 0.0);
        }

    AngularMask none = mask_complement(all);
    Sinogram zero = apply_masked(x, g, none);
    for (double v : zero.grid.values()) CHECK(v == 0.0);
}

TEST_CASE("translated phantom shifts the parallel sinogram along bins") {
    int n = 128;
    ScanGeometry g = make_parallel_geometry(4, 195, n, n, 1.0, 180.0);
    auto disk_at = [&](double cx, double cy) {
        Image im(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double x = j - 0.5 * (n - 1) - cx, y = 0.5 * (n - 1) - i - cy;
                if (x * x + y * y <= 15.0 * 15.0) im(i, j) = 1.0;
            }
        return im;
    };
    double shift = 10.0;
    Sinogram s0 = forward_project(disk_at(0, 0), g);
    Sinogram s1 = forward_project(disk_at(shift, 0.0), g);
    int bin_shift = static_cast<int>(std::round(shift / g.detector_pitch));
    auto centroid = [&](const Sinogram& s, int v) {
        double m = 0, w = 0;
        for (int b = 0; b < s.bins(); ++b) {
            m += s(v, b) * b;
            w += s(v, b);
        }
        return m / w;
    };
    double moved = centroid(s1, 0) - centroid(s0, 0);
    CHECK(moved == doctest::Approx(bin_shift).epsilon(0.1));
}

TEST_CASE("simulate_measurement contract") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    Sinogram s = random_sino(g, 3);

    Sinogram same = simulate_measurement(s, NoiseSpec{0.0, 5});
    CHECK(same.grid == s.grid);

    Sinogram a = simulate_measurement(s, NoiseSpec{0.05, 42});
    Sinogram b = simulate_measurement(s, NoiseSpec{0.05, 42});
    CHECK(a.grid == b.grid);
    Sinogram c = simulate_measurement(s, NoiseSpec{0.05, 43});
    CHECK(!(c.grid == a.grid));

    CHECK_THROWS_AS(simulate_measurement(s, NoiseSpec{-0.1, 0}), config_error);
}

TEST_CASE("noise sample standard deviation matches sigma") {
    Sinogram zero(400, 256, 0.0); // >= 1e5 entries
    Sinogram noisy = simulate_measurement(zero, NoiseSpec{0.01, 99});
    double mean = 0.0;
    for (double v : noisy.grid.values()) mean += v;
    mean /= static_cast<double>(noisy.grid.size());
    double var = 0.0;
    for (double v : noisy.grid.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(noisy.grid.size() - 1);
    CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("shape mismatches are rejected") {
    ScanGeometry g = make_parallel_geometry(24, 21, 16, 16);
    CHECK_THROWS_AS(forward_project(Image(8, 8, 0.0), g), shape_error);
    CHECK_THROWS_AS(back_project(Sinogram(10, 21, 0.0), g), shape_error);
}
