#include <doctest.h>

#include <cmath>
#include <random>

#include "lact/analytic.hpp"
#include "lact/metrics.hpp"
#include "lact/optim.hpp"
#include "lact/phantoms.hpp"
#include "lact/projector.hpp"
#include "lact/random.hpp"
#include "oracles.hpp"

using namespace lact;

TEST_CASE("gradient operator on simple fields") {
    Image c(6, 6, 3.7);
    GradField g = grad_operator(c);
    for (double v : g.gx.values()) CHECK(v == 0.0);
    for (double v : g.gy.values()) CHECK(v == 0.0);

    Image ramp(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) ramp(i, j) = static_cast<double>(j);
    GradField gr = grad_operator(ramp);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            CHECK(gr.gx(i, j) == (j < 5 ? 1.0 : 0.0));
            CHECK(gr.gy(i, j) == 0.0);
        }
}

TEST_CASE("gradient operator adjoint identity") {
    CounterRng rng(21);
    for (uint64_t s = 0; s < 10; ++s) {
        Image x(8, 8);
        GradField p(8, 8);
        rng.fill_gaussian(x.grid, 3 * s);
        rng.fill_gaussian(p.gx, 3 * s + 1);
        rng.fill_gaussian(p.gy, 3 * s + 2);
        GradField dx = grad_operator(x);
        Image dtp = grad_adjoint(p);
        double lhs = dx.gx.dot(p.gx) + dx.gy.dot(p.gy);
        double rhs = x.grid.dot(dtp.grid);
        CHECK(std::fabs(lhs - rhs) <= 1e-10 * (std::fabs(lhs) + 1.0));
    }
}

TEST_CASE("soft threshold: forced anchor and identity") {
    GradField f(1, 1);
    f.gx(0, 0) = 3.0;
    f.gy(0, 0) = 4.0;
    GradField out = soft_threshold_isotropic(f, 2.0);
    CHECK(out.gx(0, 0) == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(out.gy(0, 0) == doctest::Approx(2.4).epsilon(1e-12));

    GradField same = soft_threshold_isotropic(f, 0.0);
    CHECK(same.gx.values() == f.gx.values());
    CHECK(same.gy.values() == f.gy.values());

    CHECK_THROWS_AS(soft_threshold_isotropic(f, -1.0), config_error);
}

TEST_CASE("soft threshold matches the scalar grid-search prox") {
    // 1-D case (gy = 0): prox of tau |q| at z minimizes 1/2 (q-z)^2 + tau |q|
    const double tau = 0.8;
    for (double z : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        GradField f(1, 1);
        f.gx(0, 0) = z;
        GradField p = soft_threshold_isotropic(f, tau);
        double best_q = 0.0, best_obj = 1e300;
        for (double q = -4.0; q <= 4.0; q += 1e-4) {
            double obj = 0.5 * (q - z) * (q - z) + tau * std::fabs(q);
            if (obj < best_obj) {
                best_obj = obj;
                best_q = q;
            }
        }
        CHECK(std::fabs(p.gx(0, 0) - best_q) <= 2e-4);
    }
}

TEST_CASE("cg identity and diagonal solves") {
    LinearOperator ident = [](const std::vector<double>& in, std::vector<double>& out) {
        out = in;
    };
    std::vector<double> rhs = {1.0, -2.0, 0.5};
    std::vector<double> x;
    CgResult r = cg_solve(ident, rhs, x, 10, 1e-12);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    for (size_t i = 0; i < rhs.size(); ++i) CHECK(x[i] == doctest::Approx(rhs[i]));

    LinearOperator diag = [](const std::vector<double>& in, std::vector<double>& out) {
        out = {1.0 * in[0], 2.0 * in[1], 4.0 * in[2]};
    };
    std::vector<double> rhs2 = {1.0, 2.0, 4.0};
    std::vector<double> x2;
    cg_solve(diag, rhs2, x2, 10, 1e-12);
    for (double v : x2) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cg matches dense direct solves on random SPD systems") {
    std::mt19937_64 mt(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 20;
        // B = C^T C + I
        std::vector<std::vector<double>> C(n, std::vector<double>(n));
        for (auto& row : C)
            for (double& v : row) v = nd(mt);
        std::vector<std::vector<double>> B(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) B[i][j] += C[k][i] * C[k][j];
                if (i == j) B[i][j] += 1.0;
            }
        std::vector<double> rhs(n);
        for (double& v : rhs) v = nd(mt);

        LinearOperator op = [&](const std::vector<double>& in, std::vector<double>& out) {
            out.assign(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) out[i] += B[i][j] * in[j];
        };
        std::vector<double> x;
        CgResult r = cg_solve(op, rhs, x, 60, 1e-10);
        CHECK(r.residual < 1e-8);
        std::vector<double> ref = oracle::dense_solve(B, rhs);
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-6));
    }
}

TEST_CASE("consistency_step identity-A closed form via the cg hook") {
    // with A = I, full mask and mu = 0 the x-update operator is (1+lambda1) I
    double lambda1 = 4.0;
    CounterRng rng(31);
    std::vector<double> xhat(25), y(25);
    for (size_t i = 0; i < xhat.size(); ++i) {
        xhat[i] = rng.gaussian(0, i);
        y[i] = rng.gaussian(1, i);
    }
    LinearOperator op = [&](const std::vector<double>& in, std::vector<double>& out) {
        out.resize(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = (1.0 + lambda1) * in[i];
    };
    std::vector<double> rhs(25), x;
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = xhat[i] + lambda1 * y[i];
    cg_solve(op, rhs, x, 50, 1e-14);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(x[i] == doctest::Approx((xhat[i] + lambda1 * y[i]) / (1.0 + lambda1))
                          .epsilon(1e-10));
}

TEST_CASE("lambda2 exponential schedule") {
    ConsistencyConfig cfg;
    cfg.lambda2_0 = 20.0;
    cfg.lambda2_decay_gamma = 0.9;
    CHECK(effective_lambda2(cfg, 0) == 20.0);
    CHECK(effective_lambda2(cfg, 3) == doctest::Approx(20.0 * 0.9 * 0.9 * 0.9).epsilon(1e-15));
    cfg.lambda2_decay_gamma = 1.0;
    CHECK(effective_lambda2(cfg, 7) == 20.0);
    ConsistencyConfig s2 = ConsistencyConfig::stage2_defaults();
    CHECK(effective_lambda2(s2, 0) == 0.0);
    CHECK(effective_lambda2(s2, 9) == 0.0);
}

TEST_CASE("stage defaults echo the published hyperparameters") {
    ConsistencyConfig s1 = ConsistencyConfig::stage1_defaults();
    CHECK(s1.K == 2);
    CHECK(s1.lambda1 == 4.0);
    CHECK(s1.lambda2_0 == 20.0);
    CHECK(s1.rho == 1.0);
    ConsistencyConfig s2 = ConsistencyConfig::stage2_defaults();
    CHECK(s2.K == 6);
    CHECK(s2.lambda1 == 2.0);
    CHECK(s2.lambda2_0 == 0.0);
    CHECK(s2.rho == 0.2);
    ConsistencyConfig bad = s1;
    bad.K = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("all-zero weights return x_hat unchanged") {
    ScanGeometry g = make_parallel_geometry(12, 13, 8, 8);
    CounterRng rng(5);
    Image xhat(8, 8);
    rng.fill_gaussian(xhat.grid, 0);
    Sinogram y(12, 13, 0.0);
    AngularMask m = make_mask(g, 180.0, 0.0);
    ConsistencyConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 0.0;
    cfg.rho = 1.0;
    cfg.K = 3;
    AdmmState st;
    Image out = consistency_step(xhat, y, nullptr, m, g, cfg, 0, st);
    CHECK(out.grid == xhat.grid); // bit-exact
}

namespace {

struct SmallProblem {
    ScanGeometry g;
    Image phantom, xhat;
    Sinogram measured, y_aux;
    AngularMask mask;
};

SmallProblem make_small_problem(uint64_t seed) {
    SmallProblem p{make_parallel_geometry(12, 11, 8, 8), Image(), Image(), Sinogram(),
                   Sinogram(), AngularMask{}};
    PhantomSpec spec;
    spec.kind = PhantomKind::ellipse_set;
    spec.height = spec.width = 8;
    spec.seed = seed;
    spec.num_ellipses = 3;
    p.phantom = generate_phantom(spec);
    p.mask = make_mask(p.g, 90.0, 0.0);
    Sinogram full = forward_project(p.phantom, p.g);
    p.measured = full;
    mask_rows(p.measured, p.mask);
    p.y_aux = synthesize_aux_sinogram(p.measured, p.mask, p.g, AuxMethod::angular_interpolation);
    CounterRng rng(seed ^ 0xabc);
    p.xhat = p.phantom;
    for (size_t i = 0; i < p.xhat.grid.size(); ++i)
        p.xhat.grid.values()[i] += 0.15 * rng.gaussian(9, i);
    return p;
}

} // namespace

TEST_CASE("consistency objective never increases across tested configs") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        SmallProblem p = make_small_problem(seed);
        for (double mu : {0.0, 0.02, 0.2}) {
            for (int K : {1, 2, 6}) {
                ConsistencyConfig cfg;
                cfg.lambda1 = 4.0;
                cfg.lambda2_0 = 20.0;
                cfg.mu = mu;
                cfg.rho = 1.0;
                cfg.K = K;
                cfg.cg_iters = 60;
                cfg.cg_tol = 1e-10;
                AdmmState st;
                Image out = consistency_step(p.xhat, p.measured, &p.y_aux, p.mask, p.g, cfg, 0,
                                             st);
                double lam2 = effective_lambda2(cfg, 0);
                double before = consistency_objective(p.xhat, &p.xhat, p.measured, &p.y_aux,
                                                      p.mask, p.g, cfg.lambda1, lam2, cfg.mu);
                double after = consistency_objective(out, &p.xhat, p.measured, &p.y_aux, p.mask,
                                                     p.g, cfg.lambda1, lam2, cfg.mu);
                CHECK(after <= before + 1e-6);
            }
        }
    }
}

TEST_CASE("dual feasibility shrinks with more ADMM iterations") {
    SmallProblem p = make_small_problem(4);
    ConsistencyConfig cfg;
    cfg.lambda1 = 2.0;
    cfg.lambda2_0 = 5.0;
    cfg.mu = 0.05;
    cfg.rho = 1.0;
    cfg.cg_iters = 60;
    cfg.cg_tol = 1e-10;

    auto dual_gap = [&](int K) {
        ConsistencyConfig c = cfg;
        c.K = K;
        AdmmState st;
        Image out = consistency_step(p.xhat, p.measured, &p.y_aux, p.mask, p.g, c, 0, st);
        GradField dx = grad_operator(out);
        dx.gx -= st.q.gx;
        dx.gy -= st.q.gy;
        return std::sqrt(dx.gx.dot(dx.gx) + dx.gy.dot(dx.gy));
    };
    CHECK(dual_gap(8) <= dual_gap(1) + 1e-12);
}

TEST_CASE("fixed point of consistency_step matches the primal-dual oracle on 8x8") {
    SmallProblem p = make_small_problem(6);
    ConsistencyConfig cfg;
    cfg.lambda1 = 4.0;
    cfg.lambda2_0 = 20.0;
    cfg.mu = 0.05;
    cfg.rho = 1.0;
    cfg.K = 60; // drive to the fixed point
    cfg.cg_iters = 80;
    cfg.cg_tol = 1e-12;
    AdmmState st;
    Image admm = consistency_step(p.xhat, p.measured, &p.y_aux, p.mask, p.g, cfg, 0, st);

    // explicit problem for the oracle
    oracle::TvProblem prob;
    prob.A = oracle::materialize_projector(p.g);
    prob.h = 8;
    prob.w = 8;
    prob.mu = cfg.mu;
    prob.prox_weight = 1.0;
    prob.xhat = p.xhat.grid.values();
    prob.row_weight.resize(prob.A.size());
    prob.y.resize(prob.A.size());
    for (int v = 0; v < p.g.num_views; ++v)
        for (int b = 0; b < p.g.num_bins; ++b) {
            size_t r = static_cast<size_t>(v) * p.g.num_bins + b;
            prob.row_weight[r] = p.mask.keep[v] ? cfg.lambda1 : cfg.lambda2_0;
            prob.y[r] = p.mask.keep[v] ? p.measured(v, b) : p.y_aux(v, b);
        }
    std::vector<double> xref = oracle::tv_minimize(prob, 20000);

    double obj_admm = oracle::tv_objective(prob, admm.grid.values());
    double obj_ref = oracle::tv_objective(prob, xref);
    CHECK(std::fabs(obj_admm - obj_ref) <= 1e-3 * std::fabs(obj_ref));
}

TEST_CASE("admm-tv beats fbp on a noiseless full-view phantom") {
    int n = 64;
    ScanGeometry g = make_parallel_geometry(90, 95, n, n);
    PhantomSpec spec;
    spec.kind = PhantomKind::shepp_logan_like;
    spec.height = spec.width = n;
    Image ph = generate_phantom(spec);
    Sinogram s = forward_project(ph, g);
    AngularMask full = make_mask(g, 180.0, 0.0);
    Image fbp = fbp_reconstruct(s, g, FilterSpec{FilterKind::ramp_hann, 1.0}, &full);
    ConsistencyConfig cfg;
    cfg.lambda1 = 30.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 0.02;
    cfg.rho = 1.0;
    cfg.K = 1;
    cfg.cg_iters = 25;
    Image admm = admm_tv_reconstruct(s, full, g, cfg, 10);
    CHECK(nrmse(admm, ph) < nrmse(fbp, ph));
}

TEST_CASE("admm-tv dominates fbp under a 90-degree mask (ssim ordering)") {
    int n = 64;
    ScanGeometry g = make_fan_geometry(180, 96, n, n, 1.0, 113.0, 226.0);
    PhantomSpec spec;
    spec.kind = PhantomKind::shepp_logan_like;
    spec.height = spec.width = n;
    Image ph = generate_phantom(spec);
    AngularMask m = make_mask(g, 90.0, 0.0);
    Sinogram masked = apply_masked(ph, g, m);
    Image fbp = fbp_reconstruct(masked, g, FilterSpec{FilterKind::ramp_hann, 1.0}, &m);
    ConsistencyConfig cfg;
    cfg.lambda1 = 30.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 0.15;
    cfg.rho = 1.0;
    cfg.K = 1;
    cfg.cg_iters = 15;
    Image admm = admm_tv_reconstruct(masked, m, g, cfg, 12);
    double range = ph.grid.max_value() - ph.grid.min_value();
    CHECK(ssim(admm, ph, range) > ssim(fbp, ph, range));
}

TEST_CASE("huge mu crushes the reconstruction to near-constant") {
    int n = 32;
    ScanGeometry g = make_parallel_geometry(48, 49, n, n);
    PhantomSpec spec;
    spec.kind = PhantomKind::shepp_logan_like;
    spec.height = spec.width = n;
    Image ph = generate_phantom(spec);
    AngularMask full = make_mask(g, 180.0, 0.0);
    Sinogram s = forward_project(ph, g);
    ConsistencyConfig cfg;
    cfg.lambda1 = 1.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 1e6;
    cfg.rho = 1e6; // keep the splitting penalty on the same scale
    cfg.K = 1;
    cfg.cg_iters = 80;
    cfg.cg_tol = 1e-12;
    Image out = admm_tv_reconstruct(s, full, g, cfg, 40);
    GradField gf = grad_operator(out);
    for (size_t i = 0; i < gf.gx.size(); ++i)
        CHECK(std::hypot(gf.gx.values()[i], gf.gy.values()[i]) < 1e-3);
}

TEST_CASE("objective is non-increasing across admm-tv outer iterations") {
    SmallProblem p = make_small_problem(8);
    ConsistencyConfig cfg;
    cfg.lambda1 = 10.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 0.05;
    cfg.rho = 1.0;
    cfg.K = 1;
    cfg.cg_iters = 60;
    cfg.cg_tol = 1e-10;
    std::vector<double> objs;
    admm_tv_reconstruct(p.measured, p.mask, p.g, cfg, 12,
                        [&](int, const Image& x) {
                            objs.push_back(consistency_objective(
                                x, nullptr, p.measured, nullptr, p.mask, p.g, cfg.lambda1, 0.0,
                                cfg.mu));
                        });
    REQUIRE(objs.size() == 12);
    for (size_t i = 1; i < objs.size(); ++i) CHECK(objs[i] <= objs[i - 1] + 1e-6);
}

TEST_CASE("zero kept views still returns, prior-dominated") {
    ScanGeometry g = make_parallel_geometry(12, 13, 8, 8);
    AngularMask none = mask_complement(make_mask(g, 180.0, 0.0));
    CounterRng rng(44);
    Image xhat(8, 8);
    rng.fill_gaussian(xhat.grid, 0);
    ConsistencyConfig cfg;
    cfg.lambda1 = 4.0;
    cfg.lambda2_0 = 0.0;
    cfg.mu = 0.05;
    cfg.rho = 1.0;
    cfg.K = 2;
    AdmmState st;
    Image out = consistency_step(xhat, Sinogram(12, 13, 0.0), nullptr, none, g, cfg, 0, st);
    CHECK(out.grid.all_finite());
    // nothing constrains the data, so the proximity anchor dominates
    Grid d = out.grid;
    d -= xhat.grid;
    CHECK(d.norm2() < xhat.grid.norm2());
}

TEST_CASE("admm-tv requires a kept view") {
    ScanGeometry g = make_parallel_geometry(12, 13, 8, 8);
    AngularMask none = mask_complement(make_mask(g, 180.0, 0.0));
    CHECK_THROWS_AS(
        admm_tv_reconstruct(Sinogram(12, 13, 0.0), none, g, ConsistencyConfig{}, 2),
        config_error);
}
