#include "lact/optim.hpp"

#include <cmath>
#include <iostream>

#include "lact/analytic.hpp"
#include "lact/projector.hpp"

namespace lact {

void ConsistencyConfig::validate() const {
    if (lambda1 < 0.0 || lambda2_0 < 0.0 || mu < 0.0)
        throw config_error("consistency weights must be nonnegative");
    if (!(lambda2_decay_gamma > 0.0 && lambda2_decay_gamma <= 1.0))
        throw config_error("lambda2_decay_gamma must be in (0, 1]");
    if (rho <= 0.0) throw config_error("rho must be positive");
    if (K < 1) throw config_error("K must be >= 1");
    if (cg_iters < 1 || cg_tol <= 0.0) throw config_error("invalid CG budget");
}

ConsistencyConfig ConsistencyConfig::stage1_defaults() {
    ConsistencyConfig c;
    c.K = 2;
    c.lambda1 = 4.0;
    c.lambda2_0 = 20.0;
    c.rho = 1.0;
    c.lambda2_decay_gamma = 0.9;
    c.mu = 0.05;
    return c;
}

ConsistencyConfig ConsistencyConfig::stage2_defaults() {
    ConsistencyConfig c;
    c.K = 6;
    c.lambda1 = 2.0;
    c.lambda2_0 = 0.0;
    c.rho = 0.2;
    c.lambda2_decay_gamma = 0.9;
    c.mu = 0.05;
    return c;
}

double effective_lambda2(const ConsistencyConfig& cfg, int step_index) {
    return cfg.lambda2_0 * std::pow(cfg.lambda2_decay_gamma, step_index);
}

GradField grad_operator(const Image& image) {
    int h = image.height(), w = image.width();
    GradField f(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            f.gx(i, j) = j + 1 < w ? image(i, j + 1) - image(i, j) : 0.0;
            f.gy(i, j) = i + 1 < h ? image(i + 1, j) - image(i, j) : 0.0;
        }
    return f;
}

Image grad_adjoint(const GradField& field) {
    int h = field.gx.rows(), w = field.gx.cols();
    Image out(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double v = 0.0;
            if (j + 1 < w) v -= field.gx(i, j);
            if (j >= 1) v += field.gx(i, j - 1);
            if (i + 1 < h) v -= field.gy(i, j);
            if (i >= 1) v += field.gy(i - 1, j);
            out(i, j) = v;
        }
    return out;
}

double tv_isotropic_norm(const GradField& field) {
    double s = 0.0;
    for (size_t i = 0; i < field.gx.size(); ++i)
        s += std::hypot(field.gx.values()[i], field.gy.values()[i]);
    return s;
}

GradField soft_threshold_isotropic(const GradField& field, double tau) {
    if (tau < 0.0) throw config_error("soft_threshold_isotropic: tau must be >= 0");
    GradField out = field;
    if (tau == 0.0) return out;
    for (size_t i = 0; i < out.gx.size(); ++i) {
        double gx = field.gx.values()[i], gy = field.gy.values()[i];
        double m = std::hypot(gx, gy);
        double scale = m > tau ? (m - tau) / m : 0.0;
        out.gx.values()[i] = scale * gx;
        out.gy.values()[i] = scale * gy;
    }
    return out;
}

CgResult cg_solve(const LinearOperator& apply, const std::vector<double>& rhs,
                  std::vector<double>& x, int max_iters, double tol) {
    size_t n = rhs.size();
    if (x.size() != n) x.assign(n, 0.0);
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double bnorm = std::sqrt(dot(rhs, rhs));
    CgResult res;
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        res.converged = true;
        return res;
    }

    std::vector<double> r(n), p(n), ap(n);
    apply(x, ap);
    for (size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    p = r;
    double rr = dot(r, r);
    res.residual = std::sqrt(rr) / bnorm;
    if (res.residual <= tol) {
        res.converged = true;
        return res;
    }

    for (int it = 0; it < max_iters; ++it) {
        apply(p, ap);
        double pap = dot(p, ap);
        if (!std::isfinite(pap))
            throw numeric_error("cg_solve: non-finite curvature at iteration " +
                                std::to_string(it));
        if (pap <= 0.0) break; // left the positive subspace; keep the current iterate
        double alpha = rr / pap;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        double rr_new = dot(r, r);
        if (!std::isfinite(rr_new))
            throw numeric_error("cg_solve: non-finite residual at iteration " +
                                std::to_string(it));
        res.iterations = it + 1;
        res.residual = std::sqrt(rr_new) / bnorm;
        if (res.residual <= tol) {
            res.converged = true;
            return res;
        }
        double beta = rr_new / rr;
        rr = rr_new;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return res;
}

namespace {

// Shared ADMM core. prox_weight 1 gives the sampler consistency step,
// prox_weight 0 the standalone ADMM-TV objective.
Image admm_core(const Image& x0, const Image* x_hat, double prox_weight,
                const Sinogram& measured, const Sinogram* y_aux, const AngularMask& mask,
                const ScanGeometry& geometry, const ConsistencyConfig& cfg, double lambda2_t,
                int iters, AdmmState& state,
                const std::function<void(int, const Image&)>& observer) {
    cfg.validate();
    if (static_cast<int>(mask.keep.size()) != geometry.num_views)
        throw shape_error("consistency: mask does not match geometry");
    if (measured.views() != geometry.num_views || measured.bins() != geometry.num_bins)
        throw shape_error("consistency: sinogram does not match geometry");
    const int h = geometry.image_height, w = geometry.image_width;
    if (x0.height() != h || x0.width() != w)
        throw shape_error("consistency: image does not match geometry");

    const bool use_aux = y_aux != nullptr && lambda2_t > 0.0;
    const bool use_tv = cfg.mu > 0.0;
    const double lam1 = cfg.lambda1, lam2 = use_aux ? lambda2_t : 0.0, rho = cfg.rho;

    if (mask.kept_count() == 0 && !use_aux && lam1 > 0.0)
        std::cerr << "warning: consistency step with zero kept views and no auxiliary data; "
                     "the prior term dominates\n";

    if (!state.initialized) {
        state.q = GradField(h, w);
        state.omega_dual = GradField(h, w);
        state.initialized = true;
    }

    // Per-view fidelity weights for the combined adjoint pass.
    std::vector<double> view_w(geometry.num_views);
    for (int v = 0; v < geometry.num_views; ++v)
        view_w[v] = mask.keep[v] ? lam1 : lam2;

    Sinogram work(geometry.num_views, geometry.num_bins);
    Image img_tmp(h, w);

    // rhs data part: prox*xhat + At(lam1 M y + lam2 (J-M) y_aux)
    Image rhs_data(h, w);
    {
        for (int v = 0; v < geometry.num_views; ++v)
            for (int b = 0; b < geometry.num_bins; ++b)
                work(v, b) = mask.keep[v] ? lam1 * measured(v, b)
                                          : (use_aux ? lam2 * (*y_aux)(v, b) : 0.0);
        back_project_into(work, geometry, rhs_data);
        if (x_hat && prox_weight > 0.0) rhs_data.grid.axpy(prox_weight, x_hat->grid);
    }

    const bool any_fidelity = lam1 > 0.0 || lam2 > 0.0;
    Image x = x0;

    LinearOperator apply = [&](const std::vector<double>& in, std::vector<double>& out) {
        Image xi(Grid(h, w));
        xi.grid.values() = in;
        Image acc(h, w);
        if (prox_weight > 0.0) acc.grid.axpy(prox_weight, xi.grid);
        if (any_fidelity) {
            forward_project_into(xi, geometry, work);
            for (int v = 0; v < geometry.num_views; ++v) {
                if (view_w[v] == 0.0) {
                    for (int b = 0; b < geometry.num_bins; ++b) work(v, b) = 0.0;
                } else if (view_w[v] != 1.0) {
                    for (int b = 0; b < geometry.num_bins; ++b) work(v, b) *= view_w[v];
                }
            }
            back_project_into(work, geometry, img_tmp);
            acc.grid += img_tmp.grid;
        }
        if (use_tv) {
            GradField g = grad_operator(xi);
            acc.grid.axpy(rho, grad_adjoint(g).grid);
        }
        out = acc.grid.values();
    };

    for (int k = 0; k < iters; ++k) {
        // x-update: CG on the normal equations of the quadratic terms
        std::vector<double> rhs = rhs_data.grid.values();
        if (use_tv) {
            GradField qmw = state.q;
            qmw.gx -= state.omega_dual.gx;
            qmw.gy -= state.omega_dual.gy;
            Image dt = grad_adjoint(qmw);
            for (size_t i = 0; i < rhs.size(); ++i) rhs[i] += rho * dt.grid.values()[i];
        }
        std::vector<double> sol = x.grid.values(); // warm start from current iterate
        cg_solve(apply, rhs, sol, cfg.cg_iters, cfg.cg_tol);
        x.grid.values() = sol;
        if (!x.grid.all_finite())
            throw numeric_error("consistency: non-finite iterate at ADMM iteration " +
                                std::to_string(k));

        if (use_tv) {
            // q-update: shrink Dx + omega; dual update in closed form
            GradField dx = grad_operator(x);
            GradField arg = dx;
            arg.gx += state.omega_dual.gx;
            arg.gy += state.omega_dual.gy;
            state.q = soft_threshold_isotropic(arg, cfg.mu / rho);
            state.omega_dual.gx += dx.gx - state.q.gx;
            state.omega_dual.gy += dx.gy - state.q.gy;
        }
        if (observer) observer(k, x);
        if (!use_tv) break; // quadratic problem: one CG solve is the fixed point
    }
    return x;
}

} // namespace

Image consistency_step(const Image& x_hat, const Sinogram& measured, const Sinogram* y_aux,
                       const AngularMask& mask, const ScanGeometry& geometry,
                       const ConsistencyConfig& cfg, int step_index, AdmmState& state) {
    if (step_index < 0) throw config_error("consistency_step: step_index must be >= 0");
    double lam2 = effective_lambda2(cfg, step_index);
    return admm_core(x_hat, &x_hat, 1.0, measured, y_aux, mask, geometry, cfg, lam2, cfg.K,
                     state, {});
}

double consistency_objective(const Image& x, const Image* x_hat, const Sinogram& measured,
                             const Sinogram* y_aux, const AngularMask& mask,
                             const ScanGeometry& geometry, double lambda1, double lambda2_eff,
                             double mu) {
    double obj = 0.0;
    if (x_hat) {
        Grid d = x.grid;
        d -= x_hat->grid;
        obj += 0.5 * d.dot(d);
    }
    if (lambda1 > 0.0 || (y_aux && lambda2_eff > 0.0)) {
        Sinogram ax = forward_project(x, geometry);
        double meas = 0.0, aux = 0.0;
        for (int v = 0; v < geometry.num_views; ++v)
            for (int b = 0; b < geometry.num_bins; ++b) {
                if (mask.keep[v]) {
                    double d = ax(v, b) - measured(v, b);
                    meas += d * d;
                } else if (y_aux) {
                    double d = ax(v, b) - (*y_aux)(v, b);
                    aux += d * d;
                }
            }
        obj += 0.5 * lambda1 * meas;
        if (y_aux) obj += 0.5 * lambda2_eff * aux;
    }
    if (mu > 0.0) obj += mu * tv_isotropic_norm(grad_operator(x));
    return obj;
}

Image admm_tv_reconstruct(const Sinogram& measured, const AngularMask& mask,
                          const ScanGeometry& geometry, const ConsistencyConfig& cfg,
                          int outer_iters,
                          const std::function<void(int, const Image&)>& observer) {
    if (mask.kept_count() == 0)
        throw config_error("admm_tv_reconstruct: at least one kept view required");
    if (outer_iters < 1) throw config_error("admm_tv_reconstruct: outer_iters must be >= 1");
    Image init = fbp_reconstruct(measured, geometry, FilterSpec{FilterKind::ramp_hann, 1.0},
                                 &mask);
    AdmmState state;
    return admm_core(init, nullptr, 0.0, measured, nullptr, mask, geometry, cfg, 0.0,
                     outer_iters, state, observer);
}

} // namespace lact
