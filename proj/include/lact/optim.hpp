#pragma once

#include <functional>
#include <vector>

#include "lact/geometry.hpp"
#include "lact/grid.hpp"

namespace lact {

/// Weights and solver budget for the per-step data-consistency problem
///   min 1/2|x-xhat|^2 + lambda1/2|M(Ax-y)|^2
///     + lambda2_t/2|(J-M)(Ax-y_aux)|^2 + mu TV(Dx),
/// with lambda2_t = lambda2_0 * gamma^step decaying across sampling steps.
struct ConsistencyConfig {
    double lambda1 = 0.0;
    double lambda2_0 = 0.0;
    double lambda2_decay_gamma = 0.9;
    double mu = 0.05;
    double rho = 1.0;
    int K = 1; // ADMM outer iterations per call
    int cg_iters = 30;
    double cg_tol = 1e-6;

    void validate() const;

    /// Stage-I sampling defaults: K=2, lambda1=4.0, lambda2=20.0, rho=1.0.
    static ConsistencyConfig stage1_defaults();
    /// Stage-II sampling defaults: K=6, lambda1=2.0, lambda2=0.0, rho=0.2.
    static ConsistencyConfig stage2_defaults();
};

double effective_lambda2(const ConsistencyConfig& cfg, int step_index);

/// ADMM splitting variables, warm-started across consecutive sampler steps.
struct AdmmState {
    bool initialized = false;
    GradField q;          // surrogate for Dx
    GradField omega_dual; // scaled dual variable
};

/// Forward finite differences with replicate boundary (last row/col zero).
GradField grad_operator(const Image& image);

/// Exact adjoint of grad_operator.
Image grad_adjoint(const GradField& field);

/// Sum over pixels of sqrt(gx^2 + gy^2).
double tv_isotropic_norm(const GradField& field);

/// Pixelwise shrinkage of the gradient magnitude by tau (prox of iso-TV).
GradField soft_threshold_isotropic(const GradField& field, double tau);

struct CgResult {
    int iterations = 0;
    double residual = 0.0; // relative to |rhs|
    bool converged = false;
};

using LinearOperator = std::function<void(const std::vector<double>&, std::vector<double>&)>;

/// Conjugate gradients for symmetric positive (semi)definite operators.
/// x holds the initial guess on entry and the solution on exit.
CgResult cg_solve(const LinearOperator& apply, const std::vector<double>& rhs,
                  std::vector<double>& x, int max_iters, double tol);

/// One sampler-step data-consistency correction: K ADMM iterations on the
/// objective above. Pass y_aux = nullptr to drop the auxiliary term.
/// state persists the splitting/dual variables between calls.
Image consistency_step(const Image& x_hat, const Sinogram& measured, const Sinogram* y_aux,
                       const AngularMask& mask, const ScanGeometry& geometry,
                       const ConsistencyConfig& cfg, int step_index, AdmmState& state);

/// Evaluate the consistency objective; x_hat = nullptr drops the proximity
/// term, y_aux = nullptr drops the auxiliary term.
double consistency_objective(const Image& x, const Image* x_hat, const Sinogram& measured,
                             const Sinogram* y_aux, const AngularMask& mask,
                             const ScanGeometry& geometry, double lambda1, double lambda2_eff,
                             double mu);

/// Standalone ADMM-TV reconstruction (no proximity term), FBP-initialized.
/// The observer, when set, sees the iterate after every outer iteration.
Image admm_tv_reconstruct(const Sinogram& measured, const AngularMask& mask,
                          const ScanGeometry& geometry, const ConsistencyConfig& cfg,
                          int outer_iters,
                          const std::function<void(int, const Image&)>& observer = {});

} // namespace lact
