#pragma once

#include <vector>

#include "lact/grid.hpp"

namespace lact {

struct MetricReport {
    double ssim = 0.0;
    double psnr_db = 0.0;
    double nrmse = 0.0;
    double pcc = 0.0;
    double nmi = 0.0;
};

/// 10*log10(range^2 / MSE); +infinity for identical images.
double psnr(const Image& test, const Image& ref, double data_range);

/// |test - ref|_2 / |ref|_2.
double nrmse(const Image& test, const Image& ref);

/// Mean local SSIM, Gaussian window 11x11 sigma 1.5, C1=(0.01 r)^2,
/// C2=(0.03 r)^2, evaluated on the fully-covered interior.
double ssim(const Image& test, const Image& ref, double data_range);

/// Pearson correlation over flattened pixels.
double pcc(const Image& test, const Image& ref);

/// Normalized mutual information (H(A)+H(B))/H(A,B) from an equal-width
/// joint histogram over each image's own min-max; in [1, 2]. A single-valued
/// image returns 2 by convention.
double nmi(const Image& test, const Image& ref, int bins = 256);

/// data_range defaults to ref.max - ref.min.
MetricReport evaluate_pair(const Image& test, const Image& ref, int nmi_bins = 256);

/// Entrywise mean of per-slice reports.
MetricReport average_reports(const std::vector<MetricReport>& reports);

} // namespace lact
