#include "lact/metrics.hpp"

#include <cmath>
#include <limits>

namespace lact {

namespace {

void check_pair(const Image& a, const Image& b, const char* op) {
    if (!a.grid.same_shape(b.grid))
        throw shape_error(std::string(op) + ": image shapes differ");
}

} // namespace

double psnr(const Image& test, const Image& ref, double data_range) {
    check_pair(test, ref, "psnr");
    if (data_range <= 0.0) throw config_error("psnr: data_range must be positive");
    double mse = 0.0;
    for (size_t i = 0; i < test.grid.size(); ++i) {
        double d = test.grid.values()[i] - ref.grid.values()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(test.grid.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

double nrmse(const Image& test, const Image& ref) {
    check_pair(test, ref, "nrmse");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < test.grid.size(); ++i) {
        double d = test.grid.values()[i] - ref.grid.values()[i];
        num += d * d;
        den += ref.grid.values()[i] * ref.grid.values()[i];
    }
    if (den == 0.0) throw config_error("nrmse: reference has zero norm");
    return std::sqrt(num / den);
}

double ssim(const Image& test, const Image& ref, double data_range) {
    check_pair(test, ref, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (test.height() < kWin || test.width() < kWin)
        throw shape_error("ssim: images must be at least 11x11");
    if (data_range <= 0.0) throw config_error("ssim: data_range must be positive");

    double kernel[kWin];
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - (kWin - 1) / 2.0;
        kernel[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
        ksum += kernel[i];
    }
    for (int i = 0; i < kWin; ++i) kernel[i] /= ksum;

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const int h = test.height(), w = test.width();

    double acc = 0.0;
    long count = 0;
    for (int r = 0; r + kWin <= h; ++r) {
        for (int c = 0; c + kWin <= w; ++c) {
            double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    double wgt = kernel[i] * kernel[j];
                    double x = test(r + i, c + j), y = ref(r + i, c + j);
                    mx += wgt * x;
                    my += wgt * y;
                    mxx += wgt * x * x;
                    myy += wgt * y * y;
                    mxy += wgt * x * y;
                }
            double vx = mxx - mx * mx;
            double vy = myy - my * my;
            double cov = mxy - mx * my;
            double s = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
            acc += s;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double pcc(const Image& test, const Image& ref) {
    check_pair(test, ref, "pcc");
    size_t n = test.grid.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += test.grid.values()[i];
        my += ref.grid.values()[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = test.grid.values()[i] - mx;
        double dy = ref.grid.values()[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw config_error("pcc: constant image");
    return sxy / std::sqrt(sxx * syy);
}

double nmi(const Image& test, const Image& ref, int bins) {
    check_pair(test, ref, "nmi");
    if (bins < 2) throw config_error("nmi: bins must be >= 2");
    // canonical argument order makes the accumulation order, and hence the
    // result, exactly symmetric
    if (ref.grid.values() < test.grid.values()) return nmi(ref, test, bins);
    auto bin_of = [bins](double v, double lo, double hi) {
        if (hi <= lo) return 0; // single-valued image collapses to one bin
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return b >= bins ? bins - 1 : (b < 0 ? 0 : b);
    };
    double alo = test.grid.min_value(), ahi = test.grid.max_value();
    double blo = ref.grid.min_value(), bhi = ref.grid.max_value();
    if (ahi <= alo || bhi <= blo) return 2.0; // degenerate by convention

    std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
    size_t n = test.grid.size();
    double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        int a = bin_of(test.grid.values()[i], alo, ahi);
        int b = bin_of(ref.grid.values()[i], blo, bhi);
        joint[static_cast<size_t>(a) * bins + b] += inv_n;
    }
    std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
    for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
            pa[a] += joint[static_cast<size_t>(a) * bins + b];
            pb[b] += joint[static_cast<size_t>(a) * bins + b];
        }
    auto entropy = [](const std::vector<double>& p) {
        double h = 0.0;
        for (double x : p)
            if (x > 0.0) h -= x * std::log(x);
        return h;
    };
    double hab = entropy(joint);
    if (hab == 0.0) return 2.0;
    return (entropy(pa) + entropy(pb)) / hab;
}

MetricReport evaluate_pair(const Image& test, const Image& ref, int nmi_bins) {
    double range = ref.grid.max_value() - ref.grid.min_value();
    if (range <= 0.0) range = 1.0;
    MetricReport r;
    r.ssim = ssim(test, ref, range);
    r.psnr_db = psnr(test, ref, range);
    r.nrmse = nrmse(test, ref);
    r.pcc = pcc(test, ref);
    r.nmi = nmi(test, ref, nmi_bins);
    return r;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
    MetricReport m;
    if (reports.empty()) return m;
    for (const auto& r : reports) {
        m.ssim += r.ssim;
        m.psnr_db += r.psnr_db;
        m.nrmse += r.nrmse;
        m.pcc += r.pcc;
        m.nmi += r.nmi;
    }
    double inv = 1.0 / static_cast<double>(reports.size());
    m.ssim *= inv;
    m.psnr_db *= inv;
    m.nrmse *= inv;
    m.pcc *= inv;
    m.nmi *= inv;
    return m;
}

} // namespace lact
