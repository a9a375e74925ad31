#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lact/errors.hpp"

namespace lact {

/// Dense row-major 2-D grid of doubles. The common storage for images,
/// sinograms and gradient channels.
class Grid {
  public:
    Grid() = default;
    Grid(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {
        if (rows <= 0 || cols <= 0)
            throw config_error("Grid dimensions must be positive");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return v_.size(); }

    double& operator()(int r, int c) { return v_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void fill(double x) { v_.assign(v_.size(), x); }

    Grid& operator+=(const Grid& o) {
        require_same_shape(o, "operator+=");
        for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    Grid& operator-=(const Grid& o) {
        require_same_shape(o, "operator-=");
        for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Grid& operator*=(double a) {
        for (double& x : v_) x *= a;
        return *this;
    }

    /// this += a * o
    void axpy(double a, const Grid& o) {
        require_same_shape(o, "axpy");
        for (size_t i = 0; i < v_.size(); ++i) v_[i] += a * o.v_[i];
    }

    double dot(const Grid& o) const {
        require_same_shape(o, "dot");
        double s = 0.0;
        for (size_t i = 0; i < v_.size(); ++i) s += v_[i] * o.v_[i];
        return s;
    }

    double norm2() const { return std::sqrt(dot(*this)); }

    double min_value() const {
        double m = v_.empty() ? 0.0 : v_[0];
        for (double x : v_) m = std::min(m, x);
        return m;
    }
    double max_value() const {
        double m = v_.empty() ? 0.0 : v_[0];
        for (double x : v_) m = std::max(m, x);
        return m;
    }

    friend Grid operator+(Grid a, const Grid& b) { return a += b; }
    friend Grid operator-(Grid a, const Grid& b) { return a -= b; }
    friend Grid operator*(double s, Grid a) { return a *= s; }
    friend bool operator==(const Grid& a, const Grid& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.v_ == b.v_;
    }

  private:
    void require_same_shape(const Grid& o, const char* op) const {
        if (!same_shape(o))
            throw shape_error(std::string(op) + ": grid shapes differ (" +
                              std::to_string(rows_) + "x" + std::to_string(cols_) + " vs " +
                              std::to_string(o.rows_) + "x" + std::to_string(o.cols_) + ")");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> v_;
};

/// Attenuation image, rows = height, cols = width.
struct Image {
    Grid grid;

    Image() = default;
    Image(int height, int width, double fill = 0.0) : grid(height, width, fill) {}
    explicit Image(Grid g) : grid(std::move(g)) {}

    int height() const { return grid.rows(); }
    int width() const { return grid.cols(); }
    double& operator()(int r, int c) { return grid(r, c); }
    double operator()(int r, int c) const { return grid(r, c); }
};

/// Stack of 1-D projections, rows = views, cols = detector bins.
struct Sinogram {
    Grid grid;

    Sinogram() = default;
    Sinogram(int views, int bins, double fill = 0.0) : grid(views, bins, fill) {}
    explicit Sinogram(Grid g) : grid(std::move(g)) {}

    int views() const { return grid.rows(); }
    int bins() const { return grid.cols(); }
    double& operator()(int v, int b) { return grid(v, b); }
    double operator()(int v, int b) const { return grid(v, b); }
};

/// Two-channel gradient field (forward differences in x and y).
struct GradField {
    Grid gx;
    Grid gy;

    GradField() = default;
    GradField(int rows, int cols) : gx(rows, cols, 0.0), gy(rows, cols, 0.0) {}

    bool same_shape(const GradField& o) const {
        return gx.same_shape(o.gx) && gy.same_shape(o.gy);
    }
};

} // namespace lact
