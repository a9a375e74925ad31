#pragma once

#include <vector>

#include "lact/errors.hpp"

namespace lact {

/// Dense channels x height x width tensor (feature maps).
struct Tensor3 {
    int ch = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int ch_, int h_, int w_, double fill = 0.0)
        : ch(ch_), h(h_), w(w_), v(static_cast<size_t>(ch_) * h_ * w_, fill) {
        if (ch_ <= 0 || h_ <= 0 || w_ <= 0)
            throw config_error("Tensor3 dimensions must be positive");
    }

    double& at(int c, int i, int j) { return v[(static_cast<size_t>(c) * h + i) * w + j]; }
    double at(int c, int i, int j) const { return v[(static_cast<size_t>(c) * h + i) * w + j]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor3& o) const { return ch == o.ch && h == o.h && w == o.w; }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.ch == b.ch && a.h == b.h && a.w == b.w && a.v == b.v;
    }
};

} // namespace lact
