#pragma once

#include <cstdint>
#include <vector>

#include "clipsam/autodiff.hpp"
#include "clipsam/rng.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.storage()) v = rng.uniform(lo, hi);
    return t;
}

// Values whose magnitude stays at least `gap` away from zero, so kinked ops
// are not probed across their kink by finite differences.
inline Tensor away_from_zero(Shape shape, Rng& rng, double gap = 0.1) {
    Tensor t(std::move(shape));
    for (auto& v : t.storage()) {
        const double mag = rng.uniform(gap, 1.0);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline Param& add_param(ParamStore& store, const std::string& name, Tensor value) {
    Param& p = store.create(name, value.shape());
    p.value = std::move(value);
    return p;
}

}  // namespace clipsam::testing
