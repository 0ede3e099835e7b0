#pragma once

// Differentiable tensor operations recorded on a Graph.
//
// Spatial maps use H×W×C layout. Every op validates shapes and throws
// ShapeError on violation; outputs are checked finite on record.

#include <cstddef>
#include <vector>

#include "clipsam/autodiff.hpp"

namespace clipsam::ops {

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

/// x[N×din] · w[din×dout] + b[dout]
Var linear(const Var& x, const Var& w, const Var& b);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);

/// Softmax over the last axis with max subtraction.
Var softmax_lastdim(const Var& x);

/// Mean pooling of an H×W×C map with stride equal to the kernel.
/// Ragged trailing windows average over their actual extent.
Var avg_pool2d(const Var& x, std::size_t kh, std::size_t kw);

/// Zero-padded "same" cross-correlation. weight kh×kw×Cin×Cout, bias Cout.
Var conv2d(const Var& x, const Var& weight, const Var& bias);

/// Half-pixel-center bilinear resampling of an h×w×C map to H×W×C.
Var bilinear_resize(const Var& x, std::size_t out_h, std::size_t out_w);

/// Divides each last-axis row by max(‖row‖₂, 1e-12).
Var l2_normalize_rows(const Var& x);

/// Concatenates tensors that agree on all but the last axis.
Var concat_lastdim(const std::vector<Var>& parts);

Var reshape(const Var& x, Shape shape);

/// Picks one index of the last axis, dropping that axis.
Var select_lastdim(const Var& x, std::size_t index);

/// Elementwise arithmetic mean of equally shaped tensors.
Var mean_of(const std::vector<Var>& xs);

/// Σ weights[i]·scalars[i] over single-element tensors.
Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights);

/// Σ of all elements of `x` times the matching element of a constant tensor.
Var dot_const(const Var& x, const Tensor& coeffs);

/// softmax(Q·Kᵀ / sqrt(d_k)) · V with d_k the key width.
Var attention(const Var& q, const Var& k, const Var& v);

}  // namespace clipsam::ops
