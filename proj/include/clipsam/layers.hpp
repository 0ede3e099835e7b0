#pragma once

#include <string>

#include "clipsam/autodiff.hpp"
#include "clipsam/ops.hpp"

namespace clipsam {

/// Convolution with its own weight/bias pair (`<prefix>.weight`, `<prefix>.bias`).
struct ConvLayer {
    Param* weight = nullptr;
    Param* bias = nullptr;

    static ConvLayer create(ParamStore& store, const std::string& prefix, std::size_t kh, std::size_t kw,
                            std::size_t cin, std::size_t cout, Rng& rng);
    Var operator()(Graph& g, const Var& x) const;
};

/// Row-wise affine map x·W + b for x of shape N×din.
struct LinearLayer {
    Param* weight = nullptr;
    Param* bias = nullptr;

    static LinearLayer create(ParamStore& store, const std::string& prefix, std::size_t din, std::size_t dout,
                              Rng& rng);
    Var operator()(Graph& g, const Var& x) const;
};

/// Gated recurrent unit parameters for width d.
///
///   z  = σ(x·Wz + bz + h·Uz)
///   r  = σ(x·Wr + br + h·Ur)
///   ñ  = tanh(x·Wn + bn + r ⊙ (h·Un + bhn))
///   h' = (1 − z) ⊙ ñ + z ⊙ h
struct GruCell {
    Param* wz = nullptr;
    Param* wr = nullptr;
    Param* wn = nullptr;
    Param* uz = nullptr;
    Param* ur = nullptr;
    Param* un = nullptr;
    Param* bz = nullptr;
    Param* br = nullptr;
    Param* bn = nullptr;
    Param* bhn = nullptr;

    static GruCell create(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng);
    Var operator()(Graph& g, const Var& input, const Var& hidden) const;
};

namespace ops {

/// One GRU step on B×d input and hidden state.
Var gru_cell(Graph& g, const Var& input, const Var& hidden, const GruCell& cell);

}  // namespace ops

}  // namespace clipsam
