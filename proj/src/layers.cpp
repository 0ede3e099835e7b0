#include "clipsam/layers.hpp"

#include <cmath>

namespace clipsam {

namespace {

// He-uniform bound for weights feeding a ReLU network.
double he_bound(std::size_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

}  // namespace

ConvLayer ConvLayer::create(ParamStore& store, const std::string& prefix, std::size_t kh, std::size_t kw,
                            std::size_t cin, std::size_t cout, Rng& rng) {
    const std::size_t fan_in = kh * kw * cin;
    ConvLayer layer;
    layer.weight = &store.create_uniform(prefix + ".weight", {kh, kw, cin, cout}, he_bound(fan_in), rng);
    layer.bias = &store.create(prefix + ".bias", {cout});
    return layer;
}

Var ConvLayer::operator()(Graph& g, const Var& x) const {
    return ops::conv2d(x, g.param(*weight), g.param(*bias));
}

LinearLayer LinearLayer::create(ParamStore& store, const std::string& prefix, std::size_t din, std::size_t dout,
                                Rng& rng) {
    LinearLayer layer;
    layer.weight = &store.create_uniform(prefix + ".weight", {din, dout}, he_bound(din), rng);
    layer.bias = &store.create(prefix + ".bias", {dout});
    return layer;
}

Var LinearLayer::operator()(Graph& g, const Var& x) const {
    return ops::linear(x, g.param(*weight), g.param(*bias));
}

GruCell GruCell::create(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    GruCell c;
    c.wz = &store.create_uniform(prefix + ".w_z", {d, d}, bound, rng);
    c.wr = &store.create_uniform(prefix + ".w_r", {d, d}, bound, rng);
    c.wn = &store.create_uniform(prefix + ".w_n", {d, d}, bound, rng);
    c.uz = &store.create_uniform(prefix + ".u_z", {d, d}, bound, rng);
    c.ur = &store.create_uniform(prefix + ".u_r", {d, d}, bound, rng);
    c.un = &store.create_uniform(prefix + ".u_n", {d, d}, bound, rng);
    c.bz = &store.create_uniform(prefix + ".b_z", {d}, bound, rng);
    c.br = &store.create_uniform(prefix + ".b_r", {d}, bound, rng);
    c.bn = &store.create_uniform(prefix + ".b_n", {d}, bound, rng);
    c.bhn = &store.create_uniform(prefix + ".b_hn", {d}, bound, rng);
    return c;
}

Var GruCell::operator()(Graph& g, const Var& input, const Var& hidden) const {
    return ops::gru_cell(g, input, hidden, *this);
}

namespace ops {

Var gru_cell(Graph& g, const Var& input, const Var& hidden, const GruCell& cell) {
    if (input.value().rank() != 2 || input.shape() != hidden.shape()) {
        throw ShapeError("gru_cell: input " + shape_str(input.shape()) + " and hidden " + shape_str(hidden.shape()) +
                         " must both be B×d");
    }
    const std::size_t d = input.dim(1);
    if (cell.wz->value.dim(0) != d) throw ShapeError("gru_cell: parameter width does not match input");

    const Var no_bias = g.constant(Tensor({d}));
    auto affine = [&](const Var& x, Param* w, Param* b) {
        return linear(x, g.param(*w), b ? g.param(*b) : no_bias);
    };
    const Var z = sigmoid(add(affine(input, cell.wz, cell.bz), affine(hidden, cell.uz, nullptr)));
    const Var r = sigmoid(add(affine(input, cell.wr, cell.br), affine(hidden, cell.ur, nullptr)));
    const Var n = tanh(add(affine(input, cell.wn, cell.bn), mul(r, affine(hidden, cell.un, cell.bhn))));
    // (1 − z)·ñ + z·h  ==  ñ + z·(h − ñ)
    return add(n, mul(z, sub(hidden, n)));
}

}  // namespace ops

}  // namespace clipsam
