#include "clipsam/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "kernels.hpp"

namespace clipsam::ops {

namespace {

void require_rank(const Var& x, std::size_t rank, const char* op) {
    if (x.value().rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
    }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

template <typename F>
Var unary(const Var& x, F&& f_and_df) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    Tensor deriv(xv.shape());
    for (std::size_t i = 0; i < xv.numel(); ++i) {
        auto [y, dy] = f_and_df(xv[i]);
        out[i] = y;
        deriv[i] = dy;
    }
    return x.graph().record(std::move(out), {x}, [x, deriv = std::move(deriv)](const Tensor& g) {
        Tensor gx(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * deriv[i];
        accumulate_grad(x, gx);
    });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " · " + shape_str(b.shape()));
    }
    Tensor out({m, n});
    kernels::gemm_nn(a.value().ptr(), b.value().ptr(), out.ptr(), m, k, n, false);
    return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](const Tensor& g) {
        if (a.requires_grad()) {
            Tensor ga({m, k});
            kernels::gemm_nt(g.ptr(), b.value().ptr(), ga.ptr(), m, n, k, false);
            accumulate_grad(a, ga);
        }
        if (b.requires_grad()) {
            Tensor gb({k, n});
            kernels::gemm_tn(a.value().ptr(), g.ptr(), gb.ptr(), k, m, n, false);
            accumulate_grad(b, gb);
        }
    });
}

Var transpose(const Var& a) {
    require_rank(a, 2, "transpose");
    const std::size_t r = a.dim(0), c = a.dim(1);
    Tensor out({c, r});
    kernels::transpose(a.value().ptr(), out.ptr(), r, c);
    return a.graph().record(std::move(out), {a}, [a, r, c](const Tensor& g) {
        Tensor ga({r, c});
        kernels::transpose(g.ptr(), ga.ptr(), c, r);
        accumulate_grad(a, ga);
    });
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor& g) {
        accumulate_grad(a, g);
        accumulate_grad(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor& g) {
        accumulate_grad(a, g);
        if (b.requires_grad()) {
            Tensor gb = g;
            for (double& v : gb.storage()) v = -v;
            accumulate_grad(b, gb);
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
    return a.graph().record(std::move(out), {a, b}, [a, b](const Tensor& g) {
        if (a.requires_grad()) {
            Tensor ga = g;
            const Tensor& bv = b.value();
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] *= bv[i];
            accumulate_grad(a, ga);
        }
        if (b.requires_grad()) {
            Tensor gb = g;
            const Tensor& av = a.value();
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] *= av[i];
            accumulate_grad(b, gb);
        }
    });
}

Var scale(const Var& a, double factor) {
    Tensor out = a.value();
    for (double& v : out.storage()) v *= factor;
    return a.graph().record(std::move(out), {a}, [a, factor](const Tensor& g) {
        Tensor ga = g;
        for (double& v : ga.storage()) v *= factor;
        accumulate_grad(a, ga);
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    require_rank(x, 2, "linear");
    require_rank(w, 2, "linear");
    const std::size_t n = x.dim(0), din = x.dim(1), dout = w.dim(1);
    if (w.dim(0) != din || b.value().numel() != dout) {
        throw ShapeError("linear: incompatible shapes x" + shape_str(x.shape()) + " w" + shape_str(w.shape()) +
                         " b" + shape_str(b.shape()));
    }
    Tensor out({n, dout});
    const double* bv = b.value().ptr();
    for (std::size_t i = 0; i < n; ++i) std::memcpy(out.ptr() + i * dout, bv, sizeof(double) * dout);
    kernels::gemm_nn(x.value().ptr(), w.value().ptr(), out.ptr(), n, din, dout, true);
    return x.graph().record(std::move(out), {x, w, b}, [x, w, b, n, din, dout](const Tensor& g) {
        if (x.requires_grad()) {
            Tensor gx({n, din});
            kernels::gemm_nt(g.ptr(), w.value().ptr(), gx.ptr(), n, dout, din, false);
            accumulate_grad(x, gx);
        }
        if (w.requires_grad()) {
            Tensor gw({din, dout});
            kernels::gemm_tn(x.value().ptr(), g.ptr(), gw.ptr(), din, n, dout, false);
            accumulate_grad(w, gw);
        }
        if (b.requires_grad()) {
            Tensor gb(b.shape());
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < dout; ++j) gb[j] += g[i * dout + j];
            accumulate_grad(b, gb);
        }
    });
}

Var relu(const Var& x) {
    return unary(x, [](double v) { return std::pair{v > 0.0 ? v : 0.0, v > 0.0 ? 1.0 : 0.0}; });
}

Var sigmoid(const Var& x) {
    return unary(x, [](double v) {
        const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        return std::pair{s, s * (1.0 - s)};
    });
}

Var tanh(const Var& x) {
    return unary(x, [](double v) {
        const double t = std::tanh(v);
        return std::pair{t, 1.0 - t * t};
    });
}

Var softmax_lastdim(const Var& x) {
    const Tensor& xv = x.value();
    if (xv.empty() || xv.rank() == 0) throw ShapeError("softmax_lastdim: empty tensor");
    const std::size_t d = xv.shape().back();
    if (d == 0) throw ShapeError("softmax_lastdim: empty last axis");
    const std::size_t rows = xv.numel() / d;
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.ptr() + r * d;
        double* o = out.ptr() + r * d;
        const double mx = *std::max_element(in, in + d);
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            o[j] = std::exp(in[j] - mx);
            total += o[j];
        }
        for (std::size_t j = 0; j < d; ++j) o[j] /= total;
    }
    // The closure reads the output back from the tape: it is recorded at index `yid`.
    Graph& graph = x.graph();
    const std::size_t yid = graph.size();
    return graph.record(std::move(out), {x}, [x, &graph, yid, rows, d](const Tensor& g) {
        const Tensor& p = graph.value(yid);
        Tensor gx(p.shape());
        for (std::size_t r = 0; r < rows; ++r) {
            const double* pr = p.ptr() + r * d;
            const double* gr = g.ptr() + r * d;
            double dotv = 0.0;
            for (std::size_t j = 0; j < d; ++j) dotv += pr[j] * gr[j];
            for (std::size_t j = 0; j < d; ++j) gx[r * d + j] = pr[j] * (gr[j] - dotv);
        }
        accumulate_grad(x, gx);
    });
}

Var avg_pool2d(const Var& x, std::size_t kh, std::size_t kw) {
    require_rank(x, 3, "avg_pool2d");
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (kh == 0 || kw == 0) throw ShapeError("avg_pool2d: kernel extents must be >= 1");
    if (kh > h || kw > w) {
        throw ShapeError("avg_pool2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " exceeds input " + shape_str(x.shape()));
    }
    const std::size_t oh = (h + kh - 1) / kh, ow = (w + kw - 1) / kw;
    Tensor out({oh, ow, c});
    const Tensor& xv = x.value();
    for (std::size_t oy = 0; oy < oh; ++oy) {
        const std::size_t y0 = oy * kh, y1 = std::min(h, y0 + kh);
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t x0 = ox * kw, x1 = std::min(w, x0 + kw);
            double* o = out.ptr() + (oy * ow + ox) * c;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t xx = x0; xx < x1; ++xx) {
                    const double* in = xv.ptr() + (y * w + xx) * c;
                    for (std::size_t ch = 0; ch < c; ++ch) o[ch] += in[ch];
                }
            const double inv = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
            for (std::size_t ch = 0; ch < c; ++ch) o[ch] *= inv;
        }
    }
    return x.graph().record(std::move(out), {x}, [x, h, w, c, kh, kw, oh, ow](const Tensor& g) {
        Tensor gx({h, w, c});
        for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::size_t y0 = oy * kh, y1 = std::min(h, y0 + kh);
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t x0 = ox * kw, x1 = std::min(w, x0 + kw);
                const double inv = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
                const double* go = g.ptr() + (oy * ow + ox) * c;
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t xx = x0; xx < x1; ++xx) {
                        double* d = gx.ptr() + (y * w + xx) * c;
                        for (std::size_t ch = 0; ch < c; ++ch) d[ch] += go[ch] * inv;
                    }
            }
        }
        accumulate_grad(x, gx);
    });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
    require_rank(x, 3, "conv2d");
    require_rank(weight, 4, "conv2d");
    const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2);
    const std::size_t kh = weight.dim(0), kw = weight.dim(1), cout = weight.dim(3);
    if (weight.dim(2) != cin) {
        throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                         std::to_string(weight.dim(2)));
    }
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");
    if (bias.value().numel() != cout) throw ShapeError("conv2d: bias length must equal output channels");

    const std::size_t pixels = h * w, row_len = kh * kw * cin;
    const bool pointwise = kh == 1 && kw == 1;
    Tensor col;
    if (!pointwise) {
        col = Tensor({pixels, row_len});
        kernels::im2col(x.value().ptr(), h, w, cin, kh, kw, col.ptr());
    }
    const double* colp = pointwise ? x.value().ptr() : col.ptr();

    Tensor out({h, w, cout});
    const double* bv = bias.value().ptr();
    for (std::size_t i = 0; i < pixels; ++i) std::memcpy(out.ptr() + i * cout, bv, sizeof(double) * cout);
    kernels::gemm_nn(colp, weight.value().ptr(), out.ptr(), pixels, row_len, cout, true);

    return x.graph().record(
        std::move(out), {x, weight, bias},
        [x, weight, bias, col = std::move(col), pointwise, h, w, cin, kh, kw, cout, pixels, row_len](const Tensor& g) {
            const double* colp = pointwise ? x.value().ptr() : col.ptr();
            if (weight.requires_grad()) {
                Tensor gw(weight.shape());
                kernels::gemm_tn(colp, g.ptr(), gw.ptr(), row_len, pixels, cout, false);
                accumulate_grad(weight, gw);
            }
            if (bias.requires_grad()) {
                Tensor gb(bias.shape());
                for (std::size_t i = 0; i < pixels; ++i)
                    for (std::size_t j = 0; j < cout; ++j) gb[j] += g[i * cout + j];
                accumulate_grad(bias, gb);
            }
            if (x.requires_grad()) {
                Tensor gx({h, w, cin});
                if (pointwise) {
                    kernels::gemm_nt(g.ptr(), weight.value().ptr(), gx.ptr(), pixels, cout, row_len, false);
                } else {
                    std::vector<double> gcol(pixels * row_len);
                    kernels::gemm_nt(g.ptr(), weight.value().ptr(), gcol.data(), pixels, cout, row_len, false);
                    kernels::col2im(gcol.data(), h, w, cin, kh, kw, gx.ptr());
                }
                accumulate_grad(x, gx);
            }
        });
}

Var bilinear_resize(const Var& x, std::size_t out_h, std::size_t out_w) {
    require_rank(x, 3, "bilinear_resize");
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (out_h == 0 || out_w == 0 || h == 0 || w == 0) throw ShapeError("bilinear_resize: zero extent");
    if (h == out_h && w == out_w) {
        return x.graph().record(x.value(), {x}, [x](const Tensor& g) { accumulate_grad(x, g); });
    }
    auto ry = kernels::resample_axis(h, out_h);
    auto rx = kernels::resample_axis(w, out_w);
    const Tensor& xv = x.value();
    Tensor out({out_h, out_w, c});
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double fy = ry.frac[oy];
        const double* r0 = xv.ptr() + ry.lo[oy] * w * c;
        const double* r1 = xv.ptr() + ry.hi[oy] * w * c;
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double fx = rx.frac[ox];
            const std::size_t a = rx.lo[ox] * c, b = rx.hi[ox] * c;
            double* o = out.ptr() + (oy * out_w + ox) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double top = r0[a + ch] * (1.0 - fx) + r0[b + ch] * fx;
                const double bot = r1[a + ch] * (1.0 - fx) + r1[b + ch] * fx;
                o[ch] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    return x.graph().record(std::move(out), {x},
                            [x, ry = std::move(ry), rx = std::move(rx), h, w, c, out_h, out_w](const Tensor& g) {
                                Tensor gx({h, w, c});
                                for (std::size_t oy = 0; oy < out_h; ++oy) {
                                    const double fy = ry.frac[oy];
                                    double* r0 = gx.ptr() + ry.lo[oy] * w * c;
                                    double* r1 = gx.ptr() + ry.hi[oy] * w * c;
                                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                                        const double fx = rx.frac[ox];
                                        const std::size_t a = rx.lo[ox] * c, b = rx.hi[ox] * c;
                                        const double* go = g.ptr() + (oy * out_w + ox) * c;
                                        for (std::size_t ch = 0; ch < c; ++ch) {
                                            const double v = go[ch];
                                            r0[a + ch] += v * (1.0 - fy) * (1.0 - fx);
                                            r0[b + ch] += v * (1.0 - fy) * fx;
                                            r1[a + ch] += v * fy * (1.0 - fx);
                                            r1[b + ch] += v * fy * fx;
                                        }
                                    }
                                }
                                accumulate_grad(x, gx);
                            });
}

Var l2_normalize_rows(const Var& x) {
    constexpr double kEps = 1e-12;
    const Tensor& xv = x.value();
    if (xv.rank() == 0 || xv.shape().back() == 0) throw ShapeError("l2_normalize_rows: empty rows");
    const std::size_t d = xv.shape().back();
    const std::size_t rows = xv.numel() / d;
    Tensor out(xv.shape());
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.ptr() + r * d;
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) ss += in[j] * in[j];
        const double nrm = std::max(std::sqrt(ss), kEps);
        norms[r] = nrm;
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] = in[j] / nrm;
    }
    return x.graph().record(std::move(out), {x}, [x, norms = std::move(norms), rows, d](const Tensor& g) {
        const Tensor& xv = x.value();
        Tensor gx(xv.shape());
        for (std::size_t r = 0; r < rows; ++r) {
            const double* in = xv.ptr() + r * d;
            const double* gr = g.ptr() + r * d;
            const double nrm = norms[r];
            double* o = gx.ptr() + r * d;
            if (nrm <= kEps) {
                // Clamped branch: y = x / eps is linear in x.
                for (std::size_t j = 0; j < d; ++j) o[j] = gr[j] / nrm;
                continue;
            }
            double dotv = 0.0;
            for (std::size_t j = 0; j < d; ++j) dotv += in[j] * gr[j];
            const double inv3 = 1.0 / (nrm * nrm * nrm);
            for (std::size_t j = 0; j < d; ++j) o[j] = gr[j] / nrm - in[j] * dotv * inv3;
        }
        accumulate_grad(x, gx);
    });
}

Var concat_lastdim(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_lastdim: no inputs");
    Shape lead = parts.front().shape();
    lead.pop_back();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        Shape s = p.shape();
        const std::size_t wd = s.back();
        s.pop_back();
        if (s != lead) throw ShapeError("concat_lastdim: leading shapes differ");
        widths.push_back(wd);
        total += wd;
    }
    const std::size_t rows = shape_numel(lead);
    Shape out_shape = lead;
    out_shape.push_back(total);
    Tensor out(out_shape);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const double* src = parts[k].value().ptr();
        for (std::size_t r = 0; r < rows; ++r)
            std::memcpy(out.ptr() + r * total + offset, src + r * widths[k], sizeof(double) * widths[k]);
        offset += widths[k];
    }
    return parts.front().graph().record(std::move(out), parts, [parts, widths, rows, total](const Tensor& g) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (parts[k].requires_grad()) {
                Tensor gp(parts[k].shape());
                for (std::size_t r = 0; r < rows; ++r)
                    std::memcpy(gp.ptr() + r * widths[k], g.ptr() + r * total + offset, sizeof(double) * widths[k]);
                accumulate_grad(parts[k], gp);
            }
            offset += widths[k];
        }
    });
}

Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return x.graph().record(std::move(out), {x}, [x](const Tensor& g) {
        accumulate_grad(x, g.reshaped(x.shape()));
    });
}

Var select_lastdim(const Var& x, std::size_t index) {
    const Tensor& xv = x.value();
    if (xv.rank() == 0) throw ShapeError("select_lastdim: scalar input");
    const std::size_t d = xv.shape().back();
    if (index >= d) throw ShapeError("select_lastdim: index out of range");
    Shape s = xv.shape();
    s.pop_back();
    if (s.empty()) s.push_back(1);
    const std::size_t rows = xv.numel() / d;
    Tensor out(s);
    for (std::size_t r = 0; r < rows; ++r) out[r] = xv[r * d + index];
    return x.graph().record(std::move(out), {x}, [x, rows, d, index](const Tensor& g) {
        Tensor gx(x.shape());
        for (std::size_t r = 0; r < rows; ++r) gx[r * d + index] = g[r];
        accumulate_grad(x, gx);
    });
}

Var mean_of(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("mean_of: no inputs");
    Tensor out(xs.front().shape());
    for (const Var& v : xs) {
        if (v.shape() != out.shape()) throw ShapeError("mean_of: shape mismatch");
        const Tensor& vv = v.value();
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vv[i];
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (double& v : out.storage()) v *= inv;
    return xs.front().graph().record(std::move(out), xs, [xs, inv](const Tensor& g) {
        Tensor gi = g;
        for (double& v : gi.storage()) v *= inv;
        for (const Var& v : xs) accumulate_grad(v, gi);
    });
}

Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
    if (scalars.empty() || scalars.size() != weights.size()) {
        throw ShapeError("weighted_sum: need equal, nonzero counts of terms and weights");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].value().numel() != 1) throw ShapeError("weighted_sum: terms must be scalars");
        total += weights[i] * scalars[i].value()[0];
    }
    return scalars.front().graph().record(Tensor::scalar(total), scalars, [scalars, weights](const Tensor& g) {
        for (std::size_t i = 0; i < scalars.size(); ++i) {
            Tensor gi(scalars[i].shape());
            gi[0] = g[0] * weights[i];
            accumulate_grad(scalars[i], gi);
        }
    });
}

Var dot_const(const Var& x, const Tensor& coeffs) {
    if (x.value().numel() != coeffs.numel()) throw ShapeError("dot_const: size mismatch");
    double total = 0.0;
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < xv.numel(); ++i) total += xv[i] * coeffs[i];
    return x.graph().record(Tensor::scalar(total), {x}, [x, coeffs](const Tensor& g) {
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] = g[0] * coeffs[i];
        accumulate_grad(x, gx);
    });
}

Var attention(const Var& q, const Var& k, const Var& v) {
    require_rank(q, 2, "attention");
    require_rank(k, 2, "attention");
    require_rank(v, 2, "attention");
    if (q.dim(1) != k.dim(1)) throw ShapeError("attention: query/key widths differ");
    if (k.dim(0) != v.dim(0)) throw ShapeError("attention: key/value counts differ");
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.dim(1)));
    Var scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
    return matmul(softmax_lastdim(scores), v);
}

}  // namespace clipsam::ops
