#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace clipsam::kernels {

namespace {

constexpr std::size_t kTileM = 4;
constexpr std::size_t kTileN = 8;

// C[i][j] (+)= Σ_p A[p][i] · B[p][j] with A stored k×m. Every output element
// accumulates its products in ascending p, so the result does not depend on
// the tiling.
void gemm_tiled(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
                std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    std::size_t i = 0;
    for (; i + kTileM <= m; i += kTileM) {
        std::size_t j = 0;
        for (; j + kTileN <= n; j += kTileN) {
            double acc[kTileM][kTileN];
            for (std::size_t r = 0; r < kTileM; ++r)
                for (std::size_t q = 0; q < kTileN; ++q) acc[r][q] = c[(i + r) * n + j + q];
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j;
                for (std::size_t r = 0; r < kTileM; ++r) {
                    const double av = a[p * m + i + r];
                    for (std::size_t q = 0; q < kTileN; ++q) acc[r][q] += av * brow[q];
                }
            }
            for (std::size_t r = 0; r < kTileM; ++r)
                for (std::size_t q = 0; q < kTileN; ++q) c[(i + r) * n + j + q] = acc[r][q];
        }
        for (; j < n; ++j) {
            for (std::size_t r = 0; r < kTileM; ++r) {
                double acc = c[(i + r) * n + j];
                for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i + r] * b[p * n + j];
                c[(i + r) * n + j] = acc;
            }
        }
    }
    for (; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[p * m + i];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    // Packing A column-major keeps the tile loop on unit-stride loads.
    std::vector<double> at(m * k);
    transpose(a, at.data(), m, k);
    gemm_tiled(at.data(), b, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    gemm_tiled(a, b, c, m, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    std::vector<double> bt(k * n);
    transpose(b, bt.data(), n, k);
    gemm_nn(a, bt.data(), c, m, k, n, accumulate);
}

void transpose(const double* in, double* out, std::size_t rows, std::size_t cols) {
    constexpr std::size_t kBlock = 16;
    for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
        const std::size_t i1 = std::min(rows, i0 + kBlock);
        for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
            const std::size_t j1 = std::min(cols, j0 + kBlock);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = in[i * cols + j];
        }
    }
}

void im2col(const double* x, std::size_t h, std::size_t w, std::size_t c, std::size_t kh, std::size_t kw,
            double* col) {
    const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
    const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
    const std::size_t row_len = kh * kw * c;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xx = 0; xx < w; ++xx) {
            double* dst = col + (y * w + xx) * row_len;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                for (std::size_t kx = 0; kx < kw; ++kx, dst += c) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - pw;
                    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
                        sx >= static_cast<std::ptrdiff_t>(w)) {
                        std::fill(dst, dst + c, 0.0);
                    } else {
                        std::memcpy(dst, x + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c,
                                    sizeof(double) * c);
                    }
                }
            }
        }
    }
}

void col2im(const double* col, std::size_t h, std::size_t w, std::size_t c, std::size_t kh, std::size_t kw,
            double* x) {
    const auto ph = static_cast<std::ptrdiff_t>(kh / 2);
    const auto pw = static_cast<std::ptrdiff_t>(kw / 2);
    const std::size_t row_len = kh * kw * c;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xx = 0; xx < w; ++xx) {
            const double* src = col + (y * w + xx) * row_len;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                for (std::size_t kx = 0; kx < kw; ++kx, src += c) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - pw;
                    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
                        sx >= static_cast<std::ptrdiff_t>(w))
                        continue;
                    double* dst = x + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
                    for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                }
            }
        }
    }
}

ResampleAxis resample_axis(std::size_t in, std::size_t out) {
    ResampleAxis ax;
    ax.lo.resize(out);
    ax.hi.resize(out);
    ax.frac.resize(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
        double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto lo = static_cast<std::size_t>(std::floor(src));
        ax.lo[i] = lo;
        ax.hi[i] = std::min(lo + 1, in - 1);
        ax.frac[i] = src - static_cast<double>(lo);
    }
    return ax;
}

}  // namespace clipsam::kernels
