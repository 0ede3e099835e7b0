#pragma once

// Raw row-major dense kernels shared by the differentiable ops.

#include <cstddef>
#include <vector>

namespace clipsam::kernels {

/// C[m×n] (+)= A[m×k] · B[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// C[m×n] (+)= A[k×m]ᵀ · B[k×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// C[m×n] (+)= A[m×k] · B[n×k]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// out[cols×rows] = in[rows×cols]ᵀ
void transpose(const double* in, double* out, std::size_t rows, std::size_t cols);

/// Gathers "same"-padded kh×kw patches of an H×W×C map into rows of length kh·kw·C.
void im2col(const double* x, std::size_t h, std::size_t w, std::size_t c, std::size_t kh, std::size_t kw,
            double* col);

/// Adjoint of im2col: scatters patch rows back into an H×W×C map (accumulating).
void col2im(const double* col, std::size_t h, std::size_t w, std::size_t c, std::size_t kh, std::size_t kw,
            double* x);

/// Linear interpolation taps for half-pixel-center resampling of one axis.
struct ResampleAxis {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    std::vector<double> frac;
};
ResampleAxis resample_axis(std::size_t in, std::size_t out);

}  // namespace clipsam::kernels
