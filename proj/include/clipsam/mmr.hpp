#pragma once

// Mask refinement: binarize the rough foreground map, derive point and box
// prompts from its connected regions, query a mask decoder and fuse the
// confidence-weighted masks back into the rough map.

#include <cstdint>
#include <vector>

#include "clipsam/encoders.hpp"
#include "clipsam/mask.hpp"

namespace clipsam {

inline constexpr double kDefaultBinaryThreshold = 0.47;
inline constexpr std::size_t kDefaultPromptPoints = 3;

/// 1 where value > thr (strict). thr must lie in [0, 1].
BinaryMask binarize(const Tensor& fg, double thr);

struct PointSample {
    std::vector<PromptPoint> points;
    bool no_support = false;  // requested points but the mask was empty
};

/// m points drawn from the union of region pixels: without replacement when
/// at least m pixels exist, with replacement otherwise.
PointSample extract_points(const std::vector<Region>& regions, std::size_t m, std::uint64_t seed);

/// One box per region: its bounds grown by one pixel, clamped to the image.
std::vector<PromptBox> extract_boxes(const std::vector<Region>& regions, std::size_t height, std::size_t width);

/// Min-max scaling to [0, 1]; a constant map becomes all 0.5.
Tensor normalize_map(const Tensor& x);

struct RefineOptions {
    double threshold = kDefaultBinaryThreshold;
    std::size_t points = kDefaultPromptPoints;
    std::uint64_t seed = 0;
};

struct Refinement {
    Tensor refined;  // O_final, H×W in [0, 1]
    BinaryMask binary;
    PromptSet prompts;
    SamMaskSet masks;
    bool no_support = false;
};

/// O_final = normalize(O + Σ_i Σ_j m_i^j · s_i^j). With no boxes the sum is
/// empty and the decoder is not called.
Refinement refine(const Tensor& rough_fg, const Tensor& image, const MaskDecoder& decoder,
                  const RefineOptions& options);

}  // namespace clipsam
