#pragma once

// Procedural defect images with exact ground-truth masks.

#include <cstdint>
#include <string>
#include <vector>

#include "clipsam/mask.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

inline constexpr std::size_t kMinExtent = 32;
inline constexpr double kPixelNoise = 0.02;  // σ of the per-pixel noise
inline constexpr double kMaxDefectFraction = 0.3;

struct SyntheticSample {
    Tensor image;  // extent×extent, values in [0, 1]
    BinaryMask mask;
    std::string category;
    std::string defect_kind;
    Tensor background;  // the image before defects were painted in
};

const std::vector<std::string>& synthetic_categories();
const std::vector<std::string>& defect_kinds();

/// Textured backgrounds (category texture, smooth gradient, pixel noise)
/// with one or two defects of a single kind: bright or dark blobs, scratch
/// lines or missing-patch rectangles. Sample i depends only on (seed, i).
std::vector<SyntheticSample> generate_dataset(std::size_t count, std::size_t extent, std::uint64_t seed);

SyntheticSample generate_sample(std::size_t extent, std::uint64_t seed);

}  // namespace clipsam
