#pragma once

// 8-bit binary PGM (P5) grayscale and PPM (P6) color files.

#include <array>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "clipsam/mask.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Values mapped from [0, 255] to [0, 1]. Accepts maxval up to 255.
Tensor load_image(const std::filesystem::path& path);

/// Values in [0, 1] written as round(255·v). Out-of-range values throw.
void save_image(const std::filesystem::path& path, const Tensor& image);

BinaryMask load_mask(const std::filesystem::path& path);
/// 0 and 255 only.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

using Rgb = std::array<unsigned char, 3>;

/// H×W RGB image, row-major.
struct ColorImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Rgb> pixels;
};

void save_color_image(const std::filesystem::path& path, const ColorImage& image);

/// Grayscale image tinted red in proportion to `heat` (both H×W in [0, 1]).
ColorImage heat_overlay(const Tensor& image, const Tensor& heat);

}  // namespace clipsam
