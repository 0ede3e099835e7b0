#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clipsam/tensor.hpp"

namespace clipsam {

/// H×W grid of {0,1} values.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(std::size_t height, std::size_t width) : h_(height), w_(width), bits_(height * width, 0) {}

    /// 1 where `map` is nonzero. `map` must be rank 2.
    static BinaryMask from_tensor(const Tensor& map);

    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }
    std::size_t size() const noexcept { return bits_.size(); }

    std::uint8_t operator()(std::size_t y, std::size_t x) const { return bits_[y * w_ + x]; }
    void set(std::size_t y, std::size_t x, bool on) { bits_[y * w_ + x] = on ? 1 : 0; }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }

    std::size_t count() const noexcept;
    Tensor to_tensor() const;

    bool operator==(const BinaryMask&) const = default;

private:
    std::size_t h_ = 0;
    std::size_t w_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct Pixel {
    std::size_t y = 0;
    std::size_t x = 0;
    bool operator==(const Pixel&) const = default;
};

/// Inclusive bounding rectangle.
struct Bounds {
    std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;
    bool operator==(const Bounds&) const = default;
};

struct Region {
    std::vector<Pixel> pixels;  // row-major order
    Bounds bounds;
};

/// 8-connected regions, numbered in row-major order of their first pixel.
std::vector<Region> connected_components(const BinaryMask& mask);

/// Per-pixel labels (0 = background, 1..n in row-major discovery order).
std::vector<std::size_t> label_image(const BinaryMask& mask);

/// Prompt point at column x, row y.
struct PromptPoint {
    std::size_t x = 0;
    std::size_t y = 0;
    bool operator==(const PromptPoint&) const = default;
};

/// Box with top-left corner at column x, row y, spanning h rows and w columns.
struct PromptBox {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    bool operator==(const PromptBox&) const = default;
};

struct PromptSet {
    std::vector<PromptPoint> points;
    std::vector<PromptBox> boxes;
    bool operator==(const PromptSet&) const = default;
};

/// Text form: one `P x y` line per point, then one `B x y h w` line per box.
void write_prompts(std::ostream& os, const PromptSet& prompts);
PromptSet read_prompts(std::istream& is);

}  // namespace clipsam
