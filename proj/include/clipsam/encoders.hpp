#pragma once

// Deterministic stand-ins for the vision-language and promptable-mask
// foundation models. The abstract interfaces are the seam where adapters for
// real checkpoints would plug in.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "clipsam/mask.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

struct EncoderConfig {
    std::size_t text_dim = 64;   // c_t
    std::size_t token_dim = 16;  // C
    std::size_t grid_h = 16;
    std::size_t grid_w = 16;
    std::size_t stages = 4;
    double token_gain = 16.0;  // scale of the 1→C projection and its bias
    std::uint64_t seed = 7;

    void validate() const;
};

/// Patch tokens of each encoder stage, each grid_h×grid_w×C.
struct StageTokens {
    std::vector<Tensor> stages;
    std::size_t count() const noexcept { return stages.size(); }
};

/// Masks and confidences from a promptable decoder, three per box.
struct SamMaskSet {
    std::vector<std::array<BinaryMask, 3>> masks;
    std::vector<std::array<double, 3>> scores;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual std::size_t dim() const = 0;
    virtual Tensor encode(std::string_view sentence) const = 0;
};

class ImageEncoder {
public:
    virtual ~ImageEncoder() = default;
    virtual StageTokens encode(const Tensor& image) const = 0;
};

class MaskDecoder {
public:
    virtual ~MaskDecoder() = default;
    virtual SamMaskSet decode(const Tensor& image, const Tensor& heatmap, const PromptSet& prompts) const = 0;
};

/// Unit vector of length c_t driven by a seeded hash of the sentence.
Tensor encode_text_mock(std::string_view sentence, const EncoderConfig& cfg);

/// Pools a grayscale image to the token grid, then lifts each cell value x
/// to C channels with a fixed per-stage projection and bias:
/// token_c = gain · (w_c · (x − 0.5) + 0.1 · β_c), with w, β ~ N(0, 1).
StageTokens encode_image_mock(const Tensor& image, const EncoderConfig& cfg);

/// Mean of the image over each grid cell (cell edges at floor(i·H/grid)).
Tensor pool_to_grid(const Tensor& image, std::size_t grid_h, std::size_t grid_w);

class MockTextEncoder final : public TextEncoder {
public:
    explicit MockTextEncoder(EncoderConfig cfg);
    std::size_t dim() const override { return cfg_.text_dim; }
    Tensor encode(std::string_view sentence) const override;

private:
    EncoderConfig cfg_;
};

class MockImageEncoder final : public ImageEncoder {
public:
    explicit MockImageEncoder(EncoderConfig cfg);
    StageTokens encode(const Tensor& image) const override;

private:
    EncoderConfig cfg_;
};

/// Mask decoder stub. For each box it thresholds the heatmap at 0.3, 0.5 and
/// 0.7 inside the box and keeps the connected piece nearest the prompt point
/// closest to the box centre; each level is taken within the previous one, so
/// the three masks are nested. Score = mean heatmap over the mask (0 if empty).
class MockSamDecoder final : public MaskDecoder {
public:
    static constexpr std::array<double, 3> kLevels{0.3, 0.5, 0.7};
    SamMaskSet decode(const Tensor& image, const Tensor& heatmap, const PromptSet& prompts) const override;
};

SamMaskSet sam_decode_mock(const Tensor& image, const Tensor& heatmap, const PromptSet& prompts);

}  // namespace clipsam
