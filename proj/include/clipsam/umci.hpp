#pragma once

// Unified multi-scale cross-modal interaction: the trainable rough
// segmentation head that fuses patch tokens with the two-class text feature.

#include <cstdint>
#include <optional>
#include <vector>

#include "clipsam/autodiff.hpp"
#include "clipsam/encoders.hpp"
#include "clipsam/layers.hpp"
#include "clipsam/prompt_ensemble.hpp"

namespace clipsam {

struct UmciConfig {
    std::size_t token_dim = 16;   // C, width of the incoming patch tokens
    std::size_t text_dim = 64;    // c_t
    std::size_t hidden_dim = 32;  // c_h
    std::size_t scale1 = 3;       // s1
    std::size_t scale2 = 9;       // s2
    std::size_t stages = 4;       // n
    bool strip_path = true;
    bool scale_path = true;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Direction-specific half of the strip path.
struct StripBranch {
    ConvLayer conv;      // 3-tap conv along the pooled strip
    LinearLayer text_q;  // t¹ from L
    LinearLayer text_v;  // t² from L
    GruCell gru;
};

/// Scale-specific half of the scale path.
struct ScaleBranch {
    std::size_t kernel = 0;
    ConvLayer conv;        // 3×3 on the pooled map
    LinearLayer text_key;  // tᵏ from L
    LinearLayer text_value;
};

/// Parameters and forward pass of one encoder stage's module.
class UmciStage {
public:
    UmciStage(ParamStore& store, const std::string& prefix, const UmciConfig& cfg, Rng& rng);

    /// P (H×W×C) -> P̂ (H×W×c_t)
    Var project(Graph& g, const Var& tokens) const;
    /// P̂, L rows (2×c_t) -> M_row,col (H×W×c_h)
    Var strip_path(Graph& g, const Var& projected, const Var& text_rows) const;
    /// P̂, L rows -> M_g1,g2 (H×W×c_h)
    Var scale_path(Graph& g, const Var& projected, const Var& text_rows) const;
    /// Residual fusion and MLP head. Either path output may be empty (ablated);
    /// it is then replaced by zeros. Returns H×W×2 logits.
    Var fuse(Graph& g, const Var& projected, std::optional<Var> strip, std::optional<Var> scale) const;
    /// Full stage: tokens -> H×W×2 logits.
    Var forward(Graph& g, const Var& tokens, const Var& text_rows) const;

private:
    Var strip_direction(Graph& g, const StripBranch& branch, const Var& strip, const Var& text_rows) const;
    Var scale_branch(Graph& g, const ScaleBranch& branch, const Var& projected, const Var& text_rows) const;

    UmciConfig cfg_;
    LinearLayer projection_;
    std::optional<StripBranch> row_, col_;
    std::optional<ConvLayer> strip_merge_;
    std::optional<ScaleBranch> g1_, g2_;
    std::optional<ConvLayer> scale_merge_;
    ConvLayer ori_;
    ConvLayer all_;
    LinearLayer head_hidden_;
    LinearLayer head_out_;
};

struct UmciOutput {
    std::vector<Var> stage_logits;  // O_i, each H×W×2
    Var aggregate_logits;           // mean over stages, H×W×2
    Var probabilities;              // aggregate resized to image size and softmaxed, H_img×W_img×2
};

/// One independent stage module per encoder stage, sharing a ParamStore
/// with names prefixed "stage<i>.".
class UmciModel {
public:
    explicit UmciModel(const UmciConfig& cfg);
    // Layers hold pointers into params_, whose nodes survive a move but not a copy.
    UmciModel(const UmciModel&) = delete;
    UmciModel& operator=(const UmciModel&) = delete;
    UmciModel(UmciModel&&) = default;
    UmciModel& operator=(UmciModel&&) = default;

    const UmciConfig& config() const noexcept { return cfg_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }
    const UmciStage& stage(std::size_t i) const { return stages_.at(i); }

    UmciOutput forward(Graph& g, const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                       std::size_t image_w) const;

    /// Foreground probability map (H_img×W_img) without recording gradients.
    Tensor predict(const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                   std::size_t image_w) const;

    /// Similarity-only rough map: cosine of each projected token with the two
    /// text columns, averaged over stages, resized and softmaxed. Returns the
    /// foreground probability (H_img×W_img).
    Tensor similarity_map(const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                          std::size_t image_w) const;

private:
    UmciConfig cfg_;
    ParamStore params_;
    std::vector<UmciStage> stages_;
};

/// Foreground channel of an H×W×2 probability tensor.
Tensor foreground(const Tensor& probs);

}  // namespace clipsam
