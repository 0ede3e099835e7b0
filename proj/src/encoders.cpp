#include "clipsam/encoders.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "clipsam/rng.hpp"

namespace clipsam {

void EncoderConfig::validate() const {
    if (text_dim == 0 || token_dim == 0 || grid_h == 0 || grid_w == 0 || stages == 0) {
        throw std::invalid_argument("encoder extents must all be >= 1");
    }
    if (!(token_gain > 0.0) || !std::isfinite(token_gain)) throw std::invalid_argument("token gain must be positive");
}

Tensor encode_text_mock(std::string_view sentence, const EncoderConfig& cfg) {
    if (sentence.empty()) throw std::invalid_argument("cannot encode an empty sentence");
    cfg.validate();
    Rng rng(hash_string(sentence, cfg.seed));
    Tensor v({cfg.text_dim});
    double ss = 0.0;
    for (double& x : v.storage()) {
        x = rng.normal();
        ss += x * x;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v.storage()) x *= inv;
    return v;
}

Tensor pool_to_grid(const Tensor& image, std::size_t grid_h, std::size_t grid_w) {
    if (image.rank() != 2) throw ShapeError("image must be an H×W grayscale map, got " + shape_str(image.shape()));
    const std::size_t h = image.dim(0), w = image.dim(1);
    if (h < grid_h || w < grid_w) {
        throw ShapeError("image " + shape_str(image.shape()) + " is smaller than the token grid");
    }
    Tensor out({grid_h, grid_w});
    for (std::size_t gy = 0; gy < grid_h; ++gy) {
        const std::size_t y0 = gy * h / grid_h, y1 = (gy + 1) * h / grid_h;
        for (std::size_t gx = 0; gx < grid_w; ++gx) {
            const std::size_t x0 = gx * w / grid_w, x1 = (gx + 1) * w / grid_w;
            double s = 0.0;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) s += image[y * w + x];
            out[gy * grid_w + gx] = s / static_cast<double>((y1 - y0) * (x1 - x0));
        }
    }
    return out;
}

StageTokens encode_image_mock(const Tensor& image, const EncoderConfig& cfg) {
    cfg.validate();
    if (image.rank() != 2 || image.dim(0) == 0 || image.dim(1) == 0) {
        throw ShapeError("degenerate image extents " + shape_str(image.shape()));
    }
    for (double v : image.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image values must lie in [0, 1]");
    }
    const Tensor pooled = pool_to_grid(image, cfg.grid_h, cfg.grid_w);
    const std::size_t c = cfg.token_dim;
    StageTokens tokens;
    for (std::size_t s = 0; s < cfg.stages; ++s) {
        Rng rng(derive_seed(cfg.seed, 1000 + s));
        std::vector<double> weight(c), bias(c);
        for (double& x : weight) x = rng.normal();
        for (std::size_t ch = 0; ch < c; ++ch) {
            // Centred on mid-grey: each channel crosses zero near intensity 0.5.
            bias[ch] = cfg.token_gain * (0.1 * rng.normal() - 0.5 * weight[ch]);
            weight[ch] *= cfg.token_gain;
        }
        Tensor stage({cfg.grid_h, cfg.grid_w, c});
        for (std::size_t i = 0; i < pooled.numel(); ++i)
            for (std::size_t ch = 0; ch < c; ++ch) stage[i * c + ch] = weight[ch] * pooled[i] + bias[ch];
        tokens.stages.push_back(std::move(stage));
    }
    return tokens;
}

MockTextEncoder::MockTextEncoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Tensor MockTextEncoder::encode(std::string_view sentence) const { return encode_text_mock(sentence, cfg_); }

MockImageEncoder::MockImageEncoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

StageTokens MockImageEncoder::encode(const Tensor& image) const { return encode_image_mock(image, cfg_); }

namespace {

PromptPoint anchor_for(const PromptBox& box, const std::vector<PromptPoint>& points) {
    const double cy = static_cast<double>(box.y) + (static_cast<double>(box.h) - 1.0) / 2.0;
    const double cx = static_cast<double>(box.x) + (static_cast<double>(box.w) - 1.0) / 2.0;
    if (points.empty()) {
        return {box.x + (box.w - 1) / 2, box.y + (box.h - 1) / 2};
    }
    double best = std::numeric_limits<double>::infinity();
    PromptPoint chosen = points.front();
    for (const auto& p : points) {
        const double dy = static_cast<double>(p.y) - cy, dx = static_cast<double>(p.x) - cx;
        const double d = dy * dy + dx * dx;
        if (d < best) {
            best = d;
            chosen = p;
        }
    }
    return chosen;
}

}  // namespace

SamMaskSet MockSamDecoder::decode(const Tensor& image, const Tensor& heatmap, const PromptSet& prompts) const {
    if (heatmap.rank() != 2) throw ShapeError("heatmap must be H×W");
    if (image.rank() != 2 || image.shape() != heatmap.shape()) {
        throw ShapeError("heatmap " + shape_str(heatmap.shape()) + " does not match image " +
                         shape_str(image.shape()));
    }
    if (prompts.boxes.empty()) throw std::invalid_argument("mask decoder needs at least one box prompt");
    for (double v : heatmap.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("heatmap values must lie in [0, 1]");
    }
    const std::size_t h = heatmap.dim(0), w = heatmap.dim(1);
    for (const auto& b : prompts.boxes) {
        if (b.h == 0 || b.w == 0 || b.y + b.h > h || b.x + b.w > w) {
            throw std::out_of_range("box prompt lies outside the image bounds");
        }
    }
    for (const auto& p : prompts.points) {
        if (p.y >= h || p.x >= w) throw std::out_of_range("point prompt lies outside the image bounds");
    }

    SamMaskSet out;
    for (const auto& box : prompts.boxes) {
        const PromptPoint anchor = anchor_for(box, prompts.points);
        BinaryMask allowed(h, w);
        for (std::size_t y = box.y; y < box.y + box.h; ++y)
            for (std::size_t x = box.x; x < box.x + box.w; ++x) allowed.set(y, x, true);

        std::array<BinaryMask, 3> masks;
        std::array<double, 3> scores{};
        for (std::size_t level = 0; level < kLevels.size(); ++level) {
            BinaryMask cand(h, w);
            for (std::size_t i = 0; i < h * w; ++i) {
                if (allowed[i] && heatmap[i] >= kLevels[level]) cand.set(i / w, i % w, true);
            }
            BinaryMask chosen(h, w);
            if (cand.count() > 0) {
                const auto labels = label_image(cand);
                std::size_t pick = labels[anchor.y * w + anchor.x];
                if (pick == 0) {
                    std::size_t best = std::numeric_limits<std::size_t>::max();
                    for (std::size_t i = 0; i < h * w; ++i) {
                        if (!labels[i]) continue;
                        const auto dy = static_cast<long long>(i / w) - static_cast<long long>(anchor.y);
                        const auto dx = static_cast<long long>(i % w) - static_cast<long long>(anchor.x);
                        const auto d = static_cast<std::size_t>(dy * dy + dx * dx);
                        if (d < best) {
                            best = d;
                            pick = labels[i];
                        }
                    }
                }
                double total = 0.0;
                std::size_t n = 0;
                for (std::size_t i = 0; i < h * w; ++i) {
                    if (labels[i] == pick) {
                        chosen.set(i / w, i % w, true);
                        total += heatmap[i];
                        ++n;
                    }
                }
                scores[level] = total / static_cast<double>(n);
            }
            allowed = chosen;
            masks[level] = std::move(chosen);
        }
        out.masks.push_back(std::move(masks));
        out.scores.push_back(scores);
    }
    return out;
}

SamMaskSet sam_decode_mock(const Tensor& image, const Tensor& heatmap, const PromptSet& prompts) {
    return MockSamDecoder{}.decode(image, heatmap, prompts);
}

}  // namespace clipsam
