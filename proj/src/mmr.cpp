#include "clipsam/mmr.hpp"

#include <algorithm>
#include <stdexcept>

#include "clipsam/rng.hpp"

namespace clipsam {

BinaryMask binarize(const Tensor& fg, double thr) {
    if (!(thr >= 0.0 && thr <= 1.0)) throw std::invalid_argument("binarization threshold must lie in [0, 1]");
    if (fg.rank() != 2) throw ShapeError("binarize expects an H×W map");
    BinaryMask m(fg.dim(0), fg.dim(1));
    const std::size_t w = fg.dim(1);
    for (std::size_t i = 0; i < fg.numel(); ++i) {
        if (fg[i] > thr) m.set(i / w, i % w, true);
    }
    return m;
}

PointSample extract_points(const std::vector<Region>& regions, std::size_t m, std::uint64_t seed) {
    PointSample out;
    if (m == 0) return out;
    std::vector<Pixel> pool;
    for (const auto& r : regions) pool.insert(pool.end(), r.pixels.begin(), r.pixels.end());
    if (pool.empty()) {
        out.no_support = true;
        return out;
    }
    Rng rng(seed);
    if (pool.size() >= m) {
        for (std::size_t i = 0; i < m; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
            out.points.push_back({pool[i].x, pool[i].y});
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            const Pixel& p = pool[rng.below(pool.size())];
            out.points.push_back({p.x, p.y});
        }
    }
    return out;
}

std::vector<PromptBox> extract_boxes(const std::vector<Region>& regions, std::size_t height, std::size_t width) {
    std::vector<PromptBox> boxes;
    boxes.reserve(regions.size());
    for (const auto& r : regions) {
        const std::size_t y0 = r.bounds.y0 > 0 ? r.bounds.y0 - 1 : 0;
        const std::size_t x0 = r.bounds.x0 > 0 ? r.bounds.x0 - 1 : 0;
        const std::size_t y1 = std::min(height - 1, r.bounds.y1 + 1);
        const std::size_t x1 = std::min(width - 1, r.bounds.x1 + 1);
        boxes.push_back({x0, y0, y1 - y0 + 1, x1 - x0 + 1});
    }
    return boxes;
}

Tensor normalize_map(const Tensor& x) {
    if (x.empty()) return x;
    x.require_finite("normalize_map input");
    const double lo = x.min(), hi = x.max();
    Tensor out(x.shape());
    if (hi - lo <= 0.0) {
        out.fill(0.5);
        return out;
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = (x[i] - lo) / range;
    return out;
}

Refinement refine(const Tensor& rough_fg, const Tensor& image, const MaskDecoder& decoder,
                  const RefineOptions& options) {
    if (rough_fg.rank() != 2) throw ShapeError("refine expects an H×W foreground map");
    Refinement out;
    out.binary = binarize(rough_fg, options.threshold);
    const auto regions = connected_components(out.binary);
    auto sampled = extract_points(regions, options.points, options.seed);
    out.no_support = sampled.no_support;
    out.prompts.points = std::move(sampled.points);
    out.prompts.boxes = extract_boxes(regions, rough_fg.dim(0), rough_fg.dim(1));

    Tensor fused = rough_fg;
    if (!out.prompts.boxes.empty()) {
        out.masks = decoder.decode(image, rough_fg, out.prompts);
        for (std::size_t i = 0; i < out.masks.masks.size(); ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                const BinaryMask& m = out.masks.masks[i][j];
                const double s = out.masks.scores[i][j];
                for (std::size_t p = 0; p < fused.numel(); ++p) {
                    if (m[p]) fused[p] += s;
                }
            }
        }
    }
    out.refined = normalize_map(fused);
    return out;
}

}  // namespace clipsam
