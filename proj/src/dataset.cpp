#include "clipsam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "clipsam/rng.hpp"

namespace clipsam {

const std::vector<std::string>& synthetic_categories() {
    static const std::vector<std::string> names{"tile", "fabric", "metal", "wood"};
    return names;
}

const std::vector<std::string>& defect_kinds() {
    static const std::vector<std::string> names{"bright_blob", "dark_blob", "scratch", "missing_patch"};
    return names;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bilinear interpolation of a coarse random lattice: low-frequency noise in [-1, 1].
Tensor smooth_noise(std::size_t extent, std::size_t cell, Rng& rng) {
    const std::size_t n = extent / cell + 2;
    std::vector<double> lattice(n * n);
    for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
    Tensor out({extent, extent});
    for (std::size_t y = 0; y < extent; ++y) {
        const double fy = static_cast<double>(y) / static_cast<double>(cell);
        const std::size_t iy = static_cast<std::size_t>(fy);
        const double ty = fy - static_cast<double>(iy);
        for (std::size_t x = 0; x < extent; ++x) {
            const double fx = static_cast<double>(x) / static_cast<double>(cell);
            const std::size_t ix = static_cast<std::size_t>(fx);
            const double tx = fx - static_cast<double>(ix);
            const double top = lattice[iy * n + ix] * (1 - tx) + lattice[iy * n + ix + 1] * tx;
            const double bot = lattice[(iy + 1) * n + ix] * (1 - tx) + lattice[(iy + 1) * n + ix + 1] * tx;
            out[y * extent + x] = top * (1 - ty) + bot * ty;
        }
    }
    return out;
}

Tensor make_background(std::size_t extent, std::size_t category, Rng& rng) {
    static constexpr double kBase[] = {0.55, 0.5, 0.6, 0.45};
    const double base = kBase[category] + rng.uniform(-0.05, 0.05);
    const double theta = rng.uniform(0.0, kTwoPi);
    const double slope = rng.uniform(0.05, 0.12);
    const double phase = rng.uniform(0.0, kTwoPi);
    const Tensor low = smooth_noise(extent, 8, rng);
    std::vector<double> streak(extent);
    for (double& v : streak) v = 0.015 * rng.normal();

    const double e = static_cast<double>(extent);
    Tensor bg({extent, extent});
    for (std::size_t y = 0; y < extent; ++y) {
        for (std::size_t x = 0; x < extent; ++x) {
            const double fx = static_cast<double>(x), fy = static_cast<double>(y);
            double v = base + slope * ((fx * std::cos(theta) + fy * std::sin(theta)) / e - 0.5);
            switch (category) {
                case 0: v += 0.03 * low[y * extent + x]; break;
                case 1: v += 0.03 * std::sin(kTwoPi * fx / 4.0) * std::sin(kTwoPi * fy / 4.0); break;
                case 2: v += streak[y] + 0.01 * low[y * extent + x]; break;
                default: v += 0.04 * std::sin(kTwoPi * (fy + 3.0 * std::sin(kTwoPi * fx / 32.0)) / 12.0 + phase); break;
            }
            bg[y * extent + x] = v + kPixelNoise * rng.normal();
        }
    }
    return bg;
}

double signed_contrast(Rng& rng, bool bright) {
    const double m = rng.uniform(0.25, 0.4);
    return bright ? m : -m;
}

void paint_blob(Tensor& img, BinaryMask& mask, Rng& rng, bool bright) {
    const std::size_t e = mask.width();
    const double ry = rng.uniform(3.0, 8.0), rx = rng.uniform(3.0, 8.0);
    const double cy = rng.uniform(ry, static_cast<double>(e) - ry), cx = rng.uniform(rx, static_cast<double>(e) - rx);
    const double delta = signed_contrast(rng, bright);
    for (std::size_t y = 0; y < e; ++y) {
        for (std::size_t x = 0; x < e; ++x) {
            const double dy = (static_cast<double>(y) - cy) / ry, dx = (static_cast<double>(x) - cx) / rx;
            if (dy * dy + dx * dx <= 1.0) {
                img[y * e + x] += delta;
                mask.set(y, x, true);
            }
        }
    }
}

void paint_scratch(Tensor& img, BinaryMask& mask, Rng& rng) {
    const std::size_t e = mask.width();
    const double ef = static_cast<double>(e);
    const double len = rng.uniform(14.0, 36.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double half = 0.5 * static_cast<double>(2 + rng.below(2));
    const double dx = std::cos(angle) * len, dy = std::sin(angle) * len;
    const double x0 = rng.uniform(4.0 + std::max(0.0, -dx), ef - 4.0 - std::max(0.0, dx));
    const double y0 = rng.uniform(4.0, ef - 4.0 - dy);
    const double delta = signed_contrast(rng, rng.uniform() < 0.5);
    for (std::size_t y = 0; y < e; ++y) {
        for (std::size_t x = 0; x < e; ++x) {
            const double px = static_cast<double>(x) - x0, py = static_cast<double>(y) - y0;
            const double t = std::clamp((px * dx + py * dy) / (len * len), 0.0, 1.0);
            const double ex = px - t * dx, ey = py - t * dy;
            if (ex * ex + ey * ey <= half * half) {
                img[y * e + x] += delta;
                mask.set(y, x, true);
            }
        }
    }
}

void paint_missing(Tensor& img, BinaryMask& mask, Rng& rng) {
    const std::size_t e = mask.width();
    const std::size_t h = 5 + rng.below(8), w = 5 + rng.below(8);
    const std::size_t y0 = 2 + rng.below(e - h - 3), x0 = 2 + rng.below(e - w - 3);
    // The exposed backing shows up either black or white.
    const double level = rng.uniform() < 0.5 ? rng.uniform(0.03, 0.1) : rng.uniform(0.9, 0.97);
    for (std::size_t y = y0; y < y0 + h; ++y) {
        for (std::size_t x = x0; x < x0 + w; ++x) {
            img[y * e + x] = level + 0.5 * kPixelNoise * rng.normal();
            mask.set(y, x, true);
        }
    }
}

}  // namespace

SyntheticSample generate_sample(std::size_t extent, std::uint64_t seed) {
    if (extent < kMinExtent) {
        throw std::invalid_argument("image extent must be >= " + std::to_string(kMinExtent) + ", got " +
                                    std::to_string(extent));
    }
    Rng rng(seed);
    for (;;) {
        SyntheticSample s;
        const std::size_t category = rng.below(synthetic_categories().size());
        const std::size_t kind = rng.below(defect_kinds().size());
        s.category = synthetic_categories()[category];
        s.defect_kind = defect_kinds()[kind];
        s.background = make_background(extent, category, rng);
        s.image = s.background;
        s.mask = BinaryMask(extent, extent);
        const std::size_t defects = rng.uniform() < 0.25 ? 2 : 1;
        for (std::size_t d = 0; d < defects; ++d) {
            switch (kind) {
                case 0: paint_blob(s.image, s.mask, rng, true); break;
                case 1: paint_blob(s.image, s.mask, rng, false); break;
                case 2: paint_scratch(s.image, s.mask, rng); break;
                default: paint_missing(s.image, s.mask, rng); break;
            }
        }
        for (double& v : s.image.storage()) v = std::clamp(v, 0.0, 1.0);
        for (double& v : s.background.storage()) v = std::clamp(v, 0.0, 1.0);
        const double fraction = static_cast<double>(s.mask.count()) / static_cast<double>(extent * extent);
        if (fraction > 0.0 && fraction <= kMaxDefectFraction) return s;
    }
}

std::vector<SyntheticSample> generate_dataset(std::size_t count, std::size_t extent, std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("dataset count must be >= 1");
    std::vector<SyntheticSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sample(extent, derive_seed(seed, i)));
    return out;
}

}  // namespace clipsam
