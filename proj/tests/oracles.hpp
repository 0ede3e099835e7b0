#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Each one is written directly from the metric's
// definition and shares no code with the library.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "clipsam/mask.hpp"
#include "clipsam/rng.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam::oracle {

inline void flood(const BinaryMask& m, std::vector<int>& labels, std::size_t y, std::size_t x, int label) {
    const std::size_t w = m.width();
    if (!m(y, x) || labels[y * w + x]) return;
    labels[y * w + x] = label;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
            if (ny < 0 || nx < 0 || ny >= static_cast<long>(m.height()) || nx >= static_cast<long>(w)) continue;
            flood(m, labels, static_cast<std::size_t>(ny), static_cast<std::size_t>(nx), label);
        }
}

/// 8-connected labels by recursive flood fill, 0 for background.
inline std::vector<int> flood_labels(const BinaryMask& m) {
    std::vector<int> labels(m.size(), 0);
    int next = 0;
    for (std::size_t y = 0; y < m.height(); ++y)
        for (std::size_t x = 0; x < m.width(); ++x)
            if (m(y, x) && !labels[y * m.width() + x]) flood(m, labels, y, x, ++next);
    return labels;
}

/// True when a bijection maps one labelling onto the other.
template <typename A, typename B>
bool same_partition(const std::vector<A>& a, const std::vector<B>& b) {
    if (a.size() != b.size()) return false;
    std::map<A, B> fwd;
    std::map<B, A> back;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == 0) != (b[i] == 0)) return false;
        if (a[i] == 0) continue;
        const auto f = fwd.emplace(a[i], b[i]).first;
        const auto r = back.emplace(b[i], a[i]).first;
        if (f->second != b[i] || r->second != a[i]) return false;
    }
    return true;
}

inline BinaryMask random_mask(std::size_t h, std::size_t w, double density, Rng& rng) {
    BinaryMask m(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) m.set(y, x, rng.uniform() < density);
    return m;
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counted half.
inline double auroc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Mean precision at the rank of each positive, walking a stable
/// descending sort of the scores.
inline double ap_rank_walk(const std::vector<double>& s, const std::vector<int>& y) {
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    double total = 0.0;
    std::size_t hits = 0, positives = 0;
    for (int v : y) positives += v == 1;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (y[order[k]] != 1) continue;
        ++hits;
        total += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return total / static_cast<double>(positives);
}

/// Best F1 when predicting score >= t, over every distinct score t.
inline double f1_sweep(const std::vector<double>& s, const std::vector<int>& y) {
    double best = 0.0;
    for (double t : std::set<double>(s.begin(), s.end())) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const bool pred = s[i] >= t;
            if (pred && y[i] == 1) ++tp;
            else if (pred) ++fp;
            else if (y[i] == 1) ++fn;
        }
        if (tp > 0) best = std::max(best, 2 * tp / (2 * tp + fp + fn));
    }
    return best;
}

/// Per-region overlap curve swept over every distinct score level (predict
/// score >= t), integrated by trapezoids from FPR 0 up to `limit` with
/// linear interpolation at the limit, then divided by `limit`.
inline double pro_dense(const Tensor& map, const BinaryMask& gt, double limit) {
    const auto labels = flood_labels(gt);
    const int regions = *std::max_element(labels.begin(), labels.end());
    std::vector<double> region_size(static_cast<std::size_t>(regions) + 1, 0.0);
    double negatives = 0.0;
    for (int l : labels) {
        if (l) region_size[static_cast<std::size_t>(l)] += 1.0;
        else negatives += 1.0;
    }
    std::vector<double> levels(map.storage().begin(), map.storage().end());
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    double area = 0.0, px = 0.0, py = 0.0;
    for (double t : levels) {
        double fp = 0.0;
        std::vector<double> hit(region_size.size(), 0.0);
        for (std::size_t i = 0; i < map.numel(); ++i) {
            if (map[i] < t) continue;
            if (labels[i]) hit[static_cast<std::size_t>(labels[i])] += 1.0;
            else fp += 1.0;
        }
        double overlap = 0.0;
        for (int r = 1; r <= regions; ++r) overlap += hit[static_cast<std::size_t>(r)] / region_size[static_cast<std::size_t>(r)];
        overlap /= regions;
        const double fpr = fp / negatives;
        if (fpr >= limit) {
            const double at = fpr > px ? py + (limit - px) / (fpr - px) * (overlap - py) : py;
            area += 0.5 * (limit - px) * (py + at);
            return area / limit;
        }
        area += 0.5 * (fpr - px) * (py + overlap);
        px = fpr;
        py = overlap;
    }
    return area / limit;
}

/// Random scored map with a mask holding at least one positive and one
/// negative pixel. Scores are quantised on odd seeds so ties occur.
struct MetricInstance {
    Tensor scores;
    BinaryMask gt;
    std::vector<double> flat;
    std::vector<int> labels;
};

inline MetricInstance random_instance(std::uint64_t seed, std::size_t h, std::size_t w) {
    Rng rng(seed);
    MetricInstance inst;
    inst.gt = BinaryMask(h, w);
    // A few rectangles so the mask has several connected regions.
    const std::size_t blobs = 1 + rng.below(3);
    for (std::size_t b = 0; b < blobs; ++b) {
        const std::size_t bh = 1 + rng.below(h / 3), bw = 1 + rng.below(w / 3);
        const std::size_t y0 = rng.below(h - bh + 1), x0 = rng.below(w - bw + 1);
        for (std::size_t y = y0; y < y0 + bh; ++y)
            for (std::size_t x = x0; x < x0 + bw; ++x) inst.gt.set(y, x, true);
    }
    if (inst.gt.count() == h * w) inst.gt.set(0, 0, false);
    const bool quantise = seed % 2 == 1;
    const double shift = rng.uniform(0.0, 0.6);
    inst.scores = Tensor({h, w});
    for (std::size_t i = 0; i < h * w; ++i) {
        double v = rng.uniform() + (inst.gt[i] ? shift : 0.0);
        if (quantise) v = std::floor(v * 8.0) / 8.0;
        inst.scores[i] = v;
        inst.flat.push_back(v);
        inst.labels.push_back(inst.gt[i]);
    }
    return inst;
}

}  // namespace clipsam::oracle
