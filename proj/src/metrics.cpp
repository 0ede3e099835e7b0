#include "clipsam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "clipsam/format.hpp"

namespace clipsam {

ScoredPixels ScoredPixels::from_maps(const Tensor& scores, const BinaryMask& gt) {
    if (scores.rank() != 2 || scores.dim(0) != gt.height() || scores.dim(1) != gt.width()) {
        throw ShapeError("score map " + shape_str(scores.shape()) + " does not match mask " +
                         std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
    }
    ScoredPixels sp;
    sp.scores.assign(scores.data().begin(), scores.data().end());
    sp.labels.resize(sp.scores.size());
    for (std::size_t i = 0; i < sp.labels.size(); ++i) sp.labels[i] = gt[i] ? 1 : 0;
    return sp;
}

void ScoredPixels::validate() const {
    if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
    for (int l : labels) {
        if (l != 0 && l != 1) throw MetricError("labels must be 0 or 1");
    }
    for (double s : scores) {
        if (std::isnan(s)) throw MetricError("score is NaN");
    }
}

std::size_t ScoredPixels::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

// Indices ordered by descending score, ties in ascending index order.
std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

std::size_t require_positives(const ScoredPixels& sp) {
    sp.validate();
    const std::size_t p = sp.positives();
    if (p == 0) throw MetricError("metric needs at least one positive pixel");
    return p;
}

}  // namespace

double auroc(const ScoredPixels& sp) {
    const std::size_t p = require_positives(sp);
    const std::size_t n = sp.labels.size() - p;
    if (n == 0) throw MetricError("AUROC needs at least one negative pixel");

    // Walk score groups in ascending order; a positive beats every negative
    // in lower groups and ties half of those in its own group.
    std::vector<std::size_t> idx = descending_order(sp.scores);
    std::reverse(idx.begin(), idx.end());
    double wins = 0.0;
    std::size_t negatives_below = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i, pos = 0, neg = 0;
        while (j < idx.size() && sp.scores[idx[j]] == sp.scores[idx[i]]) {
            (sp.labels[idx[j]] ? pos : neg) += 1;
            ++j;
        }
        wins += static_cast<double>(pos) * (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(neg));
        negatives_below += neg;
        i = j;
    }
    return wins / (static_cast<double>(p) * static_cast<double>(n));
}

double average_precision(const ScoredPixels& sp) {
    const std::size_t p = require_positives(sp);
    const auto idx = descending_order(sp.scores);
    double sum = 0.0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (sp.labels[idx[k]]) {
            ++tp;
            sum += static_cast<double>(tp) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(p);
}

double f1_max(const ScoredPixels& sp) {
    const std::size_t p = require_positives(sp);
    const auto idx = descending_order(sp.scores);
    double best = 0.0;
    std::size_t tp = 0, predicted = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && sp.scores[idx[j]] == sp.scores[idx[i]]) {
            tp += static_cast<std::size_t>(sp.labels[idx[j]]);
            ++predicted;
            ++j;
        }
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + p);
        best = std::max(best, f1);
        i = j;
    }
    return best;
}

double pro(const Tensor& anomaly_map, const BinaryMask& gt, double fpr_limit) {
    if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) throw MetricError("PRO FPR limit must lie in (0, 1]");
    const ScoredPixels sp = ScoredPixels::from_maps(anomaly_map, gt);
    sp.validate();
    const auto regions = connected_components(gt);
    if (regions.empty()) throw MetricError("PRO needs at least one anomalous region");
    const std::size_t negatives = sp.labels.size() - sp.positives();
    if (negatives == 0) throw MetricError("PRO needs at least one normal pixel");

    const std::size_t w = gt.width();
    std::vector<std::size_t> region_of(sp.labels.size(), regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
        for (const Pixel& px : regions[r].pixels) region_of[px.y * w + px.x] = r;
    }
    const double inv_regions = 1.0 / static_cast<double>(regions.size());

    const auto idx = descending_order(sp.scores);
    double area = 0.0, prev_fpr = 0.0, prev_pro = 0.0, coverage_sum = 0.0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && sp.scores[idx[j]] == sp.scores[idx[i]]) {
            const std::size_t r = region_of[idx[j]];
            if (r == regions.size()) {
                ++fp;
            } else {
                coverage_sum += 1.0 / static_cast<double>(regions[r].pixels.size());
            }
            ++j;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        const double cur = coverage_sum * inv_regions;
        if (fpr >= fpr_limit) {
            const double t = fpr > prev_fpr ? (fpr_limit - prev_fpr) / (fpr - prev_fpr) : 0.0;
            const double at_limit = prev_pro + t * (cur - prev_pro);
            area += 0.5 * (fpr_limit - prev_fpr) * (prev_pro + at_limit);
            return area / fpr_limit;
        }
        area += 0.5 * (fpr - prev_fpr) * (prev_pro + cur);
        prev_fpr = fpr;
        prev_pro = cur;
        i = j;
    }
    return area / fpr_limit;  // unreachable: the last group always reaches FPR 1
}

MetricsReport evaluate_map(const Tensor& anomaly_map, const BinaryMask& gt) {
    const ScoredPixels sp = ScoredPixels::from_maps(anomaly_map, gt);
    return {auroc(sp), average_precision(sp), f1_max(sp), pro(anomaly_map, gt)};
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw MetricError("no reports to average");
    MetricsReport m;
    for (const auto& r : reports) {
        m.auroc += r.auroc;
        m.ap += r.ap;
        m.f1_max += r.f1_max;
        m.pro += r.pro;
    }
    const double n = static_cast<double>(reports.size());
    return {m.auroc / n, m.ap / n, m.f1_max / n, m.pro / n};
}

void write_metrics_csv(std::ostream& os, const std::vector<std::string>& names,
                       const std::vector<MetricsReport>& reports) {
    if (names.size() != reports.size()) throw std::invalid_argument("one name per metrics report expected");
    auto line = [&os](const std::string& name, const MetricsReport& r) {
        os << name << ',' << fmt_fixed(r.auroc) << ',' << fmt_fixed(r.ap) << ',' << fmt_fixed(r.f1_max) << ','
           << fmt_fixed(r.pro) << '\n';
    };
    os << "image,auroc,ap,f1_max,pro\n";
    for (std::size_t i = 0; i < reports.size(); ++i) line(names[i], reports[i]);
    line("mean", mean_report(reports));
}

}  // namespace clipsam
