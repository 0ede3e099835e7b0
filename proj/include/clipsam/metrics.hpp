#pragma once

// Pixel-level segmentation metrics.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "clipsam/mask.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScoredPixels {
    std::vector<double> scores;
    std::vector<int> labels;  // 0 or 1, paired with scores by index

    static ScoredPixels from_maps(const Tensor& scores, const BinaryMask& gt);
    void validate() const;
    std::size_t positives() const;
};

/// Probability that a random positive outranks a random negative; ties earn
/// half credit.
double auroc(const ScoredPixels& sp);

/// Non-interpolated AP over the descending ranking (ties keep index order).
double average_precision(const ScoredPixels& sp);

/// Best F1 over thresholds at each distinct score, predicting score >= t.
double f1_max(const ScoredPixels& sp);

inline constexpr double kProFprLimit = 0.3;

/// Mean per-region coverage integrated over false-positive rate in
/// [0, fpr_limit] and divided by fpr_limit. Regions are the 8-connected
/// components of gt.
double pro(const Tensor& anomaly_map, const BinaryMask& gt, double fpr_limit = kProFprLimit);

struct MetricsReport {
    double auroc = 0.0;
    double ap = 0.0;
    double f1_max = 0.0;
    double pro = 0.0;
};

MetricsReport evaluate_map(const Tensor& anomaly_map, const BinaryMask& gt);

/// Field-wise arithmetic mean, accumulated in order.
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

/// "image,auroc,ap,f1_max,pro" header, one line per image, then a "mean" line.
void write_metrics_csv(std::ostream& os, const std::vector<std::string>& names,
                       const std::vector<MetricsReport>& reports);

}  // namespace clipsam
