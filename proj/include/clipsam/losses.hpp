#pragma once

#include <vector>

#include "clipsam/autodiff.hpp"

namespace clipsam {

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kDiceEps = 1e-7;

struct LossConfig {
    double gamma = 2.0;
    std::vector<double> stage_weights{0.1, 0.1, 0.1, 0.7};

    void validate(std::size_t stages) const;
};

/// −mean((1 − p_t)^γ · log p_t), where p_t is the probability assigned to the
/// true class (p where y = 1, 1 − p where y = 0), clamped to [1e-7, 1 − 1e-7].
/// `fg_prob` and `mask` are H×W.
Var focal_loss(const Var& fg_prob, const Tensor& mask, double gamma);

/// 1 − (2·Σ y·ŷ + ε) / (Σ y² + Σ ŷ² + ε), ε = 1e-7.
Var dice_loss(const Var& pred, const Tensor& mask);

struct StageLoss {
    Var focal;
    Var dice;
};

struct TotalLoss {
    Var total;
    double focal = 0.0;  // Σ λ_i · focal_i
    double dice = 0.0;   // Σ λ_i · dice_i
    std::vector<StageLoss> stages;
};

/// Σ λ_i · (focal_i + dice_i) over per-stage foreground maps already at mask resolution.
TotalLoss total_loss(const std::vector<Var>& stage_fg_probs, const Tensor& mask, const LossConfig& cfg);

}  // namespace clipsam
