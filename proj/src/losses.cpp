#include "clipsam/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clipsam/ops.hpp"

namespace clipsam {

void LossConfig::validate(std::size_t stages) const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("focal gamma must be >= 0");
    if (stage_weights.size() != stages) {
        throw std::invalid_argument("expected " + std::to_string(stages) + " stage weights, got " +
                                    std::to_string(stage_weights.size()));
    }
    for (double w : stage_weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("stage weights must be positive");
    }
}

namespace {

void require_match(const Var& p, const Tensor& mask, const char* what) {
    if (p.shape() != mask.shape()) {
        throw ShapeError(std::string(what) + ": prediction " + shape_str(p.shape()) + " vs mask " +
                         shape_str(mask.shape()));
    }
}

}  // namespace

Var focal_loss(const Var& fg_prob, const Tensor& mask, double gamma) {
    require_match(fg_prob, mask, "focal_loss");
    const Tensor& p = fg_prob.value();
    const std::size_t n = p.numel();
    const double inv_n = 1.0 / static_cast<double>(n);
    Tensor dldp(p.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = mask[i] > 0.5;
        const double pt = positive ? p[i] : 1.0 - p[i];
        const double c = std::clamp(pt, kProbClamp, 1.0 - kProbClamp);
        const double q = 1.0 - c;
        const double logc = std::log(c);
        const double mod = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
        total -= mod * logc;
        double dl_dc = -mod / c;
        if (gamma != 0.0) dl_dc += gamma * std::pow(q, gamma - 1.0) * logc;
        const bool inside = pt > kProbClamp && pt < 1.0 - kProbClamp;
        dldp[i] = inside ? (positive ? dl_dc : -dl_dc) * inv_n : 0.0;
    }
    return fg_prob.graph().record(Tensor::scalar(total * inv_n), {fg_prob},
                                  [fg_prob, dldp = std::move(dldp)](const Tensor& g) {
                                      Tensor gx = dldp;
                                      for (double& v : gx.storage()) v *= g[0];
                                      accumulate_grad(fg_prob, gx);
                                  });
}

Var dice_loss(const Var& pred, const Tensor& mask) {
    require_match(pred, mask, "dice_loss");
    const Tensor& p = pred.value();
    double inter = 0.0, yy = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
        inter += mask[i] * p[i];
        yy += mask[i] * mask[i];
        pp += p[i] * p[i];
    }
    const double num = 2.0 * inter + kDiceEps;
    const double den = yy + pp + kDiceEps;
    return pred.graph().record(Tensor::scalar(1.0 - num / den), {pred}, [pred, mask, num, den](const Tensor& g) {
        const Tensor& p = pred.value();
        Tensor gx(p.shape());
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double d_ratio = 2.0 * mask[i] / den - num * 2.0 * p[i] / (den * den);
            gx[i] = -d_ratio * g[0];
        }
        accumulate_grad(pred, gx);
    });
}

TotalLoss total_loss(const std::vector<Var>& stage_fg_probs, const Tensor& mask, const LossConfig& cfg) {
    cfg.validate(stage_fg_probs.size());
    TotalLoss out;
    std::vector<Var> terms;
    std::vector<double> weights;
    for (std::size_t i = 0; i < stage_fg_probs.size(); ++i) {
        StageLoss s{focal_loss(stage_fg_probs[i], mask, cfg.gamma), dice_loss(stage_fg_probs[i], mask)};
        out.focal += cfg.stage_weights[i] * s.focal.value()[0];
        out.dice += cfg.stage_weights[i] * s.dice.value()[0];
        terms.push_back(s.focal);
        terms.push_back(s.dice);
        weights.push_back(cfg.stage_weights[i]);
        weights.push_back(cfg.stage_weights[i]);
        out.stages.push_back(s);
    }
    out.total = ops::weighted_sum(terms, weights);
    return out;
}

}  // namespace clipsam
