#include "clipsam/train.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "clipsam/format.hpp"
#include "clipsam/ops.hpp"

namespace clipsam {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be finite and >= 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("Adam epsilon must be > 0");
    if (batch == 0) throw std::invalid_argument("batch size must be >= 1");
    if (epochs == 0) throw std::invalid_argument("epoch count must be >= 1");
}

void AdamW::step(ParamStore& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Param* p : params.all()) {
        if (p->grad.empty()) continue;
        auto& [m, v] = moments_[p->name];
        if (m.empty()) {
            m = Tensor(p->value.shape());
            v = Tensor(p->value.shape());
        }
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p->value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p->value[i]);
        }
    }
}

TotalLoss sample_loss(Graph& g, const UmciModel& model, const TrainSample& sample, const LossConfig& loss) {
    if (!sample.text) throw std::invalid_argument("training sample has no text feature");
    const std::size_t h = sample.mask.dim(0), w = sample.mask.dim(1);
    const UmciOutput out = model.forward(g, sample.tokens, *sample.text, h, w);
    std::vector<Var> fg;
    fg.reserve(out.stage_logits.size());
    for (const Var& logits : out.stage_logits) {
        fg.push_back(ops::select_lastdim(ops::softmax_lastdim(ops::bilinear_resize(logits, h, w)), 1));
    }
    return total_loss(fg, sample.mask, loss);
}

TrainResult train(UmciModel& model, std::span<const TrainSample> data, const LossConfig& loss,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    loss.validate(model.config().stages);
    if (data.empty()) throw std::invalid_argument("training set is empty");

    ParamStore& params = model.params();
    params.enable_grad();
    AdamW optimizer(cfg);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double epoch_total = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            const double inv = 1.0 / static_cast<double>(end - start);
            params.zero_grad();
            LossRecord rec{epoch, ++step, 0.0, 0.0, 0.0};
            for (std::size_t k = start; k < end; ++k) {
                auto where = [&] {
                    return "epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ", sample " +
                           std::to_string(order[k]);
                };
                Graph g(true);
                TotalLoss l;
                try {
                    l = sample_loss(g, model, data[order[k]], loss);
                } catch (const NonFiniteError& e) {
                    throw TrainingError(std::string(e.what()) + " at " + where());
                }
                const double value = l.total.value()[0];
                if (!std::isfinite(value)) throw TrainingError("non-finite loss at " + where());
                // Mean over the batch: scale the seed gradient instead of every parameter.
                g.backward(ops::scale(l.total, inv));
                rec.focal += l.focal * inv;
                rec.dice += l.dice * inv;
                rec.total += value * inv;
            }
            optimizer.step(params);
            result.trace.push_back(rec);
            epoch_total += rec.total;
            ++epoch_batches;
        }
        result.epoch_means.push_back(epoch_total / static_cast<double>(epoch_batches));
        if (on_epoch) on_epoch(epoch, result.epoch_means.back());
    }
    return result;
}

void write_loss_trace(std::ostream& os, const std::vector<LossRecord>& trace) {
    os << "epoch,step,focal,dice,total\n";
    for (const auto& r : trace) {
        os << r.epoch << ',' << r.step << ',' << fmt_real(r.focal) << ',' << fmt_real(r.dice) << ','
           << fmt_real(r.total) << '\n';
    }
}

}  // namespace clipsam
