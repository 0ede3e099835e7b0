#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clipsam/losses.hpp"
#include "clipsam/umci.hpp"

namespace clipsam {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch = 8;
    std::size_t epochs = 6;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Adam with decoupled weight decay.
class AdamW {
public:
    explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}

    /// Applies one update from the gradients currently held in `params`.
    void step(ParamStore& params);
    std::size_t steps() const noexcept { return t_; }

private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

/// One training example: encoded tokens, its class text feature and the
/// full-resolution ground-truth mask.
struct TrainSample {
    StageTokens tokens;
    const TextFeature* text = nullptr;
    Tensor mask;
};

struct LossRecord {
    std::size_t epoch = 0;  // 1-based
    std::size_t step = 0;   // 1-based, counted across epochs
    double focal = 0.0;
    double dice = 0.0;
    double total = 0.0;
};

struct TrainResult {
    std::vector<LossRecord> trace;
    std::vector<double> epoch_means;
};

/// Per-sample loss on one graph: every stage output is upsampled to mask
/// resolution and softmaxed before the focal and dice terms.
TotalLoss sample_loss(Graph& g, const UmciModel& model, const TrainSample& sample, const LossConfig& loss);

/// Called after every epoch with its 1-based index and mean batch loss.
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Minibatch AdamW over `data`, visiting samples in a seeded shuffled order
/// each epoch. Throws TrainingError on a non-finite loss.
TrainResult train(UmciModel& model, std::span<const TrainSample> data, const LossConfig& loss,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// "epoch,step,focal,dice,total" lines, one per optimizer step.
void write_loss_trace(std::ostream& os, const std::vector<LossRecord>& trace);

}  // namespace clipsam
