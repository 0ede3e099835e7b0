#pragma once

// End-to-end commands: train, infer, eval and the ablation matrix. Every
// artifact is a pure function of the run configuration.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "clipsam/config.hpp"
#include "clipsam/dataset.hpp"
#include "clipsam/metrics.hpp"
#include "clipsam/prompt_ensemble.hpp"

namespace clipsam {

using Logger = std::function<void(const std::string&)>;

/// Frozen encoders, mask decoder and per-category text features of a run.
class Pipeline {
public:
    explicit Pipeline(const RunConfig& cfg);

    const RunConfig& config() const noexcept { return cfg_; }
    const PromptBank& bank() const noexcept { return bank_; }
    const TextFeature& text_feature(const std::string& category) const;
    StageTokens encode(const Tensor& image) const { return image_encoder_.encode(image); }
    const MaskDecoder& decoder() const noexcept { return decoder_; }

    std::vector<TrainSample> training_samples(const std::vector<SyntheticSample>& data) const;

private:
    RunConfig cfg_;
    PromptBank bank_;
    MockTextEncoder text_encoder_;
    MockImageEncoder image_encoder_;
    MockSamDecoder decoder_;
    mutable std::map<std::string, TextFeature> features_;
};

/// Rough and refined maps for one image.
struct MapPair {
    Tensor rough;    // normalized foreground map
    Tensor refined;  // after mask refinement
    Refinement refinement;
};

enum class RoughSource { umci, similarity };

MapPair segment(const Pipeline& pipeline, const UmciModel& model, const Tensor& image, const std::string& category,
                RoughSource source, std::uint64_t prompt_seed);

struct EvalSummary {
    MetricsReport rough;
    MetricsReport refined;
};

/// Writes metrics_rough.csv and metrics_refined.csv into `dir`.
EvalSummary evaluate(const Pipeline& pipeline, const UmciModel& model, const std::vector<SyntheticSample>& samples,
                     RoughSource source, const std::filesystem::path& dir);

struct TrainSummary {
    std::vector<double> epoch_means;
};

/// Trains on the generated training split and writes checkpoint.bin,
/// loss_trace.csv, run.cfg and prompt_bank.txt into `dir`.
TrainSummary train_run(const Pipeline& pipeline, UmciModel& model, const std::filesystem::path& dir,
                       const Logger& log);

/// Rebuilds the configuration saved next to a checkpoint.
RunConfig config_for_checkpoint(const std::filesystem::path& checkpoint);

/// Model with the checkpoint's weights; throws CheckpointError when the
/// parameter set does not match the configuration.
UmciModel load_model(const RunConfig& cfg, const std::filesystem::path& checkpoint);

std::vector<SyntheticSample> test_split(const RunConfig& cfg);

struct InferOptions {
    bool mmr = true;
    bool umci = true;
    std::string category{kUnknownCategory};
};

/// Writes rough.pgm, binary.pgm, prompts.txt, refined.pgm and overlay.ppm.
void infer_run(const Pipeline& pipeline, const UmciModel& model, const Tensor& image,
               const std::filesystem::path& dir, const InferOptions& options);

struct AblationRow {
    std::string variant;
    MetricsReport metrics;
};

/// Trains the full, strip-only and scale-only models and scores them with
/// the similarity-only and refinement-free variants. Writes one directory per
/// variant and summary.csv under cfg.output_dir.
std::vector<AblationRow> ablate_run(const RunConfig& cfg, const Logger& log);

}  // namespace clipsam
