#pragma once

// Run configuration: flat `key = value` text with `#` comments and dotted
// module prefixes. Every key is required.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "clipsam/encoders.hpp"
#include "clipsam/losses.hpp"
#include "clipsam/mmr.hpp"
#include "clipsam/train.hpp"
#include "clipsam/umci.hpp"

namespace clipsam {

/// A missing, unknown, malformed or inconsistent setting. `field()` names
/// the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline constexpr const char* kSeedEnvVar = "CLIPSAM_SEED";

struct DataConfig {
    std::size_t train_count = 200;
    std::size_t test_count = 50;
    std::size_t extent = 64;
};

struct MmrConfig {
    double threshold = kDefaultBinaryThreshold;
    std::size_t points = kDefaultPromptPoints;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "runs/default";
    DataConfig data;
    EncoderConfig encoder;
    UmciConfig umci;
    LossConfig loss;
    TrainConfig train;
    MmrConfig mmr;
    std::filesystem::path prompt_bank = "prompt_bank.txt";
    bool class_aware = true;  // false: every sentence names the generic category

    /// Copies the shared extents (c_t, C, stage count) and the derived seeds
    /// into the module configs, then checks cross-module consistency.
    void finalize();
};

/// Parses and validates. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir);

/// Reads `path`, then applies the CLIPSAM_SEED override if it is set.
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key in canonical order. Paths are written as given, so
/// callers that want a relocatable file pass relative ones.
void write_config(std::ostream& os, const RunConfig& cfg);

/// Independent seeds for each consumer of randomness in a run.
enum class SeedPurpose : std::uint64_t { train_data = 1, test_data = 2, model = 3, shuffle = 4, prompts = 5 };
std::uint64_t purpose_seed(std::uint64_t seed, SeedPurpose purpose);

}  // namespace clipsam
