#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "clipsam/encoders.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

/// Placeholder for the object category in templates and state phrases.
inline constexpr std::string_view kPlaceholder = "{}";
/// Category used when the object class is unknown.
inline constexpr std::string_view kUnknownCategory = "object";

/// Compositional prompt ensemble: m templates × n state phrases per class.
///
/// Every template carries exactly one "{}" that receives the state phrase
/// already combined with the category. A state phrase may hold its own "{}"
/// for the category ("{} with defect"); otherwise the category is appended
/// after a space ("perfect" -> "perfect bottle").
struct PromptBank {
    std::vector<std::string> templates;
    std::vector<std::string> normal_states;
    std::vector<std::string> abnormal_states;
    std::string category{kUnknownCategory};

    void validate() const;
    PromptBank with_category(std::string name) const;
};

enum class StateKind { normal, abnormal };

/// Parses the sectioned text format: "[templates]", "[normal]", "[abnormal]",
/// one entry per line; blank lines and lines starting with '#' are skipped.
PromptBank parse_prompt_bank(std::istream& is);
PromptBank load_prompt_bank(const std::filesystem::path& path);

/// Inverse of parse_prompt_bank (the category is not part of the file).
void write_prompt_bank(std::ostream& os, const PromptBank& bank);

/// The state phrase with the category filled in.
std::string compose_state(const std::string& state, const std::string& category);

/// Every (template, state) combination, templates varying fastest.
std::vector<std::string> build_sentences(const PromptBank& bank, StateKind kind);

/// c_t×2 text feature: column 0 normal, column 1 abnormal.
struct TextFeature {
    Tensor L;

    std::size_t dim() const { return L.dim(0); }
    /// 2×c_t, one row per class, the layout the attention layers consume.
    Tensor rows() const;
};

/// Mean embedding of a sentence multiset. Identical sentences are grouped
/// and summed in sorted order, so the result is bitwise independent of the
/// input order and unchanged when every sentence is repeated equally often.
Tensor mean_embedding(const std::vector<std::string>& sentences, const TextEncoder& encoder);

TextFeature build_text_feature(const std::vector<std::string>& normal, const std::vector<std::string>& abnormal,
                               const TextEncoder& encoder);
TextFeature build_text_feature(const PromptBank& bank, const TextEncoder& encoder);

}  // namespace clipsam
