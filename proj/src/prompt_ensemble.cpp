#include "clipsam/prompt_ensemble.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace clipsam {

namespace {

std::size_t count_placeholders(const std::string& s) {
    std::size_t n = 0;
    for (auto pos = s.find(kPlaceholder); pos != std::string::npos; pos = s.find(kPlaceholder, pos + 2)) ++n;
    return n;
}

std::string substitute(const std::string& text, const std::string& value) {
    const auto pos = text.find(kPlaceholder);
    std::string out = text;
    out.replace(pos, kPlaceholder.size(), value);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void PromptBank::validate() const {
    if (templates.empty()) throw std::invalid_argument("prompt bank has no templates");
    if (normal_states.empty()) throw std::invalid_argument("prompt bank has no normal state phrases");
    if (abnormal_states.empty()) throw std::invalid_argument("prompt bank has no abnormal state phrases");
    if (category.empty()) throw std::invalid_argument("prompt bank category is empty");
    for (const auto& t : templates) {
        if (count_placeholders(t) != 1) {
            throw std::invalid_argument("template must contain exactly one {} placeholder: \"" + t + "\"");
        }
    }
    for (const auto* states : {&normal_states, &abnormal_states}) {
        for (const auto& s : *states) {
            if (count_placeholders(s) > 1) throw std::invalid_argument("state phrase has several placeholders: " + s);
        }
    }
}

PromptBank PromptBank::with_category(std::string name) const {
    PromptBank b = *this;
    b.category = std::move(name);
    return b;
}

PromptBank parse_prompt_bank(std::istream& is) {
    PromptBank bank;
    std::vector<std::string>* section = nullptr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t == "[templates]") {
            section = &bank.templates;
        } else if (t == "[normal]") {
            section = &bank.normal_states;
        } else if (t == "[abnormal]") {
            section = &bank.abnormal_states;
        } else if (t.front() == '[') {
            throw std::invalid_argument("unknown prompt bank section " + t + " on line " + std::to_string(lineno));
        } else if (!section) {
            throw std::invalid_argument("prompt bank entry before any section on line " + std::to_string(lineno));
        } else {
            section->push_back(t);
        }
    }
    bank.validate();
    return bank;
}

PromptBank load_prompt_bank(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open prompt bank " + path.string());
    return parse_prompt_bank(f);
}

void write_prompt_bank(std::ostream& os, const PromptBank& bank) {
    const std::pair<const char*, const std::vector<std::string>*> sections[] = {
        {"[templates]", &bank.templates}, {"[normal]", &bank.normal_states}, {"[abnormal]", &bank.abnormal_states}};
    for (const auto& [title, entries] : sections) {
        os << title << '\n';
        for (const auto& e : *entries) os << e << '\n';
        os << '\n';
    }
}

std::string compose_state(const std::string& state, const std::string& category) {
    if (count_placeholders(state) == 1) return substitute(state, category);
    return state.empty() ? category : state + " " + category;
}

std::vector<std::string> build_sentences(const PromptBank& bank, StateKind kind) {
    bank.validate();
    const auto& states = kind == StateKind::normal ? bank.normal_states : bank.abnormal_states;
    std::vector<std::string> out;
    out.reserve(states.size() * bank.templates.size());
    for (const auto& s : states) {
        const std::string phrase = compose_state(s, bank.category);
        for (const auto& t : bank.templates) out.push_back(substitute(t, phrase));
    }
    return out;
}

Tensor TextFeature::rows() const {
    const std::size_t c = L.dim(0);
    Tensor r({2, c});
    for (std::size_t i = 0; i < c; ++i) {
        r[i] = L[i * 2];
        r[c + i] = L[i * 2 + 1];
    }
    return r;
}

Tensor mean_embedding(const std::vector<std::string>& sentences, const TextEncoder& encoder) {
    if (sentences.empty()) throw std::invalid_argument("no sentences to average");
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sentences) ++counts[s];
    const auto total = static_cast<double>(sentences.size());
    Tensor mean({encoder.dim()});
    for (const auto& [sentence, count] : counts) {
        const Tensor e = encoder.encode(sentence);
        const double weight = static_cast<double>(count) / total;
        for (std::size_t i = 0; i < mean.numel(); ++i) mean[i] += weight * e[i];
    }
    return mean;
}

TextFeature build_text_feature(const std::vector<std::string>& normal, const std::vector<std::string>& abnormal,
                               const TextEncoder& encoder) {
    const Tensor n = mean_embedding(normal, encoder);
    const Tensor a = mean_embedding(abnormal, encoder);
    TextFeature f{Tensor({encoder.dim(), 2})};
    for (std::size_t i = 0; i < encoder.dim(); ++i) {
        f.L[i * 2] = n[i];
        f.L[i * 2 + 1] = a[i];
    }
    f.L.require_finite("text feature");
    return f;
}

TextFeature build_text_feature(const PromptBank& bank, const TextEncoder& encoder) {
    return build_text_feature(build_sentences(bank, StateKind::normal), build_sentences(bank, StateKind::abnormal),
                              encoder);
}

}  // namespace clipsam
