#include "clipsam/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "clipsam/dataset.hpp"
#include "clipsam/format.hpp"
#include "clipsam/rng.hpp"

namespace clipsam {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key, "expected a non-negative integer, got \"" + v + "\"");
    }
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    const auto n = parse_u64(key, v);
    if (n == 0) throw ConfigError(key, "must be >= 1");
    return static_cast<std::size_t>(n);
}

double parse_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
        throw ConfigError(key, "expected a finite number, got \"" + v + "\"");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key, "expected true or false, got \"" + v + "\"");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
    return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string list_str(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt_real(v[i], 17);
    return out;
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> print;
};

#define CLIPSAM_COUNT(KEY, MEMBER)                                                                  \
    Field {                                                                                        \
        KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_count(KEY, v); },            \
            [](const RunConfig& c) { return std::to_string(c.MEMBER); }                             \
    }
#define CLIPSAM_REAL(KEY, MEMBER)                                                                   \
    Field {                                                                                        \
        KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_real(KEY, v); },             \
            [](const RunConfig& c) { return fmt_real(c.MEMBER, 17); }                               \
    }
#define CLIPSAM_BOOL(KEY, MEMBER)                                                                   \
    Field {                                                                                        \
        KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(KEY, v); },             \
            [](const RunConfig& c) { return bool_str(c.MEMBER); }                                   \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        Field{"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
        Field{"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
              [](const RunConfig& c) { return c.output_dir.generic_string(); }},
        CLIPSAM_COUNT("data.train_count", data.train_count),
        CLIPSAM_COUNT("data.test_count", data.test_count),
        CLIPSAM_COUNT("data.extent", data.extent),
        CLIPSAM_COUNT("encoder.text_dim", encoder.text_dim),
        CLIPSAM_COUNT("encoder.token_dim", encoder.token_dim),
        CLIPSAM_COUNT("encoder.grid_h", encoder.grid_h),
        CLIPSAM_COUNT("encoder.grid_w", encoder.grid_w),
        CLIPSAM_COUNT("encoder.stages", encoder.stages),
        CLIPSAM_REAL("encoder.token_gain", encoder.token_gain),
        Field{"encoder.seed", [](RunConfig& c, const std::string& v) { c.encoder.seed = parse_u64("encoder.seed", v); },
              [](const RunConfig& c) { return std::to_string(c.encoder.seed); }},
        CLIPSAM_COUNT("umci.c_h", umci.hidden_dim),
        CLIPSAM_COUNT("umci.s1", umci.scale1),
        CLIPSAM_COUNT("umci.s2", umci.scale2),
        CLIPSAM_BOOL("umci.strip_path", umci.strip_path),
        CLIPSAM_BOOL("umci.scale_path", umci.scale_path),
        CLIPSAM_REAL("loss.gamma", loss.gamma),
        Field{"loss.stage_weights",
              [](RunConfig& c, const std::string& v) { c.loss.stage_weights = parse_list("loss.stage_weights", v); },
              [](const RunConfig& c) { return list_str(c.loss.stage_weights); }},
        CLIPSAM_REAL("train.lr", train.lr),
        CLIPSAM_REAL("train.weight_decay", train.weight_decay),
        CLIPSAM_REAL("train.beta1", train.beta1),
        CLIPSAM_REAL("train.beta2", train.beta2),
        CLIPSAM_REAL("train.eps", train.eps),
        CLIPSAM_COUNT("train.batch", train.batch),
        CLIPSAM_COUNT("train.epochs", train.epochs),
        CLIPSAM_REAL("mmr.threshold", mmr.threshold),
        Field{"mmr.points", [](RunConfig& c, const std::string& v) { c.mmr.points = parse_u64("mmr.points", v); },
              [](const RunConfig& c) { return std::to_string(c.mmr.points); }},
        Field{"prompts.bank", [](RunConfig& c, const std::string& v) { c.prompt_bank = v; },
              [](const RunConfig& c) { return c.prompt_bank.generic_string(); }},
        CLIPSAM_BOOL("prompts.class_aware", class_aware),
    };
    return table;
}

#undef CLIPSAM_COUNT
#undef CLIPSAM_REAL
#undef CLIPSAM_BOOL

// Re-raises a module validation failure against the config key it came from.
template <typename F>
void check(const char* key, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

}  // namespace

void RunConfig::finalize() {
    umci.token_dim = encoder.token_dim;
    umci.text_dim = encoder.text_dim;
    umci.stages = encoder.stages;
    umci.seed = purpose_seed(seed, SeedPurpose::model);
    train.seed = purpose_seed(seed, SeedPurpose::shuffle);

    check("encoder", [&] { encoder.validate(); });
    check("umci", [&] { umci.validate(); });
    if (umci.scale_path) {
        const std::size_t grid = std::max(encoder.grid_h, encoder.grid_w);
        if (umci.scale1 > grid) throw ConfigError("umci.s1", "exceeds the token grid extent " + std::to_string(grid));
        if (umci.scale2 > grid) throw ConfigError("umci.s2", "exceeds the token grid extent " + std::to_string(grid));
    }
    check("loss.stage_weights", [&] { loss.validate(encoder.stages); });
    check("train", [&] { train.validate(); });
    if (data.extent < kMinExtent) throw ConfigError("data.extent", "must be >= " + std::to_string(kMinExtent));
    if (data.extent < encoder.grid_h || data.extent < encoder.grid_w) {
        throw ConfigError("data.extent", "smaller than the token grid");
    }
    if (!(mmr.threshold >= 0.0 && mmr.threshold <= 1.0)) throw ConfigError("mmr.threshold", "must lie in [0, 1]");
}

RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected `key = value`");
        }
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
        if (!values.emplace(key, value).second) throw ConfigError(key, "set more than once");
    }

    RunConfig cfg;
    for (const Field& f : fields()) {
        const auto it = values.find(f.key);
        if (it == values.end()) throw ConfigError(f.key, "missing required field");
        f.parse(cfg, it->second);
        values.erase(it);
    }
    if (!values.empty()) throw ConfigError(values.begin()->first, "unknown field");

    if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
    if (cfg.prompt_bank.is_relative()) cfg.prompt_bank = base_dir / cfg.prompt_bank;
    cfg.finalize();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path.string());
    RunConfig cfg = parse_config(is, path.parent_path());
    if (const char* env = std::getenv(kSeedEnvVar)) {
        cfg.seed = parse_u64(kSeedEnvVar, trim(env));
        cfg.finalize();
    }
    return cfg;
}

void write_config(std::ostream& os, const RunConfig& cfg) {
    std::string section;
    for (const Field& f : fields()) {
        const std::string key = f.key;
        const auto dot = key.find('.');
        const std::string prefix = dot == std::string::npos ? "" : key.substr(0, dot);
        if (prefix != section && !prefix.empty()) os << '\n';
        section = prefix;
        os << key << " = " << f.print(cfg) << '\n';
    }
}

std::uint64_t purpose_seed(std::uint64_t seed, SeedPurpose purpose) {
    return derive_seed(seed, static_cast<std::uint64_t>(purpose));
}

}  // namespace clipsam
