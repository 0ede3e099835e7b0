// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Criteria 5 to 8 run the default configuration end to end (two full
// ablations), which takes several minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "clipsam/config.hpp"
#include "clipsam/encoders.hpp"
#include "clipsam/format.hpp"
#include "clipsam/grad_check.hpp"
#include "clipsam/losses.hpp"
#include "clipsam/mask.hpp"
#include "clipsam/metrics.hpp"
#include "clipsam/mmr.hpp"
#include "clipsam/pipeline.hpp"
#include "clipsam/prompt_ensemble.hpp"
#include "oracles.hpp"
#include "toy_model.hpp"

using namespace clipsam;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double scalar(const Var& v) { return v.value()[0]; }

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    const UmciConfig cfg = testing::toy_config();
    UmciModel model(cfg);
    testing::randomize(model.params(), 11);
    testing::ToyInstance t = testing::toy_instance(cfg, 12);
    t.sample.text = &t.text;
    LossConfig loss;
    loss.stage_weights = {0.3, 0.7};
    const auto start = Clock::now();
    const GradCheckResult r =
        grad_check([&](Graph& g) { return sample_loss(g, model, t.sample, loss).total; }, model.params(), 7);
    const double secs = seconds_since(start);
    const bool all = r.entries_checked == model.params().numel();
    return {all && r.max_rel_error <= 1e-4 && secs < 60.0,
            "max rel error " + fmt_real(r.max_rel_error) + " at " + r.worst_param + "[" + std::to_string(r.worst_index) +
                "] over " + std::to_string(r.entries_checked) + " entries, " + fmt_real(secs, 3) + " s"};
}

Outcome loss_unit_values() {
    Graph g(false);
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };

    const double half = scalar(focal_loss(g.constant(Tensor({1, 1}, 0.5)), Tensor({1, 1}, 1.0), 2.0));
    check(std::abs(half - 0.25 * std::numbers::ln2) <= 1e-12, "focal(p=0.5) = " + fmt_real(half, 17));

    double worst_ce = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Tensor p = testing::random_tensor({7, 9}, rng, 0.0, 1.0);
        Tensor y({7, 9});
        for (auto& v : y.storage()) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
        double ce = 0.0;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
            ce -= y[i] == 1.0 ? std::log(q) : std::log(1.0 - q);
        }
        ce /= static_cast<double>(p.numel());
        worst_ce = std::max(worst_ce, std::abs(scalar(focal_loss(g.constant(p), y, 0.0)) - ce));
    }
    check(worst_ce <= 1e-12, "focal(gamma=0) vs cross-entropy off by " + fmt_real(worst_ce));

    Tensor mask({8, 8});
    for (std::size_t i = 0; i < 64; ++i) mask[i] = (i % 3 == 0) ? 1.0 : 0.0;
    Tensor inverse = mask;
    for (auto& v : inverse.storage()) v = 1.0 - v;
    const double perfect = scalar(dice_loss(g.constant(mask), mask));
    const double disjoint = scalar(dice_loss(g.constant(inverse), mask));
    check(perfect <= 1e-6, "dice(perfect) = " + fmt_real(perfect));
    check(disjoint >= 1.0 - 1e-6, "dice(disjoint) = " + fmt_real(disjoint));

    const LossConfig defaults;
    check(defaults.stage_weights == std::vector<double>{0.1, 0.1, 0.1, 0.7}, "default stage weights");
    Rng rng(4);
    std::vector<Var> stages;
    double expect = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
        const Tensor p = testing::random_tensor({8, 8}, rng, 0.02, 0.98);
        stages.push_back(g.constant(p));
        expect += defaults.stage_weights[s] *
                  (scalar(focal_loss(stages.back(), mask, 2.0)) + scalar(dice_loss(stages.back(), mask)));
    }
    const double total = scalar(total_loss(stages, mask, defaults).total);
    check(std::abs(total - expect) <= 1e-12, "weighted total off by " + fmt_real(std::abs(total - expect)));

    std::string detail = "focal(p=0.5) " + fmt_real(half, 17) + ", CE gap " + fmt_real(worst_ce) + ", dice " + fmt_real(perfect) +
                         "/" + fmt_real(disjoint, 17) + ", weighted total gap " + fmt_real(std::abs(total - expect));
    for (const auto& b : bad) detail += "; FAILED " + b;
    return {bad.empty(), detail};
}

Outcome metric_oracles() {
    const auto start = Clock::now();
    double worst = 0.0, worst_pro = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto inst = oracle::random_instance(seed, 15, 20);
        const ScoredPixels sp{inst.flat, inst.labels};
        worst = std::max({worst, std::abs(auroc(sp) - oracle::auroc_pairs(inst.flat, inst.labels)),
                          std::abs(average_precision(sp) - oracle::ap_rank_walk(inst.flat, inst.labels)),
                          std::abs(f1_max(sp) - oracle::f1_sweep(inst.flat, inst.labels))});
        worst_pro = std::max(worst_pro, std::abs(pro(inst.scores, inst.gt) -
                                                 oracle::pro_dense(inst.scores, inst.gt, kProFprLimit)));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-12 && worst_pro <= 1e-6 && secs < 120.0,
            "1000 instances of 300 px: AUROC/AP/F1 max gap " + fmt_real(worst) + ", PRO max gap " + fmt_real(worst_pro) + ", " +
                fmt_real(secs, 3) + " s"};
}

Outcome components_vs_flood_fill() {
    std::size_t mismatches = 0, regions = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed + 77);
        const BinaryMask m = oracle::random_mask(32, 32, rng.uniform(0.05, 0.6), rng);
        const auto expect = oracle::flood_labels(m);
        const auto labels = label_image(m);
        const auto comps = connected_components(m);
        regions += comps.size();
        const int n = *std::max_element(expect.begin(), expect.end());
        std::size_t covered = 0;
        for (const auto& r : comps) covered += r.pixels.size();
        if (!oracle::same_partition(expect, labels) || comps.size() != static_cast<std::size_t>(n) ||
            covered != m.count())
            ++mismatches;
    }
    return {mismatches == 0,
            std::to_string(mismatches) + " of 1000 masks differ (" + std::to_string(regions) + " regions total)"};
}

// ---------------------------------------------------------------------------

struct DeskRun {
    fs::path dir;
    std::vector<AblationRow> rows;
    MetricsReport rough;  // full model before refinement
    double full_seconds = 0.0;
    double total_seconds = 0.0;
    RunConfig cfg;

    const MetricsReport& row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.variant == name) return r.metrics;
        throw std::runtime_error("no ablation row " + name);
    }
};

DeskRun desk_ablation(const fs::path& dir) {
    DeskRun run;
    run.dir = dir;
    run.cfg = load_config(fs::path(CLIPSAM_SOURCE_DIR) / "configs" / "default.cfg");
    run.cfg.output_dir = dir;
    fs::remove_all(dir);
    std::map<std::string, Clock::time_point> marks;
    const auto start = Clock::now();
    run.rows = ablate_run(run.cfg, [&](const std::string& msg) {
        std::fprintf(stderr, "  [%6.1f s] %s\n", seconds_since(start), msg.c_str());
        marks.emplace(msg, Clock::now());
    });
    run.total_seconds = seconds_since(start);
    run.full_seconds =
        std::chrono::duration<double>(marks.at("training strip_only") - marks.at("training full")).count();
    run.rough = run.row("no_mmr");
    return run;
}

Outcome end_to_end(const DeskRun& run) {
    const RunConfig& c = run.cfg;
    const bool standard = c.data.extent == 64 && c.data.train_count == 200 && c.data.test_count == 50 &&
                          c.train.epochs == 6 && c.train.batch == 8 && c.train.lr == 1e-4;
    const double a = run.row("full").auroc;
    return {standard && a >= 0.90 && run.full_seconds < 300.0,
            std::string(standard ? "" : "config is not the standard desk setting; ") + "refined pixel AUROC " + fmt_real(a) +
                ", train+eval " + fmt_real(run.full_seconds, 4) + " s"};
}

Outcome refinement_delta(const DeskRun& run) {
    const MetricsReport& refined = run.row("full");
    const bool f1 = refined.f1_max >= run.rough.f1_max - 0.02;
    const bool pr = refined.pro >= run.rough.pro;
    return {f1 && pr, "F1-max rough " + fmt_real(run.rough.f1_max) + " refined " + fmt_real(refined.f1_max) +
                          (f1 ? " (ok)" : " (below tolerance)") + "; PRO rough " + fmt_real(run.rough.pro) + " refined " +
                          fmt_real(refined.pro) + (pr ? " (ok)" : " (lower)")};
}

Outcome ablation_ordering(const DeskRun& run) {
    const double full = run.row("full").auroc, strip = run.row("strip_only").auroc,
                 scale = run.row("scale_only").auroc, none = run.row("no_umci").auroc;
    const double weakest = std::min({full, strip, scale});
    return {strip < full && scale < full && none <= weakest - 0.1,
            "AUROC full " + fmt_real(full) + ", strip-only " + fmt_real(strip) + ", scale-only " + fmt_real(scale) + ", no-UMCI " +
                fmt_real(none)};
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        const std::string rel = fs::relative(e.path(), root).generic_string();
        if (e.is_directory()) {
            out[rel + "/"] = "";
            continue;
        }
        std::ifstream is(e.path(), std::ios::binary);
        out[rel] = std::string(std::istreambuf_iterator<char>(is), {});
    }
    return out;
}

Outcome determinism(const DeskRun& first, const fs::path& second_dir) {
    const DeskRun second = desk_ablation(second_dir);
    const auto a = tree_contents(first.dir), b = tree_contents(second.dir);
    std::vector<std::string> diff;
    for (const auto& [name, bytes] : a) {
        const auto it = b.find(name);
        if (it == b.end() || it->second != bytes) diff.push_back(name);
    }
    for (const auto& [name, bytes] : b)
        if (!a.contains(name)) diff.push_back(name);
    std::string detail = std::to_string(a.size()) + " entries compared";
    if (!diff.empty()) detail += ", differing: " + diff.front() + (diff.size() > 1 ? " and others" : "");
    return {diff.empty() && !a.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome prompt_ensemble() {
    const MockTextEncoder enc{EncoderConfig{}};
    PromptBank bank = load_prompt_bank(fs::path(CLIPSAM_SOURCE_DIR) / "data" / "prompt_bank.txt");
    std::vector<std::string> bad;
    for (const std::string& category : {std::string("bottle"), std::string(kUnknownCategory)}) {
        const PromptBank b = bank.with_category(category);
        const auto normal = build_sentences(b, StateKind::normal), abnormal = build_sentences(b, StateKind::abnormal);
        if (normal.size() != b.templates.size() * b.normal_states.size() ||
            abnormal.size() != b.templates.size() * b.abnormal_states.size())
            bad.push_back("sentence count for " + category);

        const Tensor base = build_text_feature(normal, abnormal, enc).L;
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            auto n = normal, a = abnormal;
            for (std::size_t i = n.size(); i > 1; --i) std::swap(n[i - 1], n[rng.below(i)]);
            for (std::size_t i = a.size(); i > 1; --i) std::swap(a[i - 1], a[rng.below(i)]);
            const std::size_t k = 1 + rng.below(3);
            auto nd = n, ad = a;
            for (std::size_t r = 1; r < k; ++r) {
                nd.insert(nd.end(), n.begin(), n.end());
                ad.insert(ad.end(), a.begin(), a.end());
            }
            if (build_text_feature(n, a, enc).L != base || build_text_feature(nd, ad, enc).L != base) {
                bad.push_back("L changed under permutation/duplication for " + category);
                break;
            }
        }
    }
    std::string detail = std::to_string(bank.templates.size()) + " templates x (" +
                         std::to_string(bank.normal_states.size()) + " normal, " +
                         std::to_string(bank.abnormal_states.size()) + " abnormal) states";
    for (const auto& b : bad) detail += "; FAILED " + b;
    return {bad.empty(), detail};
}

Outcome mask_contracts() {
    const MockSamDecoder dec;
    std::size_t boxes = 0, nest_failures = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const Tensor heat = testing::random_tensor({24, 24}, rng, 0.0, 1.0);
        const auto regions = connected_components(binarize(heat, 0.6));
        PromptSet prompts;
        prompts.boxes = extract_boxes(regions, 24, 24);
        prompts.points = extract_points(regions, 3, seed).points;
        if (prompts.boxes.empty()) continue;
        const SamMaskSet s = dec.decode(Tensor({24, 24}, 0.5), heat, prompts);
        boxes += s.masks.size();
        for (const auto& levels : s.masks)
            for (std::size_t l = 1; l < levels.size(); ++l)
                for (std::size_t i = 0; i < levels[l].size(); ++i)
                    if (levels[l][i] > levels[l - 1][i]) ++nest_failures;
    }

    std::size_t refine_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed + 500);
        const Tensor rough = testing::random_tensor({20, 20}, rng, 0.0, kDefaultBinaryThreshold);
        const Refinement r = refine(rough, Tensor({20, 20}, 0.5), dec, {kDefaultBinaryThreshold, 3, seed});
        if (!r.prompts.boxes.empty() || r.refined != normalize_map(rough)) ++refine_failures;
    }
    return {nest_failures == 0 && refine_failures == 0 && boxes > 0,
            std::to_string(boxes) + " boxes with " + std::to_string(nest_failures) +
                " nesting violations; q=0 refinement differs from normalized map in " +
                std::to_string(refine_failures) + " of 100 maps"};
}

void loss_trace_note(const DeskRun& run) {
    std::ifstream is(run.dir / "full" / "loss_trace.csv");
    std::string line;
    std::getline(is, line);
    std::map<std::size_t, std::pair<double, std::size_t>> epochs;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        auto& [sum, n] = epochs[std::stoul(cells.at(0))];
        sum += std::stod(cells.at(4));
        ++n;
    }
    if (epochs.size() < 2) return;
    const double first = epochs.begin()->second.first / static_cast<double>(epochs.begin()->second.second);
    const double last = epochs.rbegin()->second.first / static_cast<double>(epochs.rbegin()->second.second);
    std::printf("note: full-model epoch-mean loss %s -> %s (%.1f%% lower)\n", fmt_real(first).c_str(), fmt_real(last).c_str(),
                100.0 * (1.0 - last / first));
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "clipsam_acceptance";
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
        Outcome o;
        const auto start = Clock::now();
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                    seconds_since(start));
        std::fflush(stdout);
    };

    report(1, "gradient correctness", gradient_correctness);
    report(2, "loss unit values", loss_unit_values);
    report(3, "metric oracle equivalence", metric_oracles);
    report(4, "connected components", components_vs_flood_fill);

    std::optional<DeskRun> desk;
    std::string desk_error;
    try {
        desk = desk_ablation(work / "a");
    } catch (const std::exception& e) {
        desk_error = std::string("desk run failed: ") + e.what();
    }
    auto with_desk = [&](Outcome (*f)(const DeskRun&)) {
        return [&, f] { return desk ? f(*desk) : Outcome{false, desk_error}; };
    };
    report(5, "end-to-end desk run", with_desk(end_to_end));
    report(6, "refinement delta", with_desk(refinement_delta));
    report(7, "ablation ordering", with_desk(ablation_ordering));
    report(8, "determinism", [&] { return desk ? determinism(*desk, work / "b") : Outcome{false, desk_error}; });
    report(9, "prompt ensemble", prompt_ensemble);
    report(10, "mask-set contracts", mask_contracts);
    if (desk) loss_trace_note(*desk);

    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
