#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clipsam/checkpoint.hpp"
#include "clipsam/config.hpp"
#include "clipsam/dataset.hpp"
#include "clipsam/format.hpp"
#include "clipsam/image_io.hpp"
#include "clipsam/pipeline.hpp"

namespace fs = std::filesystem;
using namespace clipsam;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

std::string report_line(const MetricsReport& r) {
    return "auroc=" + fmt_fixed(r.auroc, 4) + " ap=" + fmt_fixed(r.ap, 4) + " f1_max=" + fmt_fixed(r.f1_max, 4) +
           " pro=" + fmt_fixed(r.pro, 4);
}

int cmd_train(const fs::path& config_path) {
    const RunConfig cfg = load_config(config_path);
    const Pipeline pipeline(cfg);
    UmciModel model(cfg.umci);
    train_run(pipeline, model, cfg.output_dir, log_line);
    const EvalSummary s = evaluate(pipeline, model, test_split(cfg), RoughSource::umci, cfg.output_dir);
    std::cout << "checkpoint " << (cfg.output_dir / "checkpoint.bin").string() << '\n'
              << "rough   " << report_line(s.rough) << '\n'
              << "refined " << report_line(s.refined) << '\n';
    return 0;
}

int cmd_infer(const fs::path& ckpt, const fs::path& image_path, const fs::path& out, InferOptions options) {
    const RunConfig cfg = config_for_checkpoint(ckpt);
    const Pipeline pipeline(cfg);
    const UmciModel model = load_model(cfg, ckpt);
    const Tensor image = load_image(image_path);
    infer_run(pipeline, model, image, out, options);
    std::cout << "wrote " << out.string() << '\n';
    return 0;
}

int cmd_eval(const fs::path& ckpt, std::uint64_t seed, std::size_t count, const fs::path& out) {
    const RunConfig cfg = config_for_checkpoint(ckpt);
    const Pipeline pipeline(cfg);
    const UmciModel model = load_model(cfg, ckpt);
    const auto samples = generate_dataset(count, cfg.data.extent, seed);
    const EvalSummary s = evaluate(pipeline, model, samples, RoughSource::umci, out);
    std::cout << "rough   " << report_line(s.rough) << '\n' << "refined " << report_line(s.refined) << '\n';
    return 0;
}

int cmd_ablate(const fs::path& config_path) {
    const RunConfig cfg = load_config(config_path);
    for (const AblationRow& row : ablate_run(cfg, log_line)) {
        std::printf("%-10s %s\n", row.variant.c_str(), report_line(row.metrics).c_str());
    }
    return 0;
}

int cmd_generate(std::uint64_t seed, std::size_t count, std::size_t extent, const fs::path& out) {
    const auto samples = generate_dataset(count, extent, seed);
    fs::create_directories(out);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "img%04zu", i);
        save_image(out / (std::string(stem) + ".pgm"), samples[i].image);
        save_mask(out / (std::string(stem) + "_mask.pgm"), samples[i].mask);
        std::cout << stem << ' ' << samples[i].category << ' ' << samples[i].defect_kind << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot anomaly segmentation with cross-modal interaction and mask refinement"};
    app.require_subcommand(1);

    fs::path config_path, ckpt, image_path, out;
    std::uint64_t seed = 0;
    std::size_t count = 0, extent = 64;
    bool no_mmr = false, no_umci = false;
    std::string category{kUnknownCategory};

    auto* train = app.add_subcommand("train", "train on the generated split, then score the held-out split");
    train->add_option("--config", config_path, "run configuration")->required();

    auto* infer = app.add_subcommand("infer", "segment one 8-bit PGM image");
    infer->add_option("--ckpt", ckpt, "checkpoint written by train (run.cfg must sit next to it)")->required();
    infer->add_option("--image", image_path, "input image")->required();
    infer->add_option("--out", out, "output directory")->default_val("infer_out");
    infer->add_option("--category", category, "object category named in the prompts");
    infer->add_flag("--no-mmr", no_mmr, "skip mask refinement");
    infer->add_flag("--no-umci", no_umci, "similarity-only rough map");

    auto* eval = app.add_subcommand("eval", "score a checkpoint on a freshly generated split");
    eval->add_option("--ckpt", ckpt, "checkpoint written by train")->required();
    eval->add_option("--seed", seed, "dataset seed")->required();
    eval->add_option("--count", count, "number of images")->required()->check(CLI::PositiveNumber);
    eval->add_option("--out", out, "output directory (default: <checkpoint dir>/eval)");

    auto* ablate = app.add_subcommand("ablate", "train and score the ablation matrix");
    ablate->add_option("--config", config_path, "run configuration")->required();

    auto* generate = app.add_subcommand("generate", "write synthetic images and masks as PGM");
    generate->add_option("--seed", seed, "dataset seed")->required();
    generate->add_option("--count", count, "number of images")->required()->check(CLI::PositiveNumber);
    generate->add_option("--extent", extent, "image side length")->default_val(64);
    generate->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*train) return cmd_train(config_path);
        if (*infer) return cmd_infer(ckpt, image_path, out, InferOptions{!no_mmr, !no_umci, category});
        if (*eval) return cmd_eval(ckpt, seed, count, out.empty() ? ckpt.parent_path() / "eval" : out);
        if (*ablate) return cmd_ablate(config_path);
        if (*generate) return cmd_generate(seed, count, extent, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
