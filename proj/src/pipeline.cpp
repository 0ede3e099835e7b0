#include "clipsam/pipeline.hpp"

#include <fstream>

#include "clipsam/checkpoint.hpp"
#include "clipsam/format.hpp"
#include "clipsam/image_io.hpp"
#include "clipsam/rng.hpp"

namespace clipsam {

namespace fs = std::filesystem;

namespace {

std::ofstream open_text(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

void close_text(std::ofstream& os, const fs::path& path) {
    os.flush();
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::uint64_t prompt_seed(const RunConfig& cfg, std::size_t index) {
    return derive_seed(purpose_seed(cfg.seed, SeedPurpose::prompts), index);
}

std::string sample_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img%04zu", i);
    return buf;
}

}  // namespace

Pipeline::Pipeline(const RunConfig& cfg)
    : cfg_(cfg), bank_(load_prompt_bank(cfg.prompt_bank)), text_encoder_(cfg.encoder), image_encoder_(cfg.encoder) {}

const TextFeature& Pipeline::text_feature(const std::string& category) const {
    const std::string name = cfg_.class_aware ? category : std::string(kUnknownCategory);
    auto it = features_.find(name);
    if (it == features_.end()) {
        it = features_.emplace(name, build_text_feature(bank_.with_category(name), text_encoder_)).first;
    }
    return it->second;
}

std::vector<TrainSample> Pipeline::training_samples(const std::vector<SyntheticSample>& data) const {
    std::vector<TrainSample> out;
    out.reserve(data.size());
    for (const auto& s : data) out.push_back({encode(s.image), &text_feature(s.category), s.mask.to_tensor()});
    return out;
}

MapPair segment(const Pipeline& pipeline, const UmciModel& model, const Tensor& image, const std::string& category,
                RoughSource source, std::uint64_t prompt_seed) {
    const std::size_t h = image.dim(0), w = image.dim(1);
    const StageTokens tokens = pipeline.encode(image);
    const TextFeature& text = pipeline.text_feature(category);
    const Tensor fg = source == RoughSource::umci ? model.predict(tokens, text, h, w)
                                                  : model.similarity_map(tokens, text, h, w);
    const MmrConfig& mmr = pipeline.config().mmr;
    MapPair out;
    out.rough = normalize_map(fg);
    out.refinement = refine(fg, image, pipeline.decoder(), RefineOptions{mmr.threshold, mmr.points, prompt_seed});
    out.refined = out.refinement.refined;
    return out;
}

EvalSummary evaluate(const Pipeline& pipeline, const UmciModel& model, const std::vector<SyntheticSample>& samples,
                     RoughSource source, const fs::path& dir) {
    if (samples.empty()) throw std::invalid_argument("evaluation split is empty");
    std::vector<std::string> names;
    std::vector<MetricsReport> rough, refined;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const MapPair maps = segment(pipeline, model, s.image, s.category, source, prompt_seed(pipeline.config(), i));
        names.push_back(sample_name(i));
        rough.push_back(evaluate_map(maps.rough, s.mask));
        refined.push_back(evaluate_map(maps.refined, s.mask));
    }
    fs::create_directories(dir);
    for (const auto& [file, reports] : {std::pair{"metrics_rough.csv", &rough}, {"metrics_refined.csv", &refined}}) {
        const fs::path path = dir / file;
        std::ofstream os = open_text(path);
        write_metrics_csv(os, names, *reports);
        close_text(os, path);
    }
    return {mean_report(rough), mean_report(refined)};
}

TrainSummary train_run(const Pipeline& pipeline, UmciModel& model, const fs::path& dir, const Logger& log) {
    const RunConfig& cfg = pipeline.config();
    const auto data = generate_dataset(cfg.data.train_count, cfg.data.extent,
                                       purpose_seed(cfg.seed, SeedPurpose::train_data));
    const auto samples = pipeline.training_samples(data);
    const TrainResult result = train(model, samples, cfg.loss, cfg.train, [&](std::size_t epoch, double mean) {
        if (log) log("epoch " + std::to_string(epoch) + " mean loss " + fmt_real(mean, 6));
    });

    fs::create_directories(dir);
    save_checkpoint(dir / "checkpoint.bin", model.params());
    {
        const fs::path path = dir / "loss_trace.csv";
        std::ofstream os = open_text(path);
        write_loss_trace(os, result.trace);
        close_text(os, path);
    }
    {
        const fs::path path = dir / "prompt_bank.txt";
        std::ofstream os = open_text(path);
        write_prompt_bank(os, pipeline.bank());
        close_text(os, path);
    }
    {
        // Relative paths keep the run directory relocatable and byte-stable.
        RunConfig saved = cfg;
        saved.output_dir = ".";
        saved.prompt_bank = "prompt_bank.txt";
        const fs::path path = dir / "run.cfg";
        std::ofstream os = open_text(path);
        write_config(os, saved);
        close_text(os, path);
    }
    return {result.epoch_means};
}

RunConfig config_for_checkpoint(const fs::path& checkpoint) {
    return load_config(checkpoint.parent_path() / "run.cfg");
}

UmciModel load_model(const RunConfig& cfg, const fs::path& checkpoint) {
    UmciModel model(cfg.umci);
    load_checkpoint(checkpoint, model.params());
    return model;
}

std::vector<SyntheticSample> test_split(const RunConfig& cfg) {
    return generate_dataset(cfg.data.test_count, cfg.data.extent, purpose_seed(cfg.seed, SeedPurpose::test_data));
}

void infer_run(const Pipeline& pipeline, const UmciModel& model, const Tensor& image, const fs::path& dir,
               const InferOptions& options) {
    const RoughSource source = options.umci ? RoughSource::umci : RoughSource::similarity;
    const MapPair maps = segment(pipeline, model, image, options.category, source,
                                 prompt_seed(pipeline.config(), 0));
    fs::create_directories(dir);
    save_image(dir / "rough.pgm", maps.rough);
    const Tensor& final_map = options.mmr ? maps.refined : maps.rough;
    save_image(dir / "refined.pgm", final_map);
    save_color_image(dir / "overlay.ppm", heat_overlay(image, final_map));
    if (options.mmr) {
        save_mask(dir / "binary.pgm", maps.refinement.binary);
        const fs::path path = dir / "prompts.txt";
        std::ofstream os = open_text(path);
        write_prompts(os, maps.refinement.prompts);
        close_text(os, path);
    }
}

std::vector<AblationRow> ablate_run(const RunConfig& cfg, const Logger& log) {
    const fs::path root = cfg.output_dir;
    const auto test = test_split(cfg);
    std::vector<AblationRow> rows;

    struct Variant {
        const char* name;
        bool strip;
        bool scale;
    };
    MetricsReport full_rough;
    for (const Variant& v : {Variant{"full", true, true}, Variant{"strip_only", true, false},
                             Variant{"scale_only", false, true}}) {
        RunConfig vc = cfg;
        vc.umci.strip_path = v.strip;
        vc.umci.scale_path = v.scale;
        vc.finalize();
        if (log) log(std::string("training ") + v.name);
        const Pipeline pipeline(vc);
        UmciModel model(vc.umci);
        train_run(pipeline, model, root / v.name, log);
        const EvalSummary s = evaluate(pipeline, model, test, RoughSource::umci, root / v.name);
        rows.push_back({v.name, s.refined});
        if (std::string(v.name) == "full") full_rough = s.rough;
    }
    {
        // No cross-modal interaction at all: an untrained model's projection
        // scored by cosine similarity against the text feature.
        if (log) log("scoring no_umci");
        const Pipeline pipeline(cfg);
        const UmciModel model(cfg.umci);
        const EvalSummary s = evaluate(pipeline, model, test, RoughSource::similarity, root / "no_umci");
        rows.push_back({"no_umci", s.refined});
    }
    rows.push_back({"no_mmr", full_rough});

    const fs::path path = root / "summary.csv";
    std::ofstream os = open_text(path);
    os << "variant,auroc,ap,f1_max,pro\n";
    for (const auto& r : rows) {
        os << r.variant << ',' << fmt_fixed(r.metrics.auroc) << ',' << fmt_fixed(r.metrics.ap) << ','
           << fmt_fixed(r.metrics.f1_max) << ',' << fmt_fixed(r.metrics.pro) << '\n';
    }
    close_text(os, path);
    return rows;
}

}  // namespace clipsam
