#include "clipsam/umci.hpp"

#include <algorithm>
#include <stdexcept>

namespace clipsam {

using namespace ops;

void UmciConfig::validate() const {
    if (token_dim == 0 || text_dim == 0 || hidden_dim == 0 || stages == 0) {
        throw std::invalid_argument("umci: dimensions and stage count must be >= 1");
    }
    if (scale1 == 0 || scale2 == 0) throw std::invalid_argument("umci: scale kernels must be >= 1");
    if (scale1 == scale2) throw std::invalid_argument("umci: scale kernels s1 and s2 must differ");
    if (!strip_path && !scale_path) throw std::invalid_argument("umci: at least one path must be enabled");
}

UmciStage::UmciStage(ParamStore& store, const std::string& prefix, const UmciConfig& cfg, Rng& rng) : cfg_(cfg) {
    const std::size_t ct = cfg.text_dim, ch = cfg.hidden_dim;
    projection_ = LinearLayer::create(store, prefix + "proj", cfg.token_dim, ct, rng);
    if (cfg.strip_path) {
        auto branch = [&](const std::string& name, std::size_t kh, std::size_t kw) {
            StripBranch b;
            b.conv = ConvLayer::create(store, prefix + "strip." + name + ".conv", kh, kw, ct, ch, rng);
            b.text_q = LinearLayer::create(store, prefix + "strip." + name + ".text1", ct, ch, rng);
            b.text_v = LinearLayer::create(store, prefix + "strip." + name + ".text2", ct, ch, rng);
            b.gru = GruCell::create(store, prefix + "strip." + name + ".gru", ch, rng);
            return b;
        };
        // Rows are pooled to an H×1 strip and convolved along H; columns to 1×W along W.
        row_ = branch("row", 3, 1);
        col_ = branch("col", 1, 3);
        strip_merge_ = ConvLayer::create(store, prefix + "strip.merge", 3, 3, ch, ch, rng);
    }
    if (cfg.scale_path) {
        auto branch = [&](const std::string& name, std::size_t kernel) {
            ScaleBranch b;
            b.kernel = kernel;
            b.conv = ConvLayer::create(store, prefix + "scale." + name + ".conv", 3, 3, ct, ch, rng);
            b.text_key = LinearLayer::create(store, prefix + "scale." + name + ".text_k", ct, ch, rng);
            b.text_value = LinearLayer::create(store, prefix + "scale." + name + ".text_v", ct, ch, rng);
            return b;
        };
        g1_ = branch("g1", cfg.scale1);
        g2_ = branch("g2", cfg.scale2);
        scale_merge_ = ConvLayer::create(store, prefix + "scale.merge", 3, 3, ch, ch, rng);
    }
    ori_ = ConvLayer::create(store, prefix + "fuse.ori", 3, 3, ct, ch, rng);
    all_ = ConvLayer::create(store, prefix + "fuse.all", 3, 3, 3 * ch, ct, rng);
    head_hidden_ = LinearLayer::create(store, prefix + "head.fc1", ct, ch, rng);
    head_out_ = LinearLayer::create(store, prefix + "head.fc2", ch, 2, rng);
    head_out_.weight->value.fill(0.0);
}

Var UmciStage::project(Graph& g, const Var& tokens) const {
    if (tokens.value().rank() != 3 || tokens.dim(2) != cfg_.token_dim) {
        throw ShapeError("umci: patch tokens " + shape_str(tokens.shape()) + " do not have " +
                         std::to_string(cfg_.token_dim) + " channels");
    }
    const std::size_t h = tokens.dim(0), w = tokens.dim(1);
    const Var flat = reshape(tokens, {h * w, cfg_.token_dim});
    return reshape(projection_(g, flat), {h, w, cfg_.text_dim});
}

Var UmciStage::strip_direction(Graph& g, const StripBranch& branch, const Var& strip, const Var& text_rows) const {
    const Var t1 = branch.text_q(g, text_rows);
    const Var t2 = branch.text_v(g, text_rows);
    const Var gathered = attention(t1, strip, strip);
    const Var t_new = branch.gru(g, gathered, t1);
    const Var attended = attention(strip, t_new, t2);
    return l2_normalize_rows(add(attended, strip));
}

Var UmciStage::strip_path(Graph& g, const Var& projected, const Var& text_rows) const {
    if (!row_) throw std::logic_error("umci: strip path is disabled in this configuration");
    const std::size_t h = projected.dim(0), w = projected.dim(1), ch = cfg_.hidden_dim;
    const Var v_row = reshape(row_->conv(g, avg_pool2d(projected, 1, w)), {h, ch});
    const Var v_col = reshape(col_->conv(g, avg_pool2d(projected, h, 1)), {w, ch});
    const Var m_row = strip_direction(g, *row_, v_row, text_rows);
    const Var m_col = strip_direction(g, *col_, v_col, text_rows);
    const Var up_row = bilinear_resize(reshape(m_row, {h, 1, ch}), h, w);
    const Var up_col = bilinear_resize(reshape(m_col, {1, w, ch}), h, w);
    return (*strip_merge_)(g, add(up_row, up_col));
}

Var UmciStage::scale_branch(Graph& g, const ScaleBranch& branch, const Var& projected, const Var& text_rows) const {
    const std::size_t h = projected.dim(0), w = projected.dim(1), ch = cfg_.hidden_dim;
    if (branch.kernel > std::max(h, w)) {
        throw ShapeError("umci: scale kernel " + std::to_string(branch.kernel) + " exceeds the " +
                         std::to_string(h) + "x" + std::to_string(w) + " token grid");
    }
    const Var pooled = avg_pool2d(projected, std::min(branch.kernel, h), std::min(branch.kernel, w));
    const std::size_t gh = pooled.dim(0), gw = pooled.dim(1);
    const Var v = reshape(branch.conv(g, pooled), {gh * gw, ch});
    const Var tk = branch.text_key(g, text_rows);
    const Var tv = branch.text_value(g, text_rows);
    const Var m = l2_normalize_rows(add(attention(v, tk, tv), v));
    return bilinear_resize(reshape(m, {gh, gw, ch}), h, w);
}

Var UmciStage::scale_path(Graph& g, const Var& projected, const Var& text_rows) const {
    if (!g1_) throw std::logic_error("umci: scale path is disabled in this configuration");
    const Var m1 = scale_branch(g, *g1_, projected, text_rows);
    const Var m2 = scale_branch(g, *g2_, projected, text_rows);
    return (*scale_merge_)(g, add(m1, m2));
}

Var UmciStage::fuse(Graph& g, const Var& projected, std::optional<Var> strip, std::optional<Var> scale) const {
    const std::size_t h = projected.dim(0), w = projected.dim(1), ch = cfg_.hidden_dim;
    const Var v_ori = ori_(g, projected);
    const Var zeros = g.constant(Tensor({h, w, ch}));
    const Var m_all = all_(g, concat_lastdim({v_ori, strip.value_or(zeros), scale.value_or(zeros)}));
    const Var x = relu(add(m_all, projected));
    const Var hidden = relu(head_hidden_(g, reshape(x, {h * w, cfg_.text_dim})));
    return reshape(head_out_(g, hidden), {h, w, 2});
}

Var UmciStage::forward(Graph& g, const Var& tokens, const Var& text_rows) const {
    const Var projected = project(g, tokens);
    std::optional<Var> strip, scale;
    if (cfg_.strip_path) strip = strip_path(g, projected, text_rows);
    if (cfg_.scale_path) scale = scale_path(g, projected, text_rows);
    return fuse(g, projected, strip, scale);
}

UmciModel::UmciModel(const UmciConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    stages_.reserve(cfg_.stages);
    for (std::size_t i = 0; i < cfg_.stages; ++i) {
        stages_.emplace_back(params_, "stage" + std::to_string(i) + ".", cfg_, rng);
    }
}

UmciOutput UmciModel::forward(Graph& g, const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                              std::size_t image_w) const {
    if (tokens.count() != cfg_.stages) {
        throw ShapeError("umci: got " + std::to_string(tokens.count()) + " token stages, model has " +
                         std::to_string(cfg_.stages));
    }
    if (text.L.rank() != 2 || text.L.dim(0) != cfg_.text_dim || text.L.dim(1) != 2) {
        throw ShapeError("umci: text feature must be " + std::to_string(cfg_.text_dim) + "x2, got " +
                         shape_str(text.L.shape()));
    }
    const Var text_rows = g.constant(text.rows());
    UmciOutput out;
    for (std::size_t i = 0; i < cfg_.stages; ++i) {
        out.stage_logits.push_back(stages_[i].forward(g, g.constant(tokens.stages[i]), text_rows));
    }
    out.aggregate_logits = mean_of(out.stage_logits);
    out.probabilities = softmax_lastdim(bilinear_resize(out.aggregate_logits, image_h, image_w));
    return out;
}

Tensor UmciModel::predict(const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                          std::size_t image_w) const {
    Graph g(false);
    return foreground(forward(g, tokens, text, image_h, image_w).probabilities.value());
}

Tensor UmciModel::similarity_map(const StageTokens& tokens, const TextFeature& text, std::size_t image_h,
                                 std::size_t image_w) const {
    if (tokens.count() != cfg_.stages) throw ShapeError("umci: token stage count mismatch");
    Graph g(false);
    const Var text_cols = l2_normalize_rows(g.constant(text.rows()));
    std::vector<Var> sims;
    for (std::size_t i = 0; i < cfg_.stages; ++i) {
        const Var p = stages_[i].project(g, g.constant(tokens.stages[i]));
        const std::size_t h = p.dim(0), w = p.dim(1);
        const Var unit = l2_normalize_rows(reshape(p, {h * w, cfg_.text_dim}));
        sims.push_back(reshape(matmul(unit, transpose(text_cols)), {h, w, 2}));
    }
    const Var probs = softmax_lastdim(bilinear_resize(mean_of(sims), image_h, image_w));
    return foreground(probs.value());
}

Tensor foreground(const Tensor& probs) {
    if (probs.rank() != 3 || probs.dim(2) != 2) throw ShapeError("foreground: expected H×W×2");
    Tensor out({probs.dim(0), probs.dim(1)});
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = probs[i * 2 + 1];
    return out;
}

}  // namespace clipsam
