#include "clipsam/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace clipsam {

Param& ParamStore::create(const std::string& name, Shape shape) {
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw std::invalid_argument("duplicate parameter name: " + name);
    it->second.name = name;
    it->second.value = Tensor(std::move(shape));
    return it->second;
}

Param& ParamStore::create_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
    Param& p = create(name, std::move(shape));
    for (double& v : p.value.storage()) v = rng.uniform(-bound, bound);
    return p;
}

Param& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Param& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

std::size_t ParamStore::numel() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.numel();
    return n;
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& [_, p] : params_) out.push_back(&p);
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const auto& [_, p] : params_) out.push_back(&p);
    return out;
}

void ParamStore::enable_grad() {
    for (auto& [_, p] : params_) {
        if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
    }
}

void ParamStore::zero_grad() {
    for (auto& [_, p] : params_) {
        if (!p.grad.empty()) p.grad.fill(0.0);
    }
}

const Tensor& Var::value() const { return graph_->value(id_); }
bool Var::requires_grad() const { return graph_->requires_grad(id_); }

Var Graph::constant(Tensor value) {
    value.require_finite("constant input");
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Graph::param(Param& p) {
    p.value.require_finite("parameter " + p.name);
    Node node{p.value, {}, {}, grad_enabled_};
    if (grad_enabled_) {
        Param* target = &p;
        node.backward = [target](const Tensor& g) {
            if (target->grad.shape() != target->value.shape()) target->grad = Tensor(target->value.shape());
            double* dst = target->grad.ptr();
            const double* src = g.ptr();
            for (std::size_t i = 0, n = g.numel(); i < n; ++i) dst[i] += src[i];
        };
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
    value.require_finite("op output");
    bool needs = false;
    if (grad_enabled_) {
        for (const Var& v : inputs) needs = needs || v.requires_grad();
    }
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs});
    return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Graph::backward(const Var& out) {
    if (!grad_enabled_) throw std::logic_error("backward on a graph recorded without gradients");
    if (out.value().numel() != 1) throw ShapeError("backward requires a single-element output");
    if (!requires_grad(out.id())) return;
    grad_buffer(out.id())[0] = 1.0;
    for (std::size_t i = out.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(n.grad);
    }
}

void accumulate_grad(const Var& v, const Tensor& g) {
    if (!v.requires_grad()) return;
    Tensor& dst = v.graph().grad_buffer(v.id());
    if (dst.numel() != g.numel()) throw ShapeError("gradient shape mismatch");
    double* d = dst.ptr();
    const double* s = g.ptr();
    for (std::size_t i = 0, n = g.numel(); i < n; ++i) d[i] += s[i];
}

}  // namespace clipsam
