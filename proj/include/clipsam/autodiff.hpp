#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "clipsam/rng.hpp"
#include "clipsam/tensor.hpp"

namespace clipsam {

/// Named trainable tensor. `grad` is allocated only while training.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
};

/// Parameter set with unique names, iterated in sorted-name order.
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    /// Adds a zero-filled parameter. Throws std::invalid_argument on a duplicate name.
    Param& create(const std::string& name, Shape shape);
    /// Adds a parameter drawn from uniform(-bound, bound).
    Param& create_uniform(const std::string& name, Shape shape, double bound, Rng& rng);

    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.contains(name); }

    std::size_t size() const noexcept { return params_.size(); }
    std::size_t numel() const;

    std::vector<Param*> all();
    std::vector<const Param*> all() const;

    void enable_grad();
    void zero_grad();

private:
    std::map<std::string, Param> params_;
};

class Graph;

/// Handle to a value recorded on a Graph.
class Var {
public:
    Var() = default;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t dim(std::size_t i) const { return value().dim(i); }
    bool requires_grad() const;
    Graph& graph() const { return *graph_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return graph_ != nullptr; }

private:
    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape for one forward pass.
///
/// Nodes are appended in evaluation order; backward() walks them in reverse
/// and each node's closure accumulates into its inputs' gradient buffers.
/// Parameter leaves add their gradient into Param::grad.
class Graph {
public:
    using Backward = std::function<void(const Tensor& grad_out)>;

    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool grad_enabled() const noexcept { return grad_enabled_; }

    Var constant(Tensor value);
    Var param(Param& p);

    /// Records an op output. `backward` is kept only if some input needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of node `id`, zero-allocated on first access.
    Tensor& grad_buffer(std::size_t id);
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }

    /// Seeds d(out)/d(out) = 1 for a single-element output and back-propagates.
    void backward(const Var& out);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    bool grad_enabled_;
};

/// Accumulates `g` into the gradient of `v` when it participates in backprop.
void accumulate_grad(const Var& v, const Tensor& g);

}  // namespace clipsam
