#ifndef DART_TENSOR_HPP
#define DART_TENSOR_HPP

#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "dart/common.hpp"

namespace dart {

// Reverse-mode autodiff node. Templated on the scalar type: training runs
// in float, gradient checks re-instantiate the same graph code in double.
template <typename T>
struct NodeT {
    std::vector<int> shape;
    std::vector<T> values;
    std::vector<T> grad;  // allocated lazily, same length as values
    bool requires_grad = false;  // leaf flag
    bool needs_grad = false;     // requires_grad or any ancestor does
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void()> backward_fn;

    int numel() const {
        int n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    }
};

template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape, bool requires_grad = false)
        : node_(std::make_shared<NodeT<T>>()) {
        for (int d : shape)
            if (d <= 0) throw ShapeError("tensor dimension must be positive");
        node_->shape = std::move(shape);
        node_->values.assign(node_->numel(), T(0));
        node_->requires_grad = requires_grad;
        node_->needs_grad = requires_grad;
    }

    static TensorT from_values(std::vector<int> shape, std::vector<T> values,
                               bool requires_grad = false) {
        TensorT t(std::move(shape), requires_grad);
        if (int(values.size()) != t.numel())
            throw ShapeError("value count " + std::to_string(values.size()) +
                             " does not match shape product " +
                             std::to_string(t.numel()));
        t.node_->values = std::move(values);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[i]; }
    int ndim() const { return int(node_->shape.size()); }
    int numel() const { return node_->numel(); }
    std::vector<T>& values() { return node_->values; }
    const std::vector<T>& values() const { return node_->values; }
    std::vector<T>& grad() { node_->ensure_grad(); return node_->grad; }
    const std::vector<T>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    bool needs_grad() const { return node_->needs_grad; }
    std::shared_ptr<NodeT<T>> node() const { return node_; }

    T item() const {
        if (numel() != 1) throw ShapeError("item() requires a scalar tensor");
        return node_->values[0];
    }

    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    // Backpropagate from this scalar through the recorded graph.
    void backward() {
        if (numel() != 1) throw ShapeError("backward() requires a scalar output");
        std::vector<NodeT<T>*> order;
        topo_sort(node_.get(), order);
        node_->ensure_grad();
        node_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            NodeT<T>* n = *it;
            if (n->backward_fn && n->needs_grad) n->backward_fn();
        }
    }

    // Graph construction helper used by ops: wraps a fresh node whose
    // parents are the given tensors.
    static TensorT make_op(std::vector<int> shape,
                           std::vector<std::shared_ptr<NodeT<T>>> parents) {
        TensorT t(std::move(shape), false);
        bool needs = false;
        for (auto& p : parents) needs = needs || p->needs_grad;
        t.node_->needs_grad = needs;
        t.node_->parents = std::move(parents);
        return t;
    }
    void set_backward(std::function<void()> fn) { node_->backward_fn = std::move(fn); }

private:
    std::shared_ptr<NodeT<T>> node_;

    static void topo_sort(NodeT<T>* root, std::vector<NodeT<T>*>& order) {
        std::unordered_set<NodeT<T>*> visited;
        // iterative DFS, children pushed after all parents are handled
        std::vector<std::pair<NodeT<T>*, size_t>> stack;
        stack.emplace_back(root, 0);
        visited.insert(root);
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx < n->parents.size()) {
                NodeT<T>* p = n->parents[idx++].get();
                if (!visited.count(p)) {
                    visited.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
    }
};

using Tensor = TensorT<float>;

template <typename T>
struct ParameterT {
    std::string name;
    TensorT<T> tensor;
};
using Parameter = ParameterT<float>;

inline std::string shape_string(const std::vector<int>& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

}  // namespace dart

#endif
