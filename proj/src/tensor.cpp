// SPDX-License-Identifier: Apache-2.0
#include "poselift/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace poselift {

long numel_of(const Shape& shape) {
    long n = 1;
    for (int d : shape) {
        require(d >= 0, ErrorCode::shape_mismatch, "negative dimension");
        n *= d;
    }
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << "]";
    return os.str();
}

std::vector<long> strides_of(const Shape& shape) {
    std::vector<long> s(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
        s[i] = s[i + 1] * shape[i + 1];
    return s;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.value().begin(), t.value().end(), fill);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    require(static_cast<long>(data.size()) == numel_of(shape), ErrorCode::shape_mismatch,
            "data size " + std::to_string(data.size()) + " does not fill shape " +
                shape_to_string(shape));
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({}, {v}, requires_grad);
}

Tensor Tensor::scaled_uniform(Shape shape, int fan_in, Rng& rng, bool requires_grad) {
    require(fan_in > 0, ErrorCode::invalid_spec, "fan_in must be positive");
    Tensor t = zeros(std::move(shape), requires_grad);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.value()) v = rng.uniform(-bound, bound);
    return t;
}

double Tensor::get(std::initializer_list<int> index) const {
    auto strides = strides_of(node_->shape);
    require(index.size() == node_->shape.size(), ErrorCode::shape_mismatch,
            "index rank mismatch");
    long flat = 0;
    size_t axis = 0;
    for (int i : index) {
        require(i >= 0 && i < node_->shape[axis], ErrorCode::index_out_of_range,
                "index out of range");
        flat += i * strides[axis];
        ++axis;
    }
    return node_->value[static_cast<size_t>(flat)];
}

void Tensor::set(std::initializer_list<int> index, double v) {
    auto strides = strides_of(node_->shape);
    require(index.size() == node_->shape.size(), ErrorCode::shape_mismatch,
            "index rank mismatch");
    long flat = 0;
    size_t axis = 0;
    for (int i : index) {
        require(i >= 0 && i < node_->shape[axis], ErrorCode::index_out_of_range,
                "index out of range");
        flat += i * strides[axis];
        ++axis;
    }
    node_->value[static_cast<size_t>(flat)] = v;
}

Tensor Tensor::detach() const {
    auto node = std::make_shared<TensorNode>();
    node->shape = node_->shape;
    node->value = node_->value;
    node->requires_grad = false;
    return Tensor(std::move(node));
}

void Tensor::backward() const {
    require(node_ != nullptr, ErrorCode::detached_from_tape, "backward on an empty tensor");
    require(numel() == 1, ErrorCode::not_scalar,
            "backward needs a scalar, got shape " + shape_to_string(node_->shape));
    require(node_->requires_grad, ErrorCode::detached_from_tape,
            "backward target does not depend on any grad-requiring tensor");

    // Iterative post-order DFS. Nodes that do not require grad cannot have
    // grad-requiring ancestors, so the walk prunes them.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        TensorNode* node = stack.back().first;
        bool descended = false;
        while (stack.back().second < node->parents.size()) {
            TensorNode* p = node->parents[stack.back().second++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
                descended = true;
                break;
            }
        }
        if (!descended) {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch space for one sweep; only leaves accumulate
    // across calls. Clearing them here makes repeated backward() additive.
    for (TensorNode* n : order)
        if (n->backward_op) n->grad.assign(n->value.size(), 0.0);

    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_op) n->backward_op(*n);
    }
}

double finite_diff_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                         std::vector<Tensor>& inputs, double eps, double floor) {
    require(eps > 0.0, ErrorCode::invalid_spec, "eps must be positive");
    require(floor > 0.0, ErrorCode::invalid_spec, "floor must be positive");

    auto scalar_value = [&]() {
        Tensor out = f(inputs);
        double s = 0.0;
        for (double v : out.value()) s += v;
        return s;
    };

    for (Tensor& t : inputs)
        if (t.requires_grad()) t.zero_grad();

    Tensor out = f(inputs);
    Tensor loss = out.numel() == 1 ? out : sum_all(out);
    loss.backward();

    double max_rel = 0.0;
    for (Tensor& t : inputs) {
        if (!t.requires_grad()) continue;
        const auto& analytic = t.grad();
        for (size_t i = 0; i < t.value().size(); ++i) {
            double saved = t.value()[i];
            t.value()[i] = saved + eps;
            double up = scalar_value();
            t.value()[i] = saved - eps;
            double down = scalar_value();
            t.value()[i] = saved;
            double numeric = (up - down) / (2.0 * eps);
            double rel = std::abs(analytic[i] - numeric) /
                         std::max(floor, std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace poselift
