// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "poselift/common.hpp"
#include "poselift/rng.hpp"

namespace poselift {

using Shape = std::vector<int>;

long numel_of(const Shape& shape);
std::string shape_to_string(const Shape& shape);
std::vector<long> strides_of(const Shape& shape);

// One node of the computation tape. Nodes are created in execution order and
// reference their inputs, which is exactly a topological order of the DAG;
// backward() replays the reachable subgraph in reverse, accumulating into
// the grad buffers. No global state: independent tapes never interact, so
// separate training or evaluation contexts can run on separate threads.
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // same size as value once touched
    bool requires_grad = false;
    std::string name;  // nonempty for named parameters
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_op;  // unset on leaves

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantics handle to a TensorNode. Copies share the node.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double fill, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], the init used for all
    // learned weight matrices.
    static Tensor scaled_uniform(Shape shape, int fan_in, Rng& rng, bool requires_grad = true);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    long numel() const { return static_cast<long>(node_->value.size()); }
    bool requires_grad() const { return node_->requires_grad; }
    const std::string& name() const { return node_->name; }
    void set_name(const std::string& n) { node_->name = n; }

    std::vector<double>& value() { return node_->value; }
    const std::vector<double>& value() const { return node_->value; }
    std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }

    double get(std::initializer_list<int> index) const;
    void set(std::initializer_list<int> index, double v);

    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    // Copy of the values with no tape history.
    Tensor detach() const;

    // Reverse-mode sweep from this scalar. Grad buffers accumulate across
    // calls until zero_grad.
    void backward() const;

    std::shared_ptr<TensorNode> node() const { return node_; }

  private:
    std::shared_ptr<TensorNode> node_;
};

// ---- elementwise and structural ops ----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// b's shape must be a trailing suffix of a's shape; b is broadcast over the
// leading axes (bias-style add).
Tensor add_broadcast(const Tensor& a, const Tensor& b);
// s must have exactly one element (e.g. a trainable scalar).
Tensor scalar_mul(const Tensor& a, const Tensor& s);

Tensor tanh_op(const Tensor& a);
// Slope `alpha` for negative inputs; the derivative at exactly 0 is alpha.
Tensor leaky_relu(const Tensor& a, double alpha);
Tensor abs_op(const Tensor& a);

Tensor reshape(const Tensor& a, Shape new_shape);
Tensor transpose(const Tensor& a, int axis0, int axis1);
Tensor slice(const Tensor& a, int axis, int start, int length);
Tensor concat(const std::vector<Tensor>& parts, int axis);

Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// ---- linear algebra ---------------------------------------------------------

// Supported shapes: [m,k]x[k,n], [B,m,k]x[k,n], [B,m,k]x[B,k,n], [m,k]x[B,k,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- neural-net ops ---------------------------------------------------------

struct BatchNormState {
    Tensor gamma;         // [F], init 1
    Tensor beta;          // [F], init 0
    Tensor running_mean;  // [F] buffer, init 0
    Tensor running_var;   // [F] buffer, init 1
    double eps = 1e-5;
    double momentum = 0.1;

    static BatchNormState make(int features);
};

// x is [B, F]. Training mode normalizes with biased batch statistics and
// folds them into the running buffers; eval mode uses the running buffers.
// Training requires B >= 2.
Tensor batch_norm(const Tensor& x, BatchNormState& state, bool training);

// Inverted dropout: keep with probability 1-p and scale kept entries by
// 1/(1-p) so the expected value is unchanged. Identity when not training or
// p == 0. Requires p in [0, 1).
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

// 1D convolution along the frame axis, applied independently per node.
// x is [C, T, N] or [B, C, T, N]; kernel is [C_out, C, F] with F odd.
// Zero padding is symmetric and sized so the output has ceil(T/stride)
// frames. The effective kernel span (F-1)*dilation+1 must not exceed T.
Tensor conv1d_temporal(const Tensor& x, const Tensor& kernel, int stride = 1, int dilation = 1);

// Aggregation with unshared per-edge weights:
//   y[i, :] = sum over pairs p=(i, j) of a[i, j] * x[j, :] @ w[p]
// a is [N,N] or [B,N,N]; x is [N,Ci] or [B,N,Ci]; w is [P,Ci,Co]. Entries of
// `a` outside the pair list do not participate. When `a` is a plain constant
// its nonzero entries must all be covered by the pair list.
Tensor pair_aggregate(const Tensor& a, const Tensor& x,
                      const Tensor& w, const std::vector<std::pair<int, int>>& pairs);

// Per-node linear map: y[.., i, :] = x[.., i, :] @ w[i] for w of shape
// [N, W, C]. A rank-2 w of shape [W, C] is shared across nodes.
Tensor node_linear(const Tensor& x, const Tensor& w);

// Mean absolute deviation over all elements.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

// ---- gradient checking ------------------------------------------------------

// Compares analytic gradients of sum(f(inputs)) against central finite
// differences for every coordinate of every grad-requiring input. Returns
// the max of |analytic - numeric| / max(floor, |numeric|). f must be
// deterministic (disable dropout or fix its mask). `floor` is the smallest
// gradient magnitude the difference quotient can resolve; deep graphs with
// O(1) outputs have ~1 ulp of evaluation noise, so floor must stay above
// noise / (2 * eps) or near-zero gradients drown the metric.
double finite_diff_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                         std::vector<Tensor>& inputs, double eps = 1e-5,
                         double floor = 1e-8);

}  // namespace poselift
