// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <utility>

#include "poselift/tensor.hpp"

namespace poselift {

namespace {

Tensor make_op(Shape shape, const std::vector<Tensor>& parents,
               std::function<void(TensorNode&)> backward_op) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    node->shape = std::move(shape);
    bool rg = false;
    for (const Tensor& p : parents) {
        node->parents.push_back(p.node());
        rg = rg || p.requires_grad();
    }
    node->requires_grad = rg;
    if (rg) {
        node->backward_op = std::move(backward_op);
    } else {
        node->parents.clear();  // nothing flows back; let the subgraph free
    }
    return Tensor(std::move(node));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    require(a.shape() == b.shape(), ErrorCode::shape_mismatch,
            std::string(op) + ": " + shape_to_string(a.shape()) + " vs " +
                shape_to_string(b.shape()));
}

// C(m,n) += A(m,k) @ B(k,n)
void mm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m,k) += A(m,n) @ B(k,n)^T
void mm_nt_acc(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * n;
        double* crow = c + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* brow = b + static_cast<size_t>(p) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += arow[j] * brow[j];
            crow[p] += dot;
        }
    }
}

// C(k,n) += A(m,k)^T @ B(m,n)
void mm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        const double* brow = b + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = make_op(a.shape(), {a, b}, [](TensorNode& self) {
        for (size_t side = 0; side < 2; ++side) {
            auto& p = self.parents[side];
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i)
        out.value()[i] = a.value()[i] + b.value()[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = make_op(a.shape(), {a, b}, [](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i)
        out.value()[i] = a.value()[i] - b.value()[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = make_op(a.shape(), {a, b}, [](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i)
        out.value()[i] = a.value()[i] * b.value()[i];
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = make_op(a.shape(), {a}, [c](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += c * self.grad[i];
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = c * a.value()[i];
    return out;
}

Tensor add_broadcast(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    require(sb.size() <= sa.size(), ErrorCode::shape_mismatch,
            "add_broadcast: rhs rank exceeds lhs rank");
    size_t offset = sa.size() - sb.size();
    for (size_t i = 0; i < sb.size(); ++i)
        require(sb[i] == sa[offset + i], ErrorCode::shape_mismatch,
                "add_broadcast: " + shape_to_string(sb) + " is not a suffix of " +
                    shape_to_string(sa));
    const long nb = numel_of(sb);
    const long repeats = nb == 0 ? 0 : numel_of(sa) / nb;
    Tensor out = make_op(sa, {a, b}, [nb, repeats](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (long r = 0; r < repeats; ++r) {
                const double* g = self.grad.data() + r * nb;
                for (long i = 0; i < nb; ++i) pb->grad[i] += g[i];
            }
        }
    });
    for (long r = 0; r < repeats; ++r)
        for (long i = 0; i < nb; ++i)
            out.value()[r * nb + i] = a.value()[r * nb + i] + b.value()[i];
    return out;
}

Tensor scalar_mul(const Tensor& a, const Tensor& s) {
    require(s.numel() == 1, ErrorCode::shape_mismatch,
            "scalar_mul: multiplier must have exactly one element");
    Tensor out = make_op(a.shape(), {a, s}, [](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& ps = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            double sv = ps->value[0];
            for (size_t i = 0; i < self.grad.size(); ++i)
                pa->grad[i] += sv * self.grad[i];
        }
        if (ps->requires_grad) {
            ps->ensure_grad();
            double acc = 0.0;
            for (size_t i = 0; i < self.grad.size(); ++i)
                acc += self.grad[i] * pa->value[i];
            ps->grad[0] += acc;
        }
    });
    double sv = s.value()[0];
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = sv * a.value()[i];
    return out;
}

Tensor tanh_op(const Tensor& a) {
    Tensor out = make_op(a.shape(), {a}, [](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double y = self.value[i];
            p->grad[i] += self.grad[i] * (1.0 - y * y);
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = std::tanh(a.value()[i]);
    return out;
}

Tensor leaky_relu(const Tensor& a, double alpha) {
    Tensor out = make_op(a.shape(), {a}, [alpha](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            p->grad[i] += self.grad[i] * (p->value[i] > 0.0 ? 1.0 : alpha);
    });
    for (size_t i = 0; i < out.value().size(); ++i) {
        double x = a.value()[i];
        out.value()[i] = x > 0.0 ? x : alpha * x;
    }
    return out;
}

Tensor abs_op(const Tensor& a) {
    Tensor out = make_op(a.shape(), {a}, [](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double x = p->value[i];
            double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            p->grad[i] += self.grad[i] * s;
        }
    });
    for (size_t i = 0; i < out.value().size(); ++i) out.value()[i] = std::abs(a.value()[i]);
    return out;
}

Tensor reshape(const Tensor& a, Shape new_shape) {
    require(numel_of(new_shape) == a.numel(), ErrorCode::shape_mismatch,
            "reshape: cannot view " + shape_to_string(a.shape()) + " as " +
                shape_to_string(new_shape));
    Tensor out = make_op(std::move(new_shape), {a}, [](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    });
    out.value() = a.value();
    return out;
}

namespace {

// Shared index machinery for transpose: walks output flat indices and maps
// them to input flat indices with the two axes swapped.
void transposed_copy(const double* src, double* dst, const Shape& in_shape,
                     int axis0, int axis1, bool adding) {
    Shape out_shape = in_shape;
    std::swap(out_shape[axis0], out_shape[axis1]);
    auto in_strides = strides_of(in_shape);
    auto out_strides = strides_of(out_shape);
    std::vector<long> map(in_shape.size());
    for (size_t ax = 0; ax < in_shape.size(); ++ax) map[ax] = in_strides[ax];
    std::swap(map[axis0], map[axis1]);

    long total = numel_of(out_shape);
    int rank = static_cast<int>(out_shape.size());
    for (long o = 0; o < total; ++o) {
        long rem = o;
        long in_flat = 0;
        for (int ax = 0; ax < rank; ++ax) {
            long idx = rem / out_strides[ax];
            rem -= idx * out_strides[ax];
            in_flat += idx * map[ax];
        }
        if (adding)
            dst[in_flat] += src[o];
        else
            dst[o] = src[in_flat];
    }
}

}  // namespace

Tensor transpose(const Tensor& a, int axis0, int axis1) {
    int rank = a.rank();
    require(axis0 >= 0 && axis0 < rank && axis1 >= 0 && axis1 < rank,
            ErrorCode::axis_out_of_range, "transpose axis out of range");
    Shape out_shape = a.shape();
    std::swap(out_shape[axis0], out_shape[axis1]);
    Shape in_shape = a.shape();
    Tensor out = make_op(out_shape, {a}, [in_shape, axis0, axis1](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        transposed_copy(self.grad.data(), p->grad.data(), in_shape, axis0, axis1, true);
    });
    transposed_copy(a.value().data(), out.value().data(), in_shape, axis0, axis1, false);
    return out;
}

Tensor slice(const Tensor& a, int axis, int start, int length) {
    int rank = a.rank();
    require(axis >= 0 && axis < rank, ErrorCode::axis_out_of_range, "slice axis out of range");
    require(start >= 0 && length >= 1 && start + length <= a.shape()[axis],
            ErrorCode::index_out_of_range, "slice window out of range");
    Shape out_shape = a.shape();
    out_shape[axis] = length;

    long outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.shape()[i];
    for (int i = axis + 1; i < rank; ++i) inner *= a.shape()[i];
    const long d = a.shape()[axis];

    Tensor out = make_op(out_shape, {a}, [outer, inner, d, start, length](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (long o = 0; o < outer; ++o)
            for (long j = 0; j < length; ++j) {
                const double* src = self.grad.data() + (o * length + j) * inner;
                double* dst = p->grad.data() + (o * d + start + j) * inner;
                for (long i = 0; i < inner; ++i) dst[i] += src[i];
            }
    });
    for (long o = 0; o < outer; ++o)
        for (long j = 0; j < length; ++j) {
            const double* src = a.value().data() + (o * d + start + j) * inner;
            double* dst = out.value().data() + (o * length + j) * inner;
            for (long i = 0; i < inner; ++i) dst[i] = src[i];
        }
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    require(!parts.empty(), ErrorCode::invalid_spec, "concat of zero tensors");
    int rank = parts[0].rank();
    require(axis >= 0 && axis < rank, ErrorCode::axis_out_of_range, "concat axis out of range");
    Shape out_shape = parts[0].shape();
    long axis_total = 0;
    for (const Tensor& t : parts) {
        require(t.rank() == rank, ErrorCode::shape_mismatch, "concat rank mismatch");
        for (int i = 0; i < rank; ++i)
            if (i != axis)
                require(t.shape()[i] == out_shape[i], ErrorCode::shape_mismatch,
                        "concat shapes differ off-axis");
        axis_total += t.shape()[axis];
    }
    out_shape[axis] = static_cast<int>(axis_total);

    long outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= out_shape[i];
    for (int i = axis + 1; i < rank; ++i) inner *= out_shape[i];
    std::vector<long> widths;
    for (const Tensor& t : parts) widths.push_back(t.shape()[axis]);

    Tensor out = make_op(out_shape, parts, [outer, inner, widths, axis_total](TensorNode& self) {
        long off = 0;
        for (size_t part = 0; part < widths.size(); ++part) {
            auto& p = self.parents[part];
            long w = widths[part];
            if (p->requires_grad) {
                p->ensure_grad();
                for (long o = 0; o < outer; ++o) {
                    const double* src = self.grad.data() + (o * axis_total + off) * inner;
                    double* dst = p->grad.data() + o * w * inner;
                    for (long i = 0; i < w * inner; ++i) dst[i] += src[i];
                }
            }
            off += w;
        }
    });
    long off = 0;
    for (size_t part = 0; part < parts.size(); ++part) {
        long w = widths[part];
        for (long o = 0; o < outer; ++o) {
            const double* src = parts[part].value().data() + o * w * inner;
            double* dst = out.value().data() + (o * axis_total + off) * inner;
            for (long i = 0; i < w * inner; ++i) dst[i] = src[i];
        }
        off += w;
    }
    return out;
}

namespace {

Tensor reduce_axis(const Tensor& a, int axis, bool mean) {
    int rank = a.rank();
    require(axis >= 0 && axis < rank, ErrorCode::axis_out_of_range, "reduce axis out of range");
    Shape out_shape;
    for (int i = 0; i < rank; ++i)
        if (i != axis) out_shape.push_back(a.shape()[i]);
    long outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.shape()[i];
    for (int i = axis + 1; i < rank; ++i) inner *= a.shape()[i];
    const long d = a.shape()[axis];
    const double w = mean ? 1.0 / static_cast<double>(d) : 1.0;

    Tensor out = make_op(out_shape, {a}, [outer, inner, d, w](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        for (long o = 0; o < outer; ++o)
            for (long j = 0; j < d; ++j) {
                const double* g = self.grad.data() + o * inner;
                double* dst = p->grad.data() + (o * d + j) * inner;
                for (long i = 0; i < inner; ++i) dst[i] += w * g[i];
            }
    });
    for (long o = 0; o < outer; ++o)
        for (long j = 0; j < d; ++j) {
            const double* src = a.value().data() + (o * d + j) * inner;
            double* dst = out.value().data() + o * inner;
            for (long i = 0; i < inner; ++i) dst[i] += w * src[i];
        }
    return out;
}

Tensor reduce_all(const Tensor& a, bool mean) {
    const long n = a.numel();
    const double w = mean ? 1.0 / static_cast<double>(n) : 1.0;
    Tensor out = make_op({}, {a}, [w](TensorNode& self) {
        auto& p = self.parents[0];
        p->ensure_grad();
        double g = w * self.grad[0];
        for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g;
    });
    double acc = 0.0;
    for (double v : a.value()) acc += v;
    out.value()[0] = w * acc;
    return out;
}

}  // namespace

Tensor sum_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, false); }
Tensor mean_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, true); }
Tensor sum_all(const Tensor& a) { return reduce_all(a, false); }
Tensor mean_all(const Tensor& a) { return reduce_all(a, true); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    const int ra = a.rank(), rb = b.rank();
    require((ra == 2 || ra == 3) && (rb == 2 || rb == 3), ErrorCode::shape_mismatch,
            "matmul needs rank 2 or 3 operands");
    const long ba = ra == 3 ? a.shape()[0] : 1;
    const long bb = rb == 3 ? b.shape()[0] : 1;
    const int m = a.shape()[ra - 2], ka = a.shape()[ra - 1];
    const int kb = b.shape()[rb - 2], n = b.shape()[rb - 1];
    require(ka == kb, ErrorCode::shape_mismatch,
            "matmul inner dims: " + shape_to_string(a.shape()) + " x " +
                shape_to_string(b.shape()));
    require(ba == bb || ra == 2 || rb == 2, ErrorCode::shape_mismatch,
            "matmul batch dims differ");
    const long batch = std::max(ba, bb);
    const int k = ka;

    Shape out_shape = (ra == 3 || rb == 3) ? Shape{static_cast<int>(batch), m, n}
                                           : Shape{m, n};
    const long sa = ra == 3 ? static_cast<long>(m) * k : 0;
    const long sb = rb == 3 ? static_cast<long>(k) * n : 0;

    Tensor out = make_op(out_shape, {a, b}, [batch, m, k, n, sa, sb](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        const long sc = static_cast<long>(m) * n;
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (long s = 0; s < batch; ++s)
                mm_nt_acc(self.grad.data() + s * sc, pb->value.data() + s * sb,
                          pa->grad.data() + s * sa, m, n, k);
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (long s = 0; s < batch; ++s)
                mm_tn_acc(pa->value.data() + s * sa, self.grad.data() + s * sc,
                          pb->grad.data() + s * sb, m, k, n);
        }
    });
    const long sc = static_cast<long>(m) * n;
    for (long s = 0; s < batch; ++s)
        mm_acc(a.value().data() + s * sa, b.value().data() + s * sb,
               out.value().data() + s * sc, m, k, n);
    return out;
}

BatchNormState BatchNormState::make(int features) {
    BatchNormState st;
    st.gamma = Tensor::full({features}, 1.0, true);
    st.beta = Tensor::zeros({features}, true);
    st.running_mean = Tensor::zeros({features}, false);
    st.running_var = Tensor::full({features}, 1.0, false);
    return st;
}

Tensor batch_norm(const Tensor& x, BatchNormState& state, bool training) {
    require(x.rank() == 2, ErrorCode::shape_mismatch, "batch_norm input must be [B, F]");
    const int b = x.shape()[0], f = x.shape()[1];
    require(f == state.gamma.shape()[0], ErrorCode::shape_mismatch,
            "batch_norm feature width mismatch");
    const double eps = state.eps;

    if (training) {
        require(b >= 2, ErrorCode::batch_too_small,
                "batch_norm training needs a batch of at least 2, got " + std::to_string(b));
        std::vector<double> mean(f, 0.0), var(f, 0.0), inv_std(f);
        const auto& xv = x.value();
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < f; ++j) mean[j] += xv[static_cast<size_t>(i) * f + j];
        for (int j = 0; j < f; ++j) mean[j] /= b;
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < f; ++j) {
                double d = xv[static_cast<size_t>(i) * f + j] - mean[j];
                var[j] += d * d;
            }
        for (int j = 0; j < f; ++j) {
            var[j] /= b;
            inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
        }

        std::vector<double> xhat(static_cast<size_t>(b) * f);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < f; ++j)
                xhat[static_cast<size_t>(i) * f + j] =
                    (xv[static_cast<size_t>(i) * f + j] - mean[j]) * inv_std[j];

        // Running buffers track the biased batch statistics.
        const double mom = state.momentum;
        for (int j = 0; j < f; ++j) {
            state.running_mean.value()[j] =
                (1.0 - mom) * state.running_mean.value()[j] + mom * mean[j];
            state.running_var.value()[j] =
                (1.0 - mom) * state.running_var.value()[j] + mom * var[j];
        }

        Tensor out = make_op({b, f}, {x, state.gamma, state.beta},
                             [b, f, xhat, inv_std](TensorNode& self) {
            auto& px = self.parents[0];
            auto& pg = self.parents[1];
            auto& pb = self.parents[2];
            std::vector<double> sum_dy(f, 0.0), sum_dy_xhat(f, 0.0);
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < f; ++j) {
                    double g = self.grad[static_cast<size_t>(i) * f + j];
                    sum_dy[j] += g;
                    sum_dy_xhat[j] += g * xhat[static_cast<size_t>(i) * f + j];
                }
            if (pg->requires_grad) {
                pg->ensure_grad();
                for (int j = 0; j < f; ++j) pg->grad[j] += sum_dy_xhat[j];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int j = 0; j < f; ++j) pb->grad[j] += sum_dy[j];
            }
            if (px->requires_grad) {
                px->ensure_grad();
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < f; ++j) {
                        size_t idx = static_cast<size_t>(i) * f + j;
                        double term = b * self.grad[idx] - sum_dy[j] -
                                      xhat[idx] * sum_dy_xhat[j];
                        px->grad[idx] += pg->value[j] * inv_std[j] * term / b;
                    }
            }
        });
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < f; ++j) {
                size_t idx = static_cast<size_t>(i) * f + j;
                out.value()[idx] =
                    state.gamma.value()[j] * xhat[idx] + state.beta.value()[j];
            }
        return out;
    }

    // Eval: a per-feature affine map using the running statistics.
    std::vector<double> inv_std(f), rm(f);
    for (int j = 0; j < f; ++j) {
        rm[j] = state.running_mean.value()[j];
        inv_std[j] = 1.0 / std::sqrt(state.running_var.value()[j] + eps);
    }
    Tensor out = make_op({b, f}, {x, state.gamma, state.beta},
                         [b, f, inv_std, rm](TensorNode& self) {
        auto& px = self.parents[0];
        auto& pg = self.parents[1];
        auto& pbeta = self.parents[2];
        if (px->requires_grad) {
            px->ensure_grad();
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < f; ++j) {
                    size_t idx = static_cast<size_t>(i) * f + j;
                    px->grad[idx] += self.grad[idx] * pg->value[j] * inv_std[j];
                }
        }
        if (pg->requires_grad) {
            pg->ensure_grad();
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < f; ++j) {
                    size_t idx = static_cast<size_t>(i) * f + j;
                    double xh = (px->value[idx] - rm[j]) * inv_std[j];
                    pg->grad[j] += self.grad[idx] * xh;
                }
        }
        if (pbeta->requires_grad) {
            pbeta->ensure_grad();
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < f; ++j)
                    pbeta->grad[j] += self.grad[static_cast<size_t>(i) * f + j];
        }
    });
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < f; ++j) {
            size_t idx = static_cast<size_t>(i) * f + j;
            out.value()[idx] = state.gamma.value()[j] * (x.value()[idx] - rm[j]) * inv_std[j] +
                               state.beta.value()[j];
        }
    return out;
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    require(p >= 0.0 && p < 1.0, ErrorCode::invalid_probability,
            "dropout probability must be in [0, 1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;
    const double inv_keep = 1.0 / (1.0 - p);
    std::vector<double> mask(x.value().size());
    for (double& m : mask) m = rng.uniform() >= p ? inv_keep : 0.0;
    Tensor out = make_op(x.shape(), {x}, [mask](TensorNode& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            px->grad[i] += self.grad[i] * mask[i];
    });
    for (size_t i = 0; i < out.value().size(); ++i)
        out.value()[i] = x.value()[i] * mask[i];
    return out;
}

Tensor conv1d_temporal(const Tensor& x, const Tensor& kernel, int stride, int dilation) {
    require(x.rank() == 3 || x.rank() == 4, ErrorCode::shape_mismatch,
            "conv1d_temporal input must be [C,T,N] or [B,C,T,N]");
    require(kernel.rank() == 3, ErrorCode::shape_mismatch, "kernel must be [C_out, C, F]");
    require(stride >= 1 && dilation >= 1, ErrorCode::invalid_spec,
            "stride and dilation must be >= 1");
    const bool batched = x.rank() == 4;
    const int b = batched ? x.shape()[0] : 1;
    const int c = x.shape()[batched ? 1 : 0];
    const int t = x.shape()[batched ? 2 : 1];
    const int n = x.shape()[batched ? 3 : 2];
    const int c_out = kernel.shape()[0];
    const int f = kernel.shape()[2];
    require(kernel.shape()[1] == c, ErrorCode::shape_mismatch,
            "kernel input channels do not match input");
    require(f % 2 == 1, ErrorCode::invalid_spec, "kernel length must be odd");
    const int span = (f - 1) * dilation + 1;
    require(span <= t, ErrorCode::kernel_too_large,
            "kernel span " + std::to_string(span) + " exceeds " + std::to_string(t) +
                " frames");

    const int t_out = (t + stride - 1) / stride;
    const int total_pad = std::max(0, (t_out - 1) * stride + span - t);
    const int pad_left = total_pad / 2;

    Shape out_shape = batched ? Shape{b, c_out, t_out, n} : Shape{c_out, t_out, n};
    Tensor out = make_op(out_shape, {x, kernel},
                         [b, c, t, n, c_out, f, t_out, stride, dilation, pad_left](
                             TensorNode& self) {
        auto& px = self.parents[0];
        auto& pk = self.parents[1];
        const bool need_dx = px->requires_grad;
        const bool need_dk = pk->requires_grad;
        if (need_dx) px->ensure_grad();
        if (need_dk) pk->ensure_grad();
        const double* kv = pk->value.data();
        const double* xv = px->value.data();
        for (int s = 0; s < b; ++s) {
            const long xoff = static_cast<long>(s) * c * t * n;
            const long yoff = static_cast<long>(s) * c_out * t_out * n;
            for (int co = 0; co < c_out; ++co)
                for (int o = 0; o < t_out; ++o) {
                    const double* g =
                        self.grad.data() + yoff + (static_cast<long>(co) * t_out + o) * n;
                    for (int ff = 0; ff < f; ++ff) {
                        int ti = o * stride - pad_left + ff * dilation;
                        if (ti < 0 || ti >= t) continue;
                        for (int ci = 0; ci < c; ++ci) {
                            const long xrow = xoff + (static_cast<long>(ci) * t + ti) * n;
                            const long kidx = (static_cast<long>(co) * c + ci) * f + ff;
                            if (need_dx) {
                                double w = kv[kidx];
                                double* dst = px->grad.data() + xrow;
                                for (int ni = 0; ni < n; ++ni) dst[ni] += w * g[ni];
                            }
                            if (need_dk) {
                                double acc = 0.0;
                                const double* src = xv + xrow;
                                for (int ni = 0; ni < n; ++ni) acc += src[ni] * g[ni];
                                pk->grad[kidx] += acc;
                            }
                        }
                    }
                }
        }
    });

    const double* kv = kernel.value().data();
    const double* xv = x.value().data();
    double* yv = out.value().data();
    for (int s = 0; s < b; ++s) {
        const long xoff = static_cast<long>(s) * c * t * n;
        const long yoff = static_cast<long>(s) * c_out * t_out * n;
        for (int co = 0; co < c_out; ++co)
            for (int o = 0; o < t_out; ++o) {
                double* dst = yv + yoff + (static_cast<long>(co) * t_out + o) * n;
                for (int ff = 0; ff < f; ++ff) {
                    int ti = o * stride - pad_left + ff * dilation;
                    if (ti < 0 || ti >= t) continue;
                    for (int ci = 0; ci < c; ++ci) {
                        double w = kv[(static_cast<long>(co) * c + ci) * f + ff];
                        if (w == 0.0) continue;
                        const double* src = xv + xoff + (static_cast<long>(ci) * t + ti) * n;
                        for (int ni = 0; ni < n; ++ni) dst[ni] += w * src[ni];
                    }
                }
            }
    }
    return out;
}

Tensor pair_aggregate(const Tensor& a, const Tensor& x, const Tensor& w,
                      const std::vector<std::pair<int, int>>& pairs) {
    require(w.rank() == 3, ErrorCode::shape_mismatch, "weight bank must be [P, C_in, C_out]");
    const int p_count = w.shape()[0];
    const int ci = w.shape()[1];
    const int co = w.shape()[2];
    require(static_cast<size_t>(p_count) == pairs.size(), ErrorCode::shape_mismatch,
            "pair list and weight bank disagree on pair count");

    const bool x_batched = x.rank() == 3;
    require(x.rank() == 2 || x.rank() == 3, ErrorCode::shape_mismatch,
            "features must be [N, C] or [B, N, C]");
    const int b = x_batched ? x.shape()[0] : 1;
    const int n = x.shape()[x_batched ? 1 : 0];
    require(x.shape()[x_batched ? 2 : 1] == ci, ErrorCode::shape_mismatch,
            "feature width does not match weight bank");

    const bool a_batched = a.rank() == 3;
    require(a.rank() == 2 || a.rank() == 3, ErrorCode::shape_mismatch,
            "graph must be [N, N] or [B, N, N]");
    require(a.shape()[a_batched ? 1 : 0] == n && a.shape()[a_batched ? 2 : 1] == n,
            ErrorCode::shape_mismatch, "graph size does not match features");
    if (a_batched)
        require(x_batched && a.shape()[0] == b, ErrorCode::shape_mismatch,
                "per-sample graphs need matching feature batch");

    for (auto [i, j] : pairs)
        require(i >= 0 && i < n && j >= 0 && j < n, ErrorCode::index_out_of_range,
                "pair index out of range");

    // Constant graphs must be fully covered by the pair list. Graphs that are
    // outputs of other ops (dynamic adjacency) aggregate over the
    // parameterized pair set by construction.
    const bool a_constant = !a.requires_grad() && a.node()->parents.empty();
    if (a_constant) {
        std::vector<char> covered(static_cast<size_t>(n) * n, 0);
        for (auto [i, j] : pairs) covered[static_cast<size_t>(i) * n + j] = 1;
        const long planes = a_batched ? b : 1;
        for (long s = 0; s < planes; ++s)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (a.value()[(s * n + i) * n + j] != 0.0 &&
                        !covered[static_cast<size_t>(i) * n + j])
                        fail(ErrorCode::missing_pair_weight,
                             "graph entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") has no pair weight");
    }

    Shape out_shape = x_batched ? Shape{b, n, co} : Shape{n, co};
    const long a_stride = a_batched ? static_cast<long>(n) * n : 0;
    const long x_stride = x_batched ? static_cast<long>(n) * ci : 0;
    const long y_stride = x_batched ? static_cast<long>(n) * co : 0;

    Tensor out = make_op(out_shape, {a, x, w},
                         [pairs, b, n, ci, co, a_stride, x_stride, y_stride](TensorNode& self) {
        auto& pa = self.parents[0];
        auto& px = self.parents[1];
        auto& pw = self.parents[2];
        const double* av = pa->value.data();
        const double* xv = px->value.data();
        const double* wv = pw->value.data();
        if (pa->requires_grad) pa->ensure_grad();
        if (px->requires_grad) px->ensure_grad();
        if (pw->requires_grad) pw->ensure_grad();
        for (int s = 0; s < b; ++s) {
            const double* ab = av + s * a_stride;
            const double* xb = xv + s * x_stride;
            const double* gb = self.grad.data() + s * y_stride;
            for (size_t p = 0; p < pairs.size(); ++p) {
                const auto [i, j] = pairs[p];
                const double aij = ab[static_cast<long>(i) * n + j];
                const double* wp = wv + static_cast<long>(p) * ci * co;
                const double* xrow = xb + static_cast<long>(j) * ci;
                const double* grow = gb + static_cast<long>(i) * co;
                if (pa->requires_grad) {
                    // d a_ij = dY_i . (x_j W_p)
                    double acc = 0.0;
                    for (int cc = 0; cc < ci; ++cc) {
                        double xvv = xrow[cc];
                        if (xvv == 0.0) continue;
                        const double* wrow = wp + static_cast<long>(cc) * co;
                        double dot = 0.0;
                        for (int oo = 0; oo < co; ++oo) dot += wrow[oo] * grow[oo];
                        acc += xvv * dot;
                    }
                    pa->grad[s * a_stride + static_cast<long>(i) * n + j] += acc;
                }
                if (aij == 0.0) continue;
                if (px->requires_grad) {
                    double* dx = px->grad.data() + s * x_stride + static_cast<long>(j) * ci;
                    for (int cc = 0; cc < ci; ++cc) {
                        const double* wrow = wp + static_cast<long>(cc) * co;
                        double dot = 0.0;
                        for (int oo = 0; oo < co; ++oo) dot += wrow[oo] * grow[oo];
                        dx[cc] += aij * dot;
                    }
                }
                if (pw->requires_grad) {
                    double* dw = pw->grad.data() + static_cast<long>(p) * ci * co;
                    for (int cc = 0; cc < ci; ++cc) {
                        double xvv = aij * xrow[cc];
                        if (xvv == 0.0) continue;
                        double* drow = dw + static_cast<long>(cc) * co;
                        for (int oo = 0; oo < co; ++oo) drow[oo] += xvv * grow[oo];
                    }
                }
            }
        }
    });

    const double* av = a.value().data();
    const double* xv = x.value().data();
    const double* wv = w.value().data();
    double* yv = out.value().data();
    for (int s = 0; s < b; ++s) {
        const double* ab = av + s * a_stride;
        const double* xb = xv + s * x_stride;
        double* yb = yv + s * y_stride;
        for (size_t p = 0; p < pairs.size(); ++p) {
            const auto [i, j] = pairs[p];
            const double aij = ab[static_cast<long>(i) * n + j];
            if (aij == 0.0) continue;
            const double* wp = wv + static_cast<long>(p) * ci * co;
            const double* xrow = xb + static_cast<long>(j) * ci;
            double* yrow = yb + static_cast<long>(i) * co;
            for (int cc = 0; cc < ci; ++cc) {
                double xvv = aij * xrow[cc];
                if (xvv == 0.0) continue;
                const double* wrow = wp + static_cast<long>(cc) * co;
                for (int oo = 0; oo < co; ++oo) yrow[oo] += xvv * wrow[oo];
            }
        }
    }
    return out;
}

Tensor node_linear(const Tensor& x, const Tensor& w) {
    if (w.rank() == 2) return matmul(x, w);
    require(w.rank() == 3, ErrorCode::shape_mismatch, "node_linear weights must be [N, W, C]");
    const bool batched = x.rank() == 3;
    require(x.rank() == 2 || x.rank() == 3, ErrorCode::shape_mismatch,
            "node_linear input must be [N, W] or [B, N, W]");
    const int b = batched ? x.shape()[0] : 1;
    const int n = x.shape()[batched ? 1 : 0];
    const int wi = x.shape()[batched ? 2 : 1];
    const int c = w.shape()[2];
    require(w.shape()[0] == n && w.shape()[1] == wi, ErrorCode::shape_mismatch,
            "node_linear weight shape " + shape_to_string(w.shape()) + " does not match input " +
                shape_to_string(x.shape()));

    Shape out_shape = batched ? Shape{b, n, c} : Shape{n, c};
    const long x_stride = static_cast<long>(n) * wi;
    const long y_stride = static_cast<long>(n) * c;

    Tensor out = make_op(out_shape, {x, w}, [b, n, wi, c, x_stride, y_stride](TensorNode& self) {
        auto& px = self.parents[0];
        auto& pw = self.parents[1];
        if (px->requires_grad) px->ensure_grad();
        if (pw->requires_grad) pw->ensure_grad();
        for (int s = 0; s < b; ++s)
            for (int i = 0; i < n; ++i) {
                const double* g = self.grad.data() + s * y_stride + static_cast<long>(i) * c;
                const double* wrow = pw->value.data() + static_cast<long>(i) * wi * c;
                const double* xrow = px->value.data() + s * x_stride + static_cast<long>(i) * wi;
                if (px->requires_grad) {
                    double* dx = px->grad.data() + s * x_stride + static_cast<long>(i) * wi;
                    for (int ww = 0; ww < wi; ++ww) {
                        const double* wr = wrow + static_cast<long>(ww) * c;
                        double dot = 0.0;
                        for (int oo = 0; oo < c; ++oo) dot += wr[oo] * g[oo];
                        dx[ww] += dot;
                    }
                }
                if (pw->requires_grad) {
                    double* dw = pw->grad.data() + static_cast<long>(i) * wi * c;
                    for (int ww = 0; ww < wi; ++ww) {
                        double xvv = xrow[ww];
                        if (xvv == 0.0) continue;
                        double* dr = dw + static_cast<long>(ww) * c;
                        for (int oo = 0; oo < c; ++oo) dr[oo] += xvv * g[oo];
                    }
                }
            }
    });
    for (int s = 0; s < b; ++s)
        for (int i = 0; i < n; ++i) {
            const double* xrow = x.value().data() + s * x_stride + static_cast<long>(i) * wi;
            const double* wrow = w.value().data() + static_cast<long>(i) * wi * c;
            double* yrow = out.value().data() + s * y_stride + static_cast<long>(i) * c;
            for (int ww = 0; ww < wi; ++ww) {
                double xvv = xrow[ww];
                if (xvv == 0.0) continue;
                const double* wr = wrow + static_cast<long>(ww) * c;
                for (int oo = 0; oo < c; ++oo) yrow[oo] += xvv * wr[oo];
            }
        }
    return out;
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "l1_loss");
    return mean_all(abs_op(sub(pred, target)));
}

}  // namespace poselift
