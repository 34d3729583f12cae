#pragma once

// Differentiable primitives over Tensor. Each op validates operand shapes,
// rejects non-finite inputs, and records a backward closure when any input
// requires gradients and recording is enabled.

#include "ald/tensor.hpp"

namespace ald {

namespace detail {

inline void check_finite(const char* op, const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite input");
}

inline bool record(const Tensor& a) { return grad_mode() && a.requires_grad(); }

inline Tensor make_result(const char* op, Shape shape, std::vector<double> data, bool requires_grad,
                          std::vector<std::shared_ptr<TensorNode>> parents,
                          std::function<void(TensorNode&)> backward_fn) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    n->id = next_node_id();
    n->op = op;
    if (requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
}

[[noreturn]] inline void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

inline void require_matrix(const char* op, const Tensor& t) {
    if (t.shape().size() != 2)
        throw std::invalid_argument(std::string(op) + ": expected 2-d tensor, got " + shape_str(t.shape()));
}

// Branch signature of the current evaluation: relu activation signs and
// max-pool argmax choices fold into a running hash. The finite-difference
// checker compares signatures of the two perturbed evaluations; a mismatch
// means the difference quotient straddled a non-differentiable point and the
// entry is excluded from the report.
inline std::uint64_t*& branch_signature() {
    thread_local std::uint64_t* slot = nullptr;
    return slot;
}

inline void note_branch(std::uint64_t v) {
    if (std::uint64_t* sig = branch_signature()) *sig = (*sig ^ v) * 1099511628211ull;
}

} // namespace detail

// y = a + b, elementwise; b may also be a [1 x n] row broadcast over a's rows.
inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_matrix("add", a);
    detail::require_matrix("add", b);
    detail::check_finite("add", a);
    detail::check_finite("add", b);
    const int m = a.rows(), n = a.cols();
    const bool row_broadcast = (b.rows() == 1 && b.cols() == n && m != 1);
    if (!row_broadcast && a.shape() != b.shape()) detail::shape_error("add", a.shape(), b.shape());

    std::vector<double> out(a.numel());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<size_t>(i) * n + j] = a.at(i, j) + (row_broadcast ? b.at(0, j) : b.at(i, j));

    const bool rg = detail::record(a) || detail::record(b);
    auto an = a.node, bn = b.node;
    return detail::make_result("add", a.shape(), std::move(out), rg, {an, bn},
        [an, bn, m, n, row_broadcast](TensorNode& o) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (size_t k = 0; k < o.grad.size(); ++k) an->grad[k] += o.grad[k];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                if (row_broadcast) {
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j) bn->grad[j] += o.grad[static_cast<size_t>(i) * n + j];
                } else {
                    for (size_t k = 0; k < o.grad.size(); ++k) bn->grad[k] += o.grad[k];
                }
            }
        });
}

// elementwise product, equal shapes
inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_matrix("mul", a);
    if (a.shape() != b.shape()) detail::shape_error("mul", a.shape(), b.shape());
    detail::check_finite("mul", a);
    detail::check_finite("mul", b);
    std::vector<double> out(a.numel());
    for (size_t k = 0; k < out.size(); ++k) out[k] = a.data()[k] * b.data()[k];
    const bool rg = detail::record(a) || detail::record(b);
    auto an = a.node, bn = b.node;
    return detail::make_result("mul", a.shape(), std::move(out), rg, {an, bn},
        [an, bn](TensorNode& o) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (size_t k = 0; k < o.grad.size(); ++k) an->grad[k] += o.grad[k] * bn->data[k];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (size_t k = 0; k < o.grad.size(); ++k) bn->grad[k] += o.grad[k] * an->data[k];
            }
        });
}

inline Tensor scale(const Tensor& a, double c) {
    detail::check_finite("scale", a);
    if (!std::isfinite(c)) throw std::runtime_error("scale: non-finite constant");
    std::vector<double> out(a.numel());
    for (size_t k = 0; k < out.size(); ++k) out[k] = a.data()[k] * c;
    auto an = a.node;
    return detail::make_result("scale", a.shape(), std::move(out), detail::record(a), {an},
        [an, c](TensorNode& o) {
            an->ensure_grad();
            for (size_t k = 0; k < o.grad.size(); ++k) an->grad[k] += o.grad[k] * c;
        });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require_matrix("matmul", a);
    detail::require_matrix("matmul", b);
    if (a.cols() != b.rows()) detail::shape_error("matmul", a.shape(), b.shape());
    detail::check_finite("matmul", a);
    detail::check_finite("matmul", b);
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = ad[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            double* orow = out.data() + static_cast<size_t>(i) * n;
            const double* brow = bd + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    const bool rg = detail::record(a) || detail::record(b);
    auto an = a.node, bn = b.node;
    return detail::make_result("matmul", {m, n}, std::move(out), rg, {an, bn},
        [an, bn, m, k, n](TensorNode& o) {
            if (an->requires_grad) {
                an->ensure_grad(); // dA = G . B^T
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double g = o.grad[static_cast<size_t>(i) * n + j];
                        if (g == 0.0) continue;
                        for (int p = 0; p < k; ++p)
                            an->grad[static_cast<size_t>(i) * k + p] += g * bn->data[static_cast<size_t>(p) * n + j];
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad(); // dB = A^T . G
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = an->data[static_cast<size_t>(i) * k + p];
                        if (av == 0.0) continue;
                        for (int j = 0; j < n; ++j)
                            bn->grad[static_cast<size_t>(p) * n + j] += av * o.grad[static_cast<size_t>(i) * n + j];
                    }
            }
        });
}

// matmul whose inner-axis products are accumulated in sorted order: the
// output is bit-invariant under a matched permutation of a's columns and b's
// rows. Used where token order must not leak into the result.
inline Tensor matmul_sorted(const Tensor& a, const Tensor& b) {
    detail::require_matrix("matmul_sorted", a);
    detail::require_matrix("matmul_sorted", b);
    if (a.cols() != b.rows()) detail::shape_error("matmul_sorted", a.shape(), b.shape());
    detail::check_finite("matmul_sorted", a);
    detail::check_finite("matmul_sorted", b);
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<size_t>(m) * n);
    std::vector<double> terms(k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            for (int p = 0; p < k; ++p) terms[p] = a.at(i, p) * b.at(p, j);
            std::sort(terms.begin(), terms.end());
            double s = 0.0;
            for (double t : terms) s += t;
            out[static_cast<size_t>(i) * n + j] = s;
        }
    const bool rg = detail::record(a) || detail::record(b);
    auto an = a.node, bn = b.node;
    return detail::make_result("matmul_sorted", {m, n}, std::move(out), rg, {an, bn},
        [an, bn, m, k, n](TensorNode& o) {
            if (an->requires_grad) {
                an->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double g = o.grad[static_cast<size_t>(i) * n + j];
                        if (g == 0.0) continue;
                        for (int p = 0; p < k; ++p)
                            an->grad[static_cast<size_t>(i) * k + p] += g * bn->data[static_cast<size_t>(p) * n + j];
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = an->data[static_cast<size_t>(i) * k + p];
                        if (av == 0.0) continue;
                        for (int j = 0; j < n; ++j)
                            bn->grad[static_cast<size_t>(p) * n + j] += av * o.grad[static_cast<size_t>(i) * n + j];
                    }
            }
        });
}

inline Tensor transpose(const Tensor& a) {
    detail::require_matrix("transpose", a);
    detail::check_finite("transpose", a);
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(a.numel());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(j) * m + i] = a.at(i, j);
    auto an = a.node;
    return detail::make_result("transpose", {n, m}, std::move(out), detail::record(a), {an},
        [an, m, n](TensorNode& o) {
            an->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<size_t>(i) * n + j] += o.grad[static_cast<size_t>(j) * m + i];
        });
}

// subgradient at exactly 0 is 0
inline Tensor relu(const Tensor& a) {
    detail::check_finite("relu", a);
    std::vector<double> out(a.numel());
    for (size_t k = 0; k < out.size(); ++k) {
        detail::note_branch(a.data()[k] > 0.0 ? k * 2 + 1 : k * 2);
        out[k] = a.data()[k] > 0.0 ? a.data()[k] : 0.0;
    }
    auto an = a.node;
    return detail::make_result("relu", a.shape(), std::move(out), detail::record(a), {an},
        [an](TensorNode& o) {
            an->ensure_grad();
            for (size_t k = 0; k < o.grad.size(); ++k)
                if (an->data[k] > 0.0) an->grad[k] += o.grad[k];
        });
}

// Row-wise softmax with max subtraction. The denominator accumulates the
// exponentials in sorted order, so the result is bit-invariant under
// permutations of the row entries.
inline Tensor softmax(const Tensor& a) {
    detail::require_matrix("softmax", a);
    detail::check_finite("softmax", a);
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(a.numel());
    std::vector<double> terms(n);
    for (int i = 0; i < m; ++i) {
        double mx = a.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, a.at(i, j));
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(a.at(i, j) - mx);
            out[static_cast<size_t>(i) * n + j] = e;
            terms[j] = e;
        }
        std::sort(terms.begin(), terms.end());
        double sum = 0.0;
        for (double t : terms) sum += t;
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] /= sum;
    }
    auto an = a.node;
    auto yn = std::make_shared<std::vector<double>>(out);
    return detail::make_result("softmax", a.shape(), std::move(out), detail::record(a), {an},
        [an, yn, m, n](TensorNode& o) {
            an->ensure_grad();
            const std::vector<double>& y = *yn;
            for (int i = 0; i < m; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += o.grad[static_cast<size_t>(i) * n + j] * y[static_cast<size_t>(i) * n + j];
                for (int j = 0; j < n; ++j) {
                    const size_t k = static_cast<size_t>(i) * n + j;
                    an->grad[k] += y[k] * (o.grad[k] - dot);
                }
            }
        });
}

// Row-wise normalization to mean 0 / variance 1 (population variance),
// then affine gain/bias, both [1 x n].
inline Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-9) {
    detail::require_matrix("layer_norm", a);
    const int m = a.rows(), n = a.cols();
    if (gain.rows() != 1 || gain.cols() != n) detail::shape_error("layer_norm", a.shape(), gain.shape());
    if (bias.rows() != 1 || bias.cols() != n) detail::shape_error("layer_norm", a.shape(), bias.shape());
    detail::check_finite("layer_norm", a);
    detail::check_finite("layer_norm", gain);
    detail::check_finite("layer_norm", bias);

    std::vector<double> out(a.numel());
    auto xhat = std::make_shared<std::vector<double>>(a.numel());
    auto inv_sd = std::make_shared<std::vector<double>>(m);
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += a.at(i, j);
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = a.at(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double s = 1.0 / std::sqrt(var + eps);
        (*inv_sd)[i] = s;
        for (int j = 0; j < n; ++j) {
            const size_t k = static_cast<size_t>(i) * n + j;
            (*xhat)[k] = (a.at(i, j) - mean) * s;
            out[k] = (*xhat)[k] * gain.at(0, j) + bias.at(0, j);
        }
    }
    const bool rg = detail::record(a) || detail::record(gain) || detail::record(bias);
    auto an = a.node, gn = gain.node, bn = bias.node;
    return detail::make_result("layer_norm", a.shape(), std::move(out), rg, {an, gn, bn},
        [an, gn, bn, xhat, inv_sd, m, n](TensorNode& o) {
            for (int i = 0; i < m; ++i) {
                const size_t row = static_cast<size_t>(i) * n;
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (int j = 0; j < n; ++j) gn->grad[j] += o.grad[row + j] * (*xhat)[row + j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int j = 0; j < n; ++j) bn->grad[j] += o.grad[row + j];
                }
                if (an->requires_grad) {
                    an->ensure_grad();
                    double mean_gy = 0.0, mean_gyx = 0.0;
                    for (int j = 0; j < n; ++j) {
                        const double gy = o.grad[row + j] * gn->data[j];
                        mean_gy += gy;
                        mean_gyx += gy * (*xhat)[row + j];
                    }
                    mean_gy /= n;
                    mean_gyx /= n;
                    for (int j = 0; j < n; ++j) {
                        const double gy = o.grad[row + j] * gn->data[j];
                        an->grad[row + j] += (*inv_sd)[i] * (gy - mean_gy - (*xhat)[row + j] * mean_gyx);
                    }
                }
            }
        });
}

// 1-d cross-correlation over the token (row) axis: x [N x Cin],
// w [K x Cin x Cout] with odd K, b [1 x Cout]; zero padded, stride 1.
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
    detail::require_matrix("conv1d", x);
    if (w.shape().size() != 3) throw std::invalid_argument("conv1d: kernel must be [K x Cin x Cout], got " + shape_str(w.shape()));
    const int N = x.rows(), cin = x.cols();
    const int K = w.shape()[0], wcin = w.shape()[1], cout = w.shape()[2];
    if (K % 2 == 0) throw std::invalid_argument("conv1d: kernel length must be odd, got " + std::to_string(K));
    if (wcin != cin) detail::shape_error("conv1d", x.shape(), w.shape());
    if (b.rows() != 1 || b.cols() != cout) detail::shape_error("conv1d", w.shape(), b.shape());
    detail::check_finite("conv1d", x);
    detail::check_finite("conv1d", w);
    detail::check_finite("conv1d", b);

    const int pad = K / 2;
    std::vector<double> out(static_cast<size_t>(N) * cout);
    auto widx = [cin, cout](int dk, int ci, int co) {
        return (static_cast<size_t>(dk) * cin + ci) * cout + co;
    };
    for (int t = 0; t < N; ++t)
        for (int co = 0; co < cout; ++co) {
            double acc = b.at(0, co);
            for (int dk = 0; dk < K; ++dk) {
                const int s = t + dk - pad;
                if (s < 0 || s >= N) continue;
                for (int ci = 0; ci < cin; ++ci) acc += x.at(s, ci) * w.data()[widx(dk, ci, co)];
            }
            out[static_cast<size_t>(t) * cout + co] = acc;
        }

    const bool rg = detail::record(x) || detail::record(w) || detail::record(b);
    auto xn = x.node, wn = w.node, bn = b.node;
    return detail::make_result("conv1d", {N, cout}, std::move(out), rg, {xn, wn, bn},
        [xn, wn, bn, N, cin, cout, K, pad, widx](TensorNode& o) {
            if (bn->requires_grad) bn->ensure_grad();
            if (wn->requires_grad) wn->ensure_grad();
            if (xn->requires_grad) xn->ensure_grad();
            for (int t = 0; t < N; ++t)
                for (int co = 0; co < cout; ++co) {
                    const double g = o.grad[static_cast<size_t>(t) * cout + co];
                    if (g == 0.0) continue;
                    if (bn->requires_grad) bn->grad[co] += g;
                    for (int dk = 0; dk < K; ++dk) {
                        const int s = t + dk - pad;
                        if (s < 0 || s >= N) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            if (wn->requires_grad)
                                wn->grad[widx(dk, ci, co)] += g * xn->data[static_cast<size_t>(s) * cin + ci];
                            if (xn->requires_grad)
                                xn->grad[static_cast<size_t>(s) * cin + ci] += g * wn->data[widx(dk, ci, co)];
                        }
                    }
                }
        });
}

// column-wise max over the token axis: [N x C] -> [1 x C];
// ties resolve to the first row, recorded as a kink for the checker
inline Tensor maxpool_tokens(const Tensor& x) {
    detail::require_matrix("maxpool_tokens", x);
    detail::check_finite("maxpool_tokens", x);
    const int N = x.rows(), C = x.cols();
    std::vector<double> out(C);
    auto arg = std::make_shared<std::vector<int>>(C);
    for (int c = 0; c < C; ++c) {
        int best = 0;
        for (int t = 1; t < N; ++t)
            if (x.at(t, c) > x.at(best, c)) best = t;
        detail::note_branch(static_cast<std::uint64_t>(c) << 20 | static_cast<std::uint64_t>(best));
        out[c] = x.at(best, c);
        (*arg)[c] = best;
    }
    auto xn = x.node;
    return detail::make_result("maxpool_tokens", {1, C}, std::move(out), detail::record(x), {xn},
        [xn, arg, C](TensorNode& o) {
            xn->ensure_grad();
            const int cols = C;
            for (int c = 0; c < cols; ++c) xn->grad[static_cast<size_t>((*arg)[c]) * cols + c] += o.grad[c];
        });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    detail::require_matrix("concat_cols", a);
    detail::require_matrix("concat_cols", b);
    if (a.rows() != b.rows()) detail::shape_error("concat_cols", a.shape(), b.shape());
    detail::check_finite("concat_cols", a);
    detail::check_finite("concat_cols", b);
    const int m = a.rows(), ca = a.cols(), cb = b.cols();
    std::vector<double> out(static_cast<size_t>(m) * (ca + cb));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < ca; ++j) out[static_cast<size_t>(i) * (ca + cb) + j] = a.at(i, j);
        for (int j = 0; j < cb; ++j) out[static_cast<size_t>(i) * (ca + cb) + ca + j] = b.at(i, j);
    }
    const bool rg = detail::record(a) || detail::record(b);
    auto an = a.node, bn = b.node;
    return detail::make_result("concat_cols", {m, ca + cb}, std::move(out), rg, {an, bn},
        [an, bn, m, ca, cb](TensorNode& o) {
            for (int i = 0; i < m; ++i) {
                if (an->requires_grad) {
                    an->ensure_grad();
                    for (int j = 0; j < ca; ++j)
                        an->grad[static_cast<size_t>(i) * ca + j] += o.grad[static_cast<size_t>(i) * (ca + cb) + j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (int j = 0; j < cb; ++j)
                        bn->grad[static_cast<size_t>(i) * cb + j] += o.grad[static_cast<size_t>(i) * (ca + cb) + ca + j];
                }
            }
        });
}

inline Tensor broadcast_rows(const Tensor& a, int n_rows) {
    detail::require_matrix("broadcast_rows", a);
    if (a.rows() != 1) throw std::invalid_argument("broadcast_rows: expected [1 x d] input, got " + shape_str(a.shape()));
    if (n_rows < 1) throw std::invalid_argument("broadcast_rows: row count must be positive");
    detail::check_finite("broadcast_rows", a);
    const int d = a.cols();
    std::vector<double> out(static_cast<size_t>(n_rows) * d);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] = a.at(0, j);
    auto an = a.node;
    return detail::make_result("broadcast_rows", {n_rows, d}, std::move(out), detail::record(a), {an},
        [an, n_rows, d](TensorNode& o) {
            an->ensure_grad();
            for (int i = 0; i < n_rows; ++i)
                for (int j = 0; j < d; ++j) an->grad[j] += o.grad[static_cast<size_t>(i) * d + j];
        });
}

inline Tensor flatten(const Tensor& a) {
    detail::check_finite("flatten", a);
    std::vector<double> out = a.data();
    auto an = a.node;
    return detail::make_result("flatten", {1, static_cast<int>(a.numel())}, std::move(out), detail::record(a), {an},
        [an](TensorNode& o) {
            an->ensure_grad();
            for (size_t k = 0; k < o.grad.size(); ++k) an->grad[k] += o.grad[k];
        });
}

inline Tensor slice_cols(const Tensor& a, int start, int len) {
    detail::require_matrix("slice_cols", a);
    if (start < 0 || len <= 0 || start + len > a.cols())
        throw std::invalid_argument("slice_cols: invalid slice [" + std::to_string(start) + ", +" +
                                    std::to_string(len) + ") of " + shape_str(a.shape()));
    detail::check_finite("slice_cols", a);
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(static_cast<size_t>(m) * len);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j) out[static_cast<size_t>(i) * len + j] = a.at(i, start + j);
    auto an = a.node;
    return detail::make_result("slice_cols", {m, len}, std::move(out), detail::record(a), {an},
        [an, m, n, start, len](TensorNode& o) {
            an->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < len; ++j)
                    an->grad[static_cast<size_t>(i) * n + start + j] += o.grad[static_cast<size_t>(i) * len + j];
        });
}

// Row gather / embedding lookup. Index -1 yields a zero row (OOV / padding).
inline Tensor rows_lookup(const Tensor& table, const std::vector<int>& indices) {
    detail::require_matrix("rows_lookup", table);
    detail::check_finite("rows_lookup", table);
    if (indices.empty()) throw std::invalid_argument("rows_lookup: empty index list");
    const int V = table.rows(), d = table.cols();
    std::vector<double> out(indices.size() * static_cast<size_t>(d), 0.0);
    for (size_t i = 0; i < indices.size(); ++i) {
        const int id = indices[i];
        if (id == -1) continue;
        if (id < 0 || id >= V)
            throw std::invalid_argument("rows_lookup: index " + std::to_string(id) + " outside table " + shape_str(table.shape()));
        for (int j = 0; j < d; ++j) out[i * d + j] = table.at(id, j);
    }
    auto tn = table.node;
    auto idx = std::make_shared<std::vector<int>>(indices);
    return detail::make_result("rows_lookup", {static_cast<int>(indices.size()), d}, std::move(out),
                               detail::record(table), {tn},
        [tn, idx, d](TensorNode& o) {
            tn->ensure_grad();
            for (size_t i = 0; i < idx->size(); ++i) {
                const int id = (*idx)[i];
                if (id == -1) continue;
                for (int j = 0; j < d; ++j) tn->grad[static_cast<size_t>(id) * d + j] += o.grad[i * d + j];
            }
        });
}

inline Tensor sum(const Tensor& a) {
    detail::check_finite("sum", a);
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node;
    return detail::make_result("sum", {1, 1}, {s}, detail::record(a), {an},
        [an](TensorNode& o) {
            an->ensure_grad();
            for (size_t k = 0; k < an->grad.size(); ++k) an->grad[k] += o.grad[0];
        });
}

// Inverted dropout; identity when train is false. Checker runs must pass train=false.
inline Tensor dropout(const Tensor& a, double rate, Rng& rng, bool train) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    if (!train || rate == 0.0) return a;
    detail::check_finite("dropout", a);
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(a.numel());
    std::vector<double> out(a.numel());
    for (size_t k = 0; k < out.size(); ++k) {
        const double m = rand_uniform(rng, 0.0, 1.0) < rate ? 0.0 : 1.0 / keep;
        (*mask)[k] = m;
        out[k] = a.data()[k] * m;
    }
    auto an = a.node;
    return detail::make_result("dropout", a.shape(), std::move(out), detail::record(a), {an},
        [an, mask](TensorNode& o) {
            an->ensure_grad();
            for (size_t k = 0; k < o.grad.size(); ++k) an->grad[k] += o.grad[k] * (*mask)[k];
        });
}

// mean over rows of -log softmax(logits)[label]; labels indexed per row
inline Tensor cross_entropy_softmax(const Tensor& logits, const std::vector<int>& labels) {
    detail::require_matrix("cross_entropy_softmax", logits);
    detail::check_finite("cross_entropy_softmax", logits);
    const int m = logits.rows(), n = logits.cols();
    if (static_cast<int>(labels.size()) != m)
        throw std::invalid_argument("cross_entropy_softmax: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(m) + " rows");
    auto probs = std::make_shared<std::vector<double>>(logits.numel());
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
        if (labels[i] < 0 || labels[i] >= n)
            throw std::invalid_argument("cross_entropy_softmax: label " + std::to_string(labels[i]) +
                                        " outside [0, " + std::to_string(n) + ")");
        double mx = logits.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(logits.at(i, j) - mx);
            (*probs)[static_cast<size_t>(i) * n + j] = e;
            sum += e;
        }
        for (int j = 0; j < n; ++j) (*probs)[static_cast<size_t>(i) * n + j] /= sum;
        loss += -std::log((*probs)[static_cast<size_t>(i) * n + labels[i]]);
    }
    loss /= m;
    auto ln = logits.node;
    auto lab = std::make_shared<std::vector<int>>(labels);
    return detail::make_result("cross_entropy_softmax", {1, 1}, {loss}, detail::record(logits), {ln},
        [ln, probs, lab, m, n](TensorNode& o) {
            ln->ensure_grad();
            const double g = o.grad[0] / m;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const size_t k = static_cast<size_t>(i) * n + j;
                    ln->grad[k] += g * ((*probs)[k] - (j == (*lab)[i] ? 1.0 : 0.0));
                }
        });
}

} // namespace ald
