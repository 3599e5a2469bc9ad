#include "rankclip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace rankclip {

namespace {

std::string shape_str(const TensorNode& n) {
    std::ostringstream os;
    os << n.rows << "x" << n.cols;
    return os.str();
}

[[noreturn]] void shape_error(const char* op, const TensorNode& a, const TensorNode& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + shape_str(a) +
                                " vs " + shape_str(b) + ")");
}

[[noreturn]] void shape_error(const char* op, const TensorNode& a) {
    throw std::invalid_argument(std::string(op) + ": bad shape (" + shape_str(a) + ")");
}

std::shared_ptr<TensorNode> make_leaf(std::size_t rows, std::size_t cols,
                                      std::vector<real> data, bool requires_grad) {
    if (data.size() != rows * cols)
        throw std::invalid_argument("tensor: data length does not match shape");
    auto n = std::make_shared<TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->size(), 0.0);
    return n;
}

// Result node; recorded (parents + backward_fn wired by caller) only when
// some input requires grad.
Tensor make_result(const char* op, std::size_t rows, std::size_t cols,
                   std::vector<real> data,
                   std::vector<std::shared_ptr<TensorNode>> parents,
                   std::function<void(TensorNode&)> backward_fn) {
    bool needs_grad = false;
    for (const auto& p : parents)
        if (p->requires_grad) needs_grad = true;
    auto n = make_leaf(rows, cols, std::move(data), needs_grad);
    n->op = op;
    if (needs_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(n);
}

}  // namespace

// ---- Tensor handle ---------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return Tensor(make_leaf(rows, cols, std::vector<real>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::from_data(std::size_t rows, std::size_t cols, std::vector<real> data,
                         bool requires_grad) {
    return Tensor(make_leaf(rows, cols, std::move(data), requires_grad));
}

Tensor Tensor::scalar(real v, bool requires_grad) {
    return Tensor(make_leaf(1, 1, {v}, requires_grad));
}

std::size_t Tensor::rows() const { return node_->rows; }
std::size_t Tensor::cols() const { return node_->cols; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
std::vector<real>& Tensor::data() { return node_->data; }
const std::vector<real>& Tensor::data() const { return node_->data; }
const std::vector<real>& Tensor::grad() const { return node_->grad; }

real Tensor::at(std::size_t r, std::size_t c) const { return node_->data[r * node_->cols + c]; }

real Tensor::value() const {
    if (size() != 1) throw std::invalid_argument("value: tensor is not a scalar");
    return node_->data[0];
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone(bool requires_grad) const {
    return from_data(rows(), cols(), node_->data, requires_grad);
}

// ---- operators -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    auto *an = a.node(), *bn = b.node();
    if (an->cols != bn->rows) shape_error("matmul", *an, *bn);
    const std::size_t m = an->rows, k = an->cols, n = bn->cols;
    std::vector<real> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            const real av = an->data[i * k + l];
            if (av == 0.0) continue;
            const real* brow = &bn->data[l * n];
            real* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    return make_result("matmul", m, n, std::move(out), {a.share(), b.share()},
                       [m, k, n](TensorNode& self) {
                           auto& A = *self.parents[0];
                           auto& B = *self.parents[1];
                           if (A.requires_grad) {
                               // dA = dC * B^T
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t l = 0; l < k; ++l) {
                                       real s = 0.0;
                                       const real* grow = &self.grad[i * n];
                                       const real* brow = &B.data[l * n];
                                       for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                                       A.grad[i * k + l] += s;
                                   }
                           }
                           if (B.requires_grad) {
                               // dB = A^T * dC
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t l = 0; l < k; ++l) {
                                       const real av = A.data[i * k + l];
                                       if (av == 0.0) continue;
                                       const real* grow = &self.grad[i * n];
                                       real* brow = &B.grad[l * n];
                                       for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                                   }
                           }
                       });
}

Tensor transpose(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = an->data[i * c + j];
    return make_result("transpose", c, r, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + j] += self.grad[j * r + i];
                       });
}

namespace {

enum class BroadcastKind { same, row_vector, col_vector };

BroadcastKind addsub_kind(const char* op, const TensorNode& a, const TensorNode& b) {
    if (a.rows == b.rows && a.cols == b.cols) return BroadcastKind::same;
    if (b.rows == 1 && b.cols == a.cols) return BroadcastKind::row_vector;
    if (b.cols == 1 && b.rows == a.rows) return BroadcastKind::col_vector;
    shape_error(op, a, b);
}

Tensor addsub(const char* op, const Tensor& a, const Tensor& b, real sign) {
    auto *an = a.node(), *bn = b.node();
    const BroadcastKind kind = addsub_kind(op, *an, *bn);
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            real bv = kind == BroadcastKind::same        ? bn->data[i * c + j]
                      : kind == BroadcastKind::row_vector ? bn->data[j]
                                                          : bn->data[i];
            out[i * c + j] = an->data[i * c + j] + sign * bv;
        }
    return make_result(op, r, c, std::move(out), {a.share(), b.share()},
                       [r, c, kind, sign](TensorNode& self) {
                           auto& A = *self.parents[0];
                           auto& B = *self.parents[1];
                           if (A.requires_grad)
                               for (std::size_t i = 0; i < r * c; ++i) A.grad[i] += self.grad[i];
                           if (B.requires_grad)
                               for (std::size_t i = 0; i < r; ++i)
                                   for (std::size_t j = 0; j < c; ++j) {
                                       const real g = sign * self.grad[i * c + j];
                                       std::size_t bi = kind == BroadcastKind::same ? i * c + j
                                                        : kind == BroadcastKind::row_vector ? j
                                                                                            : i;
                                       B.grad[bi] += g;
                                   }
                       });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return addsub("add", a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return addsub("sub", a, b, -1.0); }

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
    auto *an = a.node(), *bn = b.node();
    const bool a_scalar = an->size() == 1, b_scalar = bn->size() == 1;
    if (!a_scalar && !b_scalar && (an->rows != bn->rows || an->cols != bn->cols))
        shape_error("mul_elementwise", *an, *bn);
    const std::size_t r = a_scalar ? bn->rows : an->rows;
    const std::size_t c = a_scalar ? bn->cols : an->cols;
    const std::size_t n = r * c;
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = an->data[a_scalar ? 0 : i] * bn->data[b_scalar ? 0 : i];
    return make_result("mul_elementwise", r, c, std::move(out), {a.share(), b.share()},
                       [n, a_scalar, b_scalar](TensorNode& self) {
                           auto& A = *self.parents[0];
                           auto& B = *self.parents[1];
                           if (A.requires_grad)
                               for (std::size_t i = 0; i < n; ++i)
                                   A.grad[a_scalar ? 0 : i] += self.grad[i] * B.data[b_scalar ? 0 : i];
                           if (B.requires_grad)
                               for (std::size_t i = 0; i < n; ++i)
                                   B.grad[b_scalar ? 0 : i] += self.grad[i] * A.data[a_scalar ? 0 : i];
                       });
}

Tensor scalar_mul(const Tensor& a, real cst) {
    auto* an = a.node();
    const std::size_t n = an->size();
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = an->data[i] * cst;
    return make_result("scalar_mul", an->rows, an->cols, std::move(out), {a.share()},
                       [n, cst](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < n; ++i) A.grad[i] += self.grad[i] * cst;
                       });
}

Tensor exp(const Tensor& a) {
    auto* an = a.node();
    const std::size_t n = an->size();
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(an->data[i]);
    return make_result("exp", an->rows, an->cols, std::move(out), {a.share()},
                       [n](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < n; ++i)
                               A.grad[i] += self.grad[i] * self.data[i];
                       });
}

Tensor log(const Tensor& a) {
    auto* an = a.node();
    const std::size_t n = an->size();
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::log(an->data[i]);
    return make_result("log", an->rows, an->cols, std::move(out), {a.share()},
                       [n](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < n; ++i)
                               A.grad[i] += self.grad[i] / A.data[i];
                       });
}

Tensor tanh(const Tensor& a) {
    auto* an = a.node();
    const std::size_t n = an->size();
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(an->data[i]);
    return make_result("tanh", an->rows, an->cols, std::move(out), {a.share()},
                       [n](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < n; ++i)
                               A.grad[i] += self.grad[i] * (1.0 - self.data[i] * self.data[i]);
                       });
}

Tensor row_max(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    if (c == 0) shape_error("row_max", *an);
    std::vector<real> out(r);
    std::vector<std::uint32_t> arg(r, 0);
    for (std::size_t i = 0; i < r; ++i) {
        real best = an->data[i * c];
        std::uint32_t bj = 0;
        for (std::size_t j = 1; j < c; ++j) {
            const real v = an->data[i * c + j];
            if (v > best) {
                best = v;
                bj = static_cast<std::uint32_t>(j);
            }
        }
        out[i] = best;
        arg[i] = bj;
    }
    return make_result("row_max", r, 1, std::move(out), {a.share()},
                       [r, c, arg = std::move(arg)](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i)
                               A.grad[i * c + arg[i]] += self.grad[i];
                       });
}

Tensor row_sum(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i] += an->data[i * c + j];
    return make_result("row_sum", r, 1, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + j] += self.grad[i];
                       });
}

Tensor row_mean(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    if (c == 0) shape_error("row_mean", *an);
    std::vector<real> out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i] += an->data[i * c + j];
        out[i] /= static_cast<real>(c);
    }
    return make_result("row_mean", r, 1, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           const real inv = 1.0 / static_cast<real>(c);
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + j] += self.grad[i] * inv;
                       });
}

Tensor mean_all(const Tensor& a) {
    auto* an = a.node();
    const std::size_t n = an->size();
    if (n == 0) shape_error("mean_all", *an);
    real s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += an->data[i];
    return make_result("mean_all", 1, 1, {s / static_cast<real>(n)}, {a.share()},
                       [n](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           const real g = self.grad[0] / static_cast<real>(n);
                           for (std::size_t i = 0; i < n; ++i) A.grad[i] += g;
                       });
}

Tensor cumsum_last_axis(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            s += an->data[i * c + j];
            out[i * c + j] = s;
        }
    }
    return make_result("cumsum_last_axis", r, c, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           // d/dx_l = sum_{j >= l} g_j  (reverse cumulative sum)
                           for (std::size_t i = 0; i < r; ++i) {
                               real s = 0.0;
                               for (std::size_t j = c; j-- > 0;) {
                                   s += self.grad[i * c + j];
                                   A.grad[i * c + j] += s;
                               }
                           }
                       });
}

Tensor flip_last_axis(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = an->data[i * c + (c - 1 - j)];
    return make_result("flip_last_axis", r, c, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + (c - 1 - j)] += self.grad[i * c + j];
                       });
}

Tensor gather_last_axis(const Tensor& a, const IndexMatrix& indices) {
    auto* an = a.node();
    if (indices.rows != an->rows)
        throw std::invalid_argument("gather_last_axis: index rows do not match input rows");
    const std::size_t r = an->rows, c = an->cols, k = indices.cols;
    std::vector<real> out(r * k);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            const std::uint32_t src = indices.at(i, j);
            if (src >= c) throw std::invalid_argument("gather_last_axis: index out of range");
            out[i * k + j] = an->data[i * c + src];
        }
    return make_result("gather_last_axis", r, k, std::move(out), {a.share()},
                       [r, c, k, indices](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < k; ++j)
                                   A.grad[i * c + indices.at(i, j)] += self.grad[i * k + j];
                       });
}

SortResult sort_desc_stable(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    IndexMatrix im;
    im.rows = r;
    im.cols = c;
    im.idx.resize(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        std::uint32_t* row = &im.idx[i * c];
        std::iota(row, row + c, 0u);
        const real* vals = &an->data[i * c];
        std::stable_sort(row, row + c,
                         [vals](std::uint32_t x, std::uint32_t y) { return vals[x] > vals[y]; });
    }
    SortResult res;
    res.values = gather_last_axis(a, im);
    res.indices = std::move(im);
    return res;
}

Tensor l2_normalize_rows(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    std::vector<real> out(r * c);
    std::vector<real> norms(r);
    for (std::size_t i = 0; i < r; ++i) {
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const real v = an->data[i * c + j];
            s += v * v;
        }
        const real norm = std::sqrt(s);
        if (norm == 0.0) throw std::invalid_argument("l2_normalize_rows: zero-norm row");
        norms[i] = norm;
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = an->data[i * c + j] / norm;
    }
    return make_result("l2_normalize_rows", r, c, std::move(out), {a.share()},
                       [r, c, norms = std::move(norms)](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           // dx = (g - y * <y, g>) / norm per row
                           for (std::size_t i = 0; i < r; ++i) {
                               real dot = 0.0;
                               for (std::size_t j = 0; j < c; ++j)
                                   dot += self.data[i * c + j] * self.grad[i * c + j];
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + j] +=
                                       (self.grad[i * c + j] - self.data[i * c + j] * dot) /
                                       norms[i];
                           }
                       });
}

Tensor logsumexp_row(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    if (c == 0) shape_error("logsumexp_row", *an);
    std::vector<real> out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const real* row = &an->data[i * c];
        real m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        real s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - m);
        out[i] = m + std::log(s);
    }
    return make_result("logsumexp_row", r, 1, std::move(out), {a.share()},
                       [r, c](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < r; ++i) {
                               const real lse = self.data[i];
                               const real g = self.grad[i];
                               for (std::size_t j = 0; j < c; ++j)
                                   A.grad[i * c + j] += g * std::exp(A.data[i * c + j] - lse);
                           }
                       });
}

Tensor clamp(const Tensor& a, real lo, real hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    auto* an = a.node();
    const std::size_t n = an->size();
    std::vector<real> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::min(hi, std::max(lo, an->data[i]));
    return make_result("clamp", an->rows, an->cols, std::move(out), {a.share()},
                       [n, lo, hi](TensorNode& self) {
                           auto& A = *self.parents[0];
                           if (!A.requires_grad) return;
                           for (std::size_t i = 0; i < n; ++i)
                               if (A.data[i] >= lo && A.data[i] <= hi)
                                   A.grad[i] += self.grad[i];
                       });
}

Tensor suffix_logsumexp(const Tensor& a) {
    auto* an = a.node();
    const std::size_t r = an->rows, c = an->cols;
    if (c == 0) shape_error("suffix_logsumexp", *an);
    std::vector<real> out(r * c);
    for (std::size_t i = 0; i < r; ++i) {
        const real* x = &an->data[i * c];
        real* y = &out[i * c];
        y[c - 1] = x[c - 1];
        for (std::size_t j = c - 1; j-- > 0;) {
            const real m = std::max(x[j], y[j + 1]);
            y[j] = m + std::log(std::exp(x[j] - m) + std::exp(y[j + 1] - m));
        }
    }
    return make_result(
        "suffix_logsumexp", r, c, std::move(out), {a.share()}, [r, c](TensorNode& self) {
            auto& A = *self.parents[0];
            if (!A.requires_grad) return;
            // dL/dx_l = exp(x_l - y_l) * P_l with the rescaled prefix
            // P_l = g_l + exp(y_l - y_{l-1}) * P_{l-1}; both exp factors are
            // <= 1 since y_l is the logsumexp of a suffix subset of y_{l-1}.
            for (std::size_t i = 0; i < r; ++i) {
                const real* x = &A.data[i * c];
                const real* y = &self.data[i * c];
                const real* g = &self.grad[i * c];
                real prefix = 0.0;
                for (std::size_t l = 0; l < c; ++l) {
                    if (l == 0)
                        prefix = g[0];
                    else
                        prefix = g[l] + std::exp(y[l] - y[l - 1]) * prefix;
                    A.grad[i * c + l] += std::exp(x[l] - y[l]) * prefix;
                }
            }
        });
}

Tensor op_forward(const std::string& name, const std::vector<Tensor>& inputs,
                  const OpAttrs& attrs) {
    auto unary = [&](auto&& fn) {
        if (inputs.size() != 1)
            throw std::invalid_argument("op_forward: " + name + " expects 1 input");
        return fn(inputs[0]);
    };
    auto binary = [&](auto&& fn) {
        if (inputs.size() != 2)
            throw std::invalid_argument("op_forward: " + name + " expects 2 inputs");
        return fn(inputs[0], inputs[1]);
    };
    if (name == "matmul") return binary([](auto& a, auto& b) { return matmul(a, b); });
    if (name == "transpose") return unary([](auto& a) { return transpose(a); });
    if (name == "add") return binary([](auto& a, auto& b) { return add(a, b); });
    if (name == "sub") return binary([](auto& a, auto& b) { return sub(a, b); });
    if (name == "mul_elementwise")
        return binary([](auto& a, auto& b) { return mul_elementwise(a, b); });
    if (name == "scalar_mul") return unary([&](auto& a) { return scalar_mul(a, attrs.scalar); });
    if (name == "exp") return unary([](auto& a) { return exp(a); });
    if (name == "log") return unary([](auto& a) { return log(a); });
    if (name == "tanh") return unary([](auto& a) { return tanh(a); });
    if (name == "row_max") return unary([](auto& a) { return row_max(a); });
    if (name == "row_sum") return unary([](auto& a) { return row_sum(a); });
    if (name == "row_mean") return unary([](auto& a) { return row_mean(a); });
    if (name == "mean_all") return unary([](auto& a) { return mean_all(a); });
    if (name == "cumsum_last_axis") return unary([](auto& a) { return cumsum_last_axis(a); });
    if (name == "flip_last_axis") return unary([](auto& a) { return flip_last_axis(a); });
    if (name == "gather_last_axis") {
        if (!attrs.indices) throw std::invalid_argument("op_forward: gather needs indices");
        return unary([&](auto& a) { return gather_last_axis(a, *attrs.indices); });
    }
    if (name == "sort_desc_stable") return unary([](auto& a) { return sort_desc_stable(a).values; });
    if (name == "l2_normalize_rows") return unary([](auto& a) { return l2_normalize_rows(a); });
    if (name == "logsumexp_row") return unary([](auto& a) { return logsumexp_row(a); });
    if (name == "clamp") return unary([&](auto& a) { return clamp(a, attrs.lo, attrs.hi); });
    if (name == "suffix_logsumexp") return unary([](auto& a) { return suffix_logsumexp(a); });
    throw std::invalid_argument("op_forward: unknown operation '" + name + "'");
}

// ---- backward --------------------------------------------------------------

namespace {

// Iterative post-order topological sort over the recorded graph.
std::vector<TensorNode*> topo_order(TensorNode* root) {
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // parents before children
}

}  // namespace

void backward(const Tensor& loss) {
    TensorNode* root = loss.node();
    if (!root) throw std::invalid_argument("backward: undefined tensor");
    if (root->size() != 1) throw std::invalid_argument("backward: loss is not a scalar");
    if (!root->requires_grad) return;  // nothing reaches a grad leaf

    auto order = topo_order(root);
    for (TensorNode* n : order)
        if (n->consumed)
            throw std::runtime_error("backward: computation record already consumed");

    root->grad[0] += 1.0;
    // children first
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) {
            n->backward_fn(*n);
            n->consumed = true;  // leaves stay reusable
        }
    }
}

real finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, real epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");
    Tensor probe = x.clone(true);
    Tensor out = f(probe);
    if (out.size() != 1)
        throw std::invalid_argument("finite_diff_check: f must return a scalar");
    backward(out);
    const std::vector<real> analytic = probe.grad();

    Tensor fixed = x.clone(false);
    auto eval = [&]() { return f(fixed).value(); };
    real worst = 0.0;
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        const real orig = fixed.data()[i];
        fixed.data()[i] = orig + epsilon;
        const real up = eval();
        fixed.data()[i] = orig - epsilon;
        const real down = eval();
        fixed.data()[i] = orig;
        const real central = (up - down) / (2.0 * epsilon);
        const real denom = std::max(static_cast<real>(1e-12),
                                    std::abs(analytic[i]) + std::abs(central));
        worst = std::max(worst, std::abs(analytic[i] - central) / denom);
    }
    return worst;
}

}  // namespace rankclip
