#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rankclip {

using real = double;  // 64-bit throughout; gradient checks rely on it

struct TensorNode;

// Gradient-free integer matrix (sort permutations, gather indices).
struct IndexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> idx;

    std::uint32_t at(std::size_t r, std::size_t c) const { return idx[r * cols + c]; }
};

// Value handle over a shared autodiff node. All tensors are 2-D row-major;
// vectors are 1xK or Kx1, scalars 1x1. Copying a Tensor aliases the node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<real> data,
                            bool requires_grad = false);
    static Tensor scalar(real v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const { return rows() * cols(); }
    bool requires_grad() const;

    std::vector<real>& data();
    const std::vector<real>& data() const;
    // Gradient buffer; empty unless requires_grad and a backward pass ran.
    const std::vector<real>& grad() const;

    real at(std::size_t r, std::size_t c) const;
    real value() const;  // scalar extract; throws on non-1x1

    void zero_grad();
    Tensor clone(bool requires_grad) const;  // deep copy of values, detached

    TensorNode* node() const { return node_.get(); }
    std::shared_ptr<TensorNode> share() const { return node_; }

private:
    std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<real> data;
    std::vector<real> grad;  // sized iff requires_grad
    bool requires_grad = false;
    bool consumed = false;  // set once a backward pass replayed this entry
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;  // reads self.grad, accumulates into parents

    std::size_t size() const { return rows * cols; }
    void accumulate(std::size_t i, real g) {
        if (requires_grad) grad[i] += g;
    }
};

struct SortResult {
    Tensor values;
    IndexMatrix indices;  // gradient-free constants
};

// ---- operator set ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// add/sub accept equal shapes, a row vector (1 x cols) broadcast over rows,
// or a column vector (rows x 1) broadcast over columns.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// equal shapes, or either operand 1x1 (scalar broadcast)
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, real c);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor row_max(const Tensor& a);   // N x 1, gradient to first argmax
Tensor row_sum(const Tensor& a);   // N x 1
Tensor row_mean(const Tensor& a);  // N x 1
Tensor mean_all(const Tensor& a);  // 1 x 1
Tensor cumsum_last_axis(const Tensor& a);
Tensor flip_last_axis(const Tensor& a);
Tensor gather_last_axis(const Tensor& a, const IndexMatrix& indices);
SortResult sort_desc_stable(const Tensor& a);
Tensor l2_normalize_rows(const Tensor& a);
Tensor logsumexp_row(const Tensor& a);  // N x 1
Tensor clamp(const Tensor& a, real lo, real hi);
// y[i,j] = log sum_{l>=j} exp(x[i,l]); equals log(flip(cumsum(flip(exp(x)))))
// but stays finite for arbitrary magnitudes.
Tensor suffix_logsumexp(const Tensor& a);

// Uniform dispatch over the operator set (used by the gradcheck suites).
struct OpAttrs {
    real scalar = 1.0;
    real lo = 0.0;
    real hi = 0.0;
    const IndexMatrix* indices = nullptr;
};
Tensor op_forward(const std::string& name, const std::vector<Tensor>& inputs,
                  const OpAttrs& attrs = {});

// Reverse pass from a scalar loss; seeds with 1, accumulates additively on
// fan-out, and rejects a second replay of an already-consumed record.
void backward(const Tensor& loss);

// Max over coordinates of |analytic - central difference| /
// max(1e-12, |analytic| + |central|). f must map x to a scalar tensor.
real finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x,
                       real epsilon = 1e-6);

}  // namespace rankclip
