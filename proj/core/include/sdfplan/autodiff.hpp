#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sdfplan::ad {

/// Minimal reverse-mode automatic differentiation over dense 64-bit tensors.
/// Graphs are built define-by-run; backward() accumulates gradients into
/// every reachable tensor with requires_grad set. Gradients accumulate
/// additively across uses.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  std::vector<int> shape;
  Eigen::ArrayXd value;  // flat, row-major
  Eigen::ArrayXd grad;   // allocated lazily
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  long numel() const { return value.size(); }
  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor leaf(std::vector<int> shape, Eigen::ArrayXd data, bool requires_grad);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(std::vector<int> shape, bool requires_grad);

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  long numel() const { return node_->numel(); }
  const Eigen::ArrayXd& value() const { return node_->value; }
  Eigen::ArrayXd& value_mut() { return node_->value; }
  const Eigen::ArrayXd& grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  double item() const;

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

// Elementwise (shapes must match exactly; no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor exp_neg(const Tensor& a);  // elementwise exp(-x)
Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// mean((pred - target)^2); target may be a constant leaf.
Tensor mse_reduce(const Tensor& pred, const Tensor& target);

// Structure.
Tensor concat(const std::vector<Tensor>& parts);  // 1-D concatenation
Tensor gather(const Tensor& a, std::vector<long> indices);
Tensor reshape(const Tensor& a, std::vector<int> shape);

/// Affine map on a vector [in] or on matrix rows [N, in]:
/// out = x W^T + b with W [out, in], b [out].
Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b);
/// Plain matrix product A [m, k] * B [k, n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// M [N, d] + row vector v [d] broadcast over rows.
Tensor add_rowvec(const Tensor& m, const Tensor& v);

/// Valid (no padding) 2-D convolution: x [Ci, H, W], kernels [Co, Ci, kh, kw],
/// bias [Co], stride >= 1. Output [Co, Ho, Wo] with Ho = (H - kh)/stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride);

/// Reverse-mode sweep from a scalar loss. Gradients of all requires_grad
/// tensors in the graph accumulate into their .grad().
void backward(const Tensor& loss);
/// Clears gradients on the given tensors.
void zero_grad(const std::vector<Tensor>& tensors);

/// Adam optimizer state; moment tensors match parameter shapes.
struct AdamState {
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Eigen::ArrayXd> m;
  std::vector<Eigen::ArrayXd> v;

  static AdamState make(const std::vector<Tensor>& params, double lr = 1e-4);
};

/// Standard bias-corrected Adam update from the parameters' accumulated
/// gradients; deterministic given state.
void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace sdfplan::ad
