// Copyright 2026 The textsr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TEXTSR_AUTOGRAD_HPP_
#define TEXTSR_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "textsr/tensor.hpp"

namespace textsr {
namespace ag {

// Reverse-mode tape. Nodes hold values and a backward closure; graphs are
// built dynamically and freed when the last Var handle drops. Kernel-level
// parallelism only ever splits work across independent outputs and all
// cross-sample reductions run serially, so results are bitwise
// reproducible for any thread count.
struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated on first accumulation
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  static Var leaf(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() { node_->grad = Tensor(); }
  NodePtr node() const { return node_; }

  // Same value, cut from the graph.
  Var detach() const;

  double scalar() const { return node_->value[0]; }

 private:
  NodePtr node_;
};

// Scoped guard disabling graph construction (inference / oracle passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Runs reverse accumulation from a scalar root (seeds d root = 1).
void backward(const Var& root);

// ---- elementwise & scalar ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh_op(const Var& x);
Var sigmoid(const Var& x);
// log(max(x, eps)); clamped entries get zero gradient
Var log_clamped(const Var& x, double eps);

// ---- reductions & reshape ----
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var reshape(const Var& x, std::vector<int> shape);

// ---- dense algebra ----
// (N,K) x (K,M) -> (N,M)
Var matmul(const Var& a, const Var& b);
// y[n,d] = x[n,d] + b[d]
Var add_row_bias(const Var& x, const Var& b);
// columns [from, to) of a (N,D) matrix
Var col_slice(const Var& x, int from, int to);
Var concat_cols(const Var& a, const Var& b);
// out[n] = x[n, idx[n]]
Var gather_cols(const Var& x, std::vector<int> idx);
// rows of an embedding table: (V,E) x idx(N) -> (N,E)
Var embedding_lookup(const Var& table, std::vector<int> idx);
// rowwise softmax on (N,D)
Var softmax_rows(const Var& x);

// ---- sequence (N,L,D) ----
Var seq_step(const Var& x, int t);                       // -> (N,D)
Var stack_steps(const std::vector<Var>& steps);          // L x (N,D) -> (N,L,D)
Var broadcast_add_seq(const Var& seq, const Var& row);   // (N,L,A)+(N,A)
Var seq_inner(const Var& seq, const Var& v);             // (N,L,A)x(A) -> (N,L)
Var weighted_sum_seq(const Var& seq, const Var& alpha);  // -> (N,D)

// ---- convolution & friends (NCHW) ----
Var conv2d(const Var& x, const Var& w, int stride_h, int stride_w, int pad_h,
           int pad_w);
// weight layout (Cin, Cout, kh, kw); output (H-1)*s - 2p + k
Var conv_transpose2d(const Var& x, const Var& w, int stride, int pad);
Var add_channel_bias(const Var& x, const Var& b);
Var maxpool2d(const Var& x, int kh, int kw, int sh, int sw);
Var spatial_mean(const Var& x);          // (N,C,H,W) -> (N,C)
Var height_mean(const Var& x);           // (N,C,H,W) -> (N,C,1,W)
Var feature_map_to_seq(const Var& x);    // (N,C,1,W) -> (N,W,C)
// batchnorm over (N,H,W) per channel using batch statistics; saves the
// batch mean/var for the caller's running-average update
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, double eps,
                Tensor* batch_mean = nullptr, Tensor* batch_var = nullptr);
// inference-mode normalization with fixed statistics
Var batchnorm2d_eval(const Var& x, const Var& gamma, const Var& beta,
                     const Tensor& mean, const Tensor& var, double eps);

// Bilinear sampling at normalized [0,1] align-corners coordinates with
// border clamping. grid is (N,Hg,Wg,2) ordered (gx, gy); differentiable in
// both the image and the grid.
Var grid_sample(const Var& x, const Var& grid);

// Constant grid for a plain bilinear resize to (out_h, out_w).
Tensor make_resize_grid(int n, int in_h, int in_w, int out_h, int out_w);

// Escape hatch for composite modules that need a bespoke node (the TPS
// grid builder uses it). The backward closure reads n.grad and accumulates
// into the inputs' grads.
Var custom_op(Tensor value, std::vector<NodePtr> inputs,
              std::function<void(Node&)> backward);

}  // namespace ag
}  // namespace textsr

#endif  // TEXTSR_AUTOGRAD_HPP_
