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

#include "textsr/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <Eigen/Dense>
#include <omp.h>

#include "textsr/errors.hpp"

namespace textsr {
namespace ag {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;

NodePtr make_node(Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  if (g_grad_enabled) {
    bool needs = false;
    for (const auto& in : inputs)
      if (in->requires_grad) needs = true;
    if (needs) {
      node->requires_grad = true;
      node->inputs = std::move(inputs);
      node->backward = std::move(backward);
    }
  }
  return node;
}

void accumulate(Node& target, const Tensor& delta) {
  Tensor& g = target.ensure_grad();
  const double* src = delta.data();
  double* dst = g.data();
  const std::int64_t n = delta.numel();
  for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw ShapeMismatchError(std::string(op) + ": shapes " + a.value().shape_str() +
                             " vs " + b.value().shape_str());
}

// Patch extraction shared by conv and transposed conv. positions (PH,PW)
// index patches anchored at (py*s - p + ky, px*s - p + kx) inside an
// image of size (IH,IW); out-of-range taps read zero.
void im2col(const double* img, int C, int IH, int IW, int PH, int PW, int kh,
            int kw, int sh, int sw, int ph, int pw, double* cols) {
  const std::int64_t patch_area = static_cast<std::int64_t>(PH) * PW;
  for (int c = 0; c < C; ++c) {
    const double* src = img + static_cast<std::int64_t>(c) * IH * IW;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        double* row =
            cols + ((static_cast<std::int64_t>(c) * kh + ky) * kw + kx) * patch_area;
        for (int py = 0; py < PH; ++py) {
          const int y = py * sh - ph + ky;
          if (y < 0 || y >= IH) {
            std::fill(row + static_cast<std::int64_t>(py) * PW,
                      row + static_cast<std::int64_t>(py + 1) * PW, 0.0);
            continue;
          }
          const double* src_row = src + static_cast<std::int64_t>(y) * IW;
          double* dst_row = row + static_cast<std::int64_t>(py) * PW;
          for (int px = 0; px < PW; ++px) {
            const int x = px * sw - pw + kx;
            dst_row[px] = (x >= 0 && x < IW) ? src_row[x] : 0.0;
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatters patch columns back into the image.
void col2im(const double* cols, int C, int IH, int IW, int PH, int PW, int kh,
            int kw, int sh, int sw, int ph, int pw, double* img) {
  const std::int64_t patch_area = static_cast<std::int64_t>(PH) * PW;
  for (int c = 0; c < C; ++c) {
    double* dst = img + static_cast<std::int64_t>(c) * IH * IW;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const double* row =
            cols + ((static_cast<std::int64_t>(c) * kh + ky) * kw + kx) * patch_area;
        for (int py = 0; py < PH; ++py) {
          const int y = py * sh - ph + ky;
          if (y < 0 || y >= IH) continue;
          double* dst_row = dst + static_cast<std::int64_t>(y) * IW;
          const double* src_row = row + static_cast<std::int64_t>(py) * PW;
          for (int px = 0; px < PW; ++px) {
            const int x = px * sw - pw + kx;
            if (x >= 0 && x < IW) dst_row[x] += src_row[px];
          }
        }
      }
    }
  }
}

}  // namespace

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

Var Var::detach() const {
  auto node = std::make_shared<Node>();
  node->value = node_->value;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  node->requires_grad = false;
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& root) {
  if (!root.defined() || root.value().numel() != 1)
    throw ShapeMismatchError("backward: root must be a scalar");
  if (!root.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  root.node()->ensure_grad().fill(1.0);
  for (Node* n : order)
    if (n->backward) n->backward(*n);
}

// ---------------------------------------------------------------------------
// elementwise

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a.value();
  const double* pb = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += pb[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad) accumulate(*n.inputs[0], n.grad);
    if (n.inputs[1]->requires_grad) accumulate(*n.inputs[1], n.grad);
  }));
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a.value();
  const double* pb = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= pb[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad) accumulate(*n.inputs[0], n.grad);
    if (n.inputs[1]->requires_grad) {
      Tensor& g = n.inputs[1]->ensure_grad();
      for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[i] -= n.grad[i];
    }
  }));
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a.value();
  const double* pb = b.value().data();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= pb[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    const Tensor& va = n.inputs[0]->value;
    const Tensor& vb = n.inputs[1]->value;
    if (n.inputs[0]->requires_grad) {
      Tensor& g = n.inputs[0]->ensure_grad();
      for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * vb[i];
    }
    if (n.inputs[1]->requires_grad) {
      Tensor& g = n.inputs[1]->ensure_grad();
      for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * va[i];
    }
  }));
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += s;
  return Var(make_node(std::move(out), {a.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad) accumulate(*n.inputs[0], n.grad);
  }));
}

Var mul_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
  return Var(make_node(std::move(out), {a.node()}, [s](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[i] += s * n.grad[i];
  }));
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(out[i], 0.0);
  return Var(make_node(std::move(out), {x.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const Tensor& vx = n.inputs[0]->value;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i)
      if (vx[i] > 0.0) g[i] += n.grad[i];
  }));
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i)
    if (out[i] < 0.0) out[i] *= slope;
  return Var(make_node(std::move(out), {x.node()}, [slope](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const Tensor& vx = n.inputs[0]->value;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i)
      g[i] += n.grad[i] * (vx[i] > 0.0 ? 1.0 : slope);
  }));
}

Var tanh_op(const Var& x) {
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
  auto saved = std::make_shared<Tensor>(out);
  return Var(make_node(std::move(out), {x.node()}, [saved](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const Tensor& y = *saved;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i)
      g[i] += n.grad[i] * (1.0 - y[i] * y[i]);
  }));
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  auto saved = std::make_shared<Tensor>(out);
  return Var(make_node(std::move(out), {x.node()}, [saved](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const Tensor& y = *saved;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i)
      g[i] += n.grad[i] * y[i] * (1.0 - y[i]);
  }));
}

Var log_clamped(const Var& x, double eps) {
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(std::max(out[i], eps));
  return Var(make_node(std::move(out), {x.node()}, [eps](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const Tensor& vx = n.inputs[0]->value;
    for (std::int64_t i = 0; i < n.grad.numel(); ++i)
      if (vx[i] > eps) g[i] += n.grad[i] / vx[i];
  }));
}

// ---------------------------------------------------------------------------
// reductions / reshape

Var sum_all(const Var& x) {
  double s = 0.0;
  for (std::int64_t i = 0; i < x.value().numel(); ++i) s += x.value()[i];
  return Var(make_node(Tensor::scalar(s), {x.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const double d = n.grad[0];
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += d;
  }));
}

Var mean_all(const Var& x) {
  const double inv = 1.0 / static_cast<double>(x.value().numel());
  double s = 0.0;
  for (std::int64_t i = 0; i < x.value().numel(); ++i) s += x.value()[i];
  return Var(make_node(Tensor::scalar(s * inv), {x.node()}, [inv](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = n.inputs[0]->ensure_grad();
    const double d = n.grad[0] * inv;
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += d;
  }));
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return Var(make_node(std::move(out), {x.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    accumulate(*n.inputs[0], n.grad.reshaped(n.inputs[0]->value.shape()));
  }));
}

// ---------------------------------------------------------------------------
// dense algebra

Var matmul(const Var& a, const Var& b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw ShapeMismatchError("matmul: incompatible shapes " + va.shape_str() + " x " +
                             vb.shape_str());
  const int n = va.dim(0), k = va.dim(1), m = vb.dim(1);
  Tensor out({n, m});
  MatMap(out.data(), n, m).noalias() =
      ConstMatMap(va.data(), n, k) * ConstMatMap(vb.data(), k, m);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [n, k, m](Node& nd) {
    ConstMatMap dy(nd.grad.data(), n, m);
    if (nd.inputs[0]->requires_grad) {
      Tensor& ga = nd.inputs[0]->ensure_grad();
      MatMap(ga.data(), n, k).noalias() +=
          dy * ConstMatMap(nd.inputs[1]->value.data(), k, m).transpose();
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& gb = nd.inputs[1]->ensure_grad();
      MatMap(gb.data(), k, m).noalias() +=
          ConstMatMap(nd.inputs[0]->value.data(), n, k).transpose() * dy;
    }
  }));
}

Var add_row_bias(const Var& x, const Var& b) {
  const Tensor& vx = x.value();
  const Tensor& vb = b.value();
  if (vx.rank() != 2 || vb.numel() != vx.dim(1))
    throw ShapeMismatchError("add_row_bias: bias size mismatch");
  Tensor out = vx;
  const int n = vx.dim(0), d = vx.dim(1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<std::int64_t>(i) * d + j] += vb[j];
  return Var(make_node(std::move(out), {x.node(), b.node()}, [n, d](Node& nd) {
    if (nd.inputs[0]->requires_grad) accumulate(*nd.inputs[0], nd.grad);
    if (nd.inputs[1]->requires_grad) {
      Tensor& gb = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) gb[j] += nd.grad[static_cast<std::int64_t>(i) * d + j];
    }
  }));
}

Var col_slice(const Var& x, int from, int to) {
  const Tensor& vx = x.value();
  if (vx.rank() != 2 || from < 0 || to > vx.dim(1) || from >= to)
    throw ShapeMismatchError("col_slice: bad range");
  const int n = vx.dim(0), d = vx.dim(1), w = to - from;
  Tensor out({n, w});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < w; ++j)
      out[static_cast<std::int64_t>(i) * w + j] =
          vx[static_cast<std::int64_t>(i) * d + from + j];
  return Var(make_node(std::move(out), {x.node()}, [n, d, w, from](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j)
        g[static_cast<std::int64_t>(i) * d + from + j] +=
            nd.grad[static_cast<std::int64_t>(i) * w + j];
  }));
}

Var concat_cols(const Var& a, const Var& b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(0) != vb.dim(0))
    throw ShapeMismatchError("concat_cols: row mismatch");
  const int n = va.dim(0), da = va.dim(1), db = vb.dim(1);
  Tensor out({n, da + db});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < da; ++j)
      out[static_cast<std::int64_t>(i) * (da + db) + j] =
          va[static_cast<std::int64_t>(i) * da + j];
    for (int j = 0; j < db; ++j)
      out[static_cast<std::int64_t>(i) * (da + db) + da + j] =
          vb[static_cast<std::int64_t>(i) * db + j];
  }
  return Var(make_node(std::move(out), {a.node(), b.node()}, [n, da, db](Node& nd) {
    if (nd.inputs[0]->requires_grad) {
      Tensor& g = nd.inputs[0]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < da; ++j)
          g[static_cast<std::int64_t>(i) * da + j] +=
              nd.grad[static_cast<std::int64_t>(i) * (da + db) + j];
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < db; ++j)
          g[static_cast<std::int64_t>(i) * db + j] +=
              nd.grad[static_cast<std::int64_t>(i) * (da + db) + da + j];
    }
  }));
}

Var gather_cols(const Var& x, std::vector<int> idx) {
  const Tensor& vx = x.value();
  if (vx.rank() != 2 || static_cast<int>(idx.size()) != vx.dim(0))
    throw ShapeMismatchError("gather_cols: index count mismatch");
  const int n = vx.dim(0), d = vx.dim(1);
  Tensor out({n});
  for (int i = 0; i < n; ++i) {
    if (idx[static_cast<std::size_t>(i)] < 0 || idx[static_cast<std::size_t>(i)] >= d)
      throw ShapeMismatchError("gather_cols: index out of range");
    out[i] = vx[static_cast<std::int64_t>(i) * d + idx[static_cast<std::size_t>(i)]];
  }
  return Var(make_node(std::move(out), {x.node()}, [idx = std::move(idx), d](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      g[static_cast<std::int64_t>(i) * d + idx[i]] += nd.grad[static_cast<std::int64_t>(i)];
  }));
}

Var embedding_lookup(const Var& table, std::vector<int> idx) {
  const Tensor& vt = table.value();
  if (vt.rank() != 2) throw ShapeMismatchError("embedding_lookup: table must be 2D");
  const int v = vt.dim(0), e = vt.dim(1);
  const int n = static_cast<int>(idx.size());
  Tensor out({n, e});
  for (int i = 0; i < n; ++i) {
    const int row = idx[static_cast<std::size_t>(i)];
    if (row < 0 || row >= v) throw ShapeMismatchError("embedding_lookup: index out of range");
    std::copy(vt.data() + static_cast<std::int64_t>(row) * e,
              vt.data() + static_cast<std::int64_t>(row + 1) * e,
              out.data() + static_cast<std::int64_t>(i) * e);
  }
  return Var(make_node(std::move(out), {table.node()}, [idx = std::move(idx), e](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double* src = nd.grad.data() + static_cast<std::int64_t>(i) * e;
      double* dst = g.data() + static_cast<std::int64_t>(idx[i]) * e;
      for (int j = 0; j < e; ++j) dst[j] += src[j];
    }
  }));
}

Var softmax_rows(const Var& x) {
  const Tensor& vx = x.value();
  if (vx.rank() != 2) throw ShapeMismatchError("softmax_rows: input must be 2D");
  const int n = vx.dim(0), d = vx.dim(1);
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    const double* in = vx.data() + static_cast<std::int64_t>(i) * d;
    double* o = out.data() + static_cast<std::int64_t>(i) * d;
    double mx = in[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (int j = 0; j < d; ++j) o[j] /= sum;
  }
  auto saved = std::make_shared<Tensor>(out);
  return Var(make_node(std::move(out), {x.node()}, [saved, n, d](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* y = saved->data() + static_cast<std::int64_t>(i) * d;
      const double* dy = nd.grad.data() + static_cast<std::int64_t>(i) * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += dy[j] * y[j];
      double* gi = g.data() + static_cast<std::int64_t>(i) * d;
      for (int j = 0; j < d; ++j) gi[j] += y[j] * (dy[j] - dot);
    }
  }));
}

// ---------------------------------------------------------------------------
// sequence ops

Var seq_step(const Var& x, int t) {
  const Tensor& vx = x.value();
  if (vx.rank() != 3 || t < 0 || t >= vx.dim(1))
    throw ShapeMismatchError("seq_step: bad step index");
  const int n = vx.dim(0), l = vx.dim(1), d = vx.dim(2);
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    std::copy(vx.data() + (static_cast<std::int64_t>(i) * l + t) * d,
              vx.data() + (static_cast<std::int64_t>(i) * l + t + 1) * d,
              out.data() + static_cast<std::int64_t>(i) * d);
  return Var(make_node(std::move(out), {x.node()}, [n, l, d, t](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* src = nd.grad.data() + static_cast<std::int64_t>(i) * d;
      double* dst = g.data() + (static_cast<std::int64_t>(i) * l + t) * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  }));
}

Var stack_steps(const std::vector<Var>& steps) {
  if (steps.empty()) throw ShapeMismatchError("stack_steps: no steps");
  const int n = steps[0].value().dim(0), d = steps[0].value().dim(1);
  const int l = static_cast<int>(steps.size());
  Tensor out({n, l, d});
  std::vector<NodePtr> inputs;
  inputs.reserve(steps.size());
  for (int t = 0; t < l; ++t) {
    const Tensor& vs = steps[static_cast<std::size_t>(t)].value();
    if (vs.rank() != 2 || vs.dim(0) != n || vs.dim(1) != d)
      throw ShapeMismatchError("stack_steps: inconsistent step shapes");
    for (int i = 0; i < n; ++i)
      std::copy(vs.data() + static_cast<std::int64_t>(i) * d,
                vs.data() + static_cast<std::int64_t>(i + 1) * d,
                out.data() + (static_cast<std::int64_t>(i) * l + t) * d);
    inputs.push_back(steps[static_cast<std::size_t>(t)].node());
  }
  return Var(make_node(std::move(out), std::move(inputs), [n, l, d](Node& nd) {
    for (int t = 0; t < l; ++t) {
      Node& in = *nd.inputs[static_cast<std::size_t>(t)];
      if (!in.requires_grad) continue;
      Tensor& g = in.ensure_grad();
      for (int i = 0; i < n; ++i) {
        const double* src = nd.grad.data() + (static_cast<std::int64_t>(i) * l + t) * d;
        double* dst = g.data() + static_cast<std::int64_t>(i) * d;
        for (int j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
  }));
}

Var broadcast_add_seq(const Var& seq, const Var& row) {
  const Tensor& vs = seq.value();
  const Tensor& vr = row.value();
  if (vs.rank() != 3 || vr.rank() != 2 || vs.dim(0) != vr.dim(0) || vs.dim(2) != vr.dim(1))
    throw ShapeMismatchError("broadcast_add_seq: shape mismatch");
  const int n = vs.dim(0), l = vs.dim(1), d = vs.dim(2);
  Tensor out = vs;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l; ++t)
      for (int j = 0; j < d; ++j)
        out[(static_cast<std::int64_t>(i) * l + t) * d + j] +=
            vr[static_cast<std::int64_t>(i) * d + j];
  return Var(make_node(std::move(out), {seq.node(), row.node()}, [n, l, d](Node& nd) {
    if (nd.inputs[0]->requires_grad) accumulate(*nd.inputs[0], nd.grad);
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < l; ++t)
          for (int j = 0; j < d; ++j)
            g[static_cast<std::int64_t>(i) * d + j] +=
                nd.grad[(static_cast<std::int64_t>(i) * l + t) * d + j];
    }
  }));
}

Var seq_inner(const Var& seq, const Var& v) {
  const Tensor& vs = seq.value();
  const Tensor& vv = v.value();
  if (vs.rank() != 3 || vv.numel() != vs.dim(2))
    throw ShapeMismatchError("seq_inner: shape mismatch");
  const int n = vs.dim(0), l = vs.dim(1), d = vs.dim(2);
  Tensor out({n, l});
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l; ++t) {
      const double* row = vs.data() + (static_cast<std::int64_t>(i) * l + t) * d;
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += row[j] * vv[j];
      out[static_cast<std::int64_t>(i) * l + t] = s;
    }
  return Var(make_node(std::move(out), {seq.node(), v.node()}, [n, l, d](Node& nd) {
    const Tensor& vs2 = nd.inputs[0]->value;
    const Tensor& vv2 = nd.inputs[1]->value;
    if (nd.inputs[0]->requires_grad) {
      Tensor& g = nd.inputs[0]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < l; ++t) {
          const double dy = nd.grad[static_cast<std::int64_t>(i) * l + t];
          double* gr = g.data() + (static_cast<std::int64_t>(i) * l + t) * d;
          for (int j = 0; j < d; ++j) gr[j] += dy * vv2[j];
        }
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < l; ++t) {
          const double dy = nd.grad[static_cast<std::int64_t>(i) * l + t];
          const double* row = vs2.data() + (static_cast<std::int64_t>(i) * l + t) * d;
          for (int j = 0; j < d; ++j) g[j] += dy * row[j];
        }
    }
  }));
}

Var weighted_sum_seq(const Var& seq, const Var& alpha) {
  const Tensor& vs = seq.value();
  const Tensor& va = alpha.value();
  if (vs.rank() != 3 || va.rank() != 2 || vs.dim(0) != va.dim(0) || vs.dim(1) != va.dim(1))
    throw ShapeMismatchError("weighted_sum_seq: shape mismatch");
  const int n = vs.dim(0), l = vs.dim(1), d = vs.dim(2);
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    double* o = out.data() + static_cast<std::int64_t>(i) * d;
    for (int t = 0; t < l; ++t) {
      const double a = va[static_cast<std::int64_t>(i) * l + t];
      const double* row = vs.data() + (static_cast<std::int64_t>(i) * l + t) * d;
      for (int j = 0; j < d; ++j) o[j] += a * row[j];
    }
  }
  return Var(make_node(std::move(out), {seq.node(), alpha.node()}, [n, l, d](Node& nd) {
    const Tensor& vs2 = nd.inputs[0]->value;
    const Tensor& va2 = nd.inputs[1]->value;
    if (nd.inputs[0]->requires_grad) {
      Tensor& g = nd.inputs[0]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < l; ++t) {
          const double a = va2[static_cast<std::int64_t>(i) * l + t];
          const double* dy = nd.grad.data() + static_cast<std::int64_t>(i) * d;
          double* gr = g.data() + (static_cast<std::int64_t>(i) * l + t) * d;
          for (int j = 0; j < d; ++j) gr[j] += a * dy[j];
        }
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < l; ++t) {
          const double* dy = nd.grad.data() + static_cast<std::int64_t>(i) * d;
          const double* row = vs2.data() + (static_cast<std::int64_t>(i) * l + t) * d;
          double s = 0.0;
          for (int j = 0; j < d; ++j) s += dy[j] * row[j];
          g[static_cast<std::int64_t>(i) * l + t] += s;
        }
    }
  }));
}

// ---------------------------------------------------------------------------
// convolution

Var conv2d(const Var& x, const Var& w, int stride_h, int stride_w, int pad_h,
           int pad_w) {
  const Tensor& vx = x.value();
  const Tensor& vw = w.value();
  if (vx.rank() != 4 || vw.rank() != 4 || vx.dim(1) != vw.dim(1))
    throw ShapeMismatchError("conv2d: bad shapes " + vx.shape_str() + " w " +
                             vw.shape_str());
  const int n = vx.dim(0), cin = vx.dim(1), h = vx.dim(2), wd = vx.dim(3);
  const int cout = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
  const int ho = (h + 2 * pad_h - kh) / stride_h + 1;
  const int wo = (wd + 2 * pad_w - kw) / stride_w + 1;
  if (ho < 1 || wo < 1) throw InputTooSmallError("conv2d: output would be empty");

  const std::int64_t ckk = static_cast<std::int64_t>(cin) * kh * kw;
  const std::int64_t area = static_cast<std::int64_t>(ho) * wo;
  Tensor out({n, cout, ho, wo});
  {
    ConstMatMap wmat(vw.data(), cout, ckk);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      std::vector<double> cols(static_cast<std::size_t>(ckk * area));
      im2col(vx.data() + static_cast<std::int64_t>(i) * cin * h * wd, cin, h, wd, ho,
             wo, kh, kw, stride_h, stride_w, pad_h, pad_w, cols.data());
      MatMap(out.data() + static_cast<std::int64_t>(i) * cout * area, cout, area)
          .noalias() = wmat * ConstMatMap(cols.data(), ckk, area);
    }
  }

  auto bwd = [n, cin, h, wd, cout, kh, kw, stride_h, stride_w, pad_h, pad_w, ho, wo,
              ckk, area](Node& nd) {
    const Tensor& vx2 = nd.inputs[0]->value;
    const Tensor& vw2 = nd.inputs[1]->value;
    const bool need_dx = nd.inputs[0]->requires_grad;
    const bool need_dw = nd.inputs[1]->requires_grad;

    // per-sample weight-gradient buffers keep the reduction order fixed
    std::vector<Tensor> dw_parts;
    if (need_dw) dw_parts.assign(static_cast<std::size_t>(n), Tensor());
    Tensor* dx = nullptr;
    if (need_dx) dx = &nd.inputs[0]->ensure_grad();

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      std::vector<double> cols(static_cast<std::size_t>(ckk * area));
      im2col(vx2.data() + static_cast<std::int64_t>(i) * cin * h * wd, cin, h, wd, ho,
             wo, kh, kw, stride_h, stride_w, pad_h, pad_w, cols.data());
      ConstMatMap dy(nd.grad.data() + static_cast<std::int64_t>(i) * cout * area, cout,
                     area);
      if (need_dw) {
        Tensor part({cout, static_cast<int>(ckk)});
        MatMap(part.data(), cout, ckk).noalias() =
            dy * ConstMatMap(cols.data(), ckk, area).transpose();
        dw_parts[static_cast<std::size_t>(i)] = std::move(part);
      }
      if (need_dx) {
        std::vector<double> cols_g(static_cast<std::size_t>(ckk * area));
        MatMap(cols_g.data(), ckk, area).noalias() =
            ConstMatMap(vw2.data(), cout, ckk).transpose() * dy;
        col2im(cols_g.data(), cin, h, wd, ho, wo, kh, kw, stride_h, stride_w, pad_h,
               pad_w, dx->data() + static_cast<std::int64_t>(i) * cin * h * wd);
      }
    }
    if (need_dw) {
      Tensor& gw = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const Tensor& part = dw_parts[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < gw.numel(); ++j) gw[j] += part[j];
      }
    }
  };
  return Var(make_node(std::move(out), {x.node(), w.node()}, std::move(bwd)));
}

Var conv_transpose2d(const Var& x, const Var& w, int stride, int pad) {
  const Tensor& vx = x.value();
  const Tensor& vw = w.value();
  if (vx.rank() != 4 || vw.rank() != 4 || vx.dim(1) != vw.dim(0))
    throw ShapeMismatchError("conv_transpose2d: bad shapes " + vx.shape_str() + " w " +
                             vw.shape_str());
  const int n = vx.dim(0), cin = vx.dim(1), h = vx.dim(2), wd = vx.dim(3);
  const int cout = vw.dim(1), kh = vw.dim(2), kw = vw.dim(3);
  const int ho = (h - 1) * stride - 2 * pad + kh;
  const int wo = (wd - 1) * stride - 2 * pad + kw;
  if (ho < 1 || wo < 1) throw InputTooSmallError("conv_transpose2d: output would be empty");

  const std::int64_t ckk = static_cast<std::int64_t>(cout) * kh * kw;
  const std::int64_t in_area = static_cast<std::int64_t>(h) * wd;
  const std::int64_t out_area = static_cast<std::int64_t>(ho) * wo;
  Tensor out({n, cout, ho, wo});
  {
    ConstMatMap wmat(vw.data(), cin, ckk);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      std::vector<double> cols(static_cast<std::size_t>(ckk * in_area));
      MatMap(cols.data(), ckk, in_area).noalias() =
          wmat.transpose() *
          ConstMatMap(vx.data() + static_cast<std::int64_t>(i) * cin * in_area, cin,
                      in_area);
      col2im(cols.data(), cout, ho, wo, h, wd, kh, kw, stride, stride, pad, pad,
             out.data() + static_cast<std::int64_t>(i) * cout * out_area);
    }
  }

  auto bwd = [n, cin, h, wd, cout, kh, kw, stride, pad, ho, wo, ckk, in_area,
              out_area](Node& nd) {
    const Tensor& vx2 = nd.inputs[0]->value;
    const Tensor& vw2 = nd.inputs[1]->value;
    const bool need_dx = nd.inputs[0]->requires_grad;
    const bool need_dw = nd.inputs[1]->requires_grad;

    std::vector<Tensor> dw_parts;
    if (need_dw) dw_parts.assign(static_cast<std::size_t>(n), Tensor());
    Tensor* dx = nullptr;
    if (need_dx) dx = &nd.inputs[0]->ensure_grad();

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      // patches of the output gradient at every input position
      std::vector<double> cols(static_cast<std::size_t>(ckk * in_area));
      im2col(nd.grad.data() + static_cast<std::int64_t>(i) * cout * out_area, cout, ho,
             wo, h, wd, kh, kw, stride, stride, pad, pad, cols.data());
      if (need_dx) {
        MatMap(dx->data() + static_cast<std::int64_t>(i) * cin * in_area, cin, in_area)
            .noalias() += ConstMatMap(vw2.data(), cin, ckk) *
                          ConstMatMap(cols.data(), ckk, in_area);
      }
      if (need_dw) {
        Tensor part({cin, static_cast<int>(ckk)});
        MatMap(part.data(), cin, ckk).noalias() =
            ConstMatMap(vx2.data() + static_cast<std::int64_t>(i) * cin * in_area, cin,
                        in_area) *
            ConstMatMap(cols.data(), ckk, in_area).transpose();
        dw_parts[static_cast<std::size_t>(i)] = std::move(part);
      }
    }
    if (need_dw) {
      Tensor& gw = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const Tensor& part = dw_parts[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < gw.numel(); ++j) gw[j] += part[j];
      }
    }
  };
  return Var(make_node(std::move(out), {x.node(), w.node()}, std::move(bwd)));
}

Var add_channel_bias(const Var& x, const Var& b) {
  const Tensor& vx = x.value();
  const Tensor& vb = b.value();
  if (vx.rank() != 4 || vb.numel() != vx.dim(1))
    throw ShapeMismatchError("add_channel_bias: bias size mismatch");
  const int n = vx.dim(0), c = vx.dim(1);
  const std::int64_t area = static_cast<std::int64_t>(vx.dim(2)) * vx.dim(3);
  Tensor out = vx;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      double* p = out.data() + (static_cast<std::int64_t>(i) * c + j) * area;
      const double bj = vb[j];
      for (std::int64_t k = 0; k < area; ++k) p[k] += bj;
    }
  return Var(make_node(std::move(out), {x.node(), b.node()}, [n, c, area](Node& nd) {
    if (nd.inputs[0]->requires_grad) accumulate(*nd.inputs[0], nd.grad);
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
          const double* p = nd.grad.data() + (static_cast<std::int64_t>(i) * c + j) * area;
          double s = 0.0;
          for (std::int64_t k = 0; k < area; ++k) s += p[k];
          g[j] += s;
        }
    }
  }));
}

Var maxpool2d(const Var& x, int kh, int kw, int sh, int sw) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4) throw ShapeMismatchError("maxpool2d: input must be 4D");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  const int ho = (h - kh) / sh + 1, wo = (w - kw) / sw + 1;
  if (ho < 1 || wo < 1) throw InputTooSmallError("maxpool2d: output would be empty");
  Tensor out({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(out.numel()));
  std::int64_t oi = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double* plane = vx.data() + (static_cast<std::int64_t>(i) * c + j) * h * w;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          std::int64_t best_idx = 0;
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const std::int64_t idx =
                  static_cast<std::int64_t>(oy * sh + ky) * w + (ox * sw + kx);
              if (plane[idx] > best) {
                best = plane[idx];
                best_idx = idx;
              }
            }
          out[oi] = best;
          (*argmax)[static_cast<std::size_t>(oi)] =
              (static_cast<std::int64_t>(i) * c + j) * h * w + best_idx;
        }
    }
  return Var(make_node(std::move(out), {x.node()}, [argmax](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (std::int64_t i = 0; i < nd.grad.numel(); ++i)
      g[(*argmax)[static_cast<std::size_t>(i)]] += nd.grad[i];
  }));
}

Var spatial_mean(const Var& x) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4) throw ShapeMismatchError("spatial_mean: input must be 4D");
  const int n = vx.dim(0), c = vx.dim(1);
  const std::int64_t area = static_cast<std::int64_t>(vx.dim(2)) * vx.dim(3);
  const double inv = 1.0 / static_cast<double>(area);
  Tensor out({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double* p = vx.data() + (static_cast<std::int64_t>(i) * c + j) * area;
      double s = 0.0;
      for (std::int64_t a = 0; a < area; ++a) s += p[a];
      out[static_cast<std::int64_t>(i) * c + j] = s * inv;
    }
  return Var(make_node(std::move(out), {x.node()}, [n, c, area, inv](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const double d = nd.grad[static_cast<std::int64_t>(i) * c + j] * inv;
        double* p = g.data() + (static_cast<std::int64_t>(i) * c + j) * area;
        for (std::int64_t a = 0; a < area; ++a) p[a] += d;
      }
  }));
}

Var feature_map_to_seq(const Var& x) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4 || vx.dim(2) != 1)
    throw ShapeMismatchError("feature_map_to_seq: expected (N,C,1,W)");
  const int n = vx.dim(0), c = vx.dim(1), w = vx.dim(3);
  Tensor out({n, w, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      for (int t = 0; t < w; ++t)
        out[(static_cast<std::int64_t>(i) * w + t) * c + j] =
            vx[(static_cast<std::int64_t>(i) * c + j) * w + t];
  return Var(make_node(std::move(out), {x.node()}, [n, c, w](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j)
        for (int t = 0; t < w; ++t)
          g[(static_cast<std::int64_t>(i) * c + j) * w + t] +=
              nd.grad[(static_cast<std::int64_t>(i) * w + t) * c + j];
  }));
}

Var height_mean(const Var& x) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4) throw ShapeMismatchError("height_mean: input must be 4D");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  const double inv = 1.0 / h;
  Tensor out({n, c, 1, w});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      for (int xw = 0; xw < w; ++xw) {
        double s = 0.0;
        for (int y = 0; y < h; ++y)
          s += vx[((static_cast<std::int64_t>(i) * c + j) * h + y) * w + xw];
        out[(static_cast<std::int64_t>(i) * c + j) * w + xw] = s * inv;
      }
  return Var(make_node(std::move(out), {x.node()}, [n, c, h, w, inv](Node& nd) {
    if (!nd.inputs[0]->requires_grad) return;
    Tensor& g = nd.inputs[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j)
        for (int xw = 0; xw < w; ++xw) {
          const double d = nd.grad[(static_cast<std::int64_t>(i) * c + j) * w + xw] * inv;
          for (int y = 0; y < h; ++y)
            g[((static_cast<std::int64_t>(i) * c + j) * h + y) * w + xw] += d;
        }
  }));
}

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, double eps,
                Tensor* batch_mean, Tensor* batch_var) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4) throw ShapeMismatchError("batchnorm2d: input must be 4D");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  if (gamma.value().numel() != c || beta.value().numel() != c)
    throw ShapeMismatchError("batchnorm2d: parameter size mismatch");
  const std::int64_t area = static_cast<std::int64_t>(h) * w;
  const std::int64_t m = static_cast<std::int64_t>(n) * area;
  const double inv_m = 1.0 / static_cast<double>(m);

  Tensor mean({c}), var({c});
  for (int j = 0; j < c; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* p = vx.data() + (static_cast<std::int64_t>(i) * c + j) * area;
      for (std::int64_t a = 0; a < area; ++a) s += p[a];
    }
    mean[j] = s * inv_m;
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* p = vx.data() + (static_cast<std::int64_t>(i) * c + j) * area;
      for (std::int64_t a = 0; a < area; ++a) {
        const double d = p[a] - mean[j];
        v += d * d;
      }
    }
    var[j] = v * inv_m;
  }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;

  auto xhat = std::make_shared<Tensor>(vx.shape());
  auto inv_std = std::make_shared<Tensor>(std::vector<int>{c});
  Tensor out(vx.shape());
  for (int j = 0; j < c; ++j) {
    (*inv_std)[j] = 1.0 / std::sqrt(var[j] + eps);
    const double g = gamma.value()[j], b = beta.value()[j];
    for (int i = 0; i < n; ++i) {
      const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
      for (std::int64_t a = 0; a < area; ++a) {
        const double xh = (vx[off + a] - mean[j]) * (*inv_std)[j];
        (*xhat)[off + a] = xh;
        out[off + a] = g * xh + b;
      }
    }
  }

  auto bwd = [n, c, area, m, inv_m, xhat, inv_std](Node& nd) {
    const Tensor& vgamma = nd.inputs[1]->value;
    // per-channel sums of dy and dy*xhat drive all three gradients
    Tensor sum_dy({c}), sum_dy_xhat({c});
    for (int j = 0; j < c; ++j) {
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
        for (std::int64_t a = 0; a < area; ++a) {
          s1 += nd.grad[off + a];
          s2 += nd.grad[off + a] * (*xhat)[off + a];
        }
      }
      sum_dy[j] = s1;
      sum_dy_xhat[j] = s2;
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int j = 0; j < c; ++j) g[j] += sum_dy_xhat[j];
    }
    if (nd.inputs[2]->requires_grad) {
      Tensor& g = nd.inputs[2]->ensure_grad();
      for (int j = 0; j < c; ++j) g[j] += sum_dy[j];
    }
    if (nd.inputs[0]->requires_grad) {
      Tensor& g = nd.inputs[0]->ensure_grad();
      for (int j = 0; j < c; ++j) {
        const double k = vgamma[j] * (*inv_std)[j];
        for (int i = 0; i < n; ++i) {
          const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
          for (std::int64_t a = 0; a < area; ++a)
            g[off + a] += k * (nd.grad[off + a] - inv_m * sum_dy[j] -
                               inv_m * (*xhat)[off + a] * sum_dy_xhat[j]);
        }
      }
    }
    (void)m;
  };
  return Var(make_node(std::move(out), {x.node(), gamma.node(), beta.node()},
                       std::move(bwd)));
}

Var batchnorm2d_eval(const Var& x, const Var& gamma, const Var& beta,
                     const Tensor& mean, const Tensor& var, double eps) {
  const Tensor& vx = x.value();
  if (vx.rank() != 4) throw ShapeMismatchError("batchnorm2d_eval: input must be 4D");
  const int n = vx.dim(0), c = vx.dim(1);
  const std::int64_t area = static_cast<std::int64_t>(vx.dim(2)) * vx.dim(3);

  auto inv_std = std::make_shared<Tensor>(std::vector<int>{c});
  auto mu = std::make_shared<Tensor>(mean);
  for (int j = 0; j < c; ++j) (*inv_std)[j] = 1.0 / std::sqrt(var[j] + eps);

  Tensor out(vx.shape());
  for (int j = 0; j < c; ++j) {
    const double g = gamma.value()[j], b = beta.value()[j];
    for (int i = 0; i < n; ++i) {
      const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
      for (std::int64_t a = 0; a < area; ++a)
        out[off + a] = g * ((vx[off + a] - (*mu)[j]) * (*inv_std)[j]) + b;
    }
  }
  auto bwd = [n, c, area, inv_std, mu](Node& nd) {
    const Tensor& vx2 = nd.inputs[0]->value;
    const Tensor& vgamma = nd.inputs[1]->value;
    if (nd.inputs[0]->requires_grad) {
      Tensor& g = nd.inputs[0]->ensure_grad();
      for (int j = 0; j < c; ++j) {
        const double k = vgamma[j] * (*inv_std)[j];
        for (int i = 0; i < n; ++i) {
          const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
          for (std::int64_t a = 0; a < area; ++a) g[off + a] += k * nd.grad[off + a];
        }
      }
    }
    if (nd.inputs[1]->requires_grad) {
      Tensor& g = nd.inputs[1]->ensure_grad();
      for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
          for (std::int64_t a = 0; a < area; ++a)
            s += nd.grad[off + a] * (vx2[off + a] - (*mu)[j]) * (*inv_std)[j];
        }
        g[j] += s;
      }
    }
    if (nd.inputs[2]->requires_grad) {
      Tensor& g = nd.inputs[2]->ensure_grad();
      for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          const std::int64_t off = (static_cast<std::int64_t>(i) * c + j) * area;
          for (std::int64_t a = 0; a < area; ++a) s += nd.grad[off + a];
        }
        g[j] += s;
      }
    }
  };
  return Var(make_node(std::move(out), {x.node(), gamma.node(), beta.node()},
                       std::move(bwd)));
}

// ---------------------------------------------------------------------------
// bilinear grid sampling

Var grid_sample(const Var& x, const Var& grid) {
  const Tensor& vx = x.value();
  const Tensor& vg = grid.value();
  if (vx.rank() != 4 || vg.rank() != 4 || vg.dim(3) != 2 || vx.dim(0) != vg.dim(0))
    throw ShapeMismatchError("grid_sample: bad shapes");
  const int n = vx.dim(0), c = vx.dim(1), h = vx.dim(2), w = vx.dim(3);
  const int hg = vg.dim(1), wg = vg.dim(2);
  Tensor out({n, c, hg, wg});

  const std::int64_t grid_area = static_cast<std::int64_t>(hg) * wg;
  const std::int64_t img_area = static_cast<std::int64_t>(h) * w;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (std::int64_t p = 0; p < grid_area; ++p) {
      const double gx = vg[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 0];
      const double gy = vg[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 1];
      double px = gx * (w - 1), py = gy * (h - 1);
      px = std::clamp(px, 0.0, static_cast<double>(w - 1));
      py = std::clamp(py, 0.0, static_cast<double>(h - 1));
      const int x0 = std::min(static_cast<int>(px), w > 1 ? w - 2 : 0);
      const int y0 = std::min(static_cast<int>(py), h > 1 ? h - 2 : 0);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double tx = px - x0, ty = py - y0;
      for (int j = 0; j < c; ++j) {
        const double* plane = vx.data() + (static_cast<std::int64_t>(i) * c + j) * img_area;
        const double v00 = plane[static_cast<std::int64_t>(y0) * w + x0];
        const double v01 = plane[static_cast<std::int64_t>(y0) * w + x1];
        const double v10 = plane[static_cast<std::int64_t>(y1) * w + x0];
        const double v11 = plane[static_cast<std::int64_t>(y1) * w + x1];
        out[(static_cast<std::int64_t>(i) * c + j) * grid_area + p] =
            (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
      }
    }
  }

  auto bwd = [n, c, h, w, hg, wg, grid_area, img_area](Node& nd) {
    const Tensor& vx2 = nd.inputs[0]->value;
    const Tensor& vg2 = nd.inputs[1]->value;
    const bool need_dx = nd.inputs[0]->requires_grad;
    const bool need_dg = nd.inputs[1]->requires_grad;
    Tensor* dx = need_dx ? &nd.inputs[0]->ensure_grad() : nullptr;
    Tensor* dg = need_dg ? &nd.inputs[1]->ensure_grad() : nullptr;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      for (std::int64_t p = 0; p < grid_area; ++p) {
        const double gx = vg2[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 0];
        const double gy = vg2[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 1];
        double px = gx * (w - 1), py = gy * (h - 1);
        const bool x_in = px > 0.0 && px < static_cast<double>(w - 1);
        const bool y_in = py > 0.0 && py < static_cast<double>(h - 1);
        px = std::clamp(px, 0.0, static_cast<double>(w - 1));
        py = std::clamp(py, 0.0, static_cast<double>(h - 1));
        const int x0 = std::min(static_cast<int>(px), w > 1 ? w - 2 : 0);
        const int y0 = std::min(static_cast<int>(py), h > 1 ? h - 2 : 0);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double tx = px - x0, ty = py - y0;
        double dpx = 0.0, dpy = 0.0;
        for (int j = 0; j < c; ++j) {
          const std::int64_t plane_off = (static_cast<std::int64_t>(i) * c + j) * img_area;
          const double* plane = vx2.data() + plane_off;
          const double dy_out =
              nd.grad[(static_cast<std::int64_t>(i) * c + j) * grid_area + p];
          const double v00 = plane[static_cast<std::int64_t>(y0) * w + x0];
          const double v01 = plane[static_cast<std::int64_t>(y0) * w + x1];
          const double v10 = plane[static_cast<std::int64_t>(y1) * w + x0];
          const double v11 = plane[static_cast<std::int64_t>(y1) * w + x1];
          if (need_dx) {
            double* gplane = dx->data() + plane_off;
            gplane[static_cast<std::int64_t>(y0) * w + x0] += dy_out * (1 - ty) * (1 - tx);
            gplane[static_cast<std::int64_t>(y0) * w + x1] += dy_out * (1 - ty) * tx;
            gplane[static_cast<std::int64_t>(y1) * w + x0] += dy_out * ty * (1 - tx);
            gplane[static_cast<std::int64_t>(y1) * w + x1] += dy_out * ty * tx;
          }
          if (need_dg) {
            dpx += dy_out * ((1 - ty) * (v01 - v00) + ty * (v11 - v10));
            dpy += dy_out * ((1 - tx) * (v10 - v00) + tx * (v11 - v01));
          }
        }
        if (need_dg) {
          // clamped samples are constant in the clamped coordinate
          (*dg)[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 0] +=
              x_in ? dpx * (w - 1) : 0.0;
          (*dg)[(static_cast<std::int64_t>(i) * grid_area + p) * 2 + 1] +=
              y_in ? dpy * (h - 1) : 0.0;
        }
      }
    }
  };
  return Var(make_node(std::move(out), {x.node(), grid.node()}, std::move(bwd)));
}

Var custom_op(Tensor value, std::vector<NodePtr> inputs,
              std::function<void(Node&)> backward) {
  return Var(make_node(std::move(value), std::move(inputs), std::move(backward)));
}

Tensor make_resize_grid(int n, int in_h, int in_w, int out_h, int out_w) {
  (void)in_h;
  (void)in_w;
  Tensor grid({n, out_h, out_w, 2});
  const double sy = out_h > 1 ? 1.0 / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? 1.0 / (out_w - 1) : 0.0;
  std::int64_t i = 0;
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        grid[i++] = x * sx;
        grid[i++] = y * sy;
      }
  return grid;
}

}  // namespace ag
}  // namespace textsr
