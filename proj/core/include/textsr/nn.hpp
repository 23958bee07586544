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

#ifndef TEXTSR_NN_HPP_
#define TEXTSR_NN_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "textsr/autograd.hpp"
#include "textsr/rng.hpp"
#include "textsr/tensor.hpp"

namespace textsr {
namespace nn {

// Named, shape-checked parameter collection with a trainability flag.
// Parameters take part in gradients and optimizer steps; buffers (batch
// norm running statistics) are plain tensors that ride along in
// checkpoints and state hashes.
class ParamSet {
 public:
  ag::Var create(const std::string& name, Tensor init);
  Tensor& create_buffer(const std::string& name, Tensor init);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  ag::Var param(const std::string& name) const;
  Tensor& buffer(const std::string& name);

  std::vector<std::string> param_names() const;  // creation order
  std::vector<std::string> buffer_names() const;

  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable);

  void zero_grads();
  std::int64_t param_count() const;
  bool all_finite() const;

  // FNV-1a over parameter and buffer bytes in creation order.
  std::uint64_t state_hash() const;

  // Flat snapshots for the checkpoint archive.
  void collect(std::map<std::string, Tensor>& out, const std::string& prefix) const;
  // Loads values in place (module-held handles keep pointing at the same
  // nodes). Missing or shape-mismatched entries raise CheckpointMismatch.
  void load(const std::map<std::string, Tensor>& in, const std::string& prefix);

 private:
  std::vector<std::string> order_;
  std::vector<std::string> buffer_order_;
  std::map<std::string, ag::Var> params_;
  std::map<std::string, Tensor> buffers_;
  bool trainable_ = true;
};

// Shared weight-init policy: kernels and dense weights from a zero-mean
// Gaussian with std 0.02, biases zero, norm scales one.
struct Init {
  Rng* rng;
  double stddev = 0.02;
  Tensor gaussian(const std::vector<int>& shape) const;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamSet& ps, const std::string& name, int cin, int cout, int kh, int kw,
         int stride_h, int stride_w, int pad_h, int pad_w, const Init& init);
  // square kernel, symmetric stride/pad
  Conv2d(ParamSet& ps, const std::string& name, int cin, int cout, int k, int stride,
         int pad, const Init& init);
  ag::Var forward(const ag::Var& x) const;

 private:
  ag::Var w_, b_;
  int stride_h_ = 1, stride_w_ = 1, pad_h_ = 0, pad_w_ = 0;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(ParamSet& ps, const std::string& name, int cin, int cout, int k,
                  int stride, int pad, const Init& init);
  ag::Var forward(const ag::Var& x) const;

 private:
  ag::Var w_, b_;
  int stride_ = 2, pad_ = 1;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(ParamSet& ps, const std::string& name, int channels);
  // Training mode normalizes with batch statistics and updates the running
  // averages (momentum 0.1); eval mode uses the stored averages.
  ag::Var forward(const ag::Var& x, bool training) const;

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

 private:
  ag::Var gamma_, beta_;
  Tensor* running_mean_ = nullptr;
  Tensor* running_var_ = nullptr;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamSet& ps, const std::string& name, int in, int out, const Init& init);
  ag::Var forward(const ag::Var& x) const;  // (N,in) -> (N,out)
  ag::Var weight() const { return w_; }
  ag::Var bias() const { return b_; }

 private:
  ag::Var w_, b_;
};

// Single-direction LSTM cell; gate layout [input|forget|cell|output].
class LSTMCell {
 public:
  LSTMCell() = default;
  LSTMCell(ParamSet& ps, const std::string& name, int input, int hidden,
           const Init& init);
  // returns (h', c')
  std::pair<ag::Var, ag::Var> step(const ag::Var& x, const ag::Var& h,
                                   const ag::Var& c) const;
  int hidden() const { return hidden_; }

 private:
  ag::Var w_ih_, w_hh_, b_;
  int hidden_ = 0;
};

// Adam with bias correction; moments are keyed by parameter name and
// serialize into training checkpoints.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies accumulated gradients to every parameter of the set. Parameters
  // without an accumulated gradient are treated as zero-gradient.
  void step(ParamSet& ps, double lr);

  std::int64_t steps() const { return t_; }
  void collect(std::map<std::string, Tensor>& out, const std::string& prefix) const;
  void load(const std::map<std::string, Tensor>& in, const std::string& prefix);

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

}  // namespace nn
}  // namespace textsr

#endif  // TEXTSR_NN_HPP_
