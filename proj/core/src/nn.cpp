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

#include "textsr/nn.hpp"

#include <cmath>
#include <cstring>

#include "textsr/errors.hpp"

namespace textsr {
namespace nn {

ag::Var ParamSet::create(const std::string& name, Tensor init) {
  if (params_.count(name) || buffers_.count(name))
    throw ParseError("duplicate parameter name: " + name);
  ag::Var v = ag::Var::leaf(std::move(init), trainable_);
  params_.emplace(name, v);
  order_.push_back(name);
  return v;
}

Tensor& ParamSet::create_buffer(const std::string& name, Tensor init) {
  if (params_.count(name) || buffers_.count(name))
    throw ParseError("duplicate buffer name: " + name);
  auto [it, ok] = buffers_.emplace(name, std::move(init));
  (void)ok;
  buffer_order_.push_back(name);
  return it->second;
}

ag::Var ParamSet::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParseError("no such parameter: " + name);
  return it->second;
}

Tensor& ParamSet::buffer(const std::string& name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw ParseError("no such buffer: " + name);
  return it->second;
}

std::vector<std::string> ParamSet::param_names() const { return order_; }
std::vector<std::string> ParamSet::buffer_names() const { return buffer_order_; }

void ParamSet::set_trainable(bool trainable) {
  trainable_ = trainable;
  for (auto& [name, var] : params_) var.node()->requires_grad = trainable;
}

void ParamSet::zero_grads() {
  for (auto& [name, var] : params_) var.zero_grad();
}

std::int64_t ParamSet::param_count() const {
  std::int64_t n = 0;
  for (const auto& [name, var] : params_) n += var.value().numel();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& [name, var] : params_)
    if (!var.value().all_finite()) return false;
  for (const auto& [name, buf] : buffers_)
    if (!buf.all_finite()) return false;
  return true;
}

std::uint64_t ParamSet::state_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const Tensor& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t n = static_cast<std::size_t>(t.numel()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& name : order_) feed(params_.at(name).value());
  for (const auto& name : buffer_order_) feed(buffers_.at(name));
  return h;
}

void ParamSet::collect(std::map<std::string, Tensor>& out,
                       const std::string& prefix) const {
  for (const auto& name : order_) out[prefix + name] = params_.at(name).value();
  for (const auto& name : buffer_order_) out[prefix + name] = buffers_.at(name);
}

void ParamSet::load(const std::map<std::string, Tensor>& in, const std::string& prefix) {
  auto fetch = [&](const std::string& name) -> const Tensor& {
    auto it = in.find(prefix + name);
    if (it == in.end())
      throw CheckpointMismatchError("checkpoint is missing tensor: " + prefix + name);
    return it->second;
  };
  for (const auto& name : order_) {
    ag::Var var = params_.at(name);
    const Tensor& t = fetch(name);
    if (!t.same_shape(var.value()))
      throw CheckpointMismatchError("shape mismatch for " + prefix + name + ": " +
                                    t.shape_str() + " vs " + var.value().shape_str());
    var.mutable_value() = t;
  }
  for (const auto& name : buffer_order_) {
    Tensor& buf = buffers_.at(name);
    const Tensor& t = fetch(name);
    if (!t.same_shape(buf))
      throw CheckpointMismatchError("shape mismatch for buffer " + prefix + name);
    buf = t;
  }
}

Tensor Init::gaussian(const std::vector<int>& shape) const {
  Tensor t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng->normal(0.0, stddev);
  return t;
}

Conv2d::Conv2d(ParamSet& ps, const std::string& name, int cin, int cout, int kh,
               int kw, int stride_h, int stride_w, int pad_h, int pad_w,
               const Init& init)
    : stride_h_(stride_h), stride_w_(stride_w), pad_h_(pad_h), pad_w_(pad_w) {
  w_ = ps.create(name + ".w", init.gaussian({cout, cin, kh, kw}));
  b_ = ps.create(name + ".b", Tensor::zeros({cout}));
}

Conv2d::Conv2d(ParamSet& ps, const std::string& name, int cin, int cout, int k,
               int stride, int pad, const Init& init)
    : Conv2d(ps, name, cin, cout, k, k, stride, stride, pad, pad, init) {}

ag::Var Conv2d::forward(const ag::Var& x) const {
  return ag::add_channel_bias(ag::conv2d(x, w_, stride_h_, stride_w_, pad_h_, pad_w_),
                              b_);
}

ConvTranspose2d::ConvTranspose2d(ParamSet& ps, const std::string& name, int cin,
                                 int cout, int k, int stride, int pad, const Init& init)
    : stride_(stride), pad_(pad) {
  w_ = ps.create(name + ".w", init.gaussian({cin, cout, k, k}));
  b_ = ps.create(name + ".b", Tensor::zeros({cout}));
}

ag::Var ConvTranspose2d::forward(const ag::Var& x) const {
  return ag::add_channel_bias(ag::conv_transpose2d(x, w_, stride_, pad_), b_);
}

BatchNorm2d::BatchNorm2d(ParamSet& ps, const std::string& name, int channels) {
  gamma_ = ps.create(name + ".gamma", Tensor::full({channels}, 1.0));
  beta_ = ps.create(name + ".beta", Tensor::zeros({channels}));
  running_mean_ = &ps.create_buffer(name + ".running_mean", Tensor::zeros({channels}));
  running_var_ = &ps.create_buffer(name + ".running_var", Tensor::full({channels}, 1.0));
}

ag::Var BatchNorm2d::forward(const ag::Var& x, bool training) const {
  if (!training)
    return ag::batchnorm2d_eval(x, gamma_, beta_, *running_mean_, *running_var_, kEps);
  Tensor mean, var;
  ag::Var y = ag::batchnorm2d(x, gamma_, beta_, kEps, &mean, &var);
  for (std::int64_t i = 0; i < mean.numel(); ++i) {
    (*running_mean_)[i] = (1.0 - kMomentum) * (*running_mean_)[i] + kMomentum * mean[i];
    (*running_var_)[i] = (1.0 - kMomentum) * (*running_var_)[i] + kMomentum * var[i];
  }
  return y;
}

Linear::Linear(ParamSet& ps, const std::string& name, int in, int out,
               const Init& init) {
  w_ = ps.create(name + ".w", init.gaussian({in, out}));
  b_ = ps.create(name + ".b", Tensor::zeros({out}));
}

ag::Var Linear::forward(const ag::Var& x) const {
  return ag::add_row_bias(ag::matmul(x, w_), b_);
}

LSTMCell::LSTMCell(ParamSet& ps, const std::string& name, int input, int hidden,
                   const Init& init)
    : hidden_(hidden) {
  w_ih_ = ps.create(name + ".w_ih", init.gaussian({input, 4 * hidden}));
  w_hh_ = ps.create(name + ".w_hh", init.gaussian({hidden, 4 * hidden}));
  b_ = ps.create(name + ".b", Tensor::zeros({4 * hidden}));
}

std::pair<ag::Var, ag::Var> LSTMCell::step(const ag::Var& x, const ag::Var& h,
                                           const ag::Var& c) const {
  using namespace ag;
  Var gates = add_row_bias(add(matmul(x, w_ih_), matmul(h, w_hh_)), b_);
  const int hd = hidden_;
  Var i = sigmoid(col_slice(gates, 0, hd));
  Var f = sigmoid(col_slice(gates, hd, 2 * hd));
  Var g = tanh_op(col_slice(gates, 2 * hd, 3 * hd));
  Var o = sigmoid(col_slice(gates, 3 * hd, 4 * hd));
  Var c_next = add(mul(f, c), mul(i, g));
  Var h_next = mul(o, tanh_op(c_next));
  return {h_next, c_next};
}

void Adam::step(ParamSet& ps, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& name : ps.param_names()) {
    ag::Var var = ps.param(name);
    Tensor& value = var.mutable_value();
    auto [it, inserted] = moments_.try_emplace(
        name, Tensor::zeros(value.shape()), Tensor::zeros(value.shape()));
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    if (!inserted && !m.same_shape(value))
      throw CheckpointMismatchError("optimizer moment shape mismatch for " + name);
    const bool has_grad = var.has_grad();
    const Tensor* g = has_grad ? &var.grad() : nullptr;
    for (std::int64_t i = 0; i < value.numel(); ++i) {
      const double gi = has_grad ? (*g)[i] : 0.0;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::collect(std::map<std::string, Tensor>& out, const std::string& prefix) const {
  out[prefix + "__step"] = Tensor::scalar(static_cast<double>(t_));
  for (const auto& [name, mv] : moments_) {
    out[prefix + name + ".m"] = mv.first;
    out[prefix + name + ".v"] = mv.second;
  }
}

void Adam::load(const std::map<std::string, Tensor>& in, const std::string& prefix) {
  auto it = in.find(prefix + "__step");
  if (it == in.end())
    throw CheckpointMismatchError("optimizer state missing: " + prefix + "__step");
  t_ = static_cast<std::int64_t>(it->second[0]);
  moments_.clear();
  const std::string mkey = ".m", vkey = ".v";
  for (const auto& [key, tensor] : in) {
    if (key.rfind(prefix, 0) != 0) continue;
    const std::string rest = key.substr(prefix.size());
    if (rest == "__step") continue;
    if (rest.size() > 2 && rest.compare(rest.size() - 2, 2, mkey) == 0) {
      const std::string name = rest.substr(0, rest.size() - 2);
      auto vit = in.find(prefix + name + vkey);
      if (vit == in.end())
        throw CheckpointMismatchError("optimizer state missing: " + prefix + name + vkey);
      moments_[name] = {tensor, vit->second};
    }
  }
}

}  // namespace nn
}  // namespace textsr
