#pragma once

#include <functional>
#include <string>
#include <utility>

#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace rwr {

// Called with (dotted name, value, grad) for every trainable tensor.
using ParamVisitor =
    std::function<void(const std::string&, Tensor&, Tensor&)>;
// Called with (dotted name, value) for non-trainable state (BN running stats).
using BufferVisitor = std::function<void(const std::string&, Tensor&)>;

// Layers cache their forward input and accumulate into grads on backward;
// zero_grad resets the accumulators.

class Conv1dLayer {
 public:
  Conv1dLayer(std::string name, int64_t cin, int64_t cout, int64_t k,
              ConvSpec spec);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out, bool need_d_input = true);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  int64_t param_count() const { return weight_.numel() + bias_.numel(); }
  const Tensor& weight() const { return weight_; }
  const ConvSpec& spec() const { return spec_; }

 private:
  std::string name_;
  ConvSpec spec_;
  Tensor weight_, bias_, d_weight_, d_bias_;
  Tensor x_;
};

class Conv2dLayer {
 public:
  Conv2dLayer(std::string name, int64_t cin, int64_t cout, int64_t kh,
              int64_t kw, int stride, int padding);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out, bool need_d_input = true);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  int64_t param_count() const { return weight_.numel() + bias_.numel(); }
  const Tensor& weight() const { return weight_; }

 private:
  std::string name_;
  int stride_, padding_;
  Tensor weight_, bias_, d_weight_, d_bias_;
  Tensor x_;
};

class BnLayer {
 public:
  BnLayer(std::string name, int64_t channels);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training) { state_.training = training; }
  int64_t param_count() const {
    return state_.gamma.numel() + state_.beta.numel();
  }
  BnState& state() { return state_; }

 private:
  std::string name_;
  BnState state_;
  Tensor d_gamma_, d_beta_;
  Tensor x_;
};

class ReluLayer {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);

 private:
  Tensor x_;
};

class MaxPool1dLayer {
 public:
  explicit MaxPool1dLayer(int size) : size_(size) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);

 private:
  int size_;
  Tensor x_;
};

class AdaptiveAvgPoolLayer {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);

 private:
  Tensor x_;
};

class LinearLayer {
 public:
  LinearLayer(std::string name, int64_t din, int64_t dout);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out, bool need_d_input = true);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  int64_t param_count() const { return weight_.numel() + bias_.numel(); }

 private:
  std::string name_;
  Tensor weight_, bias_, d_weight_, d_bias_;
  Tensor x_;
};

// grad += delta, used by all layers to accumulate across backward calls.
void accumulate(Tensor& grad, const Tensor& delta);

// Elementwise sum of two same-shape tensors (residual joins).
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace rwr
