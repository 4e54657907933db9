#include "model/layers.hpp"

#include "common/error.hpp"

namespace rwr {
namespace {

void require_cached(const Tensor& x, const std::string& name) {
  if (x.empty()) {
    throw Error("layer '" + name + "': backward called before forward");
  }
}

}  // namespace

void accumulate(Tensor& grad, const Tensor& delta) {
  if (!grad.same_shape(delta)) {
    throw Error("gradient accumulation shape mismatch: " + grad.shape_str() +
                " vs " + delta.shape_str());
  }
  float* __restrict__ g = grad.data();
  const float* __restrict__ d = delta.data();
  const int64_t n = grad.numel();
  for (int64_t i = 0; i < n; ++i) g[i] += d[i];
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw Error("elementwise add shape mismatch: " + a.shape_str() + " vs " +
                b.shape_str());
  }
  Tensor out = a;
  float* __restrict__ o = out.data();
  const float* __restrict__ p = b.data();
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) o[i] += p[i];
  return out;
}

Conv1dLayer::Conv1dLayer(std::string name, int64_t cin, int64_t cout,
                         int64_t k, ConvSpec spec)
    : name_(std::move(name)),
      spec_(spec),
      weight_({cout, cin, k}),
      bias_({cout}),
      d_weight_({cout, cin, k}),
      d_bias_({cout}) {}

Tensor Conv1dLayer::forward(const Tensor& x) {
  x_ = x;
  return conv1d(x, weight_, bias_, spec_);
}

Tensor Conv1dLayer::backward(const Tensor& d_out, bool need_d_input) {
  require_cached(x_, name_);
  LayerGrads g = conv1d_backward(x_, weight_, spec_, d_out, need_d_input);
  accumulate(d_weight_, g.d_params[0]);
  accumulate(d_bias_, g.d_params[1]);
  return std::move(g.d_input);
}

void Conv1dLayer::zero_grad() {
  std::fill(d_weight_.vec().begin(), d_weight_.vec().end(), 0.0f);
  std::fill(d_bias_.vec().begin(), d_bias_.vec().end(), 0.0f);
}

void Conv1dLayer::visit_params(const ParamVisitor& fn) {
  fn(name_ + ".weight", weight_, d_weight_);
  fn(name_ + ".bias", bias_, d_bias_);
}

Conv2dLayer::Conv2dLayer(std::string name, int64_t cin, int64_t cout,
                         int64_t kh, int64_t kw, int stride, int padding)
    : name_(std::move(name)),
      stride_(stride),
      padding_(padding),
      weight_({cout, cin, kh, kw}),
      bias_({cout}),
      d_weight_({cout, cin, kh, kw}),
      d_bias_({cout}) {}

Tensor Conv2dLayer::forward(const Tensor& x) {
  x_ = x;
  return conv2d(x, weight_, bias_, stride_, padding_);
}

Tensor Conv2dLayer::backward(const Tensor& d_out, bool need_d_input) {
  require_cached(x_, name_);
  LayerGrads g = conv2d_backward(x_, weight_, stride_, padding_, d_out,
                                 need_d_input);
  accumulate(d_weight_, g.d_params[0]);
  accumulate(d_bias_, g.d_params[1]);
  return std::move(g.d_input);
}

void Conv2dLayer::zero_grad() {
  std::fill(d_weight_.vec().begin(), d_weight_.vec().end(), 0.0f);
  std::fill(d_bias_.vec().begin(), d_bias_.vec().end(), 0.0f);
}

void Conv2dLayer::visit_params(const ParamVisitor& fn) {
  fn(name_ + ".weight", weight_, d_weight_);
  fn(name_ + ".bias", bias_, d_bias_);
}

BnLayer::BnLayer(std::string name, int64_t channels)
    : name_(std::move(name)),
      state_(BnState::init(channels)),
      d_gamma_({channels}),
      d_beta_({channels}) {}

Tensor BnLayer::forward(const Tensor& x) {
  x_ = x;
  return batchnorm(x, state_);
}

Tensor BnLayer::backward(const Tensor& d_out) {
  require_cached(x_, name_);
  LayerGrads g = batchnorm_backward(x_, state_, d_out);
  accumulate(d_gamma_, g.d_params[0]);
  accumulate(d_beta_, g.d_params[1]);
  return std::move(g.d_input);
}

void BnLayer::zero_grad() {
  std::fill(d_gamma_.vec().begin(), d_gamma_.vec().end(), 0.0f);
  std::fill(d_beta_.vec().begin(), d_beta_.vec().end(), 0.0f);
}

void BnLayer::visit_params(const ParamVisitor& fn) {
  fn(name_ + ".gamma", state_.gamma, d_gamma_);
  fn(name_ + ".beta", state_.beta, d_beta_);
}

void BnLayer::visit_buffers(const BufferVisitor& fn) {
  fn(name_ + ".running_mean", state_.running_mean);
  fn(name_ + ".running_var", state_.running_var);
}

Tensor ReluLayer::forward(const Tensor& x) {
  x_ = x;
  return relu(x);
}

Tensor ReluLayer::backward(const Tensor& d_out) {
  require_cached(x_, "relu");
  return relu_backward(x_, d_out);
}

Tensor MaxPool1dLayer::forward(const Tensor& x) {
  x_ = x;
  return maxpool1d(x, size_);
}

Tensor MaxPool1dLayer::backward(const Tensor& d_out) {
  require_cached(x_, "maxpool1d");
  return maxpool1d_backward(x_, size_, d_out);
}

Tensor AdaptiveAvgPoolLayer::forward(const Tensor& x) {
  x_ = x;
  return adaptive_avg_pool_1x1(x);
}

Tensor AdaptiveAvgPoolLayer::backward(const Tensor& d_out) {
  require_cached(x_, "adaptive_avg_pool");
  return adaptive_avg_pool_1x1_backward(x_, d_out);
}

LinearLayer::LinearLayer(std::string name, int64_t din, int64_t dout)
    : name_(std::move(name)),
      weight_({dout, din}),
      bias_({dout}),
      d_weight_({dout, din}),
      d_bias_({dout}) {}

Tensor LinearLayer::forward(const Tensor& x) {
  x_ = x;
  return linear(x, weight_, bias_);
}

Tensor LinearLayer::backward(const Tensor& d_out, bool need_d_input) {
  require_cached(x_, name_);
  LayerGrads g = linear_backward(x_, weight_, d_out, need_d_input);
  accumulate(d_weight_, g.d_params[0]);
  accumulate(d_bias_, g.d_params[1]);
  return std::move(g.d_input);
}

void LinearLayer::zero_grad() {
  std::fill(d_weight_.vec().begin(), d_weight_.vec().end(), 0.0f);
  std::fill(d_bias_.vec().begin(), d_bias_.vec().end(), 0.0f);
}

void LinearLayer::visit_params(const ParamVisitor& fn) {
  fn(name_ + ".weight", weight_, d_weight_);
  fn(name_ + ".bias", bias_, d_bias_);
}

}  // namespace rwr
