#pragma once

#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace rwr {

// Gradients of one layer call: d_input matches the input shape, d_params match
// the layer's parameter shapes in a documented per-op order.
template <typename T>
struct LayerGradsT {
  TensorT<T> d_input;
  std::vector<TensorT<T>> d_params;
};

using LayerGrads = LayerGradsT<float>;

struct ConvSpec {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

// Output length of a 1-D convolution axis under zero padding.
int64_t conv_out_len(int64_t in_len, int64_t kernel, int stride, int padding, int dilation);

// input [B,Cin,L], weight [Cout,Cin,K], bias [Cout] -> [B,Cout,Lout].
// Cross-correlation convention (no kernel flip).
template <typename T>
TensorT<T> conv1d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  const ConvSpec& spec);

// d_params order: {d_weight, d_bias}.
template <typename T>
LayerGradsT<T> conv1d_backward(const TensorT<T>& input, const TensorT<T>& weight,
                               const ConvSpec& spec, const TensorT<T>& d_output,
                               bool need_d_input = true);

// input [B,Cin,H,W], weight [Cout,Cin,Kh,Kw], bias [Cout] -> [B,Cout,Hout,Wout].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride, int padding);

template <typename T>
LayerGradsT<T> conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, int stride,
                               int padding, const TensorT<T>& d_output, bool need_d_input = true);

// Per-channel affine normalization state. Fresh state is the identity
// normalizer: gamma 1, beta 0, running mean 0, running var 1.
template <typename T>
struct BnStateT {
  TensorT<T> gamma, beta;
  TensorT<T> running_mean, running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);
  bool training = true;

  static BnStateT init(int64_t channels) {
    BnStateT s;
    s.gamma = TensorT<T>::full({channels}, T(1));
    s.beta = TensorT<T>({channels});
    s.running_mean = TensorT<T>({channels});
    s.running_var = TensorT<T>::full({channels}, T(1));
    return s;
  }
};

using BnState = BnStateT<float>;

// input [B,C,...spatial]. Train mode normalizes by the biased batch statistics
// per channel and folds them into the running estimates:
//   running <- (1 - momentum) * running + momentum * batch.
// Eval mode normalizes by the running statistics and leaves state untouched.
template <typename T>
TensorT<T> batchnorm(const TensorT<T>& input, BnStateT<T>& state);

// Recomputes the batch statistics from `input`; `state` must be in the same
// mode as the forward call. d_params order: {d_gamma, d_beta}.
template <typename T>
LayerGradsT<T> batchnorm_backward(const TensorT<T>& input, const BnStateT<T>& state,
                                  const TensorT<T>& d_output);

// Non-overlapping window max over the last axis; L must divide by `size`.
template <typename T>
TensorT<T> maxpool1d(const TensorT<T>& input, int size);

// Routes each window's gradient to its first (lowest-index) maximum.
template <typename T>
TensorT<T> maxpool1d_backward(const TensorT<T>& input, int size, const TensorT<T>& d_output);

template <typename T>
TensorT<T> relu(const TensorT<T>& input);

// Subgradient 0 at exactly 0.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& input, const TensorT<T>& d_output);

// [B,C,H,W] -> [B,C], arithmetic mean over the spatial axes.
template <typename T>
TensorT<T> adaptive_avg_pool_1x1(const TensorT<T>& input);

template <typename T>
TensorT<T> adaptive_avg_pool_1x1_backward(const TensorT<T>& input, const TensorT<T>& d_output);

// input [B,Din], weight [Dout,Din], bias [Dout] -> [B,Dout].
template <typename T>
TensorT<T> linear(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias);

// d_params order: {d_weight, d_bias}.
template <typename T>
LayerGradsT<T> linear_backward(const TensorT<T>& input, const TensorT<T>& weight,
                               const TensorT<T>& d_output, bool need_d_input = true);

template <typename T>
struct CeResultT {
  T loss;                // mean over the batch
  TensorT<T> d_logits;   // (softmax - onehot) / B
};

// Mean negative log-softmax at the label index, computed in the
// log-sum-exp stabilized form. Labels index the class axis.
template <typename T>
CeResultT<T> cross_entropy_logits(const TensorT<T>& logits, std::span<const int> labels);

}  // namespace rwr
