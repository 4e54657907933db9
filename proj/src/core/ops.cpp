#include "core/ops.hpp"

#include <algorithm>
#include <cmath>

namespace rwr {

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

void check_conv_spec(const ConvSpec& s, int64_t kernel, int64_t in_len) {
  if (kernel < 1) throw Error("conv kernel size must be >= 1");
  if (s.stride < 1) throw Error("conv stride must be >= 1");
  if (s.dilation < 1) throw Error("conv dilation must be >= 1");
  if (s.padding < 0) throw Error("conv padding must be >= 0");
  if (in_len + 2 * s.padding < static_cast<int64_t>(s.dilation) * (kernel - 1) + 1) {
    throw Error("conv input length " + std::to_string(in_len) + " too short for kernel " +
                std::to_string(kernel) + " with padding " + std::to_string(s.padding) +
                " and dilation " + std::to_string(s.dilation));
  }
}

// Valid output range [t_lo, t_hi] for tap k: positions t*stride + k*dilation - padding in [0, L).
struct TapRange {
  int64_t lo, hi;
};

TapRange tap_range(int64_t k, const ConvSpec& s, int64_t in_len, int64_t out_len) {
  int64_t off = k * s.dilation - s.padding;
  TapRange r;
  r.lo = std::max<int64_t>(0, ceil_div(-off, s.stride));
  r.hi = std::min<int64_t>(out_len - 1, (in_len - 1 - off) / s.stride);
  return r;
}

}  // namespace

int64_t conv_out_len(int64_t in_len, int64_t kernel, int stride, int padding, int dilation) {
  return (in_len + 2 * padding - static_cast<int64_t>(dilation) * (kernel - 1) - 1) / stride + 1;
}

template <typename T>
TensorT<T> conv1d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  const ConvSpec& spec) {
  if (input.rank() != 3) throw Error("conv1d expects input [B,Cin,L], got " + input.shape_str());
  if (weight.rank() != 3) {
    throw Error("conv1d expects weight [Cout,Cin,K], got " + weight.shape_str());
  }
  const int64_t batch = input.dim(0), c_in = input.dim(1), in_len = input.dim(2);
  const int64_t c_out = weight.dim(0), kernel = weight.dim(2);
  if (weight.dim(1) != c_in) {
    throw Error("conv1d channel mismatch: input " + input.shape_str() + " vs weight " +
                weight.shape_str());
  }
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw Error("conv1d bias shape " + bias.shape_str() + " does not match Cout " +
                std::to_string(c_out));
  }
  check_conv_spec(spec, kernel, in_len);
  const int64_t out_len = conv_out_len(in_len, kernel, spec.stride, spec.padding, spec.dilation);

  TensorT<T> out({batch, c_out, out_len});
  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  T* __restrict__ out_p = out.data();
  const int64_t s = spec.stride;

  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      T* __restrict__ orow = out_p + (b * c_out + co) * out_len;
      std::fill(orow, orow + out_len, bias[co]);
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const T* __restrict__ irow = in_p + (b * c_in + ci) * in_len;
        const T* __restrict__ wrow = w_p + (co * c_in + ci) * kernel;
        for (int64_t k = 0; k < kernel; ++k) {
          const TapRange r = tap_range(k, spec, in_len, out_len);
          const T w = wrow[k];
          const int64_t off = k * spec.dilation - spec.padding;
          if (s == 1) {
            const T* __restrict__ src = irow + off;
            for (int64_t t = r.lo; t <= r.hi; ++t) orow[t] += w * src[t];
          } else {
            for (int64_t t = r.lo; t <= r.hi; ++t) orow[t] += w * irow[t * s + off];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
LayerGradsT<T> conv1d_backward(const TensorT<T>& input, const TensorT<T>& weight,
                               const ConvSpec& spec, const TensorT<T>& d_output,
                               bool need_d_input) {
  const int64_t batch = input.dim(0), c_in = input.dim(1), in_len = input.dim(2);
  const int64_t c_out = weight.dim(0), kernel = weight.dim(2);
  const int64_t out_len = conv_out_len(in_len, kernel, spec.stride, spec.padding, spec.dilation);
  if (d_output.rank() != 3 || d_output.dim(0) != batch || d_output.dim(1) != c_out ||
      d_output.dim(2) != out_len) {
    throw Error("conv1d_backward d_output shape " + d_output.shape_str() + " does not match [" +
                std::to_string(batch) + "," + std::to_string(c_out) + "," +
                std::to_string(out_len) + "]");
  }

  LayerGradsT<T> g;
  TensorT<T> d_weight({c_out, c_in, kernel});
  TensorT<T> d_bias({c_out});
  if (need_d_input) g.d_input = TensorT<T>({batch, c_in, in_len});

  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  const T* __restrict__ dy_p = d_output.data();
  const int64_t s = spec.stride;

  for (int64_t co = 0; co < c_out; ++co) {
    T acc = 0;
    for (int64_t b = 0; b < batch; ++b) {
      const T* __restrict__ dyrow = dy_p + (b * c_out + co) * out_len;
      for (int64_t t = 0; t < out_len; ++t) acc += dyrow[t];
    }
    d_bias[co] = acc;
  }

  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      const T* __restrict__ dyrow = dy_p + (b * c_out + co) * out_len;
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const T* __restrict__ irow = in_p + (b * c_in + ci) * in_len;
        T* __restrict__ dwrow = d_weight.data() + (co * c_in + ci) * kernel;
        for (int64_t k = 0; k < kernel; ++k) {
          const TapRange r = tap_range(k, spec, in_len, out_len);
          const int64_t off = k * spec.dilation - spec.padding;
          T acc = 0;
          if (s == 1) {
            const T* __restrict__ src = irow + off;
            for (int64_t t = r.lo; t <= r.hi; ++t) acc += dyrow[t] * src[t];
          } else {
            for (int64_t t = r.lo; t <= r.hi; ++t) acc += dyrow[t] * irow[t * s + off];
          }
          dwrow[k] += acc;
        }
      }
    }
  }

  if (need_d_input) {
    T* __restrict__ dx_p = g.d_input.data();
    for (int64_t b = 0; b < batch; ++b) {
      for (int64_t ci = 0; ci < c_in; ++ci) {
        T* __restrict__ dxrow = dx_p + (b * c_in + ci) * in_len;
        for (int64_t co = 0; co < c_out; ++co) {
          const T* __restrict__ dyrow = dy_p + (b * c_out + co) * out_len;
          const T* __restrict__ wrow = w_p + (co * c_in + ci) * kernel;
          for (int64_t k = 0; k < kernel; ++k) {
            const TapRange r = tap_range(k, spec, in_len, out_len);
            const T w = wrow[k];
            const int64_t off = k * spec.dilation - spec.padding;
            if (s == 1) {
              T* __restrict__ dst = dxrow + off;
              for (int64_t t = r.lo; t <= r.hi; ++t) dst[t] += w * dyrow[t];
            } else {
              for (int64_t t = r.lo; t <= r.hi; ++t) dxrow[t * s + off] += w * dyrow[t];
            }
          }
        }
      }
    }
  }

  g.d_params.push_back(std::move(d_weight));
  g.d_params.push_back(std::move(d_bias));
  return g;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride, int padding) {
  if (input.rank() != 4) throw Error("conv2d expects input [B,Cin,H,W], got " + input.shape_str());
  if (weight.rank() != 4) {
    throw Error("conv2d expects weight [Cout,Cin,Kh,Kw], got " + weight.shape_str());
  }
  const int64_t batch = input.dim(0), c_in = input.dim(1), in_h = input.dim(2), in_w = input.dim(3);
  const int64_t c_out = weight.dim(0), k_h = weight.dim(2), k_w = weight.dim(3);
  if (weight.dim(1) != c_in) {
    throw Error("conv2d channel mismatch: input " + input.shape_str() + " vs weight " +
                weight.shape_str());
  }
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw Error("conv2d bias shape " + bias.shape_str() + " does not match Cout " +
                std::to_string(c_out));
  }
  ConvSpec axis{stride, padding, 1};
  check_conv_spec(axis, k_h, in_h);
  check_conv_spec(axis, k_w, in_w);
  const int64_t out_h = conv_out_len(in_h, k_h, stride, padding, 1);
  const int64_t out_w = conv_out_len(in_w, k_w, stride, padding, 1);

  TensorT<T> out({batch, c_out, out_h, out_w});
  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  T* __restrict__ out_p = out.data();
  const int64_t s = stride, p = padding;

  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      T* __restrict__ oplane = out_p + (b * c_out + co) * out_h * out_w;
      std::fill(oplane, oplane + out_h * out_w, bias[co]);
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const T* __restrict__ iplane = in_p + (b * c_in + ci) * in_h * in_w;
        const T* __restrict__ wk = w_p + (co * c_in + ci) * k_h * k_w;
        for (int64_t kh = 0; kh < k_h; ++kh) {
          for (int64_t kw = 0; kw < k_w; ++kw) {
            const T w = wk[kh * k_w + kw];
            const int64_t hoff = kh - p, woff = kw - p;
            const int64_t ho_lo = std::max<int64_t>(0, ceil_div(-hoff, s));
            const int64_t ho_hi = std::min<int64_t>(out_h - 1, (in_h - 1 - hoff) / s);
            const int64_t wo_lo = std::max<int64_t>(0, ceil_div(-woff, s));
            const int64_t wo_hi = std::min<int64_t>(out_w - 1, (in_w - 1 - woff) / s);
            for (int64_t ho = ho_lo; ho <= ho_hi; ++ho) {
              T* __restrict__ orow = oplane + ho * out_w;
              const T* __restrict__ irow = iplane + (ho * s + hoff) * in_w + woff;
              if (s == 1) {
                for (int64_t wo = wo_lo; wo <= wo_hi; ++wo) orow[wo] += w * irow[wo];
              } else {
                for (int64_t wo = wo_lo; wo <= wo_hi; ++wo) orow[wo] += w * irow[wo * s];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
LayerGradsT<T> conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, int stride,
                               int padding, const TensorT<T>& d_output, bool need_d_input) {
  const int64_t batch = input.dim(0), c_in = input.dim(1), in_h = input.dim(2), in_w = input.dim(3);
  const int64_t c_out = weight.dim(0), k_h = weight.dim(2), k_w = weight.dim(3);
  const int64_t out_h = conv_out_len(in_h, k_h, stride, padding, 1);
  const int64_t out_w = conv_out_len(in_w, k_w, stride, padding, 1);
  if (d_output.rank() != 4 || d_output.dim(0) != batch || d_output.dim(1) != c_out ||
      d_output.dim(2) != out_h || d_output.dim(3) != out_w) {
    throw Error("conv2d_backward d_output shape " + d_output.shape_str() + " does not match [" +
                std::to_string(batch) + "," + std::to_string(c_out) + "," + std::to_string(out_h) +
                "," + std::to_string(out_w) + "]");
  }

  LayerGradsT<T> g;
  TensorT<T> d_weight({c_out, c_in, k_h, k_w});
  TensorT<T> d_bias({c_out});
  if (need_d_input) g.d_input = TensorT<T>({batch, c_in, in_h, in_w});

  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  const T* __restrict__ dy_p = d_output.data();
  const int64_t s = stride, p = padding;

  for (int64_t co = 0; co < c_out; ++co) {
    T acc = 0;
    for (int64_t b = 0; b < batch; ++b) {
      const T* __restrict__ dyplane = dy_p + (b * c_out + co) * out_h * out_w;
      for (int64_t i = 0; i < out_h * out_w; ++i) acc += dyplane[i];
    }
    d_bias[co] = acc;
  }

  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      const T* __restrict__ dyplane = dy_p + (b * c_out + co) * out_h * out_w;
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const T* __restrict__ iplane = in_p + (b * c_in + ci) * in_h * in_w;
        T* __restrict__ dwk = d_weight.data() + (co * c_in + ci) * k_h * k_w;
        T* __restrict__ dxplane =
            need_d_input ? g.d_input.data() + (b * c_in + ci) * in_h * in_w : nullptr;
        const T* __restrict__ wk = w_p + (co * c_in + ci) * k_h * k_w;
        for (int64_t kh = 0; kh < k_h; ++kh) {
          for (int64_t kw = 0; kw < k_w; ++kw) {
            const T w = wk[kh * k_w + kw];
            const int64_t hoff = kh - p, woff = kw - p;
            const int64_t ho_lo = std::max<int64_t>(0, ceil_div(-hoff, s));
            const int64_t ho_hi = std::min<int64_t>(out_h - 1, (in_h - 1 - hoff) / s);
            const int64_t wo_lo = std::max<int64_t>(0, ceil_div(-woff, s));
            const int64_t wo_hi = std::min<int64_t>(out_w - 1, (in_w - 1 - woff) / s);
            T acc = 0;
            for (int64_t ho = ho_lo; ho <= ho_hi; ++ho) {
              const T* __restrict__ dyrow = dyplane + ho * out_w;
              const T* __restrict__ irow = iplane + (ho * s + hoff) * in_w + woff;
              T* __restrict__ dxrow =
                  need_d_input ? dxplane + (ho * s + hoff) * in_w + woff : nullptr;
              if (s == 1) {
                for (int64_t wo = wo_lo; wo <= wo_hi; ++wo) {
                  acc += dyrow[wo] * irow[wo];
                  if (need_d_input) dxrow[wo] += w * dyrow[wo];
                }
              } else {
                for (int64_t wo = wo_lo; wo <= wo_hi; ++wo) {
                  acc += dyrow[wo] * irow[wo * s];
                  if (need_d_input) dxrow[wo * s] += w * dyrow[wo];
                }
              }
            }
            dwk[kh * k_w + kw] += acc;
          }
        }
      }
    }
  }

  g.d_params.push_back(std::move(d_weight));
  g.d_params.push_back(std::move(d_bias));
  return g;
}

namespace {

template <typename T>
void check_bn_shapes(const TensorT<T>& input, const BnStateT<T>& state) {
  if (input.rank() < 2) throw Error("batchnorm expects input [B,C,...], got " + input.shape_str());
  if (state.eps <= T(0)) throw Error("batchnorm eps must be positive");
  const int64_t channels = input.dim(1);
  if (state.gamma.numel() != channels) {
    throw Error("batchnorm channel mismatch: input " + input.shape_str() + " vs gamma " +
                state.gamma.shape_str());
  }
}

template <typename T>
int64_t spatial_size(const TensorT<T>& t) {
  int64_t s = 1;
  for (int i = 2; i < t.rank(); ++i) s *= t.dim(i);
  return s;
}

}  // namespace

template <typename T>
TensorT<T> batchnorm(const TensorT<T>& input, BnStateT<T>& state) {
  check_bn_shapes(input, state);
  const int64_t batch = input.dim(0), channels = input.dim(1), sp = spatial_size(input);
  const int64_t n = batch * sp;
  if (state.training && n < 2) {
    throw Error("batchnorm train mode needs at least 2 values per channel, got " +
                std::to_string(n));
  }

  TensorT<T> out(input.shape());
  const T* __restrict__ in_p = input.data();
  T* __restrict__ out_p = out.data();

  for (int64_t c = 0; c < channels; ++c) {
    T mean, inv_std;
    if (state.training) {
      double sum = 0, sum_sq = 0;
      for (int64_t b = 0; b < batch; ++b) {
        const T* __restrict__ row = in_p + (b * channels + c) * sp;
        for (int64_t i = 0; i < sp; ++i) {
          sum += row[i];
          sum_sq += static_cast<double>(row[i]) * row[i];
        }
      }
      const double mu = sum / static_cast<double>(n);
      const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mu * mu);
      mean = static_cast<T>(mu);
      inv_std = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(state.eps)));
      state.running_mean[c] =
          (T(1) - state.momentum) * state.running_mean[c] + state.momentum * static_cast<T>(mu);
      state.running_var[c] =
          (T(1) - state.momentum) * state.running_var[c] + state.momentum * static_cast<T>(var);
    } else {
      mean = state.running_mean[c];
      inv_std = T(1) / std::sqrt(state.running_var[c] + state.eps);
    }
    const T scale = state.gamma[c] * inv_std;
    const T shift = state.beta[c] - mean * scale;
    for (int64_t b = 0; b < batch; ++b) {
      const T* __restrict__ row = in_p + (b * channels + c) * sp;
      T* __restrict__ orow = out_p + (b * channels + c) * sp;
      for (int64_t i = 0; i < sp; ++i) orow[i] = row[i] * scale + shift;
    }
  }
  return out;
}

template <typename T>
LayerGradsT<T> batchnorm_backward(const TensorT<T>& input, const BnStateT<T>& state,
                                  const TensorT<T>& d_output) {
  check_bn_shapes(input, state);
  if (!d_output.same_shape(input)) {
    throw Error("batchnorm_backward d_output shape " + d_output.shape_str() +
                " does not match input " + input.shape_str());
  }
  const int64_t batch = input.dim(0), channels = input.dim(1), sp = spatial_size(input);
  const int64_t n = batch * sp;

  LayerGradsT<T> g;
  g.d_input = TensorT<T>(input.shape());
  TensorT<T> d_gamma({channels});
  TensorT<T> d_beta({channels});

  const T* __restrict__ in_p = input.data();
  const T* __restrict__ dy_p = d_output.data();
  T* __restrict__ dx_p = g.d_input.data();

  for (int64_t c = 0; c < channels; ++c) {
    double mu, inv_std;
    if (state.training) {
      double sum = 0, sum_sq = 0;
      for (int64_t b = 0; b < batch; ++b) {
        const T* __restrict__ row = in_p + (b * channels + c) * sp;
        for (int64_t i = 0; i < sp; ++i) {
          sum += row[i];
          sum_sq += static_cast<double>(row[i]) * row[i];
        }
      }
      mu = sum / static_cast<double>(n);
      const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mu * mu);
      inv_std = 1.0 / std::sqrt(var + static_cast<double>(state.eps));
    } else {
      mu = static_cast<double>(state.running_mean[c]);
      inv_std = 1.0 / std::sqrt(static_cast<double>(state.running_var[c]) +
                                static_cast<double>(state.eps));
    }

    double sum_dy = 0, sum_dy_xhat = 0;
    for (int64_t b = 0; b < batch; ++b) {
      const T* __restrict__ row = in_p + (b * channels + c) * sp;
      const T* __restrict__ dyrow = dy_p + (b * channels + c) * sp;
      for (int64_t i = 0; i < sp; ++i) {
        const double xhat = (row[i] - mu) * inv_std;
        sum_dy += dyrow[i];
        sum_dy_xhat += dyrow[i] * xhat;
      }
    }
    d_gamma[c] = static_cast<T>(sum_dy_xhat);
    d_beta[c] = static_cast<T>(sum_dy);

    const double gamma = state.gamma[c];
    const double mean_dy = sum_dy / static_cast<double>(n);
    const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(n);
    for (int64_t b = 0; b < batch; ++b) {
      const T* __restrict__ row = in_p + (b * channels + c) * sp;
      const T* __restrict__ dyrow = dy_p + (b * channels + c) * sp;
      T* __restrict__ dxrow = dx_p + (b * channels + c) * sp;
      if (state.training) {
        for (int64_t i = 0; i < sp; ++i) {
          const double xhat = (row[i] - mu) * inv_std;
          dxrow[i] =
              static_cast<T>(gamma * inv_std * (dyrow[i] - mean_dy - xhat * mean_dy_xhat));
        }
      } else {
        for (int64_t i = 0; i < sp; ++i) {
          dxrow[i] = static_cast<T>(gamma * inv_std * dyrow[i]);
        }
      }
    }
  }

  g.d_params.push_back(std::move(d_gamma));
  g.d_params.push_back(std::move(d_beta));
  return g;
}

template <typename T>
TensorT<T> maxpool1d(const TensorT<T>& input, int size) {
  if (input.rank() != 3) throw Error("maxpool1d expects input [B,C,L], got " + input.shape_str());
  if (size < 1) throw Error("maxpool1d size must be >= 1");
  const int64_t batch = input.dim(0), channels = input.dim(1), in_len = input.dim(2);
  if (in_len % size != 0) {
    throw Error("maxpool1d length " + std::to_string(in_len) + " not divisible by pool size " +
                std::to_string(size));
  }
  const int64_t out_len = in_len / size;
  TensorT<T> out({batch, channels, out_len});
  const T* __restrict__ in_p = input.data();
  T* __restrict__ out_p = out.data();
  for (int64_t r = 0; r < batch * channels; ++r) {
    const T* __restrict__ row = in_p + r * in_len;
    T* __restrict__ orow = out_p + r * out_len;
    for (int64_t j = 0; j < out_len; ++j) {
      T best = row[j * size];
      for (int i = 1; i < size; ++i) best = std::max(best, row[j * size + i]);
      orow[j] = best;
    }
  }
  return out;
}

template <typename T>
TensorT<T> maxpool1d_backward(const TensorT<T>& input, int size, const TensorT<T>& d_output) {
  const int64_t batch = input.dim(0), channels = input.dim(1), in_len = input.dim(2);
  const int64_t out_len = in_len / size;
  if (d_output.rank() != 3 || d_output.dim(0) != batch || d_output.dim(1) != channels ||
      d_output.dim(2) != out_len) {
    throw Error("maxpool1d_backward d_output shape " + d_output.shape_str() + " does not match");
  }
  TensorT<T> dx(input.shape());
  const T* __restrict__ in_p = input.data();
  const T* __restrict__ dy_p = d_output.data();
  T* __restrict__ dx_p = dx.data();
  for (int64_t r = 0; r < batch * channels; ++r) {
    const T* __restrict__ row = in_p + r * in_len;
    const T* __restrict__ dyrow = dy_p + r * out_len;
    T* __restrict__ dxrow = dx_p + r * in_len;
    for (int64_t j = 0; j < out_len; ++j) {
      int arg = 0;
      T best = row[j * size];
      for (int i = 1; i < size; ++i) {
        if (row[j * size + i] > best) {  // first maximum wins ties
          best = row[j * size + i];
          arg = i;
        }
      }
      dxrow[j * size + arg] = dyrow[j];
    }
  }
  return dx;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& input) {
  TensorT<T> out(input.shape());
  const T* __restrict__ in_p = input.data();
  T* __restrict__ out_p = out.data();
  const int64_t n = input.numel();
  for (int64_t i = 0; i < n; ++i) out_p[i] = in_p[i] > T(0) ? in_p[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& input, const TensorT<T>& d_output) {
  if (!d_output.same_shape(input)) {
    throw Error("relu_backward d_output shape " + d_output.shape_str() + " does not match input " +
                input.shape_str());
  }
  TensorT<T> dx(input.shape());
  const T* __restrict__ in_p = input.data();
  const T* __restrict__ dy_p = d_output.data();
  T* __restrict__ dx_p = dx.data();
  const int64_t n = input.numel();
  for (int64_t i = 0; i < n; ++i) dx_p[i] = in_p[i] > T(0) ? dy_p[i] : T(0);
  return dx;
}

template <typename T>
TensorT<T> adaptive_avg_pool_1x1(const TensorT<T>& input) {
  if (input.rank() != 4) {
    throw Error("adaptive_avg_pool_1x1 expects input [B,C,H,W], got " + input.shape_str());
  }
  const int64_t batch = input.dim(0), channels = input.dim(1);
  const int64_t sp = input.dim(2) * input.dim(3);
  TensorT<T> out({batch, channels});
  const T* __restrict__ in_p = input.data();
  for (int64_t r = 0; r < batch * channels; ++r) {
    double acc = 0;
    const T* __restrict__ row = in_p + r * sp;
    for (int64_t i = 0; i < sp; ++i) acc += row[i];
    out[r] = static_cast<T>(acc / static_cast<double>(sp));
  }
  return out;
}

template <typename T>
TensorT<T> adaptive_avg_pool_1x1_backward(const TensorT<T>& input, const TensorT<T>& d_output) {
  const int64_t batch = input.dim(0), channels = input.dim(1);
  const int64_t sp = input.dim(2) * input.dim(3);
  if (d_output.rank() != 2 || d_output.dim(0) != batch || d_output.dim(1) != channels) {
    throw Error("adaptive_avg_pool_1x1_backward d_output shape " + d_output.shape_str() +
                " does not match");
  }
  TensorT<T> dx(input.shape());
  T* __restrict__ dx_p = dx.data();
  for (int64_t r = 0; r < batch * channels; ++r) {
    const T v = d_output[r] / static_cast<T>(sp);
    T* __restrict__ row = dx_p + r * sp;
    for (int64_t i = 0; i < sp; ++i) row[i] = v;
  }
  return dx;
}

template <typename T>
TensorT<T> linear(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias) {
  if (input.rank() != 2) throw Error("linear expects input [B,Din], got " + input.shape_str());
  if (weight.rank() != 2) throw Error("linear expects weight [Dout,Din], got " + weight.shape_str());
  const int64_t batch = input.dim(0), d_in = input.dim(1), d_out = weight.dim(0);
  if (weight.dim(1) != d_in) {
    throw Error("linear dimension mismatch: input " + input.shape_str() + " vs weight " +
                weight.shape_str());
  }
  if (bias.rank() != 1 || bias.dim(0) != d_out) {
    throw Error("linear bias shape " + bias.shape_str() + " does not match Dout " +
                std::to_string(d_out));
  }
  TensorT<T> out({batch, d_out});
  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  for (int64_t b = 0; b < batch; ++b) {
    const T* __restrict__ xrow = in_p + b * d_in;
    T* __restrict__ orow = out.data() + b * d_out;
    for (int64_t o = 0; o < d_out; ++o) {
      const T* __restrict__ wrow = w_p + o * d_in;
      T acc = bias[o];
      for (int64_t i = 0; i < d_in; ++i) acc += wrow[i] * xrow[i];
      orow[o] = acc;
    }
  }
  return out;
}

template <typename T>
LayerGradsT<T> linear_backward(const TensorT<T>& input, const TensorT<T>& weight,
                               const TensorT<T>& d_output, bool need_d_input) {
  const int64_t batch = input.dim(0), d_in = input.dim(1), d_out = weight.dim(0);
  if (d_output.rank() != 2 || d_output.dim(0) != batch || d_output.dim(1) != d_out) {
    throw Error("linear_backward d_output shape " + d_output.shape_str() + " does not match [" +
                std::to_string(batch) + "," + std::to_string(d_out) + "]");
  }
  LayerGradsT<T> g;
  TensorT<T> d_weight({d_out, d_in});
  TensorT<T> d_bias({d_out});
  if (need_d_input) g.d_input = TensorT<T>({batch, d_in});

  const T* __restrict__ in_p = input.data();
  const T* __restrict__ w_p = weight.data();
  const T* __restrict__ dy_p = d_output.data();
  for (int64_t b = 0; b < batch; ++b) {
    const T* __restrict__ xrow = in_p + b * d_in;
    const T* __restrict__ dyrow = dy_p + b * d_out;
    for (int64_t o = 0; o < d_out; ++o) {
      const T dy = dyrow[o];
      d_bias[o] += dy;
      T* __restrict__ dwrow = d_weight.data() + o * d_in;
      for (int64_t i = 0; i < d_in; ++i) dwrow[i] += dy * xrow[i];
      if (need_d_input) {
        const T* __restrict__ wrow = w_p + o * d_in;
        T* __restrict__ dxrow = g.d_input.data() + b * d_in;
        for (int64_t i = 0; i < d_in; ++i) dxrow[i] += dy * wrow[i];
      }
    }
  }
  g.d_params.push_back(std::move(d_weight));
  g.d_params.push_back(std::move(d_bias));
  return g;
}

template <typename T>
CeResultT<T> cross_entropy_logits(const TensorT<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw Error("cross_entropy_logits expects logits [B,C], got " + logits.shape_str());
  }
  const int64_t batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != batch) {
    throw Error("cross_entropy_logits got " + std::to_string(labels.size()) + " labels for batch " +
                std::to_string(batch));
  }
  for (int lab : labels) {
    if (lab < 0 || lab >= classes) {
      throw Error("cross_entropy_logits label " + std::to_string(lab) + " outside [0," +
                  std::to_string(classes) + ")");
    }
  }

  CeResultT<T> res;
  res.d_logits = TensorT<T>(logits.shape());
  double loss_sum = 0;
  for (int64_t b = 0; b < batch; ++b) {
    const T* row = logits.data() + b * classes;
    T m = row[0];
    for (int64_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
    double sum_exp = 0;
    for (int64_t c = 0; c < classes; ++c) sum_exp += std::exp(static_cast<double>(row[c] - m));
    const double lse = static_cast<double>(m) + std::log(sum_exp);
    loss_sum += lse - static_cast<double>(row[labels[b]]);
    T* drow = res.d_logits.data() + b * classes;
    for (int64_t c = 0; c < classes; ++c) {
      const double p = std::exp(static_cast<double>(row[c]) - lse);
      drow[c] = static_cast<T>((p - (c == labels[b] ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  res.loss = static_cast<T>(loss_sum / static_cast<double>(batch));
  return res;
}

#define RWR_INSTANTIATE_OPS(T)                                                                  \
  template TensorT<T> conv1d<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,        \
                                const ConvSpec&);                                               \
  template LayerGradsT<T> conv1d_backward<T>(const TensorT<T>&, const TensorT<T>&,              \
                                             const ConvSpec&, const TensorT<T>&, bool);         \
  template TensorT<T> conv2d<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int,   \
                                int);                                                           \
  template LayerGradsT<T> conv2d_backward<T>(const TensorT<T>&, const TensorT<T>&, int, int,    \
                                             const TensorT<T>&, bool);                          \
  template TensorT<T> batchnorm<T>(const TensorT<T>&, BnStateT<T>&);                            \
  template LayerGradsT<T> batchnorm_backward<T>(const TensorT<T>&, const BnStateT<T>&,          \
                                                const TensorT<T>&);                             \
  template TensorT<T> maxpool1d<T>(const TensorT<T>&, int);                                     \
  template TensorT<T> maxpool1d_backward<T>(const TensorT<T>&, int, const TensorT<T>&);         \
  template TensorT<T> relu<T>(const TensorT<T>&);                                               \
  template TensorT<T> relu_backward<T>(const TensorT<T>&, const TensorT<T>&);                   \
  template TensorT<T> adaptive_avg_pool_1x1<T>(const TensorT<T>&);                              \
  template TensorT<T> adaptive_avg_pool_1x1_backward<T>(const TensorT<T>&, const TensorT<T>&);  \
  template TensorT<T> linear<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&);       \
  template LayerGradsT<T> linear_backward<T>(const TensorT<T>&, const TensorT<T>&,              \
                                             const TensorT<T>&, bool);                          \
  template CeResultT<T> cross_entropy_logits<T>(const TensorT<T>&, std::span<const int>);

RWR_INSTANTIATE_OPS(float)
RWR_INSTANTIATE_OPS(double)

#undef RWR_INSTANTIATE_OPS

}  // namespace rwr
