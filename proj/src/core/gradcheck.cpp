#include "core/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <span>

#include "common/rng.hpp"
#include "core/ops.hpp"

namespace rwr {

namespace {

// One differentiable test case: pure forward over the listed inputs plus the
// matching analytic gradients, both in 64-bit.
struct Case {
  std::vector<Tensor64> inputs;
  std::function<Tensor64(const std::vector<Tensor64>&)> eval;
  std::function<std::vector<Tensor64>(const std::vector<Tensor64>&, const Tensor64&)> grads;
};

Tensor64 random_tensor(Rng& rng, std::vector<int64_t> shape) {
  Tensor64 t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
  return t;
}

// Keeps every value away from the ReLU kink so finite differences stay valid.
void push_from_zero(Tensor64& t, double margin) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (std::abs(t[i]) < margin) t[i] += t[i] >= 0 ? margin : -margin;
  }
}

// Widens each pool window's max-vs-runner-up gap past the FD step.
void separate_window_max(Tensor64& t, int size, double margin) {
  const int64_t rows = t.dim(0) * t.dim(1), len = t.dim(2);
  for (int64_t r = 0; r < rows; ++r) {
    double* w = t.data() + r * len;
    for (int64_t j = 0; j + size <= len; j += size) {
      int arg = 0;
      for (int i = 1; i < size; ++i) {
        if (w[j + i] > w[j + arg]) arg = i;
      }
      double runner_up = -1e300;
      for (int i = 0; i < size; ++i) {
        if (i != arg) runner_up = std::max(runner_up, w[j + i]);
      }
      if (w[j + arg] - runner_up < margin) w[j + arg] += margin;
    }
  }
}

Case make_conv1d_case(Rng& rng, ConvSpec spec, int k) {
  Case c;
  c.inputs.push_back(random_tensor(rng, {2, 3, 20}));
  c.inputs.push_back(random_tensor(rng, {4, 3, k}));
  c.inputs.push_back(random_tensor(rng, {4}));
  c.eval = [spec](const std::vector<Tensor64>& in) { return conv1d(in[0], in[1], in[2], spec); };
  c.grads = [spec](const std::vector<Tensor64>& in, const Tensor64& dy) {
    auto g = conv1d_backward(in[0], in[1], spec, dy);
    return std::vector<Tensor64>{g.d_input, g.d_params[0], g.d_params[1]};
  };
  return c;
}

Case make_conv2d_case(Rng& rng, int stride, int padding, int k) {
  Case c;
  c.inputs.push_back(random_tensor(rng, {2, 2, 6, 7}));
  c.inputs.push_back(random_tensor(rng, {3, 2, k, k}));
  c.inputs.push_back(random_tensor(rng, {3}));
  c.eval = [stride, padding](const std::vector<Tensor64>& in) {
    return conv2d(in[0], in[1], in[2], stride, padding);
  };
  c.grads = [stride, padding](const std::vector<Tensor64>& in, const Tensor64& dy) {
    auto g = conv2d_backward(in[0], in[1], stride, padding, dy);
    return std::vector<Tensor64>{g.d_input, g.d_params[0], g.d_params[1]};
  };
  return c;
}

Case make_batchnorm_case(Rng& rng, std::vector<int64_t> shape, bool training) {
  const int64_t channels = shape[1];
  Case c;
  c.inputs.push_back(random_tensor(rng, std::move(shape)));
  c.inputs.push_back(random_tensor(rng, {channels}));
  c.inputs.push_back(random_tensor(rng, {channels}));
  Tensor64 run_mean = random_tensor(rng, {channels});
  Tensor64 run_var({channels});
  for (int64_t i = 0; i < channels; ++i) run_var[i] = 0.5 + rng.uniform();

  auto make_state = [training, run_mean, run_var](const std::vector<Tensor64>& in) {
    auto st = BnStateT<double>::init(in[1].numel());
    st.gamma = in[1];
    st.beta = in[2];
    st.training = training;
    if (!training) {
      st.running_mean = run_mean;
      st.running_var = run_var;
    }
    return st;
  };
  c.eval = [make_state](const std::vector<Tensor64>& in) {
    auto st = make_state(in);
    return batchnorm(in[0], st);
  };
  c.grads = [make_state](const std::vector<Tensor64>& in, const Tensor64& dy) {
    auto st = make_state(in);
    auto g = batchnorm_backward(in[0], st, dy);
    return std::vector<Tensor64>{g.d_input, g.d_params[0], g.d_params[1]};
  };
  return c;
}

Case make_linear_case(Rng& rng) {
  Case c;
  c.inputs.push_back(random_tensor(rng, {4, 3}));
  c.inputs.push_back(random_tensor(rng, {5, 3}));
  c.inputs.push_back(random_tensor(rng, {5}));
  c.eval = [](const std::vector<Tensor64>& in) { return linear(in[0], in[1], in[2]); };
  c.grads = [](const std::vector<Tensor64>& in, const Tensor64& dy) {
    auto g = linear_backward(in[0], in[1], dy);
    return std::vector<Tensor64>{g.d_input, g.d_params[0], g.d_params[1]};
  };
  return c;
}

Case make_case(const std::string& layer, uint64_t seed, double step) {
  Rng rng(derive_seed(0x6772616463686bULL, seed));
  if (layer == "conv1d") return make_conv1d_case(rng, {1, 1, 1}, 3);
  if (layer == "conv1d_dilated") return make_conv1d_case(rng, {1, 2, 2}, 3);
  if (layer == "conv1d_strided") return make_conv1d_case(rng, {5, 2, 1}, 5);
  if (layer == "conv2d") return make_conv2d_case(rng, 1, 1, 3);
  if (layer == "conv2d_strided") return make_conv2d_case(rng, 2, 1, 3);
  if (layer == "conv2d_pointwise") return make_conv2d_case(rng, 2, 0, 1);
  if (layer == "batchnorm1d") return make_batchnorm_case(rng, {3, 4, 6}, true);
  if (layer == "batchnorm2d") return make_batchnorm_case(rng, {2, 3, 4, 5}, true);
  if (layer == "batchnorm_eval") return make_batchnorm_case(rng, {3, 4, 6}, false);
  if (layer == "linear") return make_linear_case(rng);

  if (layer == "maxpool1d") {
    Case c;
    c.inputs.push_back(random_tensor(rng, {2, 3, 12}));
    separate_window_max(c.inputs[0], 4, 100 * step);
    c.eval = [](const std::vector<Tensor64>& in) { return maxpool1d(in[0], 4); };
    c.grads = [](const std::vector<Tensor64>& in, const Tensor64& dy) {
      return std::vector<Tensor64>{maxpool1d_backward(in[0], 4, dy)};
    };
    return c;
  }
  if (layer == "relu") {
    Case c;
    c.inputs.push_back(random_tensor(rng, {2, 3, 5}));
    push_from_zero(c.inputs[0], 100 * step);
    c.eval = [](const std::vector<Tensor64>& in) { return relu(in[0]); };
    c.grads = [](const std::vector<Tensor64>& in, const Tensor64& dy) {
      return std::vector<Tensor64>{relu_backward(in[0], dy)};
    };
    return c;
  }
  if (layer == "adaptive_avg_pool") {
    Case c;
    c.inputs.push_back(random_tensor(rng, {2, 3, 4, 5}));
    c.eval = [](const std::vector<Tensor64>& in) { return adaptive_avg_pool_1x1(in[0]); };
    c.grads = [](const std::vector<Tensor64>& in, const Tensor64& dy) {
      return std::vector<Tensor64>{adaptive_avg_pool_1x1_backward(in[0], dy)};
    };
    return c;
  }
  if (layer == "cross_entropy") {
    Case c;
    c.inputs.push_back(random_tensor(rng, {8, 2}));
    std::vector<int> labels(8);
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    c.eval = [labels](const std::vector<Tensor64>& in) {
      auto r = cross_entropy_logits(in[0], labels);
      Tensor64 out({1});
      out[0] = r.loss;
      return out;
    };
    c.grads = [labels](const std::vector<Tensor64>& in, const Tensor64& dy) {
      auto r = cross_entropy_logits(in[0], labels);
      Tensor64 d = r.d_logits;
      for (int64_t i = 0; i < d.numel(); ++i) d[i] *= dy[0];
      return std::vector<Tensor64>{d};
    };
    return c;
  }
  throw Error("gradcheck: unknown layer '" + layer + "'");
}

double weighted_sum(const Tensor64& out, const Tensor64& d_output) {
  double s = 0;
  for (int64_t i = 0; i < out.numel(); ++i) s += out[i] * d_output[i];
  return s;
}

}  // namespace

const std::vector<std::string>& gradcheck_layer_names() {
  static const std::vector<std::string> names = {
      "conv1d",      "conv1d_dilated", "conv1d_strided", "conv2d",
      "conv2d_strided", "conv2d_pointwise", "batchnorm1d", "batchnorm2d",
      "batchnorm_eval", "maxpool1d",   "relu",           "adaptive_avg_pool",
      "linear",      "cross_entropy"};
  return names;
}

double gradcheck_threshold(const std::string& layer) {
  return layer.rfind("batchnorm", 0) == 0 ? 1e-5 : 1e-6;
}

double gradcheck_layer(const std::string& layer, uint64_t seed, double step,
                       double fault_inject) {
  Case c = make_case(layer, seed, step);

  Tensor64 out = c.eval(c.inputs);
  Rng dy_rng(derive_seed(seed, 0xD0ULL));
  Tensor64 d_output(out.shape());
  for (int64_t i = 0; i < d_output.numel(); ++i) d_output[i] = dy_rng.normal();

  std::vector<Tensor64> analytic = c.grads(c.inputs, d_output);
  if (fault_inject != 0.0 && !analytic.empty() && analytic[0].numel() > 0) {
    analytic[0][0] += fault_inject * (1.0 + std::abs(analytic[0][0]));
  }

  double max_rel = 0;
  for (size_t which = 0; which < c.inputs.size(); ++which) {
    Tensor64& x = c.inputs[which];
    std::vector<double> numeric(static_cast<size_t>(x.numel()));
    for (int64_t i = 0; i < x.numel(); ++i) {
      const double saved = x[i];
      x[i] = saved + step;
      const double plus = weighted_sum(c.eval(c.inputs), d_output);
      x[i] = saved - step;
      const double minus = weighted_sum(c.eval(c.inputs), d_output);
      x[i] = saved;
      numeric[static_cast<size_t>(i)] = (plus - minus) / (2 * step);
    }
    // Error relative to the tensor's own gradient scale. A per-entry quotient
    // would demand ~9 digits from finite differences on entries far below
    // that scale, which float64 FD cannot deliver at any step size.
    double scale = 1e-8, worst = 0;
    for (int64_t i = 0; i < x.numel(); ++i) {
      scale = std::max({scale, std::abs(analytic[which][i]),
                        std::abs(numeric[static_cast<size_t>(i)])});
      worst = std::max(worst, std::abs(analytic[which][i] -
                                       numeric[static_cast<size_t>(i)]));
    }
    max_rel = std::max(max_rel, worst / scale);
  }
  return max_rel;
}

std::vector<GradCheckResult> run_gradcheck_suite(int seeds_per_layer, double step,
                                                 double fault_inject) {
  std::vector<GradCheckResult> results;
  for (const std::string& layer : gradcheck_layer_names()) {
    GradCheckResult r;
    r.layer = layer;
    r.threshold = gradcheck_threshold(layer);
    for (int s = 1; s <= seeds_per_layer; ++s) {
      r.max_rel_error = std::max(
          r.max_rel_error, gradcheck_layer(layer, static_cast<uint64_t>(s), step, fault_inject));
    }
    r.pass = r.max_rel_error < r.threshold;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace rwr
