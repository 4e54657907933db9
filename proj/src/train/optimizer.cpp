#include "train/optimizer.hpp"

#include <cmath>

#include "common/error.hpp"

namespace rwr {

void AdamConfig::validate() const {
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("adam: betas must lie in [0, 1)");
  }
  if (eps <= 0.0 || weight_decay < 0.0) {
    throw ConfigError("adam: need eps > 0 and weight_decay >= 0");
  }
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Adam::step(const std::function<void(const ParamVisitor&)>& visit,
                double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("adam: learning rate must be positive and finite");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  visit([&](const std::string& name, Tensor& value, Tensor& grad) {
    if (!value.same_shape(grad)) {
      throw Error("adam: '" + name + "' value " + value.shape_str() +
                  " vs grad " + grad.shape_str());
    }
    auto [it, fresh] = slots_.try_emplace(name);
    Moments& mom = it->second;
    if (fresh) {
      mom.m = Tensor(value.shape());
      mom.v = Tensor(value.shape());
    } else if (!mom.m.same_shape(value)) {
      throw Error("adam: '" + name + "' changed shape to " +
                  value.shape_str());
    }
    float* __restrict__ p = value.data();
    const float* __restrict__ g = grad.data();
    float* __restrict__ m = mom.m.data();
    float* __restrict__ v = mom.v.data();
    const int64_t n = value.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double gi =
          static_cast<double>(g[i]) + cfg_.weight_decay * p[i];
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      p[i] = static_cast<float>(
          p[i] - lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps));
    }
  });
}

}  // namespace rwr
