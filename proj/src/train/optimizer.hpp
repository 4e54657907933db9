#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>

#include "model/layers.hpp"

namespace rwr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

// Adam with bias correction. Moment slots are keyed by parameter name and
// created lazily on first sight; every visited parameter therefore has a
// matching (m, v) pair once training begins.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {});

  // One update pass at the given learning rate. `visit` must enumerate the
  // same named parameters every call.
  void step(const std::function<void(const ParamVisitor&)>& visit, double lr);

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::unordered_map<std::string, Moments> slots_;
  int64_t t_ = 0;
};

}  // namespace rwr
