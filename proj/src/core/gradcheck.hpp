#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace rwr {

struct GradCheckResult {
  std::string layer;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Layer names accepted by gradcheck_layer, in report order.
const std::vector<std::string>& gradcheck_layer_names();

// Per-layer pass threshold (1e-5 for batchnorm, 1e-6 otherwise).
double gradcheck_threshold(const std::string& layer);

// Compares the layer's analytic backward against central finite differences
// (f(x+h) - f(x-h)) / (2h) elementwise on 64-bit tensors at a small fixed
// size. Returns the worst error across inputs and parameters, each tensor
// measured relative to its own gradient scale:
//   max_i |analytic_i - numeric_i| / max(1e-8, max_i |analytic_i|, max_i |numeric_i|).
// fault_inject, when nonzero, perturbs one analytic gradient entry before the
// comparison; the test harness uses it to prove the check can fail.
double gradcheck_layer(const std::string& layer, uint64_t seed, double step,
                       double fault_inject = 0.0);

// Every layer over seeds 1..seeds_per_layer, worst error per layer.
std::vector<GradCheckResult> run_gradcheck_suite(int seeds_per_layer, double step = 1e-5,
                                                 double fault_inject = 0.0);

}  // namespace rwr
