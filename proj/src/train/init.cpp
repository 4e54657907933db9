#include "train/init.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace rwr {
namespace {

bool ends_with(const std::string& s, const char* suffix) {
  const std::string suf(suffix);
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

void init_params(const std::function<void(const ParamVisitor&)>& visit,
                 uint64_t seed) {
  Rng rng(derive_seed(seed, 0xC0DEu));
  visit([&](const std::string& name, Tensor& value, Tensor& grad) {
    (void)grad;
    if (ends_with(name, ".weight")) {
      if (value.rank() < 2) {
        throw Error("init: weight '" + name + "' has rank " +
                    std::to_string(value.rank()));
      }
      const int64_t fan_in = value.numel() / value.dim(0);
      if (value.rank() >= 3) {
        // Convolutions feed ReLUs; Kaiming fan-in keeps their output
        // variance steady through the stack.
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (int64_t i = 0; i < value.numel(); ++i) {
          value[i] = static_cast<float>(std_dev * rng.normal());
        }
      } else {
        // Linear layers start almost silent, uniform(-1/fan_in, 1/fan_in):
        // the untrained head then scores near the uniform posterior while
        // still breaking symmetry so gradients reach every unit.
        const double bound = 1.0 / static_cast<double>(fan_in);
        for (int64_t i = 0; i < value.numel(); ++i) {
          value[i] = static_cast<float>(rng.uniform(-bound, bound));
        }
      }
    } else if (ends_with(name, ".bias") || ends_with(name, ".beta")) {
      std::fill(value.vec().begin(), value.vec().end(), 0.0f);
    } else if (ends_with(name, ".gamma")) {
      std::fill(value.vec().begin(), value.vec().end(), 1.0f);
    } else {
      throw Error("init: unrecognized parameter kind '" + name + "'");
    }
  });
}

}  // namespace rwr
