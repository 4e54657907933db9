#pragma once

#include <cstdint>
#include <functional>

#include "model/layers.hpp"

namespace rwr {

// Kaiming-normal (fan-in, ReLU gain sqrt(2)) for conv weights, a near-zero
// uniform for linear weights, zeros for biases, 1/0 for BN gamma/beta. One
// shared generator drawn in visitation order makes the result deterministic
// per seed.
void init_params(const std::function<void(const ParamVisitor&)>& visit,
                 uint64_t seed);

}  // namespace rwr
