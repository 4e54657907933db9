#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "model/layers.hpp"

namespace rwr {

// Channel plan of the waveform front-end. The three block outputs carry
// (c1, c2, c3) channels; the final channel axis is split into cg groups of
// F = c3/cg frequency bins.
struct FrontendConfig {
  int64_t c1 = 64;
  int64_t c2 = 128;
  int64_t c3 = 128;
  int64_t cg = 1;
  bool reswavegram = true;  // false selects the plain Wavegram blocks
  int64_t stem_out = 64;
  int64_t input_len = 128000;

  // Presets S=(64,64,64), M=(64,128,128), L=(64,128,256).
  static FrontendConfig preset(char size);

  int64_t frames() const { return input_len / 320; }    // stride 5, 3 pools of 4
  int64_t features() const { return c3 / cg; }
  void validate() const;
};

// Two same-length convolutions (dilations 1 and 2), each followed by BN, with
// MaxPool(4) at the end. With `residual` a Conv1D(k3)+BN branch is added and
// the closing ReLU moves after the sum.
class Conv1dBlock {
 public:
  Conv1dBlock(const std::string& name, int64_t cin, int64_t cout,
              bool residual);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out, bool need_d_input = true);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training);
  int64_t param_count() const;
  bool residual() const { return res_conv_.has_value(); }
  BnLayer& res_bn() { return *res_bn_; }
  BnLayer& main_bn2() { return bn2_; }

 private:
  Conv1dLayer conv1_, conv2_;
  BnLayer bn1_, bn2_;
  std::optional<Conv1dLayer> res_conv_;
  std::optional<BnLayer> res_bn_;
  ReluLayer relu1_, relu2_;
  MaxPool1dLayer pool_;
};

// Splits [B,C,T] channels into cg contiguous groups, group-major:
// out[b,g,t,f] = x[b, g*F + f, t] with F = C/cg.
Tensor channel_to_featuremap(const Tensor& x, int64_t cg);
// Exact inverse, also the gradient routing for the forward permutation.
Tensor featuremap_to_channel(const Tensor& fm);

class Frontend {
 public:
  explicit Frontend(const FrontendConfig& cfg);
  // [B,1,input_len] -> [B,cg,T,F]
  Tensor extract(const Tensor& wave);
  // [B,cg,T,F] -> [B,1,input_len]
  Tensor backward(const Tensor& d_fm, bool need_d_input = false);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training);
  int64_t param_count() const;
  const FrontendConfig& config() const { return cfg_; }
  Conv1dBlock& block(int i);

 private:
  FrontendConfig cfg_;
  Conv1dLayer stem_conv_;
  BnLayer stem_bn_;
  ReluLayer stem_relu_;
  Conv1dBlock b1_, b2_, b3_;
};

}  // namespace rwr
