#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model/layers.hpp"

namespace rwr {

// Resnet34 layout at quarter width: 16 basic blocks in stages of 3/4/6/3,
// stage channels 16/32/64/128, stride 2 entering stages 2-4.
struct BackboneConfig {
  int64_t in_channels = 1;  // the feature map's cg
  std::array<int64_t, 4> stage_channels = {16, 32, 64, 128};
  std::array<int, 4> stage_blocks = {3, 4, 6, 3};
  int64_t embed_dim = 128;
  int64_t n_classes = 2;

  void validate() const;
};

// conv3x3-BN-ReLU-conv3x3-BN plus shortcut, ReLU after the sum. The shortcut
// is the identity unless stride or channel count changes, then 1x1 conv + BN.
class BasicBlock {
 public:
  BasicBlock(const std::string& name, int64_t cin, int64_t cout, int stride);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& d_out);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training);
  int64_t param_count() const;
  bool has_projection() const { return sc_conv_.has_value(); }

 private:
  Conv2dLayer conv1_, conv2_;
  BnLayer bn1_, bn2_;
  std::optional<Conv2dLayer> sc_conv_;
  std::optional<BnLayer> sc_bn_;
  ReluLayer relu1_, relu2_;
};

class Backbone {
 public:
  explicit Backbone(const BackboneConfig& cfg);
  // [B,in_channels,H,W] -> logits [B,n_classes]; spoof = 0, bonafide = 1.
  Tensor forward(const Tensor& fm);
  Tensor backward(const Tensor& d_logits, bool need_d_input = true);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training);
  int64_t param_count() const;
  const BackboneConfig& config() const { return cfg_; }
  // Spatial shapes [C,H,W] observed after the entry stack and each stage on
  // the most recent forward call.
  const std::vector<std::array<int64_t, 3>>& stage_shapes() const {
    return stage_shapes_;
  }
  // Pooled descriptor h and post-skip representation z of the last forward.
  const Tensor& last_pooled() const { return h_; }
  const Tensor& last_embed() const { return z_; }

 private:
  BackboneConfig cfg_;
  Conv2dLayer entry_conv_;
  BnLayer entry_bn_;
  ReluLayer entry_relu_;
  std::vector<BasicBlock> blocks_;
  AdaptiveAvgPoolLayer pool_;
  LinearLayer fc1_, fc2_, out_;
  ReluLayer fc_relu_;
  std::vector<std::array<int64_t, 3>> stage_shapes_;
  Tensor h_, z_;
};

// Total trainable scalars for a config; pinned by a golden-value test.
int64_t parameter_count(const BackboneConfig& cfg);

}  // namespace rwr
