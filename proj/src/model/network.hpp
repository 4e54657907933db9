#pragma once

#include "model/backbone.hpp"
#include "model/frontend.hpp"

namespace rwr {

// Whole pipeline: waveform -> feature map -> quarter-width Resnet34 -> logits.
class RwResnet {
 public:
  RwResnet(const FrontendConfig& fcfg, const BackboneConfig& bcfg);
  // Convenience: backbone sized to match the frontend (in_channels = cg).
  explicit RwResnet(const FrontendConfig& fcfg);

  // [B,1,input_len] -> [B,2]
  Tensor forward(const Tensor& wave);
  void backward(const Tensor& d_logits);
  void zero_grad();
  void visit_params(const ParamVisitor& fn);
  void visit_buffers(const BufferVisitor& fn);
  void set_training(bool training);
  int64_t param_count() const;

  Frontend& frontend() { return frontend_; }
  Backbone& backbone() { return backbone_; }
  const FrontendConfig& frontend_config() const { return frontend_.config(); }
  const BackboneConfig& backbone_config() const { return backbone_.config(); }

 private:
  Frontend frontend_;
  Backbone backbone_;
};

}  // namespace rwr
