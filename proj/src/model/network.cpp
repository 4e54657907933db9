#include "model/network.hpp"

#include "common/error.hpp"

namespace rwr {
namespace {

BackboneConfig matched_backbone(const FrontendConfig& fcfg) {
  BackboneConfig bcfg;
  bcfg.in_channels = fcfg.cg;
  return bcfg;
}

}  // namespace

RwResnet::RwResnet(const FrontendConfig& fcfg, const BackboneConfig& bcfg)
    : frontend_(fcfg), backbone_(bcfg) {
  if (bcfg.in_channels != fcfg.cg) {
    throw ConfigError("network: backbone in_channels=" +
                      std::to_string(bcfg.in_channels) +
                      " does not match frontend cg=" +
                      std::to_string(fcfg.cg));
  }
}

RwResnet::RwResnet(const FrontendConfig& fcfg)
    : RwResnet(fcfg, matched_backbone(fcfg)) {}

Tensor RwResnet::forward(const Tensor& wave) {
  return backbone_.forward(frontend_.extract(wave));
}

void RwResnet::backward(const Tensor& d_logits) {
  frontend_.backward(backbone_.backward(d_logits), /*need_d_input=*/false);
}

void RwResnet::zero_grad() {
  frontend_.zero_grad();
  backbone_.zero_grad();
}

void RwResnet::visit_params(const ParamVisitor& fn) {
  frontend_.visit_params(fn);
  backbone_.visit_params(fn);
}

void RwResnet::visit_buffers(const BufferVisitor& fn) {
  frontend_.visit_buffers(fn);
  backbone_.visit_buffers(fn);
}

void RwResnet::set_training(bool training) {
  frontend_.set_training(training);
  backbone_.set_training(training);
}

int64_t RwResnet::param_count() const {
  return frontend_.param_count() + backbone_.param_count();
}

}  // namespace rwr
