#include "model/backbone.hpp"

#include "common/error.hpp"

namespace rwr {

void BackboneConfig::validate() const {
  if (in_channels <= 0 || embed_dim <= 0 || n_classes <= 0) {
    throw ConfigError("backbone config: dimensions must be positive");
  }
  for (int64_t c : stage_channels) {
    if (c <= 0) throw ConfigError("backbone config: stage channels must be positive");
  }
  for (int b : stage_blocks) {
    if (b <= 0) throw ConfigError("backbone config: stage blocks must be positive");
  }
}

BasicBlock::BasicBlock(const std::string& name, int64_t cin, int64_t cout,
                       int stride)
    : conv1_(name + ".conv1", cin, cout, 3, 3, stride, 1),
      conv2_(name + ".conv2", cout, cout, 3, 3, 1, 1),
      bn1_(name + ".bn1", cout),
      bn2_(name + ".bn2", cout) {
  if (stride != 1 || cin != cout) {
    sc_conv_.emplace(name + ".sc_conv", cin, cout, 1, 1, stride, 0);
    sc_bn_.emplace(name + ".sc_bn", cout);
  }
}

Tensor BasicBlock::forward(const Tensor& x) {
  Tensor main = bn2_.forward(
      conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x)))));
  const Tensor shortcut =
      sc_conv_ ? sc_bn_->forward(sc_conv_->forward(x)) : x;
  return relu2_.forward(add(main, shortcut));
}

Tensor BasicBlock::backward(const Tensor& d_out) {
  const Tensor d_sum = relu2_.backward(d_out);
  Tensor d_x = conv1_.backward(
      bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d_sum)))));
  if (sc_conv_) {
    d_x = add(d_x, sc_conv_->backward(sc_bn_->backward(d_sum)));
  } else {
    d_x = add(d_x, d_sum);
  }
  return d_x;
}

void BasicBlock::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  bn1_.zero_grad();
  bn2_.zero_grad();
  if (sc_conv_) {
    sc_conv_->zero_grad();
    sc_bn_->zero_grad();
  }
}

void BasicBlock::visit_params(const ParamVisitor& fn) {
  conv1_.visit_params(fn);
  bn1_.visit_params(fn);
  conv2_.visit_params(fn);
  bn2_.visit_params(fn);
  if (sc_conv_) {
    sc_conv_->visit_params(fn);
    sc_bn_->visit_params(fn);
  }
}

void BasicBlock::visit_buffers(const BufferVisitor& fn) {
  bn1_.visit_buffers(fn);
  bn2_.visit_buffers(fn);
  if (sc_bn_) sc_bn_->visit_buffers(fn);
}

void BasicBlock::set_training(bool training) {
  bn1_.set_training(training);
  bn2_.set_training(training);
  if (sc_bn_) sc_bn_->set_training(training);
}

int64_t BasicBlock::param_count() const {
  int64_t n = conv1_.param_count() + conv2_.param_count() +
              bn1_.param_count() + bn2_.param_count();
  if (sc_conv_) n += sc_conv_->param_count() + sc_bn_->param_count();
  return n;
}

Backbone::Backbone(const BackboneConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      entry_conv_("backbone.entry.conv", cfg.in_channels,
                  cfg.stage_channels[0], 3, 3, 1, 1),
      entry_bn_("backbone.entry.bn", cfg.stage_channels[0]),
      fc1_("backbone.fc1", cfg.stage_channels[3], cfg.embed_dim),
      fc2_("backbone.fc2", cfg.embed_dim, cfg.stage_channels[3]),
      out_("backbone.out", cfg.stage_channels[3], cfg.n_classes) {
  int64_t cin = cfg.stage_channels[0];
  for (int stage = 0; stage < 4; ++stage) {
    const int64_t cout = cfg.stage_channels[static_cast<size_t>(stage)];
    for (int b = 0; b < cfg.stage_blocks[static_cast<size_t>(stage)]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      const std::string name = "backbone.res" + std::to_string(stage + 1) +
                               "." + std::to_string(b);
      blocks_.emplace_back(name, cin, cout, stride);
      cin = cout;
    }
  }
}

Tensor Backbone::forward(const Tensor& fm) {
  if (fm.rank() != 4 || fm.dim(1) != cfg_.in_channels) {
    throw Error("backbone: want input [B," + std::to_string(cfg_.in_channels) +
                ",H,W], got " + fm.shape_str());
  }
  if (fm.dim(2) < 8 || fm.dim(3) < 8) {
    throw Error("backbone: spatial dims of " + fm.shape_str() +
                " too small for three stride-2 stages (need >= 8)");
  }
  stage_shapes_.clear();
  Tensor x = entry_relu_.forward(entry_bn_.forward(entry_conv_.forward(fm)));
  stage_shapes_.push_back({x.dim(1), x.dim(2), x.dim(3)});
  size_t i = 0;
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < cfg_.stage_blocks[static_cast<size_t>(stage)]; ++b) {
      x = blocks_[i++].forward(x);
    }
    stage_shapes_.push_back({x.dim(1), x.dim(2), x.dim(3)});
  }
  h_ = pool_.forward(x);  // [B, stage_channels[3]]
  z_ = add(fc2_.forward(fc_relu_.forward(fc1_.forward(h_))), h_);
  return out_.forward(z_);
}

Tensor Backbone::backward(const Tensor& d_logits, bool need_d_input) {
  const Tensor d_z = out_.backward(d_logits);
  // z = fc2(relu(fc1(h))) + h: the skip adds d_z straight onto d_h.
  Tensor d_h =
      add(fc1_.backward(fc_relu_.backward(fc2_.backward(d_z))), d_z);
  Tensor d = pool_.backward(d_h);
  for (size_t i = blocks_.size(); i-- > 0;) {
    d = blocks_[i].backward(d);
  }
  return entry_conv_.backward(
      entry_bn_.backward(entry_relu_.backward(d)), need_d_input);
}

void Backbone::zero_grad() {
  entry_conv_.zero_grad();
  entry_bn_.zero_grad();
  for (BasicBlock& b : blocks_) b.zero_grad();
  fc1_.zero_grad();
  fc2_.zero_grad();
  out_.zero_grad();
}

void Backbone::visit_params(const ParamVisitor& fn) {
  entry_conv_.visit_params(fn);
  entry_bn_.visit_params(fn);
  for (BasicBlock& b : blocks_) b.visit_params(fn);
  fc1_.visit_params(fn);
  fc2_.visit_params(fn);
  out_.visit_params(fn);
}

void Backbone::visit_buffers(const BufferVisitor& fn) {
  entry_bn_.visit_buffers(fn);
  for (BasicBlock& b : blocks_) b.visit_buffers(fn);
}

void Backbone::set_training(bool training) {
  entry_bn_.set_training(training);
  for (BasicBlock& b : blocks_) b.set_training(training);
}

int64_t Backbone::param_count() const {
  int64_t n = entry_conv_.param_count() + entry_bn_.param_count() +
              fc1_.param_count() + fc2_.param_count() + out_.param_count();
  for (const BasicBlock& b : blocks_) n += b.param_count();
  return n;
}

int64_t parameter_count(const BackboneConfig& cfg) {
  return Backbone(cfg).param_count();
}

}  // namespace rwr
