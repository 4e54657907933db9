#include "model/frontend.hpp"

#include "common/error.hpp"

namespace rwr {

FrontendConfig FrontendConfig::preset(char size) {
  FrontendConfig cfg;
  switch (size) {
    case 'S':
      cfg.c1 = 64, cfg.c2 = 64, cfg.c3 = 64;
      break;
    case 'M':
      cfg.c1 = 64, cfg.c2 = 128, cfg.c3 = 128;
      break;
    case 'L':
      cfg.c1 = 64, cfg.c2 = 128, cfg.c3 = 256;
      break;
    default:
      throw ConfigError(std::string("unknown frontend preset '") + size +
                        "' (want S, M or L)");
  }
  return cfg;
}

void FrontendConfig::validate() const {
  if (c1 <= 0 || c2 <= 0 || c3 <= 0 || cg <= 0 || stem_out <= 0) {
    throw ConfigError("frontend config: channel counts must be positive");
  }
  if (c3 % cg != 0) {
    throw ConfigError("frontend config: c3=" + std::to_string(c3) +
                      " not divisible by cg=" + std::to_string(cg));
  }
  if (input_len <= 0 || input_len % 320 != 0) {
    throw ConfigError("frontend config: input_len=" +
                      std::to_string(input_len) +
                      " must be a positive multiple of 320");
  }
}

Conv1dBlock::Conv1dBlock(const std::string& name, int64_t cin, int64_t cout,
                         bool residual)
    : conv1_(name + ".conv1", cin, cout, 3, ConvSpec{1, 1, 1}),
      conv2_(name + ".conv2", cout, cout, 3, ConvSpec{1, 2, 2}),
      bn1_(name + ".bn1", cout),
      bn2_(name + ".bn2", cout),
      pool_(4) {
  if (residual) {
    res_conv_.emplace(name + ".res_conv", cin, cout, 3, ConvSpec{1, 1, 1});
    res_bn_.emplace(name + ".res_bn", cout);
  }
}

Tensor Conv1dBlock::forward(const Tensor& x) {
  Tensor main = bn2_.forward(
      conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x)))));
  if (res_conv_) {
    main = add(main, res_bn_->forward(res_conv_->forward(x)));
  }
  return pool_.forward(relu2_.forward(main));
}

Tensor Conv1dBlock::backward(const Tensor& d_out, bool need_d_input) {
  const Tensor d_sum = relu2_.backward(pool_.backward(d_out));
  Tensor d_x = conv1_.backward(
      bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d_sum)))),
      need_d_input);
  if (res_conv_) {
    Tensor d_res = res_conv_->backward(res_bn_->backward(d_sum), need_d_input);
    if (need_d_input) d_x = add(d_x, d_res);
  }
  return d_x;
}

void Conv1dBlock::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  bn1_.zero_grad();
  bn2_.zero_grad();
  if (res_conv_) {
    res_conv_->zero_grad();
    res_bn_->zero_grad();
  }
}

void Conv1dBlock::visit_params(const ParamVisitor& fn) {
  conv1_.visit_params(fn);
  bn1_.visit_params(fn);
  conv2_.visit_params(fn);
  bn2_.visit_params(fn);
  if (res_conv_) {
    res_conv_->visit_params(fn);
    res_bn_->visit_params(fn);
  }
}

void Conv1dBlock::visit_buffers(const BufferVisitor& fn) {
  bn1_.visit_buffers(fn);
  bn2_.visit_buffers(fn);
  if (res_bn_) res_bn_->visit_buffers(fn);
}

void Conv1dBlock::set_training(bool training) {
  bn1_.set_training(training);
  bn2_.set_training(training);
  if (res_bn_) res_bn_->set_training(training);
}

int64_t Conv1dBlock::param_count() const {
  int64_t n = conv1_.param_count() + conv2_.param_count() +
              bn1_.param_count() + bn2_.param_count();
  if (res_conv_) n += res_conv_->param_count() + res_bn_->param_count();
  return n;
}

Tensor channel_to_featuremap(const Tensor& x, int64_t cg) {
  if (x.rank() != 3) {
    throw Error("channel_to_featuremap: want rank 3, got " + x.shape_str());
  }
  const int64_t b_n = x.dim(0), c = x.dim(1), t_n = x.dim(2);
  if (cg <= 0 || c % cg != 0) {
    throw Error("channel_to_featuremap: " + std::to_string(c) +
                " channels not divisible into " + std::to_string(cg) +
                " groups");
  }
  const int64_t f_n = c / cg;
  Tensor out({b_n, cg, t_n, f_n});
  for (int64_t b = 0; b < b_n; ++b) {
    for (int64_t g = 0; g < cg; ++g) {
      for (int64_t f = 0; f < f_n; ++f) {
        const float* __restrict__ src = x.data() + ((b * c) + g * f_n + f) * t_n;
        float* __restrict__ dst = out.data() + (((b * cg) + g) * t_n) * f_n + f;
        for (int64_t t = 0; t < t_n; ++t) {
          dst[t * f_n] = src[t];
        }
      }
    }
  }
  return out;
}

Tensor featuremap_to_channel(const Tensor& fm) {
  if (fm.rank() != 4) {
    throw Error("featuremap_to_channel: want rank 4, got " + fm.shape_str());
  }
  const int64_t b_n = fm.dim(0), cg = fm.dim(1), t_n = fm.dim(2),
                f_n = fm.dim(3);
  const int64_t c = cg * f_n;
  Tensor out({b_n, c, t_n});
  for (int64_t b = 0; b < b_n; ++b) {
    for (int64_t g = 0; g < cg; ++g) {
      for (int64_t f = 0; f < f_n; ++f) {
        const float* __restrict__ src =
            fm.data() + (((b * cg) + g) * t_n) * f_n + f;
        float* __restrict__ dst = out.data() + ((b * c) + g * f_n + f) * t_n;
        for (int64_t t = 0; t < t_n; ++t) {
          dst[t] = src[t * f_n];
        }
      }
    }
  }
  return out;
}

Frontend::Frontend(const FrontendConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      stem_conv_("frontend.stem.conv", 1, cfg.stem_out, 11, ConvSpec{5, 5, 1}),
      stem_bn_("frontend.stem.bn", cfg.stem_out),
      b1_("frontend.block1", cfg.stem_out, cfg.c1, cfg.reswavegram),
      b2_("frontend.block2", cfg.c1, cfg.c2, cfg.reswavegram),
      b3_("frontend.block3", cfg.c2, cfg.c3, cfg.reswavegram) {}

Tensor Frontend::extract(const Tensor& wave) {
  if (wave.rank() != 3 || wave.dim(1) != 1 || wave.dim(2) != cfg_.input_len) {
    throw Error("frontend: want input [B,1," + std::to_string(cfg_.input_len) +
                "], got " + wave.shape_str());
  }
  Tensor x = stem_relu_.forward(stem_bn_.forward(stem_conv_.forward(wave)));
  x = b3_.forward(b2_.forward(b1_.forward(x)));
  return channel_to_featuremap(x, cfg_.cg);
}

Tensor Frontend::backward(const Tensor& d_fm, bool need_d_input) {
  Tensor d = featuremap_to_channel(d_fm);
  d = b1_.backward(b2_.backward(b3_.backward(d)));
  return stem_conv_.backward(
      stem_bn_.backward(stem_relu_.backward(d)), need_d_input);
}

void Frontend::zero_grad() {
  stem_conv_.zero_grad();
  stem_bn_.zero_grad();
  b1_.zero_grad();
  b2_.zero_grad();
  b3_.zero_grad();
}

void Frontend::visit_params(const ParamVisitor& fn) {
  stem_conv_.visit_params(fn);
  stem_bn_.visit_params(fn);
  b1_.visit_params(fn);
  b2_.visit_params(fn);
  b3_.visit_params(fn);
}

void Frontend::visit_buffers(const BufferVisitor& fn) {
  stem_bn_.visit_buffers(fn);
  b1_.visit_buffers(fn);
  b2_.visit_buffers(fn);
  b3_.visit_buffers(fn);
}

void Frontend::set_training(bool training) {
  stem_bn_.set_training(training);
  b1_.set_training(training);
  b2_.set_training(training);
  b3_.set_training(training);
}

int64_t Frontend::param_count() const {
  return stem_conv_.param_count() + stem_bn_.param_count() +
         b1_.param_count() + b2_.param_count() + b3_.param_count();
}

Conv1dBlock& Frontend::block(int i) {
  switch (i) {
    case 1:
      return b1_;
    case 2:
      return b2_;
    case 3:
      return b3_;
    default:
      throw Error("frontend: block index " + std::to_string(i) +
                  " out of range");
  }
}

}  // namespace rwr
