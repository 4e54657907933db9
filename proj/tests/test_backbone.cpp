#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"
#include "model/backbone.hpp"
#include "model/network.hpp"
#include "train/init.hpp"

using namespace rwr;

namespace {

Tensor random_tensor(uint64_t seed, std::vector<int64_t> shape) {
  Rng rng(seed);
  Tensor x(std::move(shape));
  for (int64_t i = 0; i < x.numel(); ++i) {
    x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  return x;
}

void init_backbone(Backbone& bb, uint64_t seed) {
  init_params([&bb](const ParamVisitor& fn) { bb.visit_params(fn); }, seed);
}

}  // namespace

TEST_CASE("basic block keeps the shape at stride 1") {
  BasicBlock block("b", 16, 16, 1);
  CHECK_FALSE(block.has_projection());
  init_params([&block](const ParamVisitor& fn) { block.visit_params(fn); }, 1);
  const Tensor y = block.forward(random_tensor(2, {2, 16, 12, 10}));
  CHECK(y.shape() == std::vector<int64_t>{2, 16, 12, 10});
}

TEST_CASE("basic block halves odd extents with floor at stride 2") {
  BasicBlock block("b", 16, 32, 2);
  CHECK(block.has_projection());
  init_params([&block](const ParamVisitor& fn) { block.visit_params(fn); }, 3);
  const Tensor y = block.forward(random_tensor(4, {1, 16, 25, 13}));
  CHECK(y.shape() == std::vector<int64_t>{1, 32, 13, 7});
}

TEST_CASE("zero-weight block with identity shortcut passes relu of input") {
  BasicBlock block("b", 8, 8, 1);
  // Freshly constructed conv weights are zero; BN of an all-zero main path is
  // its beta, also zero. The sum is then the bare shortcut.
  const Tensor x = random_tensor(6, {2, 8, 9, 9});
  const Tensor y = block.forward(x);
  REQUIRE(y.same_shape(x));
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y[i] == std::max(0.0f, x[i]));
  }
}

TEST_CASE("backbone walks the documented stage chain at T=400") {
  BackboneConfig cfg;
  cfg.in_channels = 1;
  Backbone bb(cfg);
  init_backbone(bb, 5);
  const Tensor logits = bb.forward(random_tensor(7, {1, 1, 400, 128}));
  CHECK(logits.shape() == std::vector<int64_t>{1, 2});
  CHECK(logits.all_finite());
  const std::vector<std::array<int64_t, 3>> want = {{16, 400, 128},
                                                    {16, 400, 128},
                                                    {32, 200, 64},
                                                    {64, 100, 32},
                                                    {128, 50, 16}};
  CHECK(bb.stage_shapes() == want);
}

TEST_CASE("backbone floors odd spatial sizes through the strided stages") {
  BackboneConfig cfg;
  cfg.in_channels = 2;
  Backbone bb(cfg);
  init_backbone(bb, 8);
  bb.forward(random_tensor(9, {1, 2, 25, 50}));
  const std::vector<std::array<int64_t, 3>> want = {{16, 25, 50},
                                                    {16, 25, 50},
                                                    {32, 13, 25},
                                                    {64, 7, 13},
                                                    {128, 4, 7}};
  CHECK(bb.stage_shapes() == want);
}

TEST_CASE("head skip: zeroed fc path leaves z equal to the pooled h") {
  BackboneConfig cfg;
  Backbone bb(cfg);
  init_backbone(bb, 10);
  bb.visit_params([](const std::string& name, Tensor& value, Tensor&) {
    if (name.rfind("backbone.fc", 0) == 0) {
      std::fill(value.vec().begin(), value.vec().end(), 0.0f);
    }
  });
  bb.forward(random_tensor(11, {2, 1, 16, 16}));
  const Tensor& h = bb.last_pooled();
  const Tensor& z = bb.last_embed();
  REQUIRE(h.same_shape(z));
  for (int64_t i = 0; i < h.numel(); ++i) {
    CHECK(z[i] == h[i]);
  }
}

TEST_CASE("head applies no relu after the skip join") {
  // h is pooled from a post-ReLU map, so it is nonnegative; drive z below
  // zero through the fc2 bias. A stray ReLU after the join would clamp it.
  BackboneConfig cfg;
  Backbone bb(cfg);
  init_backbone(bb, 12);
  bb.visit_params([](const std::string& name, Tensor& value, Tensor&) {
    if (name == "backbone.fc2.weight") {
      std::fill(value.vec().begin(), value.vec().end(), 0.0f);
    }
    if (name == "backbone.fc2.bias") {
      std::fill(value.vec().begin(), value.vec().end(), -100.0f);
    }
  });
  bb.set_training(false);
  bb.forward(random_tensor(13, {1, 1, 8, 8}));
  const Tensor& h = bb.last_pooled();
  const Tensor& z = bb.last_embed();
  REQUIRE(z.numel() == 128);
  for (int64_t i = 0; i < z.numel(); ++i) {
    CHECK(z[i] == h[i] - 100.0f);
    CHECK(z[i] < 0.0f);
  }
}

TEST_CASE("quarter-width parameter count is pinned") {
  // Independent tally: conv = cout*cin*k + cout bias, BN = 2*cout, and a
  // 1x1 projection with BN on the first block of each strided stage.
  const auto conv = [](int64_t cout, int64_t cin, int64_t k) {
    return cout * cin * k + cout;
  };
  const auto bn = [](int64_t c) { return 2 * c; };
  const std::array<int64_t, 4> ch = {16, 32, 64, 128};
  const std::array<int, 4> nb = {3, 4, 6, 3};
  int64_t want = conv(16, 1, 9) + bn(16);
  int64_t cin = 16;
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < nb[static_cast<size_t>(s)]; ++b) {
      const int64_t cout = ch[static_cast<size_t>(s)];
      want += conv(cout, cin, 9) + bn(cout);
      want += conv(cout, cout, 9) + bn(cout);
      if (s > 0 && b == 0) want += conv(cout, cin, 1) + bn(cout);
      cin = cout;
    }
  }
  want += (128 * 128 + 128) + (128 * 128 + 128) + (2 * 128 + 2);
  CHECK(want == 1368450);
  BackboneConfig cfg;
  CHECK(parameter_count(cfg) == want);
}

TEST_CASE("parameter count grows with the embedding width") {
  BackboneConfig narrow;
  BackboneConfig wide;
  wide.embed_dim = 256;
  // fc1 grows by 128*128 weights + 128 biases, fc2 by 128*128 weights.
  CHECK(parameter_count(wide) ==
        parameter_count(narrow) + 2 * 128 * 128 + 128);
}

TEST_CASE("forward is deterministic for fixed parameters") {
  BackboneConfig cfg;
  Backbone bb(cfg);
  init_backbone(bb, 21);
  bb.set_training(false);
  const Tensor x = random_tensor(22, {2, 1, 12, 12});
  const Tensor a = bb.forward(x);
  const Tensor b = bb.forward(x);
  CHECK(a.vec() == b.vec());
}

TEST_CASE("eval-mode logits are batch-permutation equivariant") {
  BackboneConfig cfg;
  Backbone bb(cfg);
  init_backbone(bb, 31);
  bb.set_training(false);
  const Tensor x = random_tensor(32, {4, 1, 10, 10});
  const Tensor y = bb.forward(x);
  // Reverse the batch.
  Tensor xr(x.shape());
  const int64_t stride = x.numel() / 4;
  for (int64_t b = 0; b < 4; ++b) {
    std::copy_n(x.data() + b * stride, stride, xr.data() + (3 - b) * stride);
  }
  const Tensor yr = bb.forward(xr);
  for (int64_t b = 0; b < 4; ++b) {
    CHECK(yr.at(3 - b, 0) == y.at(b, 0));
    CHECK(yr.at(3 - b, 1) == y.at(b, 1));
  }
}

TEST_CASE("logits stay finite across random seeds") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    BackboneConfig cfg;
    Backbone bb(cfg);
    init_backbone(bb, seed);
    const Tensor y = bb.forward(random_tensor(seed + 100, {2, 1, 9, 9}));
    CHECK(y.all_finite());
  }
}

TEST_CASE("backbone rejects undersized or mismatched input") {
  BackboneConfig cfg;
  Backbone bb(cfg);
  CHECK_THROWS_AS(bb.forward(Tensor({1, 2, 16, 16})), Error);
  CHECK_THROWS_AS(bb.forward(Tensor({1, 1, 7, 16})), Error);
  CHECK_THROWS_AS(bb.forward(Tensor({1, 1, 16, 7})), Error);
  CHECK_THROWS_AS(bb.forward(Tensor({1, 16, 16})), Error);
}

TEST_CASE("network wires frontend groups into backbone channels") {
  FrontendConfig fcfg = FrontendConfig::preset('S');
  fcfg.cg = 2;
  fcfg.input_len = 3200;
  RwResnet net(fcfg);
  CHECK(net.backbone_config().in_channels == 2);
  init_params([&net](const ParamVisitor& fn) { net.visit_params(fn); }, 41);
  const Tensor logits = net.forward(random_tensor(42, {2, 1, 3200}));
  CHECK(logits.shape() == std::vector<int64_t>{2, 2});
  CHECK(logits.all_finite());

  FrontendConfig bad = FrontendConfig::preset('S');
  bad.cg = 2;
  bad.input_len = 3200;
  BackboneConfig bcfg;
  bcfg.in_channels = 4;
  CHECK_THROWS_AS(RwResnet(bad, bcfg), ConfigError);
}

TEST_CASE("network gradients reach both ends") {
  FrontendConfig fcfg = FrontendConfig::preset('S');
  fcfg.input_len = 2560;
  RwResnet net(fcfg);
  init_params([&net](const ParamVisitor& fn) { net.visit_params(fn); }, 51);
  const Tensor logits = net.forward(random_tensor(52, {2, 1, 2560}));
  net.zero_grad();
  Tensor d(logits.shape());
  d[0] = 1.0f;
  d[1] = -1.0f;
  d[2] = 0.5f;
  d[3] = -0.5f;
  net.backward(d);
  double stem = 0.0, out = 0.0;
  net.visit_params([&](const std::string& name, Tensor&, Tensor& grad) {
    double* acc = nullptr;
    if (name == "frontend.stem.conv.weight") acc = &stem;
    if (name == "backbone.out.weight") acc = &out;
    if (acc) {
      for (int64_t i = 0; i < grad.numel(); ++i) {
        *acc += static_cast<double>(grad[i]) * grad[i];
      }
    }
  });
  CHECK(std::sqrt(stem) > 1e-12);
  CHECK(std::sqrt(out) > 1e-12);
}
