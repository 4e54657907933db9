#include "train/checkpoint.hpp"

#include <cstring>
#include <map>
#include <sstream>
#include <vector>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {
namespace {

constexpr char kMagic[4] = {'R', 'W', 'R', 'N'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> 8 * i & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> 8 * i & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(size_t n, const std::string& what) {
    if (pos_ + n > bytes_.size()) {
      throw DataError("checkpoint '" + path_ + "': truncated while reading " +
                      what);
    }
  }
  uint32_t u32(const std::string& what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + static_cast<size_t>(i)])) << 8 * i;
    }
    pos_ += 4;
    return v;
  }
  uint64_t u64(const std::string& what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[pos_ + static_cast<size_t>(i)])) << 8 * i;
    }
    pos_ += 8;
    return v;
  }
  uint8_t u8(const std::string& what) {
    need(1, what);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  std::string str(size_t n, const std::string& what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void f32_into(float* dst, size_t count, const std::string& what) {
    need(4 * count, what);
    for (size_t i = 0; i < count; ++i) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + 4 * i + static_cast<size_t>(b)])) << 8 * b;
      }
      std::memcpy(dst + i, &bits, 4);
    }
    pos_ += 4 * count;
  }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string bytes_;
  std::string path_;
  size_t pos_ = 0;
};

std::string encode_config(const RwResnet& model) {
  const FrontendConfig& f = model.frontend_config();
  const BackboneConfig& b = model.backbone_config();
  std::ostringstream os;
  os << "variant=" << (f.reswavegram ? "reswavegram" : "wavegram") << "\n"
     << "c1=" << f.c1 << "\nc2=" << f.c2 << "\nc3=" << f.c3 << "\n"
     << "cg=" << f.cg << "\nstem_out=" << f.stem_out << "\n"
     << "input_len=" << f.input_len << "\n"
     << "bb_in_channels=" << b.in_channels << "\n"
     << "bb_channels=" << b.stage_channels[0] << "," << b.stage_channels[1]
     << "," << b.stage_channels[2] << "," << b.stage_channels[3] << "\n"
     << "bb_blocks=" << b.stage_blocks[0] << "," << b.stage_blocks[1] << ","
     << b.stage_blocks[2] << "," << b.stage_blocks[3] << "\n"
     << "embed_dim=" << b.embed_dim << "\nn_classes=" << b.n_classes << "\n";
  return os.str();
}

std::map<std::string, std::string> parse_kv(const std::string& text,
                                            const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("checkpoint '" + path + "': malformed config line '" +
                      line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int64_t kv_int(const std::map<std::string, std::string>& kv,
               const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw DataError("checkpoint '" + path + "': config missing key '" + key +
                    "'");
  }
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw DataError("checkpoint '" + path + "': config key '" + key +
                    "' has non-integer value '" + it->second + "'");
  }
}

std::array<int64_t, 4> kv_int4(const std::map<std::string, std::string>& kv,
                               const std::string& key,
                               const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw DataError("checkpoint '" + path + "': config missing key '" + key +
                    "'");
  }
  std::array<int64_t, 4> out{};
  std::istringstream is(it->second);
  std::string tok;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(is, tok, ',')) {
      throw DataError("checkpoint '" + path + "': config key '" + key +
                      "' needs 4 comma-separated values");
    }
    out[static_cast<size_t>(i)] = std::stoll(tok);
  }
  return out;
}

struct ParsedConfigs {
  FrontendConfig frontend;
  BackboneConfig backbone;
};

ParsedConfigs decode_config(const std::string& text, const std::string& path) {
  const auto kv = parse_kv(text, path);
  ParsedConfigs c;
  const auto vit = kv.find("variant");
  if (vit == kv.end() ||
      (vit->second != "reswavegram" && vit->second != "wavegram")) {
    throw DataError("checkpoint '" + path + "': bad or missing variant");
  }
  c.frontend.reswavegram = vit->second == "reswavegram";
  c.frontend.c1 = kv_int(kv, "c1", path);
  c.frontend.c2 = kv_int(kv, "c2", path);
  c.frontend.c3 = kv_int(kv, "c3", path);
  c.frontend.cg = kv_int(kv, "cg", path);
  c.frontend.stem_out = kv_int(kv, "stem_out", path);
  c.frontend.input_len = kv_int(kv, "input_len", path);
  c.backbone.in_channels = kv_int(kv, "bb_in_channels", path);
  const auto ch = kv_int4(kv, "bb_channels", path);
  c.backbone.stage_channels = ch;
  const auto bl = kv_int4(kv, "bb_blocks", path);
  for (int i = 0; i < 4; ++i) {
    c.backbone.stage_blocks[static_cast<size_t>(i)] =
        static_cast<int>(bl[static_cast<size_t>(i)]);
  }
  c.backbone.embed_dim = kv_int(kv, "embed_dim", path);
  c.backbone.n_classes = kv_int(kv, "n_classes", path);
  return c;
}

void for_each_tensor(RwResnet& model,
                     const std::function<void(const std::string&, Tensor&)>& fn) {
  model.visit_params(
      [&](const std::string& name, Tensor& value, Tensor&) { fn(name, value); });
  model.visit_buffers(fn);
}

void fill_from_reader(RwResnet& model, Reader& r) {
  const uint32_t count = r.u32("tensor count");
  std::map<std::string, Tensor*> want;
  std::vector<std::string> order;
  for_each_tensor(model, [&](const std::string& name, Tensor& value) {
    want[name] = &value;
    order.push_back(name);
  });
  if (count != want.size()) {
    throw DataError("checkpoint '" + r.path() + "': holds " +
                    std::to_string(count) + " tensors, model needs " +
                    std::to_string(want.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.u32("tensor name length");
    const std::string name = r.str(name_len, "tensor name");
    const uint8_t dtype = r.u8("dtype of '" + name + "'");
    if (dtype != kDtypeF32) {
      throw DataError("checkpoint '" + r.path() + "': tensor '" + name +
                      "' has unsupported dtype tag " + std::to_string(dtype));
    }
    const uint32_t rank = r.u32("rank of '" + name + "'");
    std::vector<int64_t> dims;
    for (uint32_t d = 0; d < rank; ++d) {
      dims.push_back(static_cast<int64_t>(r.u64("dims of '" + name + "'")));
    }
    const auto it = want.find(name);
    if (it == want.end()) {
      throw DataError("checkpoint '" + r.path() + "': tensor '" + name +
                      "' does not exist in the model");
    }
    Tensor& dst = *it->second;
    if (dst.shape() != dims) {
      throw DataError("checkpoint '" + r.path() + "': tensor '" + name +
                      "' has shape " + Tensor(dims).shape_str() +
                      ", model wants " + dst.shape_str());
    }
    r.f32_into(dst.data(), static_cast<size_t>(dst.numel()),
               "payload of '" + name + "'");
    want.erase(it);
  }
  if (!want.empty()) {
    throw DataError("checkpoint '" + r.path() + "': missing tensor '" +
                    want.begin()->first + "'");
  }
  if (!r.done()) {
    throw DataError("checkpoint '" + r.path() + "': trailing bytes after last tensor");
  }
}

Reader open_reader(const std::string& path) {
  Reader r(read_file(path, "checkpoint"), path);
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint '" + path + "': bad magic bytes");
  }
  const uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw DataError("checkpoint '" + path + "': unknown format version " +
                    std::to_string(version));
  }
  return r;
}

}  // namespace

void save_checkpoint(RwResnet& model, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  const std::string config = encode_config(model);
  put_u32(out, static_cast<uint32_t>(config.size()));
  out += config;

  uint32_t count = 0;
  for_each_tensor(model, [&](const std::string&, Tensor&) { ++count; });
  put_u32(out, count);
  for_each_tensor(model, [&](const std::string& name, Tensor& value) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(kDtypeF32));
    put_u32(out, static_cast<uint32_t>(value.rank()));
    for (int64_t d : value.shape()) put_u64(out, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < value.numel(); ++i) put_f32(out, value[i]);
  });

  write_file_atomic(path, out, "checkpoint");
}

std::unique_ptr<RwResnet> load_checkpoint(const std::string& path) {
  Reader r = open_reader(path);
  const uint32_t config_len = r.u32("config length");
  const std::string config = r.str(config_len, "config block");
  const ParsedConfigs cfgs = decode_config(config, path);
  auto model = std::make_unique<RwResnet>(cfgs.frontend, cfgs.backbone);
  fill_from_reader(*model, r);
  return model;
}

void load_checkpoint_into(RwResnet& model, const std::string& path) {
  Reader r = open_reader(path);
  const uint32_t config_len = r.u32("config length");
  const std::string stored = r.str(config_len, "config block");
  const std::string expected = encode_config(model);
  if (stored != expected) {
    throw DataError("checkpoint '" + path +
                    "': architecture config does not match the model");
  }
  fill_from_reader(model, r);
}

}  // namespace rwr
