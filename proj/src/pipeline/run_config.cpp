#include "pipeline/run_config.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int64_t parse_int(const std::string& value, const std::string& key,
                  const std::string& where) {
  try {
    size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": key '" + key + "' wants an integer, got '" +
                      value + "'");
  }
}

double parse_real(const std::string& value, const std::string& key,
                  const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": key '" + key + "' wants a number, got '" +
                      value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key,
                const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(where + ": key '" + key +
                    "' wants true/false, got '" + value + "'");
}

}  // namespace

void apply_config_kv(RunConfig& cfg, const std::string& key,
                     const std::string& value, const std::string& where) {
  const auto as_int = [&] { return parse_int(value, key, where); };
  const auto as_real = [&] { return parse_real(value, key, where); };
  const auto as_bool = [&] { return parse_bool(value, key, where); };

  if (key == "variant") cfg.variant = value;
  else if (key == "preset") cfg.preset = value;
  else if (key == "c1") cfg.c1 = as_int();
  else if (key == "c2") cfg.c2 = as_int();
  else if (key == "c3") cfg.c3 = as_int();
  else if (key == "cg") cfg.cg = as_int();
  else if (key == "input_len") cfg.input_len = as_int();
  else if (key == "epochs") cfg.epochs = static_cast<int>(as_int());
  else if (key == "batch") cfg.batch = static_cast<int>(as_int());
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(as_int());
  else if (key == "t0") cfg.t0 = static_cast<int>(as_int());
  else if (key == "t_mult") cfg.t_mult = static_cast<int>(as_int());
  else if (key == "lr0") cfg.lr0 = as_real();
  else if (key == "eta_min") cfg.eta_min = as_real();
  else if (key == "select_by_dev") cfg.select_by_dev = as_bool();
  else if (key == "random_crop") cfg.random_crop = as_bool();
  else if (key == "synth") cfg.synth = static_cast<int>(as_int());
  else if (key == "synth_len") cfg.synth_len = as_int();
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "train_protocol") cfg.train_protocol = value;
  else if (key == "dev_protocol") cfg.dev_protocol = value;
  else if (key == "eval_protocol") cfg.eval_protocol = value;
  else if (key == "audio_root") cfg.audio_root = value;
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "score_output") cfg.score_output = value;
  else if (key == "score_file") cfg.score_file = value;
  else if (key == "report_output") cfg.report_output = value;
  else if (key == "cost_file") cfg.cost_file = value;
  else {
    throw ConfigError(where + ": unknown config key '" + key + "'");
  }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(where + ": empty key");
    }
    apply_config_kv(cfg, key, value, where);
  }
  cfg.validate();
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  apply_config_text(cfg, read_file(path, "config file"));
  return cfg;
}

void RunConfig::validate() const {
  if (variant != "wavegram" && variant != "reswavegram") {
    throw ConfigError("variant must be wavegram or reswavegram, got '" +
                      variant + "'");
  }
  const int explicit_c = (c1 > 0) + (c2 > 0) + (c3 > 0);
  if (explicit_c != 0 && explicit_c != 3) {
    throw ConfigError(
        "explicit channels need all of c1, c2, c3 (or none, to use the "
        "preset)");
  }
  if (explicit_c == 0 && preset != "S" && preset != "M" && preset != "L") {
    throw ConfigError("preset must be S, M or L, got '" + preset + "'");
  }
  frontend_config().validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (synth < 0) throw ConfigError("synth must be >= 0");
  if (synth_len < 0) throw ConfigError("synth_len must be >= 0");
  schedule_config().validate();
}

FrontendConfig RunConfig::frontend_config() const {
  FrontendConfig f;
  if (c1 > 0 && c2 > 0 && c3 > 0) {
    f.c1 = c1;
    f.c2 = c2;
    f.c3 = c3;
  } else if (preset.size() == 1) {
    f = FrontendConfig::preset(preset[0]);
  } else {
    throw ConfigError("preset must be S, M or L, got '" + preset + "'");
  }
  f.cg = cg;
  f.input_len = input_len;
  f.reswavegram = variant == "reswavegram";
  return f;
}

ScheduleConfig RunConfig::schedule_config() const {
  ScheduleConfig s;
  s.lr0 = lr0;
  s.eta_min = eta_min;
  s.t0 = t0;
  s.t_mult = t_mult;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch;
  t.seed = seed;
  t.schedule = schedule_config();
  t.select_by_dev = select_by_dev;
  t.random_crop = random_crop;
  t.checkpoint_dir = checkpoint_dir;
  return t;
}

std::string effective_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "variant=" << cfg.variant << "\n";
  os << "preset=" << cfg.preset << "\n";
  os << "c1=" << cfg.c1 << "\n";
  os << "c2=" << cfg.c2 << "\n";
  os << "c3=" << cfg.c3 << "\n";
  os << "cg=" << cfg.cg << "\n";
  os << "input_len=" << cfg.input_len << "\n";
  os << "epochs=" << cfg.epochs << "\n";
  os << "batch=" << cfg.batch << "\n";
  os << "seed=" << cfg.seed << "\n";
  os << "t0=" << cfg.t0 << "\n";
  os << "t_mult=" << cfg.t_mult << "\n";
  os << "lr0=" << cfg.lr0 << "\n";
  os << "eta_min=" << cfg.eta_min << "\n";
  os << "select_by_dev=" << (cfg.select_by_dev ? "true" : "false") << "\n";
  os << "random_crop=" << (cfg.random_crop ? "true" : "false") << "\n";
  os << "synth=" << cfg.synth << "\n";
  os << "synth_len=" << cfg.synth_len << "\n";
  os << "out_dir=" << cfg.out_dir << "\n";
  os << "train_protocol=" << cfg.train_protocol << "\n";
  os << "dev_protocol=" << cfg.dev_protocol << "\n";
  os << "eval_protocol=" << cfg.eval_protocol << "\n";
  os << "audio_root=" << cfg.audio_root << "\n";
  os << "checkpoint_dir=" << cfg.checkpoint_dir << "\n";
  os << "checkpoint=" << cfg.checkpoint << "\n";
  os << "score_output=" << cfg.score_output << "\n";
  os << "score_file=" << cfg.score_file << "\n";
  os << "report_output=" << cfg.report_output << "\n";
  os << "cost_file=" << cfg.cost_file << "\n";
  return os.str();
}

}  // namespace rwr
