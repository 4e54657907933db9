// Exercises the shared-library boundary exactly as an embedder would: only
// rwresnet.h, opaque handles and status codes. No internal headers.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "doctest.h"
#include "rwresnet.h"

namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("rwr_capi_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf) const {
    return (path / leaf).string();
  }
};

struct Config {
  rwr_config* ptr = rwr_config_new();
  ~Config() { rwr_config_free(ptr); }
  rwr_status set(const char* key, const char* value) {
    return rwr_config_set(ptr, key, value);
  }
  std::string dump() const {
    char* s = rwr_config_dump(ptr);
    REQUIRE(s != nullptr);
    std::string out(s);
    rwr_string_free(s);
    return out;
  }
};

// Keeps library progress output out of the doctest report.
struct SilenceStdout {
  int saved = -1;
  SilenceStdout() {
    std::fflush(stdout);
    saved = ::dup(1);
    const int sink = ::open("/dev/null", O_WRONLY);
    ::dup2(sink, 1);
    ::close(sink);
  }
  ~SilenceStdout() {
    std::fflush(stdout);
    ::dup2(saved, 1);
    ::close(saved);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  REQUIRE(out.good());
}

// Small architecture so create/train calls stay fast.
void set_tiny_arch(Config& cfg) {
  REQUIRE(cfg.set("c1", "8") == RWR_OK);
  REQUIRE(cfg.set("c2", "8") == RWR_OK);
  REQUIRE(cfg.set("c3", "16") == RWR_OK);
  REQUIRE(cfg.set("cg", "2") == RWR_OK);
  REQUIRE(cfg.set("input_len", "2560") == RWR_OK);
}

std::vector<float> sine_wave(int64_t n) {
  std::vector<float> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    x[static_cast<size_t>(i)] =
        0.4f * std::sin(0.013f * static_cast<float>(i));
  }
  return x;
}

}  // namespace

TEST_CASE("capi: version string is set") {
  REQUIRE(rwr_version() != nullptr);
  CHECK(std::strlen(rwr_version()) >= 5);
}

TEST_CASE("capi: defaults dump round-trips through a config file") {
  Config a;
  const std::string dump = a.dump();
  CHECK(dump.find("variant=reswavegram\n") != std::string::npos);
  CHECK(dump.find("preset=M\n") != std::string::npos);
  CHECK(dump.find("epochs=50\n") != std::string::npos);
  CHECK(dump.find("batch=16\n") != std::string::npos);
  CHECK(dump.find("input_len=128000\n") != std::string::npos);
  CHECK(dump.find("lr0=0.0001\n") != std::string::npos);
  CHECK(dump.find("eta_min=1e-08\n") != std::string::npos);

  ScratchDir tmp("dump");
  write_text(tmp.path / "run.cfg", dump);
  Config b;
  REQUIRE(rwr_config_load_file(b.ptr, tmp.str("run.cfg").c_str()) == RWR_OK);
  CHECK(b.dump() == dump);
}

TEST_CASE("capi: set is visible in the dump and validate accepts it") {
  Config cfg;
  REQUIRE(cfg.set("preset", "S") == RWR_OK);
  REQUIRE(cfg.set("epochs", "7") == RWR_OK);
  const std::string dump = cfg.dump();
  CHECK(dump.find("preset=S\n") != std::string::npos);
  CHECK(dump.find("epochs=7\n") != std::string::npos);
  CHECK(rwr_config_validate(cfg.ptr) == RWR_OK);
}

TEST_CASE("capi: bad keys and values are config errors with messages") {
  Config cfg;
  CHECK(cfg.set("banana", "1") == RWR_ERR_CONFIG);
  CHECK(std::string(rwr_last_error()).find("unknown config key 'banana'") !=
        std::string::npos);

  CHECK(cfg.set("epochs", "soon") == RWR_ERR_CONFIG);
  CHECK(std::string(rwr_last_error()).find("wants an integer") !=
        std::string::npos);

  // A successful call clears the sticky message.
  REQUIRE(rwr_config_validate(cfg.ptr) == RWR_OK);
  CHECK(std::string(rwr_last_error()).empty());
}

TEST_CASE("capi: cross-field validation catches an impossible plan") {
  Config cfg;
  REQUIRE(cfg.set("cg", "3") == RWR_OK);  // 3 does not divide c3=128
  CHECK(rwr_config_validate(cfg.ptr) == RWR_ERR_CONFIG);
  CHECK(!std::string(rwr_last_error()).empty());
}

TEST_CASE("capi: null arguments are rejected, never dereferenced") {
  CHECK(rwr_config_set(nullptr, "a", "b") == RWR_ERR_CONFIG);
  CHECK(std::string(rwr_last_error()) == "null argument");
  Config cfg;
  CHECK(rwr_config_set(cfg.ptr, nullptr, "b") == RWR_ERR_CONFIG);
  CHECK(rwr_config_load_file(cfg.ptr, nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_config_validate(nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_config_dump(nullptr) == nullptr);
  CHECK(rwr_train(nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_score(nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_eval(nullptr, nullptr, nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_synth_data(nullptr) == RWR_ERR_CONFIG);
  CHECK(rwr_model_load(nullptr) == nullptr);
  CHECK(rwr_model_create(nullptr, 1) == nullptr);
  CHECK(rwr_model_save(nullptr, "x") == RWR_ERR_CONFIG);
  CHECK(rwr_model_param_count(nullptr) == -1);
  CHECK(rwr_model_input_len(nullptr) == -1);
  double s = 0.0;
  CHECK(rwr_model_score(nullptr, nullptr, 1, &s) == RWR_ERR_CONFIG);
  rwr_model_free(nullptr);
  rwr_config_free(nullptr);
  rwr_string_free(nullptr);
}

TEST_CASE("capi: missing config file is a config error") {
  Config cfg;
  CHECK(rwr_config_load_file(cfg.ptr, "/no/such/place.cfg") ==
        RWR_ERR_CONFIG);
  CHECK(std::string(rwr_last_error()).find("does not exist") !=
        std::string::npos);
}

TEST_CASE("capi: model create, save, load and score deterministically") {
  ScratchDir tmp("model");
  Config cfg;
  set_tiny_arch(cfg);

  rwr_model* a = rwr_model_create(cfg.ptr, 5);
  REQUIRE(a != nullptr);
  CHECK(rwr_model_param_count(a) > 0);
  CHECK(rwr_model_input_len(a) == 2560);

  const std::vector<float> wave = sine_wave(2560);
  double s1 = 0.0, s2 = 0.0;
  REQUIRE(rwr_model_score(a, wave.data(), 2560, &s1) == RWR_OK);
  REQUIRE(rwr_model_score(a, wave.data(), 2560, &s2) == RWR_OK);
  CHECK(std::isfinite(s1));
  CHECK(s1 == s2);

  const std::string path = tmp.str("m.ckpt");
  REQUIRE(rwr_model_save(a, path.c_str()) == RWR_OK);
  rwr_model* b = rwr_model_load(path.c_str());
  REQUIRE(b != nullptr);
  CHECK(rwr_model_param_count(b) == rwr_model_param_count(a));
  CHECK(rwr_model_input_len(b) == 2560);
  double s3 = 0.0;
  REQUIRE(rwr_model_score(b, wave.data(), 2560, &s3) == RWR_OK);
  CHECK(s3 == s1);

  // Short input is tiled to the model's length, long input is cut.
  double s_short = 0.0, s_long = 0.0;
  const std::vector<float> longer = sine_wave(6000);
  REQUIRE(rwr_model_score(b, wave.data(), 200, &s_short) == RWR_OK);
  REQUIRE(rwr_model_score(b, longer.data(), 6000, &s_long) == RWR_OK);
  CHECK(std::isfinite(s_short));
  CHECK(std::isfinite(s_long));

  CHECK(rwr_model_score(b, wave.data(), 0, &s1) == RWR_ERR_DATA);

  rwr_model_free(b);
  rwr_model_free(a);
}

TEST_CASE("capi: a different seed changes the created model") {
  Config cfg;
  set_tiny_arch(cfg);
  rwr_model* a = rwr_model_create(cfg.ptr, 1);
  rwr_model* b = rwr_model_create(cfg.ptr, 2);
  rwr_model* a2 = rwr_model_create(cfg.ptr, 1);
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  REQUIRE(a2 != nullptr);
  const std::vector<float> wave = sine_wave(2560);
  double sa = 0, sb = 0, sa2 = 0;
  REQUIRE(rwr_model_score(a, wave.data(), 2560, &sa) == RWR_OK);
  REQUIRE(rwr_model_score(b, wave.data(), 2560, &sb) == RWR_OK);
  REQUIRE(rwr_model_score(a2, wave.data(), 2560, &sa2) == RWR_OK);
  CHECK(sa != sb);
  CHECK(sa == sa2);
  rwr_model_free(a);
  rwr_model_free(b);
  rwr_model_free(a2);
}

TEST_CASE("capi: bad model file surfaces as a data error") {
  ScratchDir tmp("badckpt");
  write_text(tmp.path / "junk.ckpt", "this is not a checkpoint");
  CHECK(rwr_model_load(tmp.str("junk.ckpt").c_str()) == nullptr);
  CHECK(!std::string(rwr_last_error()).empty());
  CHECK(rwr_model_load("/no/such/model.ckpt") == nullptr);
}

TEST_CASE("capi: synth corpus, training, scoring and eval chain") {
  ScratchDir tmp("chain");

  {
    Config cfg;
    REQUIRE(cfg.set("synth", "2") == RWR_OK);
    REQUIRE(cfg.set("synth_len", "1280") == RWR_OK);
    REQUIRE(cfg.set("seed", "9") == RWR_OK);
    REQUIRE(cfg.set("out_dir", tmp.str("corpus").c_str()) == RWR_OK);
    REQUIRE(rwr_synth_data(cfg.ptr) == RWR_OK);
  }
  REQUIRE(fs::is_regular_file(tmp.path / "corpus" / "protocol.txt"));
  CHECK(fs::is_regular_file(tmp.path / "corpus" / "SYN_B_0000.wav"));
  CHECK(fs::is_regular_file(tmp.path / "corpus" / "SYN_S_0001.wav"));

  {
    Config cfg;
    set_tiny_arch(cfg);
    REQUIRE(cfg.set("synth", "3") == RWR_OK);
    REQUIRE(cfg.set("epochs", "1") == RWR_OK);
    REQUIRE(cfg.set("batch", "2") == RWR_OK);
    REQUIRE(cfg.set("t0", "1") == RWR_OK);
    REQUIRE(cfg.set("seed", "4") == RWR_OK);
    REQUIRE(cfg.set("checkpoint_dir", tmp.str("ckpt").c_str()) == RWR_OK);
    REQUIRE(rwr_train(cfg.ptr) == RWR_OK);
  }
  REQUIRE(fs::is_regular_file(tmp.path / "ckpt" / "best.ckpt"));
  CHECK(fs::is_regular_file(tmp.path / "ckpt" / "history.csv"));

  {
    Config cfg;
    REQUIRE(cfg.set("checkpoint", tmp.str("ckpt/best.ckpt").c_str()) ==
            RWR_OK);
    REQUIRE(cfg.set("eval_protocol", tmp.str("corpus/protocol.txt").c_str()) ==
            RWR_OK);
    REQUIRE(cfg.set("audio_root", tmp.str("corpus").c_str()) == RWR_OK);
    REQUIRE(cfg.set("score_output", tmp.str("scores.txt").c_str()) == RWR_OK);
    REQUIRE(rwr_score(cfg.ptr) == RWR_OK);
  }
  std::ifstream scores(tmp.path / "scores.txt");
  int lines = 0;
  for (std::string line; std::getline(scores, line);) ++lines;
  CHECK(lines == 4);

  write_text(tmp.path / "costs.txt",
             "p_miss_asv = 0.01\np_fa_asv = 0.02\np_miss_spoof_asv = 0.06\n");
  double eer = -1.0, tdcf = -1.0;
  {
    Config cfg;
    REQUIRE(cfg.set("score_file", tmp.str("scores.txt").c_str()) == RWR_OK);
    REQUIRE(cfg.set("eval_protocol", tmp.str("corpus/protocol.txt").c_str()) ==
            RWR_OK);
    REQUIRE(cfg.set("cost_file", tmp.str("costs.txt").c_str()) == RWR_OK);
    REQUIRE(cfg.set("report_output", tmp.str("report.csv").c_str()) == RWR_OK);
    SilenceStdout mute;
    REQUIRE(rwr_eval(cfg.ptr, &eer, &tdcf) == RWR_OK);
  }
  CHECK(eer >= 0.0);
  CHECK(eer <= 1.0);
  CHECK(tdcf >= 0.0);
  CHECK(tdcf <= 1.0 + 1e-12);
  std::ifstream report(tmp.path / "report.csv");
  std::string header;
  std::getline(report, header);
  CHECK(header == "metric,value,threshold");
}

TEST_CASE("capi: train without any data source is a config error") {
  Config cfg;
  set_tiny_arch(cfg);
  CHECK(rwr_train(cfg.ptr) == RWR_ERR_CONFIG);
  CHECK(!std::string(rwr_last_error()).empty());
}

TEST_CASE("capi: gradcheck passes clean and fails under fault injection") {
  SilenceStdout mute;
  CHECK(rwr_gradcheck(1, 0.0) == RWR_OK);
  CHECK(rwr_gradcheck(1, 1e-3) == RWR_ERR_NUMERIC);
  CHECK(std::string(rwr_last_error()).find("gradient check failed") !=
        std::string::npos);
  CHECK(rwr_gradcheck(0, 0.0) == RWR_ERR_CONFIG);
}
