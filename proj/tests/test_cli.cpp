// Black-box tests of the command-line binary: exit codes, the final
// "ERROR <code> <message>" stderr record, stdout/stderr separation and
// byte-level determinism of the file outputs. RWR_CLI_BIN is injected by
// the build.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("rwr_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf) const {
    return (path / leaf).string();
  }
};

RunResult run_cli(const ScratchDir& tmp, const std::string& args) {
  const std::string out_file = tmp.str("_stdout");
  const std::string err_file = tmp.str("_stderr");
  const std::string cmd = std::string(RWR_CLI_BIN) + " " + args + " >'" +
                          out_file + "' 2>'" + err_file + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string last_line(const std::string& text) {
  size_t end = text.size();
  while (end > 0 && text[end - 1] == '\n') --end;
  const size_t start = text.rfind('\n', end == 0 ? 0 : end - 1);
  return text.substr(start == std::string::npos ? 0 : start + 1,
                     end - (start == std::string::npos ? 0 : start + 1));
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Architecture small enough that a training epoch is instant.
const char* kTinyArch =
    "--c1 8 --c2 8 --c3 16 --cg 2 --input-len 2560";

}  // namespace

TEST_CASE("cli: help and version succeed") {
  ScratchDir tmp("help");
  const RunResult top = run_cli(tmp, "--help");
  CHECK(top.exit_code == 0);
  CHECK(contains(top.out, "train"));
  CHECK(contains(top.out, "score"));
  CHECK(contains(top.out, "eval"));
  CHECK(contains(top.out, "gradcheck"));
  CHECK(contains(top.out, "synth-data"));

  const RunResult train_help = run_cli(tmp, "train --help");
  CHECK(train_help.exit_code == 0);
  CHECK(contains(train_help.out, "--epochs"));
  CHECK(contains(train_help.out, "[50]"));
  CHECK(contains(train_help.out, "--lr0"));

  const RunResult version = run_cli(tmp, "--version");
  CHECK(version.exit_code == 0);
  CHECK(contains(version.out, "."));
}

TEST_CASE("cli: bad invocations exit 1 with a final ERROR record") {
  ScratchDir tmp("bad");

  const RunResult none = run_cli(tmp, "");
  CHECK(none.exit_code == 1);
  CHECK(contains(last_line(none.err), "ERROR 1 "));

  const RunResult unknown = run_cli(tmp, "train --bogus 3");
  CHECK(unknown.exit_code == 1);
  CHECK(contains(last_line(unknown.err), "ERROR 1 "));
  CHECK(contains(unknown.err, "--bogus"));

  const RunResult bad_value = run_cli(tmp, "train --epochs lots --synth 1");
  CHECK(bad_value.exit_code == 1);
  CHECK(contains(last_line(bad_value.err), "ERROR 1 "));
  CHECK(contains(bad_value.err, "wants an integer"));

  const RunResult bad_cfg = run_cli(tmp, "train --config /no/such.cfg");
  CHECK(bad_cfg.exit_code == 1);
  CHECK(contains(last_line(bad_cfg.err), "ERROR 1 "));
  CHECK(contains(bad_cfg.err, "does not exist"));
}

TEST_CASE("cli: synth-data is deterministic and self-describing") {
  ScratchDir tmp("synth");
  const std::string args = "synth-data --n 2 --length 1600 --seed 11";
  const RunResult a =
      run_cli(tmp, args + " --out-dir " + tmp.str("ca"));
  REQUIRE(a.exit_code == 0);
  const RunResult b =
      run_cli(tmp, args + " --out-dir " + tmp.str("cb"));
  REQUIRE(b.exit_code == 0);

  for (const char* leaf :
       {"protocol.txt", "SYN_B_0000.wav", "SYN_B_0001.wav", "SYN_S_0000.wav",
        "SYN_S_0001.wav"}) {
    CAPTURE(leaf);
    REQUIRE(fs::is_regular_file(tmp.path / "ca" / leaf));
    CHECK(slurp(tmp.path / "ca" / leaf) == slurp(tmp.path / "cb" / leaf));
  }
  const std::string protocol = slurp(tmp.path / "ca" / "protocol.txt");
  CHECK(contains(protocol, "bonafide"));
  CHECK(contains(protocol, "spoof"));
}

TEST_CASE("cli: train, score, eval chain over real files") {
  ScratchDir tmp("chain");
  REQUIRE(run_cli(tmp, "synth-data --n 3 --length 1280 --seed 2 --out-dir " +
                           tmp.str("corpus"))
              .exit_code == 0);

  const RunResult train = run_cli(
      tmp, std::string("train ") + kTinyArch +
               " --epochs 2 --batch 2 --seed 6 --t0 2" +
               " --train-protocol " + tmp.str("corpus/protocol.txt") +
               " --audio-root " + tmp.str("corpus") +
               " --checkpoint-dir " + tmp.str("ckpt"));
  REQUIRE(train.exit_code == 0);
  CHECK(train.out.empty());  // logs belong to stderr
  CHECK(contains(train.err, "effective config:"));
  CHECK(contains(train.err, "epochs=2"));
  CHECK(contains(train.err, "epoch 0: loss"));
  REQUIRE(fs::is_regular_file(tmp.path / "ckpt" / "best.ckpt"));
  REQUIRE(fs::is_regular_file(tmp.path / "ckpt" / "history.csv"));
  CHECK(fs::is_regular_file(tmp.path / "ckpt" / "epoch_001.ckpt"));

  const std::string score_args =
      std::string("score --checkpoint ") + tmp.str("ckpt/best.ckpt") +
      " --protocol " + tmp.str("corpus/protocol.txt") + " --audio-root " +
      tmp.str("corpus") + " --batch 3";
  const RunResult s1 =
      run_cli(tmp, score_args + " --scores " + tmp.str("s1.txt"));
  REQUIRE(s1.exit_code == 0);
  CHECK(s1.out.empty());
  const RunResult s2 =
      run_cli(tmp, score_args + " --scores " + tmp.str("s2.txt"));
  REQUIRE(s2.exit_code == 0);
  CHECK(slurp(tmp.path / "s1.txt") == slurp(tmp.path / "s2.txt"));

  std::ofstream costs(tmp.path / "costs.txt");
  costs << "p_miss_asv = 0.01\np_fa_asv = 0.02\np_miss_spoof_asv = 0.06\n";
  costs.close();
  const RunResult ev = run_cli(
      tmp, std::string("eval --scores ") + tmp.str("s1.txt") +
               " --protocol " + tmp.str("corpus/protocol.txt") +
               " --cost-file " + tmp.str("costs.txt") + " --report " +
               tmp.str("report.csv"));
  REQUIRE(ev.exit_code == 0);
  CHECK(contains(ev.out, "metric,value,threshold"));
  CHECK(contains(ev.out, "eer,"));
  CHECK(contains(ev.out, "min_tdcf,"));
  CHECK(slurp(tmp.path / "report.csv") == ev.out);
}

TEST_CASE("cli: eval reports zero EER for perfectly separated scores") {
  ScratchDir tmp("perfect");
  std::ofstream protocol(tmp.path / "protocol.txt");
  protocol << "LA_01 E_01 - - bonafide\nLA_01 E_02 - - bonafide\n"
              "LA_02 E_03 - A01 spoof\nLA_02 E_04 - A01 spoof\n";
  protocol.close();
  std::ofstream scores(tmp.path / "scores.txt");
  scores << "E_01 3.5\nE_02 2.5\nE_03 -1.0\nE_04 -2.0\n";
  scores.close();
  std::ofstream costs(tmp.path / "costs.txt");
  costs << "p_miss_asv = 0.01\np_fa_asv = 0.02\np_miss_spoof_asv = 0.06\n";
  costs.close();

  const RunResult ev = run_cli(
      tmp, std::string("eval --scores ") + tmp.str("scores.txt") +
               " --protocol " + tmp.str("protocol.txt") + " --cost-file " +
               tmp.str("costs.txt") + " --report " + tmp.str("report.csv"));
  REQUIRE(ev.exit_code == 0);
  CHECK(contains(ev.out, "eer,0.000000"));
  CHECK(contains(ev.out, "min_tdcf,0.000000"));
}

TEST_CASE("cli: data problems exit 2 and leave no partial output") {
  ScratchDir tmp("data");
  std::ofstream junk(tmp.path / "junk.ckpt");
  junk << "not a checkpoint";
  junk.close();
  std::ofstream protocol(tmp.path / "protocol.txt");
  protocol << "LA_01 E_01 - - bonafide\n";
  protocol.close();

  const RunResult r = run_cli(
      tmp, std::string("score --checkpoint ") + tmp.str("junk.ckpt") +
               " --protocol " + tmp.str("protocol.txt") + " --audio-root " +
               tmp.path.string() + " --scores " + tmp.str("out.txt"));
  CHECK(r.exit_code == 2);
  CHECK(contains(last_line(r.err), "ERROR 2 "));
  CHECK(!fs::exists(tmp.path / "out.txt"));
}

TEST_CASE("cli: missing inputs exit 1 before any compute") {
  ScratchDir tmp("missing");
  const RunResult r = run_cli(
      tmp, std::string("score --checkpoint /no/model.ckpt --protocol ") +
               "/no/protocol.txt --audio-root /no/dir --scores " +
               tmp.str("out.txt"));
  CHECK(r.exit_code == 1);
  CHECK(contains(last_line(r.err), "ERROR 1 "));
  CHECK(!fs::exists(tmp.path / "out.txt"));
}

TEST_CASE("cli: gradcheck fault injection exits 3") {
  ScratchDir tmp("gc");
  const RunResult ok = run_cli(tmp, "gradcheck --seeds 1");
  REQUIRE(ok.exit_code == 0);
  CHECK(contains(ok.out, "PASS"));
  CHECK(!contains(ok.out, "FAIL"));

  const RunResult bad = run_cli(tmp, "gradcheck --seeds 1 --inject-fault 1e-3");
  CHECK(bad.exit_code == 3);
  CHECK(contains(bad.out, "FAIL"));
  CHECK(contains(last_line(bad.err), "ERROR 3 "));
}

TEST_CASE("cli: flags beat the config file, which beats defaults") {
  ScratchDir tmp("prec");
  std::ofstream cfg(tmp.path / "run.cfg");
  cfg << "# comment\nepochs = 9\nbatch = 2\npreset = L\n";
  cfg.close();

  // No data source: fails after the echo, which is all we need here.
  const RunResult r = run_cli(tmp, std::string("train --config ") +
                                       tmp.str("run.cfg") + " --epochs 1");
  CHECK(r.exit_code == 1);
  CHECK(contains(r.err, "epochs=1"));  // flag wins
  CHECK(contains(r.err, "batch=2"));   // file wins over default 16
  CHECK(contains(r.err, "preset=L"));  // file wins
}
