// Command-line front door. Everything goes through the C API in rwresnet.h;
// this file only parses flags, overlays them onto a run config and maps
// rwr_status values to process exit codes (0 ok, 1 config, 2 data,
// 3 numeric). The last stderr line on failure is always
// "ERROR <code> <message>".

#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rwresnet.h"

namespace {

int fail(rwr_status status, const std::string& message) {
  std::fprintf(stderr, "ERROR %d %s\n", static_cast<int>(status),
               message.c_str());
  return static_cast<int>(status);
}

int fail(rwr_status status) { return fail(status, rwr_last_error()); }

// Library defaults, keyed the same way as config files and rwr_config_set.
std::map<std::string, std::string> default_values() {
  std::map<std::string, std::string> out;
  rwr_config* cfg = rwr_config_new();
  char* text = rwr_config_dump(cfg);
  std::string line;
  for (const char* p = text;; ++p) {
    if (*p == '\n' || *p == '\0') {
      const size_t eq = line.find('=');
      if (eq != std::string::npos) {
        out[line.substr(0, eq)] = line.substr(eq + 1);
      }
      line.clear();
      if (*p == '\0') break;
    } else {
      line.push_back(*p);
    }
  }
  rwr_string_free(text);
  rwr_config_free(cfg);
  return out;
}

// Ties CLI flags to config keys; only flags the user actually passed are
// applied, so precedence stays flags > config file > defaults.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* cmd)
      : cmd_(cmd), defaults_(default_values()) {}

  void bind(const std::string& flag, const std::string& key,
            const std::string& desc) {
    auto value = std::make_shared<std::string>(defaults_.at(key));
    CLI::Option* opt =
        cmd_->add_option(flag, *value, desc)->capture_default_str();
    bound_.push_back({opt, key, value});
  }

  void bind_switch(const std::string& flag, const std::string& key,
                   const std::string& desc) {
    auto value = std::make_shared<std::string>("true");
    CLI::Option* opt = cmd_->add_flag(flag, desc);
    bound_.push_back({opt, key, value});
  }

  rwr_status apply(rwr_config* cfg) const {
    for (const Bound& b : bound_) {
      if (b.opt->count() == 0) continue;
      const rwr_status s =
          rwr_config_set(cfg, b.key.c_str(), b.value->c_str());
      if (s != RWR_OK) return s;
    }
    return RWR_OK;
  }

 private:
  struct Bound {
    CLI::Option* opt;
    std::string key;
    std::shared_ptr<std::string> value;
  };
  CLI::App* cmd_;
  std::map<std::string, std::string> defaults_;
  std::vector<Bound> bound_;
};

struct ConfigHandle {
  rwr_config* ptr = rwr_config_new();
  ~ConfigHandle() { rwr_config_free(ptr); }
};

// Shared skeleton: defaults <- config file <- flags, validate, echo, run.
int run_subcommand(const std::string& config_file, const ConfigBinder& binder,
                   const std::function<rwr_status(rwr_config*)>& body) {
  ConfigHandle cfg;
  if (!config_file.empty()) {
    if (const rwr_status s = rwr_config_load_file(cfg.ptr, config_file.c_str());
        s != RWR_OK) {
      return fail(s);
    }
  }
  if (const rwr_status s = binder.apply(cfg.ptr); s != RWR_OK) return fail(s);
  if (const rwr_status s = rwr_config_validate(cfg.ptr); s != RWR_OK) {
    return fail(s);
  }
  char* dump = rwr_config_dump(cfg.ptr);
  std::fputs("effective config:\n", stderr);
  for (const char* p = dump; *p != '\0';) {
    const char* nl = p;
    while (*nl != '\0' && *nl != '\n') ++nl;
    std::fprintf(stderr, "  %.*s\n", static_cast<int>(nl - p), p);
    p = *nl == '\n' ? nl + 1 : nl;
  }
  rwr_string_free(dump);
  if (const rwr_status s = body(cfg.ptr); s != RWR_OK) return fail(s);
  return 0;
}

void add_model_flags(ConfigBinder& b) {
  b.bind("--variant", "variant", "Front-end variant: wavegram or reswavegram");
  b.bind("--preset", "preset", "Channel preset: S, M or L");
  b.bind("--c1", "c1", "Explicit block-1 channels (with --c2 and --c3)");
  b.bind("--c2", "c2", "Explicit block-2 channels");
  b.bind("--c3", "c3", "Explicit block-3 channels");
  b.bind("--cg", "cg", "Feature-map groups (must divide c3)");
  b.bind("--input-len", "input_len", "Fixed waveform length in samples");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raw-waveform speech anti-spoofing: train, score and evaluate "
               "bonafide/spoof detectors."};
  app.require_subcommand(1);
  app.set_version_flag("--version", rwr_version());
  int exit_code = 0;

  // train
  CLI::App* train = app.add_subcommand(
      "train", "Train a model and write per-epoch checkpoints");
  std::string train_config_file;
  train->add_option("--config", train_config_file,
                    "key=value config file (flags take precedence)");
  ConfigBinder train_bind(train);
  add_model_flags(train_bind);
  train_bind.bind("--epochs", "epochs", "Training epochs");
  train_bind.bind("--batch", "batch", "Batch size");
  train_bind.bind("--seed", "seed", "Run seed (init, shuffling, crops)");
  train_bind.bind("--t0", "t0", "First restart period in epochs");
  train_bind.bind("--t-mult", "t_mult", "Restart period multiplier");
  train_bind.bind("--lr0", "lr0", "Initial learning rate");
  train_bind.bind("--eta-min", "eta_min", "Annealing floor");
  train_bind.bind("--train-protocol", "train_protocol",
                  "Training protocol file");
  train_bind.bind("--dev-protocol", "dev_protocol",
                  "Dev protocol (pooled into training by default)");
  train_bind.bind("--audio-root", "audio_root",
                  "Directory holding <utt_id>.wav files");
  train_bind.bind("--checkpoint-dir", "checkpoint_dir",
                  "Where checkpoints and history.csv go");
  train_bind.bind("--synth", "synth",
                  "Train on generated audio: utterances per class");
  train_bind.bind_switch("--select-by-dev", "select_by_dev",
                         "Keep dev separate and select the best epoch by dev "
                         "loss");
  train_bind.bind_switch("--random-crop", "random_crop",
                         "Random crop instead of head cut for long files");
  train->callback([&] {
    exit_code = run_subcommand(train_config_file, train_bind, rwr_train);
  });

  // score
  CLI::App* score = app.add_subcommand(
      "score", "Score a protocol with a trained checkpoint");
  std::string score_config_file;
  score->add_option("--config", score_config_file, "key=value config file");
  ConfigBinder score_bind(score);
  score_bind.bind("--checkpoint", "checkpoint", "Model checkpoint to load");
  score_bind.bind("--protocol", "eval_protocol", "Protocol file to score");
  score_bind.bind("--audio-root", "audio_root",
                  "Directory holding <utt_id>.wav files");
  score_bind.bind("--scores", "score_output", "Output score file");
  score_bind.bind("--batch", "batch", "Scoring batch size");
  score->callback([&] {
    exit_code = run_subcommand(score_config_file, score_bind, rwr_score);
  });

  // eval
  CLI::App* eval = app.add_subcommand(
      "eval", "Compute EER and min t-DCF from a score file");
  std::string eval_config_file;
  eval->add_option("--config", eval_config_file, "key=value config file");
  ConfigBinder eval_bind(eval);
  eval_bind.bind("--scores", "score_file", "Score file to evaluate");
  eval_bind.bind("--protocol", "eval_protocol", "Protocol with the labels");
  eval_bind.bind("--cost-file", "cost_file",
                 "t-DCF costs and ASV operating point (key=value)");
  eval_bind.bind("--report", "report_output", "Output CSV report path");
  eval->callback([&] {
    exit_code = run_subcommand(eval_config_file, eval_bind,
                               [](rwr_config* cfg) {
                                 return rwr_eval(cfg, nullptr, nullptr);
                               });
  });

  // gradcheck
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Verify every layer's backward pass against finite "
                   "differences");
  int seeds = 20;
  double inject = 0.0;
  gradcheck->add_option("--seeds", seeds, "Random seeds per layer")
      ->capture_default_str();
  gradcheck
      ->add_option("--inject-fault", inject,
                   "Perturb one analytic gradient by this amount (test hook; "
                   "makes the check fail)")
      ->capture_default_str();
  gradcheck->callback([&] {
    if (const rwr_status s = rwr_gradcheck(seeds, inject); s != RWR_OK) {
      exit_code = fail(s);
    }
  });

  // synth-data
  CLI::App* synth = app.add_subcommand(
      "synth-data", "Generate a labelled synthetic WAV corpus");
  std::string synth_config_file;
  synth->add_option("--config", synth_config_file, "key=value config file");
  ConfigBinder synth_bind(synth);
  synth_bind.bind("--n", "synth", "Utterances per class");
  synth_bind.bind("--length", "synth_len",
                  "Samples per utterance (0: use input_len)");
  synth_bind.bind("--seed", "seed", "Generator seed");
  synth_bind.bind("--out-dir", "out_dir", "Output directory");
  synth->callback([&] {
    exit_code = run_subcommand(synth_config_file, synth_bind, rwr_synth_data);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail(RWR_ERR_CONFIG, e.what());
  }
  return exit_code;
}
