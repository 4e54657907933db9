#pragma once

#include <cstdint>
#include <string>

#include "model/frontend.hpp"
#include "train/trainer.hpp"

namespace rwr {

// Everything a run needs, in one flat bag. Subcommands use their slice;
// values come from built-in defaults, then a key=value config file, then
// command-line flags, in that order of increasing precedence.
struct RunConfig {
  // Architecture. Explicit c1/c2/c3 (all three) override the preset.
  std::string variant = "reswavegram";  // or "wavegram"
  std::string preset = "M";
  int64_t c1 = 0;
  int64_t c2 = 0;
  int64_t c3 = 0;
  int64_t cg = 1;
  int64_t input_len = 128000;

  // Training recipe.
  int epochs = 50;
  int batch = 16;
  uint64_t seed = 1;
  int t0 = 10;
  int t_mult = 2;
  double lr0 = 1e-4;
  double eta_min = 1e-8;
  bool select_by_dev = false;  // otherwise dev is pooled into training
  bool random_crop = false;

  // Synthetic data: train --synth N swaps file input for generated audio;
  // the synth-data subcommand writes a tree of n utterances per class.
  int synth = 0;
  int64_t synth_len = 0;  // 0: use input_len
  std::string out_dir = "synth_data";

  // Paths.
  std::string train_protocol;
  std::string dev_protocol;
  std::string eval_protocol;
  std::string audio_root;
  std::string checkpoint_dir = "checkpoints";
  std::string checkpoint;  // model file to score with
  std::string score_output = "scores.txt";
  std::string score_file;  // scores consumed by eval
  std::string report_output = "report.csv";
  std::string cost_file;

  // Cross-field checks shared by every subcommand (variant name, preset or
  // full explicit channel triple, cg divisibility, input_len granularity).
  void validate() const;

  FrontendConfig frontend_config() const;
  ScheduleConfig schedule_config() const;
  TrainConfig train_config() const;
};

// Applies one key=value assignment; unknown keys and unparsable values raise
// ConfigError mentioning `where` (a file/line or flag description).
void apply_config_kv(RunConfig& cfg, const std::string& key,
                     const std::string& value, const std::string& where);

// Applies a whole config text ('#' comments, blank lines allowed), then
// validates. Errors carry 1-based line numbers.
void apply_config_text(RunConfig& cfg, const std::string& text);

RunConfig load_run_config(const std::string& path);

// Every key in a fixed order, one `key=value` per line; applying the dump to
// a default RunConfig reproduces the config.
std::string effective_config(const RunConfig& cfg);

}  // namespace rwr
