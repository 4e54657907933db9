#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "core/gradcheck.hpp"
#include "metrics/metrics.hpp"
#include "pipeline/run_config.hpp"
#include "train/trainer.hpp"

namespace rwr {

// Subcommand bodies. All of them validate paths up front, write outputs
// atomically, log progress to `log` (stderr territory) and throw typed
// errors; exit-code mapping is the caller's job.

struct TrainOutcome {
  TrainResult result;
  std::string best_checkpoint;
  std::string history_path;
};

// Builds the model from the config, trains on the train protocol (pooled
// with dev unless select_by_dev) or on generated audio when synth > 0.
TrainOutcome run_train(const RunConfig& cfg, std::ostream& log);

struct ScoreOutcome {
  size_t n_scored = 0;
  std::string score_path;
};

// Loads the checkpoint (the architecture comes from the file, not the
// config), scores every trial of the eval protocol in order.
ScoreOutcome run_score(const RunConfig& cfg, std::ostream& log);

struct EvalOutcome {
  EerResult eer;
  TdcfResult tdcf;
  std::string report_csv;
  std::string report_path;
};

// Joins scores to protocol labels by utt_id and computes both metrics.
// Protocol entries without a score are a data error, listing up to 10 ids.
EvalOutcome run_eval(const RunConfig& cfg, std::ostream& log);

// Runs the finite-difference suite; writes one line per layer to `out`.
// Any layer over threshold raises NumericError. fault_inject is the
// test-harness hook proving the check can fail.
std::vector<GradCheckResult> run_gradcheck(int seeds_per_layer,
                                           double fault_inject,
                                           std::ostream& out);

struct SynthOutcome {
  int n_per_class = 0;
  int64_t length = 0;
  std::string dir;
};

SynthOutcome run_synth_data(const RunConfig& cfg, std::ostream& log);

}  // namespace rwr
