#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "audio/batch.hpp"
#include "model/network.hpp"
#include "train/optimizer.hpp"
#include "train/schedule.hpp"

namespace rwr {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  uint64_t seed = 1;
  ScheduleConfig schedule;
  AdamConfig adam;
  // Model selection uses dev mean loss instead of train mean loss.
  bool select_by_dev = false;
  bool random_crop = false;
  std::string checkpoint_dir;  // empty: keep everything in memory
};

struct EpochStats {
  int epoch;
  double mean_loss;
  double accuracy;
  double lr;
  double dev_loss;  // NaN unless select_by_dev
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  std::string best_path;  // "<dir>/best.ckpt" when a directory was given
};

// Per epoch: seeded shuffle, CE loss, Adam at the scheduled lr, stats
// recorded, checkpoint written; the model ends up holding the best epoch's
// parameters. Non-finite loss aborts with NumericError naming the epoch and
// batch.
TrainResult train_model(RwResnet& model, const TrialSet& train_set,
                        const SampleSource& src, const TrialSet* dev_set,
                        const SampleSource* dev_src, const TrainConfig& cfg,
                        std::ostream* log = nullptr);

// "epoch,mean_loss,accuracy,lr" rows.
std::string history_csv(const std::vector<EpochStats>& history);

// Eval-mode forward over a whole set in protocol order; one score per trial
// (bonafide logit minus spoof logit).
std::vector<double> score_set(RwResnet& model, const TrialSet& set,
                              const SampleSource& src, int batch_size);

}  // namespace rwr
