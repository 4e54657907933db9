#include "train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "common/error.hpp"
#include "common/fileio.hpp"
#include "train/checkpoint.hpp"

namespace rwr {
namespace {

struct Snapshot {
  std::vector<std::vector<float>> tensors;
};

Snapshot take_snapshot(RwResnet& model) {
  Snapshot s;
  model.visit_params([&](const std::string&, Tensor& v, Tensor&) {
    s.tensors.push_back(v.vec());
  });
  model.visit_buffers([&](const std::string&, Tensor& v) {
    s.tensors.push_back(v.vec());
  });
  return s;
}

void restore_snapshot(RwResnet& model, const Snapshot& s) {
  size_t i = 0;
  model.visit_params([&](const std::string&, Tensor& v, Tensor&) {
    v.vec() = s.tensors[i++];
  });
  model.visit_buffers(
      [&](const std::string&, Tensor& v) { v.vec() = s.tensors[i++]; });
}

double mean_loss_over(RwResnet& model, const TrialSet& set,
                      const SampleSource& src, int batch_size,
                      int64_t input_len) {
  const auto plan = batch_plan(set.trials.size(), batch_size, 0, false);
  double loss_sum = 0.0;
  int64_t count = 0;
  for (const auto& idx : plan) {
    const Batch batch = assemble_batch(set, src, idx, input_len);
    const Tensor logits = model.forward(batch.x);
    const CeResultT<float> ce = cross_entropy_logits(
        logits, std::span<const int>(batch.labels));
    loss_sum += static_cast<double>(ce.loss) *
                static_cast<double>(batch.labels.size());
    count += static_cast<int64_t>(batch.labels.size());
  }
  return loss_sum / static_cast<double>(count);
}

}  // namespace

TrainResult train_model(RwResnet& model, const TrialSet& train_set,
                        const SampleSource& src, const TrialSet* dev_set,
                        const SampleSource* dev_src, const TrainConfig& cfg,
                        std::ostream* log) {
  cfg.schedule.validate();
  if (cfg.epochs < 0) {
    throw ConfigError("train: epochs must be >= 0, got " +
                      std::to_string(cfg.epochs));
  }
  if (train_set.trials.empty()) {
    throw DataError("train: empty training set");
  }
  if (cfg.select_by_dev && (dev_set == nullptr || dev_src == nullptr)) {
    throw ConfigError("train: select_by_dev needs a dev set");
  }
  const int64_t input_len = model.frontend_config().input_len;

  if (!cfg.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.checkpoint_dir, ec);
    if (ec) {
      throw DataError("train: cannot create checkpoint dir '" +
                      cfg.checkpoint_dir + "': " + ec.message());
    }
  }

  Adam adam(cfg.adam);
  const auto visit = [&model](const ParamVisitor& fn) {
    model.visit_params(fn);
  };

  TrainResult result;
  double best_metric = std::numeric_limits<double>::infinity();
  Snapshot best_snapshot;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    model.set_training(true);
    const double lr = lr_at(cfg.schedule, static_cast<double>(epoch));
    const auto plan =
        batch_plan(train_set.trials.size(), cfg.batch_size,
                   derive_seed(cfg.seed, 1000 + static_cast<uint64_t>(epoch)),
                   true);
    Rng crop_rng(derive_seed(cfg.seed, 5000 + static_cast<uint64_t>(epoch)));

    double loss_sum = 0.0;
    int64_t correct = 0;
    int64_t count = 0;
    for (size_t b = 0; b < plan.size(); ++b) {
      const Batch batch =
          assemble_batch(train_set, src, plan[b], input_len,
                         cfg.random_crop ? &crop_rng : nullptr);
      model.zero_grad();
      const Tensor logits = model.forward(batch.x);
      const CeResultT<float> ce = cross_entropy_logits(
          logits, std::span<const int>(batch.labels));
      if (!std::isfinite(static_cast<double>(ce.loss))) {
        throw NumericError("train: epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(b) +
                           ": loss is not finite");
      }
      for (size_t i = 0; i < batch.labels.size(); ++i) {
        const int64_t row = static_cast<int64_t>(i);
        const int pred = logits.at(row, 1) > logits.at(row, 0) ? 1 : 0;
        if (pred == batch.labels[i]) ++correct;
      }
      loss_sum += static_cast<double>(ce.loss) *
                  static_cast<double>(batch.labels.size());
      count += static_cast<int64_t>(batch.labels.size());
      model.backward(ce.d_logits);
      adam.step(visit, lr);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(count);
    stats.accuracy =
        static_cast<double>(correct) / static_cast<double>(count);
    stats.lr = lr;
    stats.dev_loss = std::numeric_limits<double>::quiet_NaN();

    if (cfg.select_by_dev) {
      model.set_training(false);
      stats.dev_loss =
          mean_loss_over(model, *dev_set, *dev_src, cfg.batch_size, input_len);
      model.set_training(true);
    }
    result.history.push_back(stats);

    const double metric = cfg.select_by_dev ? stats.dev_loss : stats.mean_loss;
    if (metric < best_metric) {
      best_metric = metric;
      result.best_epoch = epoch;
      best_snapshot = take_snapshot(model);
    }

    if (!cfg.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
      save_checkpoint(model, cfg.checkpoint_dir + "/" + name);
    }
    if (log != nullptr) {
      char line[160];
      std::snprintf(line, sizeof(line),
                    "epoch %d: loss %.6f acc %.4f lr %.3e", epoch,
                    stats.mean_loss, stats.accuracy, stats.lr);
      (*log) << line;
      if (cfg.select_by_dev) (*log) << " dev_loss " << stats.dev_loss;
      (*log) << "\n";
    }
  }

  if (result.best_epoch >= 0) {
    restore_snapshot(model, best_snapshot);
  }
  if (!cfg.checkpoint_dir.empty() && cfg.epochs > 0) {
    result.best_path = cfg.checkpoint_dir + "/best.ckpt";
    save_checkpoint(model, result.best_path);
    write_file_atomic(cfg.checkpoint_dir + "/history.csv",
                      history_csv(result.history), "train history");
  }
  return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,mean_loss,accuracy,lr\n";
  char line[128];
  for (const EpochStats& s : history) {
    std::snprintf(line, sizeof(line), "%d,%.9f,%.6f,%.9e\n", s.epoch,
                  s.mean_loss, s.accuracy, s.lr);
    out += line;
  }
  return out;
}

std::vector<double> score_set(RwResnet& model, const TrialSet& set,
                              const SampleSource& src, int batch_size) {
  model.set_training(false);
  const int64_t input_len = model.frontend_config().input_len;
  const auto plan = batch_plan(set.trials.size(), batch_size, 0, false);
  std::vector<double> scores;
  scores.reserve(set.trials.size());
  for (const auto& idx : plan) {
    const Batch batch = assemble_batch(set, src, idx, input_len);
    const Tensor logits = model.forward(batch.x);
    if (!logits.all_finite()) {
      throw NumericError("score: non-finite logits in batch starting at '" +
                         batch.utt_ids.front() + "'");
    }
    for (size_t i = 0; i < batch.labels.size(); ++i) {
      const int64_t row = static_cast<int64_t>(i);
      scores.push_back(static_cast<double>(logits.at(row, 1)) -
                       static_cast<double>(logits.at(row, 0)));
    }
  }
  return scores;
}

}  // namespace rwr
