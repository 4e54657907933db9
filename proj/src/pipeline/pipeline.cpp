#include "pipeline/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "audio/batch.hpp"
#include "audio/protocol.hpp"
#include "audio/synth.hpp"
#include "common/error.hpp"
#include "common/fileio.hpp"
#include "metrics/score_io.hpp"
#include "train/checkpoint.hpp"
#include "train/init.hpp"

namespace rwr {

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw ConfigError(what + " path not set");
  }
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(what + " '" + path + "' does not exist");
  }
}

void require_dir(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw ConfigError(what + " path not set");
  }
  if (!std::filesystem::is_directory(path)) {
    throw ConfigError(what + " '" + path + "' is not a directory");
  }
}

// Pools two protocol sets; colliding utt_ids would make labels ambiguous.
TrialSet pool_sets(const TrialSet& a, const TrialSet& b) {
  TrialSet out = a;
  std::unordered_set<std::string> seen;
  for (const Trial& t : a.trials) seen.insert(t.utt_id);
  for (const Trial& t : b.trials) {
    if (!seen.insert(t.utt_id).second) {
      throw DataError("utt_id '" + t.utt_id +
                      "' appears in both the train and dev protocols");
    }
    out.trials.push_back(t);
  }
  return out;
}

std::vector<ScoreRecord> label_records(const TrialSet& set,
                                       const std::vector<double>& scores) {
  std::vector<ScoreRecord> records;
  records.reserve(set.trials.size());
  for (size_t i = 0; i < set.trials.size(); ++i) {
    records.push_back({set.trials[i].utt_id, scores[i],
                       label_index(set.trials[i].label)});
  }
  return records;
}

}  // namespace

TrainOutcome run_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();

  TrialSet train_set;
  const TrialSet* dev_set = nullptr;
  TrialSet dev_storage;
  std::unique_ptr<SampleSource> src;
  std::unique_ptr<SampleSource> dev_src;
  SynthDataset synth;

  if (cfg.synth > 0) {
    log << "generating " << cfg.synth
        << " utterances per class at length " << cfg.input_len << "\n";
    synth = synth_dataset(cfg.synth, cfg.input_len, cfg.seed);
    train_set = synth.trials;
    src = std::make_unique<MemorySource>(&synth.samples);
  } else {
    require_file(cfg.train_protocol, "train protocol");
    require_dir(cfg.audio_root, "audio root");
    train_set = load_protocol_file(cfg.train_protocol);
    train_set.root = cfg.audio_root;
    if (!cfg.dev_protocol.empty()) {
      require_file(cfg.dev_protocol, "dev protocol");
      TrialSet dev = load_protocol_file(cfg.dev_protocol);
      dev.root = cfg.audio_root;
      if (cfg.select_by_dev) {
        dev_storage = std::move(dev);
        dev_set = &dev_storage;
      } else {
        train_set = pool_sets(train_set, dev);
      }
    } else if (cfg.select_by_dev) {
      throw ConfigError("select_by_dev needs a dev protocol");
    }
    const auto warn = [&log](const std::string& w) { log << "warning: " << w << "\n"; };
    src = std::make_unique<WavDirSource>(cfg.audio_root, warn);
    dev_src = std::make_unique<WavDirSource>(cfg.audio_root, warn);
  }
  if (train_set.trials.empty()) {
    throw DataError("training set is empty");
  }

  RwResnet model(cfg.frontend_config());
  init_params([&model](const ParamVisitor& fn) { model.visit_params(fn); },
              cfg.seed);
  log << "model: " << model.param_count() << " parameters, "
      << train_set.trials.size() << " training trials\n";

  TrainOutcome out;
  out.result = train_model(model, train_set, *src, dev_set,
                           dev_set != nullptr ? dev_src.get() : nullptr,
                           cfg.train_config(), &log);
  out.best_checkpoint = out.result.best_path;
  if (!cfg.checkpoint_dir.empty()) {
    out.history_path = cfg.checkpoint_dir + "/history.csv";
  }
  return out;
}

ScoreOutcome run_score(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.checkpoint, "checkpoint");
  require_file(cfg.eval_protocol, "eval protocol");
  require_dir(cfg.audio_root, "audio root");
  if (cfg.score_output.empty()) {
    throw ConfigError("score_output path not set");
  }

  std::unique_ptr<RwResnet> model = load_checkpoint(cfg.checkpoint);
  TrialSet set = load_protocol_file(cfg.eval_protocol);
  set.root = cfg.audio_root;
  log << "scoring " << set.trials.size() << " trials with '" << cfg.checkpoint
      << "' (input_len " << model->frontend_config().input_len << ")\n";

  WavDirSource src(cfg.audio_root,
                   [&log](const std::string& w) { log << "warning: " << w << "\n"; });
  const std::vector<double> scores = score_set(*model, set, src, cfg.batch);

  std::vector<ScoreRecord> records = label_records(set, scores);
  for (ScoreRecord& r : records) r.label = -1;  // score files carry no labels
  write_scores_file(cfg.score_output, records);

  ScoreOutcome out;
  out.n_scored = records.size();
  out.score_path = cfg.score_output;
  return out;
}

EvalOutcome run_eval(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.score_file, "score file");
  require_file(cfg.eval_protocol, "eval protocol");
  require_file(cfg.cost_file, "cost file");  // the ASV rates have no defaults
  if (cfg.report_output.empty()) {
    throw ConfigError("report_output path not set");
  }

  const TdcfCost cost = load_cost_file(cfg.cost_file);
  cost.validate();
  const TrialSet set = load_protocol_file(cfg.eval_protocol);
  const std::vector<ScoreRecord> scored = load_scores_file(cfg.score_file);

  std::unordered_map<std::string, double> by_id;
  by_id.reserve(scored.size());
  for (const ScoreRecord& r : scored) by_id.emplace(r.utt_id, r.score);

  std::vector<ScoreRecord> records;
  records.reserve(set.trials.size());
  std::vector<std::string> missing;
  for (const Trial& t : set.trials) {
    const auto it = by_id.find(t.utt_id);
    if (it == by_id.end()) {
      if (missing.size() < 10) missing.push_back(t.utt_id);
      continue;
    }
    records.push_back({t.utt_id, it->second, label_index(t.label)});
  }
  if (!missing.empty()) {
    std::string msg = "protocol utt_ids missing from the score file:";
    for (const std::string& id : missing) msg += " " + id;
    const size_t total = set.trials.size() - records.size();
    if (total > missing.size()) {
      msg += " (and " + std::to_string(total - missing.size()) + " more)";
    }
    throw DataError(msg);
  }
  log << "evaluating " << records.size() << " scored trials\n";

  EvalOutcome out;
  out.eer = compute_eer(records);
  out.tdcf = compute_min_tdcf(records, cost);
  out.report_csv = metrics_report_csv(out.eer, out.tdcf);
  out.report_path = cfg.report_output;
  write_file_atomic(cfg.report_output, out.report_csv, "metric report");
  return out;
}

std::vector<GradCheckResult> run_gradcheck(int seeds_per_layer,
                                           double fault_inject,
                                           std::ostream& out) {
  if (seeds_per_layer < 1) {
    throw ConfigError("gradcheck needs at least one seed per layer");
  }
  const std::vector<GradCheckResult> results =
      run_gradcheck_suite(seeds_per_layer, 1e-5, fault_inject);
  std::string failed;
  for (const GradCheckResult& r : results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s max_rel_error %.3e threshold %.0e %s\n",
                  r.layer.c_str(), r.max_rel_error, r.threshold,
                  r.pass ? "PASS" : "FAIL");
    out << line;
    if (!r.pass) failed += (failed.empty() ? "" : ", ") + r.layer;
  }
  if (!failed.empty()) {
    throw NumericError("gradient check failed: " + failed);
  }
  return results;
}

SynthOutcome run_synth_data(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.out_dir.empty()) {
    throw ConfigError("out_dir path not set");
  }
  const int64_t length = cfg.synth_len > 0 ? cfg.synth_len : cfg.input_len;
  const SynthDataset ds = synth_dataset(cfg.synth, length, cfg.seed);
  write_synth_dataset(ds, cfg.out_dir);
  log << "wrote " << ds.trials.trials.size() << " utterances to '"
      << cfg.out_dir << "'\n";

  SynthOutcome out;
  out.n_per_class = cfg.synth;
  out.length = length;
  out.dir = cfg.out_dir;
  return out;
}

}  // namespace rwr
