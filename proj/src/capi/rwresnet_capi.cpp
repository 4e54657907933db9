#include "rwresnet.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "audio/preprocess.hpp"
#include "common/error.hpp"
#include "common/fileio.hpp"
#include "metrics/metrics.hpp"
#include "pipeline/pipeline.hpp"
#include "pipeline/run_config.hpp"
#include "train/checkpoint.hpp"
#include "train/init.hpp"

struct rwr_config {
  rwr::RunConfig run;
};

struct rwr_model {
  std::unique_ptr<rwr::RwResnet> net;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
rwr_status guarded(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return RWR_OK;
  } catch (const rwr::ConfigError& e) {
    g_last_error = e.what();
    return RWR_ERR_CONFIG;
  } catch (const rwr::DataError& e) {
    g_last_error = e.what();
    return RWR_ERR_DATA;
  } catch (const rwr::NumericError& e) {
    g_last_error = e.what();
    return RWR_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RWR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return RWR_ERR_INTERNAL;
  }
}

rwr_status need(bool ok, const char* msg) {
  if (ok) return RWR_OK;
  g_last_error = msg;
  return RWR_ERR_CONFIG;
}

}  // namespace

extern "C" {

const char* rwr_last_error(void) { return g_last_error.c_str(); }

const char* rwr_version(void) { return "1.0.0"; }

rwr_config* rwr_config_new(void) { return new (std::nothrow) rwr_config; }

void rwr_config_free(rwr_config* cfg) { delete cfg; }

rwr_status rwr_config_set(rwr_config* cfg, const char* key,
                          const char* value) {
  if (const rwr_status s = need(cfg && key && value, "null argument"); s != RWR_OK) return s;
  return guarded([&] {
    rwr::apply_config_kv(cfg->run, key, value, "config");
  });
}

rwr_status rwr_config_load_file(rwr_config* cfg, const char* path) {
  if (const rwr_status s = need(cfg && path, "null argument"); s != RWR_OK) return s;
  return guarded([&] {
    if (!std::filesystem::is_regular_file(path)) {
      throw rwr::ConfigError(std::string("config file '") + path +
                             "' does not exist");
    }
    rwr::apply_config_text(cfg->run,
                           rwr::read_file(path, "config file"));
  });
}

rwr_status rwr_config_validate(const rwr_config* cfg) {
  if (const rwr_status s = need(cfg != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] { cfg->run.validate(); });
}

char* rwr_config_dump(const rwr_config* cfg) {
  if (cfg == nullptr) {
    g_last_error = "null argument";
    return nullptr;
  }
  const std::string text = rwr::effective_config(cfg->run);
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) {
    g_last_error = "out of memory";
    return nullptr;
  }
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void rwr_string_free(char* s) { std::free(s); }

rwr_status rwr_train(const rwr_config* cfg) {
  if (const rwr_status s = need(cfg != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] { rwr::run_train(cfg->run, std::cerr); });
}

rwr_status rwr_score(const rwr_config* cfg) {
  if (const rwr_status s = need(cfg != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] { rwr::run_score(cfg->run, std::cerr); });
}

rwr_status rwr_eval(const rwr_config* cfg, double* eer, double* min_tdcf) {
  if (const rwr_status s = need(cfg != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] {
    const rwr::EvalOutcome out = rwr::run_eval(cfg->run, std::cerr);
    std::fputs(out.report_csv.c_str(), stdout);
    std::fflush(stdout);
    if (eer != nullptr) *eer = out.eer.eer;
    if (min_tdcf != nullptr) *min_tdcf = out.tdcf.min_tdcf;
  });
}

rwr_status rwr_gradcheck(int seeds_per_layer, double fault_inject) {
  return guarded([&] {
    rwr::run_gradcheck(seeds_per_layer, fault_inject, std::cout);
    std::cout.flush();
  });
}

rwr_status rwr_synth_data(const rwr_config* cfg) {
  if (const rwr_status s = need(cfg != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] { rwr::run_synth_data(cfg->run, std::cerr); });
}

rwr_model* rwr_model_load(const char* path) {
  if (path == nullptr) {
    g_last_error = "null argument";
    return nullptr;
  }
  auto handle = std::make_unique<rwr_model>();
  const rwr_status s =
      guarded([&] { handle->net = rwr::load_checkpoint(path); });
  return s == RWR_OK ? handle.release() : nullptr;
}

rwr_model* rwr_model_create(const rwr_config* cfg, uint64_t seed) {
  if (cfg == nullptr) {
    g_last_error = "null argument";
    return nullptr;
  }
  auto handle = std::make_unique<rwr_model>();
  const rwr_status s = guarded([&] {
    handle->net = std::make_unique<rwr::RwResnet>(cfg->run.frontend_config());
    rwr::init_params(
        [&](const rwr::ParamVisitor& fn) { handle->net->visit_params(fn); },
        seed);
  });
  return s == RWR_OK ? handle.release() : nullptr;
}

void rwr_model_free(rwr_model* model) { delete model; }

rwr_status rwr_model_save(rwr_model* model, const char* path) {
  if (const rwr_status s = need(model != nullptr && path != nullptr, "null argument"); s != RWR_OK) return s;
  return guarded([&] { rwr::save_checkpoint(*model->net, path); });
}

int64_t rwr_model_param_count(const rwr_model* model) {
  return model != nullptr ? model->net->param_count() : -1;
}

int64_t rwr_model_input_len(const rwr_model* model) {
  return model != nullptr ? model->net->frontend_config().input_len : -1;
}

rwr_status rwr_model_score(rwr_model* model, const float* samples,
                           int64_t n_samples, double* score) {
  if (const rwr_status s = need(model != nullptr && samples != nullptr && score != nullptr,
                                "null argument");
      s != RWR_OK) {
    return s;
  }
  return guarded([&] {
    if (n_samples < 1) {
      throw rwr::DataError("rwr_model_score: need at least one sample");
    }
    const int64_t len = model->net->frontend_config().input_len;
    rwr::Waveform wf;
    wf.samples.assign(samples, samples + n_samples);
    wf = rwr::fix_length(wf, len);
    rwr::Tensor x({1, 1, len}, std::move(wf.samples));
    model->net->set_training(false);
    const rwr::Tensor logits = model->net->forward(x);
    if (!logits.all_finite()) {
      throw rwr::NumericError("rwr_model_score: non-finite logits");
    }
    *score = rwr::detection_score(logits.at(0, 0), logits.at(0, 1));
  });
}

}  // extern "C"
