#include "train/schedule.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace rwr {

void ScheduleConfig::validate() const {
  if (lr0 <= 0.0 || eta_min < 0.0 || eta_min > lr0) {
    throw ConfigError("schedule: need 0 <= eta_min <= lr0 and lr0 > 0");
  }
  if (t0 < 1 || t_mult < 1) {
    throw ConfigError("schedule: t0 and t_mult must be >= 1");
  }
}

double lr_at(const ScheduleConfig& cfg, double epoch_progress) {
  cfg.validate();
  if (epoch_progress < 0.0 || !std::isfinite(epoch_progress)) {
    throw ConfigError("schedule: epoch position must be finite and >= 0, got " +
                      std::to_string(epoch_progress));
  }
  double cycle_len = static_cast<double>(cfg.t0);
  double t = epoch_progress;
  if (cfg.t_mult == 1) {
    t = std::fmod(t, cycle_len);
  } else {
    while (t >= cycle_len) {
      t -= cycle_len;
      cycle_len *= static_cast<double>(cfg.t_mult);
    }
  }
  const double cosine = std::cos(M_PI * t / cycle_len);
  return cfg.eta_min + (cfg.lr0 - cfg.eta_min) * (1.0 + cosine) / 2.0;
}

}  // namespace rwr
