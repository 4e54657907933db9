#pragma once

namespace rwr {

// Cosine annealing with warm restarts, per-epoch granularity. Cycle i has
// length T0 * T_mult^i epochs; the learning rate decays from lr0 to eta_min
// along a half cosine within each cycle and jumps back to lr0 at restarts.
struct ScheduleConfig {
  double lr0 = 1e-4;
  double eta_min = 1e-8;
  int t0 = 10;
  int t_mult = 2;

  void validate() const;
};

// Learning rate at a (possibly fractional) epoch position >= 0. Cycles are
// half-open: the end point of a cycle is the start of the next one.
double lr_at(const ScheduleConfig& cfg, double epoch_progress);

}  // namespace rwr
