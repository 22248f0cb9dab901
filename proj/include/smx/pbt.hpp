#pragma once

#include <any>
#include <functional>
#include <string>
#include <vector>

#include "smx/pipeline.hpp"

namespace smx {

struct PbtConfig {
  int population = 24;
  int intervals = 30;           // each interval is one training epoch
  double top_frac = 0.25;       // exploit source quantile
  double bottom_frac = 0.25;    // exploit target quantile
  StylePolicy start;            // shared start policy for every trial
  uint64_t seed = 0;

  void validate() const;
};

struct ScheduleEntry {
  double lambda = 0.0, lambda_o = 0.0, lambda_s = 0.0;
  int winner_id = 0;
};

struct PbtSchedule {
  std::vector<ScheduleEntry> entries;  // one per interval/epoch
};

void save_schedule_csv(const PbtSchedule& s, const std::string& path);
PbtSchedule load_schedule_csv(const std::string& path);

// Each of lambda, lambda_o, lambda_s multiplied by a factor drawn uniformly
// from {0.8, 1.2}, then clamped to [0,1].
StylePolicy perturb(const StylePolicy& policy, Rng& rng);

struct TrialScore {
  double accuracy = 0.0;
  double robust_accuracy = 0.0;
  double mean() const { return 0.5 * (accuracy + robust_accuracy); }
};

// Advances one trial's model by one interval under its current policy and
// returns its validation scores. `state` carries the trial's checkpoint
// (any model representation); it starts empty and is copied on exploit.
using TrialStepFn = std::function<TrialScore(int trial_id, int interval,
                                             const StylePolicy& policy,
                                             std::any& state)>;

struct Trial {
  int id = 0;
  StylePolicy policy;
  std::any state;
  std::vector<double> score_history;
};

struct PbtResult {
  Trial best;
  PbtSchedule schedule;
};

PbtResult run_pbt(const PbtConfig& cfg, const TrialStepFn& step);

// Replays a recorded schedule: one call per epoch with that epoch's policy.
// The alpha specs and modes come from `base`; only the lambda parameters
// follow the schedule.
using ReplayStepFn = std::function<void(int epoch, const StylePolicy& policy)>;

void replay(const PbtSchedule& schedule, const StylePolicy& base, int epochs,
            const ReplayStepFn& step);

}  // namespace smx
