#pragma once

#include "smx/config.hpp"
#include "smx/eval.hpp"
#include "smx/fid.hpp"
#include "smx/pbt.hpp"
#include "smx/train.hpp"

namespace smx {

// Everything loaded/derived from an ExperimentConfig, ready to run.
struct ExperimentAssets {
  Dataset original;
  Dataset synthetic;  // size 0 when unused
  Dataset test;       // size 0 when unused
  FeatureEncoder enc;
  FeatureDecoder dec;
  StyleBank bank;  // empty when nothing stylizes
  SeverityTable severity;

  bool has_synthetic() const { return synthetic.size() > 0; }
  bool has_test() const { return test.size() > 0; }
};

ExperimentAssets load_assets(const ExperimentConfig& cfg);

// Per-epoch stream under a fixed policy (or a PBT schedule when given).
EpochStreamFn make_stream_fn(const ExperimentConfig& cfg, const ExperimentAssets& assets,
                             const PbtSchedule* schedule = nullptr);

EvalHook make_eval_hook(const ExperimentConfig& cfg, const ExperimentAssets& assets);

// Full training run; writes metrics.csv, checkpoint.smxw, swa.smxw, and the
// effective config into cfg.out_dir.
TrainResult run_training(const ExperimentConfig& cfg, const ExperimentAssets& assets,
                         const PbtSchedule* schedule = nullptr);

RobustReport evaluate_classifier(const ExperimentConfig& cfg,
                                 const ExperimentAssets& assets,
                                 const TinyClassifier& model);

// PBT over real training: each trial advances one epoch per interval and is
// scored by mean(val accuracy, val robust accuracy). Writes schedule.csv.
PbtResult run_pbt_experiment(const ExperimentConfig& cfg, const ExperimentAssets& assets);

}  // namespace smx
