#pragma once

#include <string>

#include "smx/eval.hpp"
#include "smx/pbt.hpp"
#include "smx/pipeline.hpp"
#include "smx/train.hpp"

namespace smx {

struct DataConfig {
  std::string original;   // record binary or PNG directory
  std::string synthetic;  // optional when policy.lambda = 0
  std::string styles;     // PNG directory; optional when nothing stylizes
  std::string test;       // optional; enables validation metrics
};

struct NstConfig {
  std::string encoder = "tiny-ae";  // "tiny-ae" (trained) or "fixed" (seeded)
  int width = 8;
  int work_res = 32;
  int bank_size = 32;
  int ae_epochs = 30;               // tiny-ae training epochs
  std::string encoder_weights;      // optional pre-trained pair overriding both
  std::string decoder_weights;
};

struct EvalSection {
  std::string severity_table;  // optional JSON path; defaults built in
  int eval_every = 0;          // epochs between validation passes; 0 = final only
};

// The whole experiment file; every field has a default so a minimal config
// only needs the data paths.
struct ExperimentConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  DataConfig data;
  NstConfig nst;
  StylePolicy policy;
  AugmentConfig augment;
  MaterializeOptions materialize;
  int classifier_width = 8;
  TrainConfig train;
  PbtConfig pbt;
  EvalSection eval;

  void validate() const;  // every failure names the offending key
};

ExperimentConfig parse_experiment_config_text(const std::string& text,
                                              const std::string& where = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

// Defaults-filled dump; parse_experiment_config_text(dump(c)) == c.
std::string dump_experiment_config(const ExperimentConfig& cfg);
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);

// Per-subsystem substream of the global seed.
uint64_t sub_seed(const ExperimentConfig& cfg, std::string_view subsystem);

}  // namespace smx
