#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "smx/encoders.hpp"
#include "smx/pipeline.hpp"

namespace smx {

struct CosineSchedule {
  double t0 = 20.0;   // first cycle length in epochs
  double mult = 2.0;  // cycle length multiplier at each restart
};

struct FeatureNoiseCfg {
  double add_std = 0.0, mult_std = 0.0;
  bool enabled() const { return add_std > 0.0 || mult_std > 0.0; }
};

struct JsdCfg {
  int views = 3;
  double weight = 0.0;  // 0 disables
  bool enabled() const { return weight > 0.0; }
};

struct TrainConfig {
  int epochs = 60;
  int batch_size = 64;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  CosineSchedule sched;
  double label_smooth = 0.1;
  double swa_start_frac = 0.9;
  double swa_lr = 0.02;
  FeatureNoiseCfg feature_noise;
  JsdCfg jsd;
  double dropout = 0.0;    // on pooled features; default off
  double grad_clip = 5.0;  // global L2 norm cap per step; 0 disables
  uint64_t seed = 0;

  void validate() const;
};

// Cosine decay from lr0 to 0 inside each restart cycle; cycles of length
// t0, t0*mult, t0*mult^2, ... so restarts land at 20, 60, 140, 300 epochs
// with the defaults.
double lr_at(double epoch, const TrainConfig& cfg);

// Cross-entropy of softmax(logits) against the smoothed one-hot target
// (1-smooth on the target class, smooth/K elsewhere). Optional gradient
// with respect to the logits.
double smoothed_ce(const std::vector<float>& logits, int target, double smooth,
                   std::vector<float>* grad = nullptr);
// Same loss against an arbitrary target distribution (mixed labels).
double smoothed_ce_vec(const std::vector<float>& logits, const LabelVec& target,
                       double smooth, std::vector<float>* grad = nullptr);

// Mean-based Jensen-Shannon divergence of three distributions, natural log.
// Optional gradients with respect to each input.
double jsd_loss(const std::vector<double>& p1, const std::vector<double>& p2,
                const std::vector<double>& p3,
                std::array<std::vector<double>, 3>* grads = nullptr);

// hidden * (1 + eps_mult) + eps_add with elementwise Gaussian noise.
ImageTensor feature_noise(const ImageTensor& hidden, Rng& rng, double add_std,
                          double mult_std);

// Conv trunk split in two (the feature-noise insertion point sits between
// them), global average pooling, linear head.
struct TinyClassifier {
  ConvNet front, back;
  std::vector<float> head_w;  // [class_count][feat_channels]
  std::vector<float> head_b;  // [class_count]
  int class_count = 0;
  int feat_channels = 0;
};

TinyClassifier make_classifier(int class_count, int width, uint64_t seed);

std::vector<float> classifier_logits(const TinyClassifier& m, const ImageTensor& img);
std::vector<std::vector<float>> classifier_logits_batch(const TinyClassifier& m,
                                                        const ImageTensor& batch);
int classify(const TinyClassifier& m, const ImageTensor& img);

void save_classifier(const TinyClassifier& m, const std::string& path);
TinyClassifier load_classifier(const std::string& path);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_acc = -1.0, val_robust_acc = -1.0;  // negative: not evaluated
  double wall_s = 0.0;
};

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

using EpochStreamFn = std::function<BatchStream(int epoch)>;

struct EvalHook {
  std::function<double(const TinyClassifier&)> val_acc;
  std::function<double(const TinyClassifier&)> val_robust;
  int every = 0;  // evaluate on epochs where (epoch+1) % every == 0; 0 = never
};

struct TrainResult {
  TinyClassifier model;
  TinyClassifier swa_model;
  std::vector<EpochMetrics> metrics;
  int swa_snapshots = 0;
};

TrainResult train(const TinyClassifier& init, const EpochStreamFn& stream_fn,
                  const TrainConfig& cfg, const EvalHook& hook = {});

}  // namespace smx
