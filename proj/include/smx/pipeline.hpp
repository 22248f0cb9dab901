#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "smx/augment.hpp"
#include "smx/dataset.hpp"
#include "smx/nst.hpp"

namespace smx {

enum class Origin : uint8_t { original = 0, synthetic = 1 };
enum class CompositionMode : uint8_t { NST_AND_TA = 0, NST_OR_TA = 1 };

const char* composition_mode_name(CompositionMode m);
CompositionMode composition_mode_from_name(const std::string& name);

// Per-epoch mixing policy: lambda picks the synthetic share of every batch,
// lambda_o / lambda_s gate per-image stylization by origin, and the
// composition mode decides whether stylized images also get TrivialAugment.
struct StylePolicy {
  double lambda = 0.0;
  double lambda_o = 0.0;
  double lambda_s = 0.0;
  AlphaSpec alpha_o = AlphaSpec::fixed(1.0);
  AlphaSpec alpha_s = AlphaSpec::fixed(1.0);
  CompositionMode mode = CompositionMode::NST_AND_TA;
  // Per-origin overrides; unset falls back to `mode`.
  std::optional<CompositionMode> mode_original;
  std::optional<CompositionMode> mode_synthetic;

  CompositionMode mode_for(Origin o) const;
  void validate() const;
};

struct BatchSlot {
  Origin origin = Origin::original;
  int source_index = 0;
  bool stylize = false;
  bool ta = false;
  double alpha = 0.0;    // meaningful when stylize
  int style_index = -1;  // meaningful when stylize
};

struct BatchPlan {
  int epoch = 0;
  int batch_size = 0;
  std::vector<BatchSlot> entries;  // exactly n_original slots per epoch

  int batch_count() const;
  std::pair<int, int> batch_range(int batch_idx) const;  // [start, end) slots
};

// Deterministic epoch plan: every full batch holds round(lambda * B)
// synthetic slots (final partial batch: floor), originals are a shuffled
// permutation prefix, synthetics are drawn with replacement, and every
// random bit (stylize, ta, alpha, style index) is pre-drawn per slot so
// both execution strategies replay it identically.
BatchPlan plan_epoch(int n_original, int n_synthetic, int n_styles,
                     const StylePolicy& policy, int batch_size, int epoch,
                     uint64_t seed);

struct Batch {
  ImageTensor images;
  std::vector<LabelVec> labels;
};

enum class MixKind : uint8_t { none = 0, mixup = 1, cutmix = 2 };

struct MaterializeOptions {
  int crop_pad = 2;  // 0 skips the crop/flip stage entirely
  bool use_random_erasing = false;
  bool use_patched_noise = false;
  MixKind mix = MixKind::none;
};

struct EpochAssets {
  const Dataset* original = nullptr;
  const Dataset* synthetic = nullptr;  // may be null when lambda = 0
  const StyleBank* bank = nullptr;     // may be null when nothing stylizes
  const FeatureEncoder* enc = nullptr;
  const FeatureDecoder* dec = nullptr;
  int work_res = 32;
  AugmentConfig aug;
  MaterializeOptions opts;
  uint64_t seed = 0;                // augmentation substreams
  uint64_t* nst_counter = nullptr;  // optional instrumentation
};

// Stage order: crop/flip -> NST -> TrivialAugment -> erasing/noise -> mix.
Batch materialize_batch(const BatchPlan& plan, int batch_idx, const EpochAssets& assets);

// Pull-based batch stream; nullopt after the final batch.
using BatchStream = std::function<std::optional<Batch>()>;

// All stylized slots rendered up front and cached for the whole epoch.
BatchStream run_strategy_precompute(const BatchPlan& plan, const EpochAssets& assets,
                                    size_t memory_budget_bytes = size_t{1} << 30);

// Stylization deferred to each batch's first touch; cache dropped afterwards.
BatchStream run_strategy_inloader(const BatchPlan& plan, const EpochAssets& assets);

}  // namespace smx
