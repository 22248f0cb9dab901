#include "smx/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

namespace smx {

const char* composition_mode_name(CompositionMode m) {
  return m == CompositionMode::NST_AND_TA ? "NST_AND_TA" : "NST_OR_TA";
}

CompositionMode composition_mode_from_name(const std::string& name) {
  if (name == "NST_AND_TA") return CompositionMode::NST_AND_TA;
  if (name == "NST_OR_TA") return CompositionMode::NST_OR_TA;
  fail(ErrorCode::invalid_config, "unknown composition mode \"" + name + "\"");
}

CompositionMode StylePolicy::mode_for(Origin o) const {
  if (o == Origin::original && mode_original) return *mode_original;
  if (o == Origin::synthetic && mode_synthetic) return *mode_synthetic;
  return mode;
}

void StylePolicy::validate() const {
  auto check01 = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      fail(ErrorCode::invalid_config, std::string(name) + " must lie in [0,1]");
  };
  check01(lambda, "lambda");
  check01(lambda_o, "lambda_o");
  check01(lambda_s, "lambda_s");
  alpha_o.validate();
  alpha_s.validate();
}

int BatchPlan::batch_count() const {
  if (batch_size < 1) return 0;
  return static_cast<int>((entries.size() + batch_size - 1) / batch_size);
}

std::pair<int, int> BatchPlan::batch_range(int batch_idx) const {
  if (batch_idx < 0 || batch_idx >= batch_count())
    fail(ErrorCode::invalid_config,
         "batch index " + std::to_string(batch_idx) + " outside the plan");
  const int start = batch_idx * batch_size;
  const int end = std::min(start + batch_size, static_cast<int>(entries.size()));
  return {start, end};
}

BatchPlan plan_epoch(int n_original, int n_synthetic, int n_styles,
                     const StylePolicy& policy, int batch_size, int epoch,
                     uint64_t seed) {
  policy.validate();
  if (batch_size < 1) fail(ErrorCode::invalid_config, "batch_size must be >= 1");
  if (n_original < batch_size)
    fail(ErrorCode::invalid_config, "plan_epoch needs n_original >= batch_size");
  if (policy.lambda > 0.0 && n_synthetic < 1)
    fail(ErrorCode::invalid_config, "lambda > 0 with an empty synthetic pool");
  const bool may_stylize =
      (policy.lambda > 0.0 && policy.lambda_s > 0.0) || policy.lambda_o > 0.0;
  if (may_stylize && n_styles < 1)
    fail(ErrorCode::invalid_config, "stylization enabled with an empty style bank");

  BatchPlan plan;
  plan.epoch = epoch;
  plan.batch_size = batch_size;
  plan.entries.resize(n_original);

  Rng perm_rng(stream_key(seed, "plan-perm", static_cast<uint64_t>(epoch)));
  std::vector<int> perm(n_original);
  for (int i = 0; i < n_original; ++i) perm[i] = i;
  for (int i = n_original - 1; i > 0; --i)
    std::swap(perm[i], perm[perm_rng.uniform_int(i + 1)]);
  int next_original = 0;

  const int n_batches = plan.batch_count();
  for (int b = 0; b < n_batches; ++b) {
    const auto [start, end] = plan.batch_range(b);
    const int bs = end - start;
    const int synth =
        bs == batch_size
            ? static_cast<int>(std::lround(policy.lambda * batch_size))
            : static_cast<int>(std::floor(policy.lambda * bs));

    // Synthetic slots first, then shuffle positions within the batch.
    std::vector<int> pos(bs);
    for (int i = 0; i < bs; ++i) pos[i] = start + i;
    Rng order_rng(stream_key(seed, "plan-order", static_cast<uint64_t>(epoch),
                             static_cast<uint64_t>(b)));
    for (int i = bs - 1; i > 0; --i)
      std::swap(pos[i], pos[order_rng.uniform_int(i + 1)]);
    for (int i = 0; i < bs; ++i)
      plan.entries[pos[i]].origin = i < synth ? Origin::synthetic : Origin::original;

    for (int g = start; g < end; ++g) {
      BatchSlot& slot = plan.entries[g];
      Rng rng(stream_key(seed, "slot", static_cast<uint64_t>(epoch),
                         static_cast<uint64_t>(g)));
      const bool is_synth = slot.origin == Origin::synthetic;
      slot.source_index = is_synth ? static_cast<int>(rng.uniform_int(n_synthetic))
                                   : perm[next_original++];
      const double p = is_synth ? policy.lambda_s : policy.lambda_o;
      slot.stylize = rng.bernoulli(p);
      const CompositionMode m = policy.mode_for(slot.origin);
      slot.ta = m == CompositionMode::NST_AND_TA ? true : !slot.stylize;
      if (slot.stylize) {
        const AlphaSpec& spec = is_synth ? policy.alpha_s : policy.alpha_o;
        slot.alpha = spec.draw(rng);
        slot.style_index = static_cast<int>(rng.uniform_int(n_styles));
      }
    }
  }
  return plan;
}

namespace {

const Dataset& slot_dataset(const BatchSlot& slot, const EpochAssets& assets) {
  const Dataset* ds = slot.origin == Origin::original ? assets.original : assets.synthetic;
  if (!ds)
    fail(ErrorCode::invalid_config,
         std::string("materialize: no ") +
             (slot.origin == Origin::original ? "original" : "synthetic") + " dataset");
  return *ds;
}

ImageTensor slot_source(const BatchSlot& slot, const EpochAssets& assets) {
  const Dataset& ds = slot_dataset(slot, assets);
  if (slot.source_index < 0 || slot.source_index >= ds.size())
    fail(ErrorCode::data_error,
         std::string("missing index ") + std::to_string(slot.source_index) + " in the " +
             (slot.origin == Origin::original ? "original" : "synthetic") + " dataset");
  return ds.images.image(slot.source_index);
}

ImageTensor slot_cropped(const BatchPlan& plan, int slot_idx, const EpochAssets& assets) {
  ImageTensor img = slot_source(plan.entries[slot_idx], assets);
  if (assets.opts.crop_pad > 0) {
    Rng rng(stream_key(assets.seed, "crop", static_cast<uint64_t>(plan.epoch),
                       static_cast<uint64_t>(slot_idx)));
    img = crop_flip(img, rng, assets.opts.crop_pad);
  }
  return img;
}

// Shared by both strategies so a slot's stylized pixels never depend on when
// they were computed.
ImageTensor slot_stylized(const BatchPlan& plan, int slot_idx, const EpochAssets& assets) {
  const BatchSlot& slot = plan.entries[slot_idx];
  if (!assets.bank || !assets.enc || !assets.dec)
    fail(ErrorCode::invalid_config, "materialize: stylized slot without NST assets");
  if (slot.style_index < 0 || slot.style_index >= static_cast<int>(assets.bank->size()))
    fail(ErrorCode::invalid_config, "materialize: style index outside the bank");
  ImageTensor img = slot_cropped(plan, slot_idx, assets);
  if (assets.nst_counter) ++*assets.nst_counter;
  return stylize(img, assets.bank->styles[slot.style_index], slot.alpha, *assets.enc,
                 *assets.dec, assets.work_res);
}

using StyledCache = std::unordered_map<int, ImageTensor>;

Batch materialize_impl(const BatchPlan& plan, int batch_idx, const EpochAssets& assets,
                       const StyledCache* styled) {
  if (!assets.original) fail(ErrorCode::invalid_config, "materialize: no original dataset");
  const int classes = assets.original->class_count;
  if (assets.synthetic && assets.synthetic->class_count != classes)
    fail(ErrorCode::invalid_config, "original/synthetic class counts differ");
  const auto [start, end] = plan.batch_range(batch_idx);
  const int bs = end - start;

  Batch batch;
  batch.labels.resize(bs);
  std::vector<int> group[2];  // slot offsets per origin, for the mix stage
  for (int i = 0; i < bs; ++i) {
    const int g = start + i;
    const BatchSlot& slot = plan.entries[g];
    ImageTensor img;
    if (slot.stylize) {
      if (styled) {
        auto it = styled->find(g);
        if (it == styled->end())
          fail(ErrorCode::invalid_config, "materialize: stylized slot missing from cache");
        img = it->second;
      } else {
        img = slot_stylized(plan, g, assets);
      }
    } else {
      img = slot_cropped(plan, g, assets);
    }
    if (slot.ta) {
      Rng rng(stream_key(assets.seed, "ta", static_cast<uint64_t>(plan.epoch),
                         static_cast<uint64_t>(g)));
      img = trivial_augment(img, rng, assets.aug);
    }
    if (assets.opts.use_random_erasing) {
      Rng rng(stream_key(assets.seed, "erase", static_cast<uint64_t>(plan.epoch),
                         static_cast<uint64_t>(g)));
      img = random_erasing(img, rng, assets.aug);
    }
    if (assets.opts.use_patched_noise) {
      Rng rng(stream_key(assets.seed, "pnoise", static_cast<uint64_t>(plan.epoch),
                         static_cast<uint64_t>(g)));
      img = patched_noise(img, rng, assets.aug);
    }
    if (batch.images.n == 0)
      batch.images = ImageTensor(bs, img.c, img.h, img.w, ValueDomain::unit);
    batch.images.set_image(i, img);
    LabelVec onehot(classes, 0.0f);
    onehot[slot_dataset(slot, assets).labels[slot.source_index]] = 1.0f;
    batch.labels[i] = std::move(onehot);
    group[static_cast<int>(slot.origin)].push_back(i);
  }

  if (assets.opts.mix != MixKind::none) {
    for (int o = 0; o < 2; ++o) {
      if (group[o].size() < 2) continue;  // mixing needs a partner
      ImageTensor sub(static_cast<int>(group[o].size()), batch.images.c, batch.images.h,
                      batch.images.w, ValueDomain::unit);
      std::vector<LabelVec> sub_labels(group[o].size());
      for (size_t k = 0; k < group[o].size(); ++k) {
        sub.set_image(static_cast<int>(k), batch.images.image(group[o][k]));
        sub_labels[k] = batch.labels[group[o][k]];
      }
      Rng rng(stream_key(assets.seed, "mix", static_cast<uint64_t>(plan.epoch),
                         (static_cast<uint64_t>(batch_idx) << 1) | o));
      MixResult mixed = assets.opts.mix == MixKind::mixup
                            ? mixup(sub, sub_labels, rng, assets.aug.mixup_alpha)
                            : cutmix(sub, sub_labels, rng, assets.aug.cutmix_alpha);
      for (size_t k = 0; k < group[o].size(); ++k) {
        batch.images.set_image(group[o][k], mixed.batch.image(static_cast<int>(k)));
        batch.labels[group[o][k]] = mixed.labels[k];
      }
    }
  }
  return batch;
}

}  // namespace

Batch materialize_batch(const BatchPlan& plan, int batch_idx, const EpochAssets& assets) {
  return materialize_impl(plan, batch_idx, assets, nullptr);
}

BatchStream run_strategy_precompute(const BatchPlan& plan, const EpochAssets& assets,
                                    size_t memory_budget_bytes) {
  size_t styled_count = 0;
  for (const BatchSlot& s : plan.entries) styled_count += s.stylize ? 1 : 0;
  if (assets.original && styled_count > 0) {
    const size_t bytes_per =
        sizeof(float) * static_cast<size_t>(assets.original->images.c) *
        assets.original->images.h * assets.original->images.w;
    if (styled_count * bytes_per > memory_budget_bytes)
      fail(ErrorCode::budget_exceeded,
           "precompute strategy needs " + std::to_string(styled_count * bytes_per) +
               " bytes for stylized slots, over the budget of " +
               std::to_string(memory_budget_bytes) +
               "; use the in-loader strategy instead");
  }
  auto cache = std::make_shared<StyledCache>();
  for (size_t g = 0; g < plan.entries.size(); ++g)
    if (plan.entries[g].stylize)
      cache->emplace(static_cast<int>(g),
                     slot_stylized(plan, static_cast<int>(g), assets));
  auto next = std::make_shared<int>(0);
  return [plan, assets, cache, next]() -> std::optional<Batch> {
    if (*next >= plan.batch_count()) return std::nullopt;
    return materialize_impl(plan, (*next)++, assets, cache.get());
  };
}

BatchStream run_strategy_inloader(const BatchPlan& plan, const EpochAssets& assets) {
  auto next = std::make_shared<int>(0);
  return [plan, assets, next]() -> std::optional<Batch> {
    if (*next >= plan.batch_count()) return std::nullopt;
    const int b = (*next)++;
    // Whole-batch stylization at first touch; the cache lives only for
    // this batch.
    StyledCache cache;
    const auto [start, end] = plan.batch_range(b);
    for (int g = start; g < end; ++g)
      if (plan.entries[g].stylize) cache.emplace(g, slot_stylized(plan, g, assets));
    return materialize_impl(plan, b, assets, &cache);
  };
}

}  // namespace smx
