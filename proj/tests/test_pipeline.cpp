#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smx/pipeline.hpp"
#include "smx/toydata.hpp"

using namespace smx;

namespace {

int synth_count(const BatchPlan& plan, int batch_idx) {
  auto [start, end] = plan.batch_range(batch_idx);
  int n = 0;
  for (int g = start; g < end; ++g)
    n += plan.entries[g].origin == Origin::synthetic;
  return n;
}

struct Fixture {
  Dataset original = make_toy_shapes(40, 11);
  Dataset synthetic;
  FeatureEncoder enc = make_encoder(4, stream_key(11, "enc"));
  FeatureDecoder dec = make_decoder(4, stream_key(11, "dec"));
  StyleBank bank;

  Fixture() {
    ToyOptions flat;
    flat.textured = false;
    synthetic = make_toy_shapes(24, 12, flat);
    std::vector<ImageTensor> styles;
    for (int i = 0; i < 6; ++i)
      styles.push_back(make_toy_styles(1, 32, stream_key(13, "style", i)).image(0));
    bank = build_style_bank(styles, 6, enc, 32, stream_key(13, "bank"));
  }

  EpochAssets assets() const {
    EpochAssets a;
    a.original = &original;
    a.synthetic = &synthetic;
    a.bank = &bank;
    a.enc = &enc;
    a.dec = &dec;
    a.work_res = 32;
    a.seed = stream_key(11, "aug");
    return a;
  }
};

bool batches_equal(const Batch& a, const Batch& b) {
  return a.images.data == b.images.data && a.labels == b.labels;
}

}  // namespace

TEST_CASE("lambda 0 yields a permutation of the originals") {
  StylePolicy p;
  BatchPlan plan = plan_epoch(100, 0, 0, p, 32, 0, 5);
  REQUIRE(plan.entries.size() == 100);
  std::vector<int> seen(100, 0);
  for (const BatchSlot& s : plan.entries) {
    CHECK(s.origin == Origin::original);
    CHECK(!s.stylize);
    ++seen[s.source_index];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
}

TEST_CASE("full batches hold exactly round(lambda * B) synthetic slots") {
  StylePolicy p;
  p.lambda = 0.5;
  BatchPlan plan = plan_epoch(512, 64, 0, p, 256, 0, 6);
  REQUIRE(plan.batch_count() == 2);
  CHECK(synth_count(plan, 0) == 128);
  CHECK(synth_count(plan, 1) == 128);

  p.lambda = 0.3;
  plan = plan_epoch(512, 64, 0, p, 256, 0, 7);
  for (int b = 0; b < plan.batch_count(); ++b)
    CHECK(synth_count(plan, b) == 77);  // round(0.3 * 256)
}

TEST_CASE("final partial batch floors the synthetic share") {
  StylePolicy p;
  p.lambda = 0.5;
  BatchPlan plan = plan_epoch(100, 32, 0, p, 64, 0, 8);
  REQUIRE(plan.batch_count() == 2);
  CHECK(synth_count(plan, 0) == 32);
  auto [s1, e1] = plan.batch_range(1);
  CHECK(e1 - s1 == 36);
  CHECK(synth_count(plan, 1) == 18);  // floor(0.5 * 36)
}

TEST_CASE("boundary probabilities pin the stylize/ta bits") {
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 1.0;
  p.lambda_o = 0.0;
  p.mode = CompositionMode::NST_OR_TA;
  BatchPlan plan = plan_epoch(64, 16, 4, p, 32, 0, 9);
  for (const BatchSlot& s : plan.entries) {
    if (s.origin == Origin::synthetic) {
      CHECK(s.stylize);
      CHECK(!s.ta);
      CHECK(s.style_index >= 0);
      CHECK(s.style_index < 4);
      CHECK(s.alpha == 1.0);  // fixed alpha default
    } else {
      CHECK(!s.stylize);
      CHECK(s.ta);
    }
  }
}

TEST_CASE("mode law: AND always augments, OR is exclusive") {
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 0.5;
  p.lambda_o = 0.5;
  p.mode = CompositionMode::NST_AND_TA;
  BatchPlan and_plan = plan_epoch(128, 32, 4, p, 32, 0, 10);
  for (const BatchSlot& s : and_plan.entries) CHECK(s.ta);

  p.mode = CompositionMode::NST_OR_TA;
  BatchPlan or_plan = plan_epoch(128, 32, 4, p, 32, 0, 10);
  for (const BatchSlot& s : or_plan.entries) CHECK(s.ta != s.stylize);
}

TEST_CASE("per-origin mode overrides") {
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 0.5;
  p.lambda_o = 0.5;
  p.mode = CompositionMode::NST_OR_TA;
  p.mode_original = CompositionMode::NST_AND_TA;
  BatchPlan plan = plan_epoch(128, 32, 4, p, 32, 0, 12);
  for (const BatchSlot& s : plan.entries) {
    if (s.origin == Origin::original)
      CHECK(s.ta);
    else
      CHECK(s.ta != s.stylize);
  }
}

TEST_CASE("epoch budget and determinism") {
  StylePolicy p;
  p.lambda = 0.7;
  BatchPlan a = plan_epoch(90, 30, 0, p, 32, 3, 21);
  CHECK(a.entries.size() == 90);
  BatchPlan b = plan_epoch(90, 30, 0, p, 32, 3, 21);
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].origin == b.entries[i].origin);
    CHECK(a.entries[i].source_index == b.entries[i].source_index);
  }
  BatchPlan c = plan_epoch(90, 30, 0, p, 32, 4, 21);
  bool differs = false;
  for (size_t i = 0; i < a.entries.size(); ++i)
    differs |= a.entries[i].source_index != c.entries[i].source_index;
  CHECK(differs);
}

TEST_CASE("plan preconditions") {
  StylePolicy p;
  p.lambda = 0.5;
  CHECK_THROWS_AS(plan_epoch(64, 0, 0, p, 32, 0, 1), Error);  // empty synthetic pool
  p.lambda_s = 0.5;
  CHECK_THROWS_AS(plan_epoch(64, 16, 0, p, 32, 0, 1), Error);  // empty style bank
  p = StylePolicy{};
  CHECK_THROWS_AS(plan_epoch(16, 0, 0, p, 32, 0, 1), Error);  // n < batch_size
}

TEST_CASE("all-false plan materializes the raw sources") {
  Fixture f;
  StylePolicy p;
  BatchPlan plan = plan_epoch(f.original.size(), 0, 0, p, 8, 0, 30);
  for (BatchSlot& s : plan.entries) s.ta = false;  // bare pass-through plan
  EpochAssets a = f.assets();
  a.opts.crop_pad = 0;  // no crop: images must pass through untouched
  Batch batch = materialize_batch(plan, 0, a);
  REQUIRE(batch.images.n == 8);
  for (int i = 0; i < 8; ++i) {
    const BatchSlot& s = plan.entries[i];
    ImageTensor src = f.original.images.image(s.source_index);
    ImageTensor got = batch.images.image(i);
    CHECK(got.data == src.data);
    REQUIRE(batch.labels[i].size() == static_cast<size_t>(f.original.class_count));
    CHECK(batch.labels[i][f.original.labels[s.source_index]] == 1.0f);
  }
}

TEST_CASE("stylized slot count matches the plan") {
  Fixture f;
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 0.5;
  p.lambda_o = 0.25;
  BatchPlan plan = plan_epoch(f.original.size(), f.synthetic.size(),
                              static_cast<int>(f.bank.size()), p, 8, 0, 31);
  size_t planned = 0;
  for (const BatchSlot& s : plan.entries) planned += s.stylize;
  uint64_t counter = 0;
  EpochAssets a = f.assets();
  a.nst_counter = &counter;
  BatchStream stream = run_strategy_inloader(plan, a);
  while (stream()) {
  }
  CHECK(counter == planned);
}

TEST_CASE("precompute and in-loader streams are bit-identical") {
  Fixture f;
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 0.7;
  p.lambda_o = 0.3;
  p.alpha_s = AlphaSpec::uniform(0.1, 1.0);
  p.mode = CompositionMode::NST_OR_TA;
  EpochAssets a = f.assets();
  a.opts.use_random_erasing = true;
  a.opts.mix = MixKind::mixup;
  for (int epoch = 0; epoch < 3; ++epoch) {
    BatchPlan plan = plan_epoch(f.original.size(), f.synthetic.size(),
                                static_cast<int>(f.bank.size()), p, 16, epoch, 32);
    BatchStream pre = run_strategy_precompute(plan, a);
    BatchStream lazy = run_strategy_inloader(plan, a);
    int batches = 0;
    while (true) {
      std::optional<Batch> x = pre();
      std::optional<Batch> y = lazy();
      REQUIRE(x.has_value() == y.has_value());
      if (!x) break;
      CHECK(batches_equal(*x, *y));
      ++batches;
    }
    CHECK(batches == plan.batch_count());
  }
}

TEST_CASE("zero stylized slots means zero NST calls") {
  Fixture f;
  StylePolicy p;
  p.lambda = 0.5;
  BatchPlan plan = plan_epoch(f.original.size(), f.synthetic.size(), 0, p, 8, 0, 33);
  uint64_t counter = 0;
  EpochAssets a = f.assets();
  a.nst_counter = &counter;
  BatchStream stream = run_strategy_precompute(plan, a);
  while (stream()) {
  }
  CHECK(counter == 0);
}

TEST_CASE("zero-byte budget with stylized slots is a budget error") {
  Fixture f;
  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 1.0;
  BatchPlan plan = plan_epoch(f.original.size(), f.synthetic.size(),
                              static_cast<int>(f.bank.size()), p, 8, 0, 34);
  CHECK_THROWS_AS(run_strategy_precompute(plan, f.assets(), 0), Error);
}

TEST_CASE("composition mode names round trip") {
  CHECK(composition_mode_from_name("NST_AND_TA") == CompositionMode::NST_AND_TA);
  CHECK(composition_mode_from_name("NST_OR_TA") == CompositionMode::NST_OR_TA);
  CHECK(composition_mode_name(CompositionMode::NST_OR_TA) == std::string("NST_OR_TA"));
  CHECK_THROWS_AS(composition_mode_from_name("NST_XOR_TA"), Error);
}
