#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "smx/eval.hpp"
#include "smx/toydata.hpp"

using namespace smx;

namespace {

double mad(const ImageTensor& a, const ImageTensor& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

ImageTensor probe_images(int n, uint64_t seed) {
  return make_toy_shapes(n, seed).images;
}

}  // namespace

TEST_CASE("zero-shift brightness is the identity") {
  SeverityTable table;
  table.brightness_shift[0] = 0.0;
  ImageTensor img = probe_images(2, 1);
  ImageTensor out = corrupt(img, {CorruptionKind::brightness, 1}, table, 7);
  CHECK(out.data == img.data);
}

TEST_CASE("pixelate fixes constant images") {
  ImageTensor img(1, 3, 16, 16, ValueDomain::unit);
  for (float& v : img.data) v = 0.4f;
  SeverityTable table;
  ImageTensor out = corrupt(img, {CorruptionKind::pixelate, 5}, table, 7);
  CHECK(out.data == img.data);
}

TEST_CASE("corrupt is deterministic and clamped") {
  ImageTensor img = probe_images(3, 2);
  SeverityTable table;
  for (int k = 0; k < kCorruptionKindCount; ++k) {
    Corruption c{static_cast<CorruptionKind>(k), 4};
    ImageTensor a = corrupt(img, c, table, 11);
    ImageTensor b = corrupt(img, c, table, 11);
    CHECK(a.data == b.data);
    for (float v : a.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("gaussian noise severity 5 distorts more than severity 1") {
  ImageTensor img = probe_images(4, 3);
  SeverityTable table;
  double m1 = mad(img, corrupt(img, {CorruptionKind::gaussian_noise, 1}, table, 5));
  double m5 = mad(img, corrupt(img, {CorruptionKind::gaussian_noise, 5}, table, 5));
  CHECK(m5 > m1);
}

TEST_CASE("severity monotonically increases distortion for every kind") {
  ImageTensor img = probe_images(16, 4);
  SeverityTable table;
  for (int k = 0; k < kCorruptionKindCount; ++k) {
    double prev = -1.0;
    for (int s = 1; s <= kSeverityCount; ++s) {
      double m = mad(img, corrupt(img, {static_cast<CorruptionKind>(k), s}, table, 9));
      CHECK(m > prev);
      prev = m;
    }
  }
}

TEST_CASE("always-correct and constant classifiers bound the report") {
  Dataset test = make_toy_shapes(24, 5);
  SeverityTable table;
  std::vector<Corruption> suite = full_suite();

  int next = 0;
  // Replays the ground truth: each image is classified in dataset order,
  // clean pass first, then one pass per suite cell.
  Classifier oracle = [&](const ImageTensor&) {
    int label = test.labels[next % test.size()];
    ++next;
    return label;
  };
  RobustReport perfect = robust_accuracy(oracle, test, suite, table, 1);
  CHECK(perfect.clean_accuracy == 1.0);
  CHECK(perfect.mean_robust_accuracy == 1.0);
  for (const RobustCell& c : perfect.cells) CHECK(c.accuracy == 1.0);

  Classifier constant = [](const ImageTensor&) { return 0; };
  RobustReport quarter = robust_accuracy(constant, test, suite, table, 1);
  for (const RobustCell& c : quarter.cells)
    CHECK(c.accuracy == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("robust accuracy equals the brute-force average") {
  Dataset test = make_toy_shapes(10, 6);
  SeverityTable table;
  std::vector<Corruption> suite{{CorruptionKind::contrast, 3},
                                {CorruptionKind::impulse_noise, 2}};
  const uint64_t seed = 17;
  // A nontrivial deterministic "model": brightness of the top-left quadrant.
  Classifier model = [](const ImageTensor& img) {
    double s = 0.0;
    for (int c = 0; c < img.c; ++c)
      for (int y = 0; y < img.h / 2; ++y)
        for (int x = 0; x < img.w / 2; ++x) s += img.at(0, c, y, x);
    return static_cast<int>(s * 64.0) % kToyClassCount;
  };
  RobustReport report = robust_accuracy(model, test, suite, table, seed);

  double hand_sum = 0.0;
  for (size_t ci = 0; ci < suite.size(); ++ci) {
    ImageTensor corrupted = corrupt(test.images, suite[ci], table, seed);
    int correct = 0;
    for (int i = 0; i < test.size(); ++i)
      correct += model(corrupted.image(i)) == test.labels[i];
    const double acc = static_cast<double>(correct) / test.size();
    CHECK(report.cells[ci].accuracy == acc);
    hand_sum += acc;
  }
  CHECK(report.mean_robust_accuracy == hand_sum / 2.0);
}

TEST_CASE("suite evaluation is permutation invariant") {
  Dataset test = make_toy_shapes(12, 7);
  SeverityTable table;
  std::vector<Corruption> suite = full_suite();
  Classifier model = [](const ImageTensor& img) {
    return img.data[40] > 0.5f ? 1 : 2;
  };
  RobustReport fwd = robust_accuracy(model, test, suite, table, 3);
  std::reverse(suite.begin(), suite.end());
  RobustReport rev = robust_accuracy(model, test, suite, table, 3);
  CHECK(fwd.mean_robust_accuracy == doctest::Approx(rev.mean_robust_accuracy).epsilon(1e-12));
  for (size_t i = 0; i < fwd.cells.size(); ++i)
    CHECK(fwd.cells[i].accuracy == rev.cells[fwd.cells.size() - 1 - i].accuracy);
}

TEST_CASE("severity table round trips through json") {
  SeverityTable t;
  t.gaussian_sigma = {0.01, 0.02, 0.03, 0.04, 0.05};
  t.pixelate_block = {2, 2, 3, 3, 4};
  std::string path =
      (std::filesystem::temp_directory_path() / "smx_sev_test.json").string();
  save_severity_table(t, path);
  SeverityTable back = load_severity_table(path);
  CHECK(back.gaussian_sigma == t.gaussian_sigma);
  CHECK(back.impulse_frac == t.impulse_frac);
  CHECK(back.blur_radius == t.blur_radius);
  CHECK(back.contrast_factor == t.contrast_factor);
  CHECK(back.brightness_shift == t.brightness_shift);
  CHECK(back.pixelate_block == t.pixelate_block);
}

TEST_CASE("kind names round trip and bad input fails") {
  for (int k = 0; k < kCorruptionKindCount; ++k) {
    CorruptionKind kind = static_cast<CorruptionKind>(k);
    CHECK(corruption_kind_from_name(corruption_kind_name(kind)) == kind);
  }
  CHECK_THROWS_AS(corruption_kind_from_name("fog"), Error);
  ImageTensor img = probe_images(1, 8);
  SeverityTable table;
  CHECK_THROWS_AS(corrupt(img, {CorruptionKind::contrast, 6}, table, 1), Error);
}

TEST_CASE("degenerate report inputs fail loudly") {
  Dataset test = make_toy_shapes(4, 9);
  SeverityTable table;
  Classifier model = [](const ImageTensor&) { return 0; };
  CHECK_THROWS_AS(robust_accuracy(model, test, {}, table, 1), Error);
  Dataset empty;
  empty.class_count = 4;
  CHECK_THROWS_AS(robust_accuracy(model, empty, full_suite(), table, 1), Error);
}
