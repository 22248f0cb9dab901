#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "smx/dataset.hpp"
#include "smx/rng.hpp"

namespace smx {

enum class CorruptionKind : uint8_t {
  gaussian_noise = 0,
  impulse_noise = 1,
  box_blur = 2,
  contrast = 3,
  brightness = 4,
  pixelate = 5,
};

constexpr int kCorruptionKindCount = 6;
constexpr int kSeverityCount = 5;

const char* corruption_kind_name(CorruptionKind k);
CorruptionKind corruption_kind_from_name(const std::string& name);

struct Corruption {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int severity = 1;  // 1..5
};

// Per-kind parameter at each severity; entry [s-1] parameterizes severity s.
struct SeverityTable {
  std::array<double, kSeverityCount> gaussian_sigma{0.08, 0.15, 0.25, 0.35, 0.5};
  std::array<double, kSeverityCount> impulse_frac{0.05, 0.1, 0.18, 0.28, 0.4};
  std::array<int, kSeverityCount> blur_radius{1, 2, 3, 4, 5};
  std::array<double, kSeverityCount> contrast_factor{0.5, 0.35, 0.25, 0.15, 0.08};
  std::array<double, kSeverityCount> brightness_shift{0.15, 0.25, 0.35, 0.45, 0.55};
  std::array<int, kSeverityCount> pixelate_block{2, 3, 4, 6, 8};
};

SeverityTable load_severity_table(const std::string& json_path);
void save_severity_table(const SeverityTable& t, const std::string& json_path);

// Deterministic given (img, c, seed); output clamped to [0,1].
ImageTensor corrupt(const ImageTensor& img, const Corruption& c,
                    const SeverityTable& table, uint64_t seed);

// All kind x severity cells.
std::vector<Corruption> full_suite();

struct RobustCell {
  CorruptionKind kind;
  int severity;
  double accuracy;
};

struct RobustReport {
  std::vector<RobustCell> cells;
  double clean_accuracy = 0.0;
  double mean_robust_accuracy = 0.0;
};

using Classifier = std::function<int(const ImageTensor&)>;

RobustReport robust_accuracy(const Classifier& model, const Dataset& test,
                             const std::vector<Corruption>& suite,
                             const SeverityTable& table, uint64_t seed);

void write_robust_report_csv(const RobustReport& report, const std::string& path);

}  // namespace smx
