#include "smx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace smx {

using json = nlohmann::json;

const char* corruption_kind_name(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::impulse_noise: return "impulse_noise";
    case CorruptionKind::box_blur: return "box_blur";
    case CorruptionKind::contrast: return "contrast";
    case CorruptionKind::brightness: return "brightness";
    case CorruptionKind::pixelate: return "pixelate";
  }
  fail(ErrorCode::invalid_config, "unknown corruption kind");
}

CorruptionKind corruption_kind_from_name(const std::string& name) {
  for (int k = 0; k < kCorruptionKindCount; ++k)
    if (name == corruption_kind_name(static_cast<CorruptionKind>(k)))
      return static_cast<CorruptionKind>(k);
  fail(ErrorCode::invalid_config, "unknown corruption kind \"" + name + "\"");
}

namespace {

template <typename T, size_t N>
void read_array(const json& j, const char* key, std::array<T, N>& out,
                const std::string& where) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != N)
    fail(ErrorCode::format_error,
         where + ": key \"" + key + "\" must be an array of " + std::to_string(N));
  for (size_t i = 0; i < N; ++i) out[i] = j[key][i].get<T>();
}

}  // namespace

SeverityTable load_severity_table(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) fail(ErrorCode::io_error, "cannot open severity table " + json_path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, json_path + ": " + e.what());
  }
  SeverityTable t;
  read_array(j, "gaussian_sigma", t.gaussian_sigma, json_path);
  read_array(j, "impulse_frac", t.impulse_frac, json_path);
  read_array(j, "blur_radius", t.blur_radius, json_path);
  read_array(j, "contrast_factor", t.contrast_factor, json_path);
  read_array(j, "brightness_shift", t.brightness_shift, json_path);
  read_array(j, "pixelate_block", t.pixelate_block, json_path);
  return t;
}

void save_severity_table(const SeverityTable& t, const std::string& json_path) {
  json j{{"gaussian_sigma", t.gaussian_sigma},
         {"impulse_frac", t.impulse_frac},
         {"blur_radius", t.blur_radius},
         {"contrast_factor", t.contrast_factor},
         {"brightness_shift", t.brightness_shift},
         {"pixelate_block", t.pixelate_block}};
  const std::string tmp = json_path + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, json_path);
}

namespace {

ImageTensor box_blur(const ImageTensor& img, int radius) {
  if (radius < 1) return img;
  ImageTensor out(img.n, img.c, img.h, img.w, img.domain);
  // horizontal then vertical pass with edge clamping
  ImageTensor mid = out;
  const double inv = 1.0 / (2 * radius + 1);
  for (int i = 0; i < img.n; ++i)
    for (int c = 0; c < img.c; ++c) {
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          double s = 0.0;
          for (int d = -radius; d <= radius; ++d)
            s += img.at(i, c, y, std::clamp(x + d, 0, img.w - 1));
          mid.at(i, c, y, x) = static_cast<float>(s * inv);
        }
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          double s = 0.0;
          for (int d = -radius; d <= radius; ++d)
            s += mid.at(i, c, std::clamp(y + d, 0, img.h - 1), x);
          out.at(i, c, y, x) = static_cast<float>(s * inv);
        }
    }
  return out;
}

ImageTensor pixelate(const ImageTensor& img, int block) {
  if (block < 2) return img;
  ImageTensor out = img;
  for (int i = 0; i < img.n; ++i)
    for (int c = 0; c < img.c; ++c)
      for (int by = 0; by < img.h; by += block)
        for (int bx = 0; bx < img.w; bx += block) {
          const int ey = std::min(by + block, img.h), ex = std::min(bx + block, img.w);
          double s = 0.0;
          for (int y = by; y < ey; ++y)
            for (int x = bx; x < ex; ++x) s += img.at(i, c, y, x);
          const float m = static_cast<float>(s / ((ey - by) * (ex - bx)));
          for (int y = by; y < ey; ++y)
            for (int x = bx; x < ex; ++x) out.at(i, c, y, x) = m;
        }
  return out;
}

}  // namespace

ImageTensor corrupt(const ImageTensor& img, const Corruption& c,
                    const SeverityTable& table, uint64_t seed) {
  if (c.severity < 1 || c.severity > kSeverityCount)
    fail(ErrorCode::invalid_config, "corruption severity must lie in 1..5");
  const int s = c.severity - 1;
  Rng rng(stream_key(seed, "corrupt", static_cast<uint64_t>(c.kind),
                     static_cast<uint64_t>(c.severity)));
  ImageTensor out = img;
  switch (c.kind) {
    case CorruptionKind::gaussian_noise: {
      const double sigma = table.gaussian_sigma[s];
      for (float& v : out.data) v = static_cast<float>(v + sigma * rng.normal());
      break;
    }
    case CorruptionKind::impulse_noise: {
      const double frac = table.impulse_frac[s];
      for (int i = 0; i < out.n; ++i)
        for (int y = 0; y < out.h; ++y)
          for (int x = 0; x < out.w; ++x)
            if (rng.bernoulli(frac)) {
              const float v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
              for (int ch = 0; ch < out.c; ++ch) out.at(i, ch, y, x) = v;
            }
      break;
    }
    case CorruptionKind::box_blur:
      out = box_blur(img, table.blur_radius[s]);
      break;
    case CorruptionKind::contrast: {
      const double f = table.contrast_factor[s];
      for (int i = 0; i < out.n; ++i)
        for (int ch = 0; ch < out.c; ++ch) {
          const float* src = img.chan(i, ch);
          double mean = 0.0;
          for (size_t k = 0; k < img.plane(); ++k) mean += src[k];
          mean /= static_cast<double>(img.plane());
          float* dst = out.chan(i, ch);
          for (size_t k = 0; k < img.plane(); ++k)
            dst[k] = static_cast<float>(mean + f * (src[k] - mean));
        }
      break;
    }
    case CorruptionKind::brightness: {
      const double shift = table.brightness_shift[s];
      for (float& v : out.data) v = static_cast<float>(v + shift);
      break;
    }
    case CorruptionKind::pixelate:
      out = pixelate(img, table.pixelate_block[s]);
      break;
  }
  clamp_unit(out);
  return out;
}

std::vector<Corruption> full_suite() {
  std::vector<Corruption> suite;
  for (int k = 0; k < kCorruptionKindCount; ++k)
    for (int s = 1; s <= kSeverityCount; ++s)
      suite.push_back({static_cast<CorruptionKind>(k), s});
  return suite;
}

RobustReport robust_accuracy(const Classifier& model, const Dataset& test,
                             const std::vector<Corruption>& suite,
                             const SeverityTable& table, uint64_t seed) {
  if (!model) fail(ErrorCode::invalid_config, "robust_accuracy: null classifier");
  if (test.size() < 1) fail(ErrorCode::insufficient_samples, "robust_accuracy: empty test set");
  if (suite.empty()) fail(ErrorCode::invalid_config, "robust_accuracy: empty suite");
  test.validate();

  RobustReport report;
  long clean_correct = 0;
  for (int i = 0; i < test.size(); ++i)
    clean_correct += model(test.images.image(i)) == test.labels[i];
  report.clean_accuracy = static_cast<double>(clean_correct) / test.size();

  double sum = 0.0;
  for (const Corruption& c : suite) {
    const ImageTensor corrupted = corrupt(test.images, c, table, seed);
    long correct = 0;
    for (int i = 0; i < test.size(); ++i)
      correct += model(corrupted.image(i)) == test.labels[i];
    RobustCell cell{c.kind, c.severity, static_cast<double>(correct) / test.size()};
    report.cells.push_back(cell);
    sum += cell.accuracy;
  }
  report.mean_robust_accuracy = sum / static_cast<double>(report.cells.size());
  return report;
}

void write_robust_report_csv(const RobustReport& report, const std::string& path) {
  std::string out = "kind,severity,accuracy\n";
  char line[128];
  for (const RobustCell& c : report.cells) {
    std::snprintf(line, sizeof(line), "%s,%d,%.9g\n", corruption_kind_name(c.kind),
                  c.severity, c.accuracy);
    out += line;
  }
  std::snprintf(line, sizeof(line), "clean,,%.9g\n", report.clean_accuracy);
  out += line;
  std::snprintf(line, sizeof(line), "mean_robust_acc,,%.9g\n", report.mean_robust_accuracy);
  out += line;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << out;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace smx
