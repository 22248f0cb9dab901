#include "smx/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "smx/image_io.hpp"

namespace smx {

namespace fs = std::filesystem;
using json = nlohmann::json;

void Dataset::validate() const {
  if (images.n != static_cast<int>(labels.size()))
    fail(ErrorCode::length_mismatch, "dataset: image/label count mismatch");
  if (class_count < 1)
    fail(ErrorCode::invalid_config, "dataset: class_count must be >= 1");
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= class_count)
      fail(ErrorCode::data_error,
           "dataset: label " + std::to_string(labels[i]) + " out of range at record " +
               std::to_string(i));
}

namespace {

std::string default_sidecar(const std::string& bin_path) { return bin_path + ".json"; }

int require_int(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail(ErrorCode::format_error, where + ": missing integer key \"" + key + "\"");
  return j[key].get<int>();
}

}  // namespace

Dataset load_record_dataset(const std::string& bin_path, const std::string& sidecar_path) {
  const std::string sidecar = sidecar_path.empty() ? default_sidecar(bin_path) : sidecar_path;
  std::ifstream sf(sidecar);
  if (!sf) fail(ErrorCode::io_error, "cannot open dataset sidecar " + sidecar);
  json j;
  try {
    sf >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, sidecar + ": " + e.what());
  }
  const int h = require_int(j, "height", sidecar);
  const int w = require_int(j, "width", sidecar);
  const int c = require_int(j, "channels", sidecar);
  const int classes = require_int(j, "classes", sidecar);
  if (h < 1 || w < 1 || c < 1 || classes < 1)
    fail(ErrorCode::format_error, sidecar + ": non-positive shape field");

  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf) fail(ErrorCode::io_error, "cannot open dataset file " + bin_path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bf)),
                                 std::istreambuf_iterator<char>());
  const size_t rec = 1 + static_cast<size_t>(c) * h * w;
  if (raw.size() % rec != 0)
    fail(ErrorCode::format_error,
         bin_path + ": size " + std::to_string(raw.size()) +
             " is not a multiple of the record size " + std::to_string(rec));
  const int n = static_cast<int>(raw.size() / rec);

  Dataset ds;
  ds.class_count = classes;
  ds.images = ImageTensor(n, c, h, w, ValueDomain::unit);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const unsigned char* p = raw.data() + static_cast<size_t>(i) * rec;
    ds.labels[i] = p[0];
    const unsigned char* px = p + 1;
    float* dst = ds.images.chan(i, 0);
    const size_t count = static_cast<size_t>(c) * h * w;
    for (size_t k = 0; k < count; ++k) dst[k] = static_cast<float>(px[k]) / 255.0f;
  }
  ds.validate();
  return ds;
}

void save_record_dataset(const Dataset& ds, const std::string& bin_path,
                         const std::string& sidecar_path) {
  ds.validate();
  if (ds.class_count > 256)
    fail(ErrorCode::invalid_config, "record format holds at most 256 classes");
  std::vector<unsigned char> raw;
  const size_t count = static_cast<size_t>(ds.images.c) * ds.images.h * ds.images.w;
  raw.reserve(static_cast<size_t>(ds.size()) * (1 + count));
  for (int i = 0; i < ds.size(); ++i) {
    raw.push_back(static_cast<unsigned char>(ds.labels[i]));
    const float* src = ds.images.chan(i, 0);
    for (size_t k = 0; k < count; ++k) {
      float v = std::clamp(src[k], 0.0f, 1.0f);
      raw.push_back(static_cast<unsigned char>(v * 255.0f + 0.5f));
    }
  }
  const std::string tmp = bin_path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f.write(reinterpret_cast<const char*>(raw.data()), raw.size());
    if (!f) fail(ErrorCode::io_error, "short write to " + tmp);
  }
  fs::rename(tmp, bin_path);

  const std::string sidecar = sidecar_path.empty() ? default_sidecar(bin_path) : sidecar_path;
  json j{{"height", ds.images.h},
         {"width", ds.images.w},
         {"channels", ds.images.c},
         {"classes", ds.class_count}};
  const std::string stmp = sidecar + ".tmp";
  {
    std::ofstream f(stmp);
    if (!f) fail(ErrorCode::io_error, "cannot open " + stmp + " for writing");
    f << j.dump(2) << "\n";
  }
  fs::rename(stmp, sidecar);
}

Dataset load_png_dataset(const std::string& dir, const std::string& labels_path) {
  std::ifstream lf(labels_path);
  if (!lf) fail(ErrorCode::io_error, "cannot open labels file " + labels_path);
  Dataset ds;
  std::string line;
  int lineno = 0;
  std::vector<ImageTensor> images;
  while (std::getline(lf, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      fail(ErrorCode::format_error,
           labels_path + ":" + std::to_string(lineno) + ": expected \"filename,label\"");
    const std::string name = line.substr(0, comma);
    int label = 0;
    try {
      label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::format_error,
           labels_path + ":" + std::to_string(lineno) + ": label is not an integer");
    }
    if (label < 0)
      fail(ErrorCode::data_error,
           labels_path + ":" + std::to_string(lineno) + ": negative label");
    images.push_back(load_png((fs::path(dir) / name).string()));
    ds.labels.push_back(label);
    ds.class_count = std::max(ds.class_count, label + 1);
  }
  if (images.empty()) fail(ErrorCode::data_error, labels_path + ": no labeled images");
  for (const auto& img : images)
    if (!img.same_shape(images.front()))
      fail(ErrorCode::invalid_shape, dir + ": images differ in shape");
  ds.images = ImageTensor(static_cast<int>(images.size()), images[0].c, images[0].h,
                          images[0].w, ValueDomain::unit);
  for (size_t i = 0; i < images.size(); ++i)
    ds.images.set_image(static_cast<int>(i), images[i]);
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path) {
  if (fs::is_directory(path))
    return load_png_dataset(path, (fs::path(path) / "labels.csv").string());
  if (!fs::exists(path)) fail(ErrorCode::io_error, "dataset path does not exist: " + path);
  return load_record_dataset(path);
}

std::vector<ImageTensor> load_image_dir(const std::string& dir) {
  std::vector<ImageTensor> out;
  for (const auto& p : list_pngs(dir)) out.push_back(load_png(p));
  if (out.empty()) fail(ErrorCode::data_error, dir + ": no PNG images found");
  return out;
}

}  // namespace smx
