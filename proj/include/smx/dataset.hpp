#pragma once

#include <string>
#include <vector>

#include "smx/tensor.hpp"

namespace smx {

// Labeled image set held fully in memory; images share one NCHW tensor.
struct Dataset {
  ImageTensor images;       // unit domain
  std::vector<int> labels;  // one per image
  int class_count = 0;

  int size() const { return images.n; }
  void validate() const;
};

// Record-binary format: per record 1 label byte followed by C planes of
// H*W pixel bytes, row major (the CIFAR layout). Shape and class count
// come from a JSON sidecar ("<path>.json" by default) with keys
// height, width, channels, classes.
Dataset load_record_dataset(const std::string& bin_path,
                            const std::string& sidecar_path = "");
void save_record_dataset(const Dataset& ds, const std::string& bin_path,
                         const std::string& sidecar_path = "");

// Directory of PNGs plus a labels file of "filename,label" lines.
Dataset load_png_dataset(const std::string& dir, const std::string& labels_path);

// Dispatch: directories load as PNG sets (labels file "labels.csv" inside),
// regular files as record binaries.
Dataset load_dataset(const std::string& path);

// Unlabeled image directory, e.g. a style pool.
std::vector<ImageTensor> load_image_dir(const std::string& dir);

}  // namespace smx
