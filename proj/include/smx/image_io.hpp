#pragma once

#include <string>
#include <vector>

#include "smx/tensor.hpp"

namespace smx {

// 8-bit PNG in/out; grayscale files are promoted to RGB. Values map to [0,1].
ImageTensor load_png(const std::string& path);
void save_png(const ImageTensor& img, const std::string& path);

// Lexicographically sorted image files (.png) in a directory.
std::vector<std::string> list_pngs(const std::string& dir);

}  // namespace smx
