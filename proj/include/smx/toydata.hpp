#pragma once

#include "smx/dataset.hpp"
#include "smx/rng.hpp"

namespace smx {

// Procedural 4-class shape corpus (circle, square, triangle, cross) with a
// controllable appearance domain: textured renders mimic "real" photos,
// flat renders mimic clean synthetic output of a generative model.
struct ToyOptions {
  int res = 32;
  bool textured = true;
  double pixel_noise = 0.02;  // additive uniform noise, textured renders only
};

constexpr int kToyClassCount = 4;
const char* toy_class_name(int label);

Dataset make_toy_shapes(int n, uint64_t seed, const ToyOptions& opt = {});

// Bold procedural texture swatches usable as a style pool.
ImageTensor make_toy_styles(int n, int res, uint64_t seed);

}  // namespace smx
