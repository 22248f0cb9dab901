#pragma once

#include <string>
#include <vector>

#include "smx/rng.hpp"
#include "smx/tensor.hpp"

namespace smx {

enum class TaOp {
  identity,
  rotate,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
  brightness,
  contrast,
  saturation,
  posterize,
  solarize,
  autocontrast,
  equalize,
};

const char* ta_op_name(TaOp op);
TaOp ta_op_from_name(const std::string& name);

struct NoiseFamily {
  enum class Kind { uniform_linf, gaussian } kind = Kind::uniform_linf;
  double magnitude = 0.1;  // linf bound / gaussian sigma
};

struct AugmentConfig {
  std::vector<TaOp> ta_ops{
      TaOp::identity,   TaOp::rotate,      TaOp::shear_x,   TaOp::shear_y,
      TaOp::translate_x, TaOp::translate_y, TaOp::brightness, TaOp::contrast,
      TaOp::saturation, TaOp::posterize,   TaOp::solarize,  TaOp::autocontrast,
      TaOp::equalize};
  // magnitude table: strength 0..ta_strength_levels scales each op's max
  int ta_strength_levels = 30;
  double max_rotate_deg = 30.0;
  double max_shear = 0.3;
  double max_translate = 0.3;  // fraction of extent
  double max_color = 0.9;      // brightness/contrast/saturation factor swing
  double re_scale_lo = 0.02, re_scale_hi = 0.4;
  double re_aspect_lo = 0.3, re_aspect_hi = 3.3;
  double re_prob = 0.3;
  double noise_patch_lo = 0.2, noise_patch_hi = 0.7;
  std::vector<NoiseFamily> noise_families{{NoiseFamily::Kind::uniform_linf, 0.1},
                                          {NoiseFamily::Kind::gaussian, 0.1}};
  double mixup_alpha = 1.0;
  double cutmix_alpha = 1.0;
};

// One uniformly drawn op at one uniformly drawn integer strength.
ImageTensor trivial_augment(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg);

// Exposed for the geometric-transform oracle tests.
ImageTensor apply_ta_op(const ImageTensor& img, TaOp op, double magnitude,
                        const AugmentConfig& cfg);

ImageTensor random_erasing(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg);

ImageTensor patched_noise(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg);

using LabelVec = std::vector<float>;

struct MixResult {
  ImageTensor batch;
  std::vector<LabelVec> labels;
};

MixResult mixup(const ImageTensor& batch, const std::vector<LabelVec>& labels,
                Rng& rng, double alpha);

MixResult cutmix(const ImageTensor& batch, const std::vector<LabelVec>& labels,
                 Rng& rng, double alpha);

// Reflect-pad, random crop back, horizontal flip with probability 0.5.
ImageTensor crop_flip(const ImageTensor& img, Rng& rng, int pad);

// Inverse-mapping affine warp with bilinear sampling; out-of-range fill 0.5.
// m maps output (x,y) to source coordinates: xs = m[0]x + m[1]y + m[2], etc.
ImageTensor affine_warp(const ImageTensor& img, const double m[6]);

}  // namespace smx
