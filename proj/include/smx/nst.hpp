#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smx/encoders.hpp"

namespace smx {

constexpr float kAdainEps = 1e-5f;

// Stylization strength: a fixed value or a uniform range, drawn per image.
struct AlphaSpec {
  enum class Kind { fixed, uniform } kind = Kind::fixed;
  double value = 1.0;       // fixed
  double lo = 0.0, hi = 1.0;  // uniform

  static AlphaSpec fixed(double v);
  static AlphaSpec uniform(double lo, double hi);
  double draw(Rng& rng) const;
  void validate() const;
};

struct StyleBank {
  std::vector<ImageTensor> styles;  // cached encoder features, one per style
  int source_count = 0;
  uint64_t seed = 0;

  size_t size() const { return styles.size(); }
};

// Transfers the style's per-channel mean/std onto the content features.
ImageTensor adain(const ImageTensor& c_feat, const ImageTensor& s_feat, float eps);

// decode((1-alpha) * enc(c') + alpha * adain(enc(c'), s_feat)) with c'
// the content bilinearly rescaled to work_res; result scaled back and clamped.
ImageTensor stylize(const ImageTensor& c, const ImageTensor& s_feat, double alpha,
                    const FeatureEncoder& enc, const FeatureDecoder& dec, int work_res);

// Latent-space part of stylize, before the decoder.
ImageTensor stylize_latent(const ImageTensor& c_feat, const ImageTensor& s_feat,
                           double alpha);

StyleBank build_style_bank(const std::string& style_dir, int n,
                           const FeatureEncoder& enc, int work_res, uint64_t seed);

StyleBank build_style_bank(const std::vector<ImageTensor>& images, int n,
                           const FeatureEncoder& enc, int work_res, uint64_t seed);

// Per-image (style, alpha) decisions for a batch slot; pre-drawable so the
// two execution strategies agree bit for bit.
struct StyleDraw {
  int style_index = -1;
  double alpha = 0.0;
};

StyleDraw draw_style(const StyleBank& bank, const AlphaSpec& spec, Rng& rng);

// Masked images replaced by their stylized versions; unmasked ones untouched.
ImageTensor stylize_batch(const ImageTensor& batch, const std::vector<bool>& mask,
                          const StyleBank& bank, const std::vector<StyleDraw>& draws,
                          const FeatureEncoder& enc, const FeatureDecoder& dec,
                          int work_res);

// Convenience overload drawing (style, alpha) from per-image substreams of rng_key.
ImageTensor stylize_batch(const ImageTensor& batch, const std::vector<bool>& mask,
                          const StyleBank& bank, const AlphaSpec& alpha_spec,
                          const FeatureEncoder& enc, const FeatureDecoder& dec,
                          int work_res, uint64_t rng_key);

}  // namespace smx
