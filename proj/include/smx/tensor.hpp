#pragma once

#include <cstdint>
#include <vector>

#include "smx/errors.hpp"

namespace smx {

enum class ValueDomain { unit, raw };

// N x C x H x W container, the currency of every module.
// Immutable by convention once handed to another module.
struct ImageTensor {
  std::vector<float> data;
  int n = 0, c = 0, h = 0, w = 0;
  ValueDomain domain = ValueDomain::raw;

  ImageTensor() = default;
  ImageTensor(int n_, int c_, int h_, int w_, ValueDomain d = ValueDomain::raw)
      : data(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f),
        n(n_), c(c_), h(h_), w(w_), domain(d) {
    if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
      fail(ErrorCode::invalid_shape, "negative tensor dimension");
  }

  size_t size() const { return data.size(); }
  size_t plane() const { return static_cast<size_t>(h) * w; }

  float& at(int in, int ic, int iy, int ix) {
    return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  float at(int in, int ic, int iy, int ix) const {
    return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  float* chan(int in, int ic) {
    return data.data() + (static_cast<size_t>(in) * c + ic) * plane();
  }
  const float* chan(int in, int ic) const {
    return data.data() + (static_cast<size_t>(in) * c + ic) * plane();
  }

  // Single-image view copied out of a batch.
  ImageTensor image(int idx) const;
  void set_image(int idx, const ImageTensor& img);

  bool same_shape(const ImageTensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

struct ChannelStats {
  std::vector<float> mean;  // per (n,c)
  std::vector<float> stdev; // per (n,c), >= sqrt(eps)
  int n = 0, c = 0;
  float eps = 0.0f;

  float m(int in, int ic) const { return mean[static_cast<size_t>(in) * c + ic]; }
  float s(int in, int ic) const { return stdev[static_cast<size_t>(in) * c + ic]; }
};

// mean[n,c] over the spatial extent; std = sqrt(population variance + eps)
ChannelStats channel_stats(const ImageTensor& t, float eps);

void clamp_unit(ImageTensor& t);

// Bilinear, half-pixel centers (corner alignment off).
ImageTensor resize_bilinear(const ImageTensor& src, int out_h, int out_w);

}  // namespace smx
