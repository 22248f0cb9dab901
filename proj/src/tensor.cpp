#include "smx/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace smx {

ImageTensor ImageTensor::image(int idx) const {
  if (idx < 0 || idx >= n) fail(ErrorCode::invalid_shape, "image index out of range");
  ImageTensor out(1, c, h, w, domain);
  const size_t stride = static_cast<size_t>(c) * plane();
  std::copy_n(data.data() + idx * stride, stride, out.data.data());
  return out;
}

void ImageTensor::set_image(int idx, const ImageTensor& img) {
  if (img.n != 1 || img.c != c || img.h != h || img.w != w)
    fail(ErrorCode::invalid_shape, "set_image shape mismatch");
  const size_t stride = static_cast<size_t>(c) * plane();
  std::copy_n(img.data.data(), stride, data.data() + idx * stride);
}

ChannelStats channel_stats(const ImageTensor& t, float eps) {
  if (t.h * t.w < 1) fail(ErrorCode::invalid_shape, "channel_stats: empty spatial extent");
  if (eps < 0.0f) fail(ErrorCode::invalid_config, "channel_stats: negative eps");
  ChannelStats cs;
  cs.n = t.n;
  cs.c = t.c;
  cs.eps = eps;
  cs.mean.resize(static_cast<size_t>(t.n) * t.c);
  cs.stdev.resize(cs.mean.size());
  const size_t hw = t.plane();
  for (int in = 0; in < t.n; ++in) {
    for (int ic = 0; ic < t.c; ++ic) {
      const float* p = t.chan(in, ic);
      double sum = 0.0, sq = 0.0;
      for (size_t i = 0; i < hw; ++i) {
        sum += p[i];
        sq += static_cast<double>(p[i]) * p[i];
      }
      double mean = sum / static_cast<double>(hw);
      double var = sq / static_cast<double>(hw) - mean * mean;
      if (var < 0.0) var = 0.0;  // rounding
      size_t k = static_cast<size_t>(in) * t.c + ic;
      cs.mean[k] = static_cast<float>(mean);
      cs.stdev[k] = static_cast<float>(std::sqrt(var + eps));
    }
  }
  return cs;
}

void clamp_unit(ImageTensor& t) {
  for (float& v : t.data) v = std::clamp(v, 0.0f, 1.0f);
  t.domain = ValueDomain::unit;
}

ImageTensor resize_bilinear(const ImageTensor& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) fail(ErrorCode::invalid_shape, "resize to empty extent");
  if (out_h == src.h && out_w == src.w) return src;
  ImageTensor out(src.n, src.c, out_h, out_w, src.domain);
  const double sy = static_cast<double>(src.h) / out_h;
  const double sx = static_cast<double>(src.w) / out_w;
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<float> fx(out_w);
  for (int ox = 0; ox < out_w; ++ox) {
    double x = (ox + 0.5) * sx - 0.5;
    double xf = std::floor(x);
    x0[ox] = std::clamp(static_cast<int>(xf), 0, src.w - 1);
    x1[ox] = std::clamp(static_cast<int>(xf) + 1, 0, src.w - 1);
    fx[ox] = static_cast<float>(std::clamp(x - xf, 0.0, 1.0));
  }
  for (int in = 0; in < src.n; ++in) {
    for (int ic = 0; ic < src.c; ++ic) {
      const float* sp = src.chan(in, ic);
      float* op = out.chan(in, ic);
      for (int oy = 0; oy < out_h; ++oy) {
        double y = (oy + 0.5) * sy - 0.5;
        double yf = std::floor(y);
        int y0 = std::clamp(static_cast<int>(yf), 0, src.h - 1);
        int y1 = std::clamp(static_cast<int>(yf) + 1, 0, src.h - 1);
        float fy = static_cast<float>(std::clamp(y - yf, 0.0, 1.0));
        const float* r0 = sp + static_cast<size_t>(y0) * src.w;
        const float* r1 = sp + static_cast<size_t>(y1) * src.w;
        for (int ox = 0; ox < out_w; ++ox) {
          float top = r0[x0[ox]] + (r0[x1[ox]] - r0[x0[ox]]) * fx[ox];
          float bot = r1[x0[ox]] + (r1[x1[ox]] - r1[x0[ox]]) * fx[ox];
          op[static_cast<size_t>(oy) * out_w + ox] = top + (bot - top) * fy;
        }
      }
    }
  }
  return out;
}

}  // namespace smx
