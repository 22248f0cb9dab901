#include "smx/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace smx {

const char* ta_op_name(TaOp op) {
  switch (op) {
    case TaOp::identity: return "identity";
    case TaOp::rotate: return "rotate";
    case TaOp::shear_x: return "shear_x";
    case TaOp::shear_y: return "shear_y";
    case TaOp::translate_x: return "translate_x";
    case TaOp::translate_y: return "translate_y";
    case TaOp::brightness: return "brightness";
    case TaOp::contrast: return "contrast";
    case TaOp::saturation: return "saturation";
    case TaOp::posterize: return "posterize";
    case TaOp::solarize: return "solarize";
    case TaOp::autocontrast: return "autocontrast";
    case TaOp::equalize: return "equalize";
  }
  return "identity";
}

TaOp ta_op_from_name(const std::string& name) {
  static const std::array<TaOp, 13> all = {
      TaOp::identity,   TaOp::rotate,      TaOp::shear_x,   TaOp::shear_y,
      TaOp::translate_x, TaOp::translate_y, TaOp::brightness, TaOp::contrast,
      TaOp::saturation, TaOp::posterize,   TaOp::solarize,  TaOp::autocontrast,
      TaOp::equalize};
  for (TaOp op : all)
    if (name == ta_op_name(op)) return op;
  fail(ErrorCode::invalid_config, "unknown TA op: " + name);
}

ImageTensor affine_warp(const ImageTensor& img, const double m[6]) {
  ImageTensor out(img.n, img.c, img.h, img.w, img.domain);
  for (int in = 0; in < img.n; ++in) {
    for (int oy = 0; oy < img.h; ++oy) {
      for (int ox = 0; ox < img.w; ++ox) {
        const double xs = m[0] * ox + m[1] * oy + m[2];
        const double ys = m[3] * ox + m[4] * oy + m[5];
        const int x0 = static_cast<int>(std::floor(xs));
        const int y0 = static_cast<int>(std::floor(ys));
        const float fx = static_cast<float>(xs - x0);
        const float fy = static_cast<float>(ys - y0);
        for (int ic = 0; ic < img.c; ++ic) {
          auto sample = [&](int y, int x) -> float {
            if (x < 0 || x >= img.w || y < 0 || y >= img.h) return 0.5f;
            return img.at(in, ic, y, x);
          };
          float top = sample(y0, x0) + (sample(y0, x0 + 1) - sample(y0, x0)) * fx;
          float bot = sample(y0 + 1, x0) + (sample(y0 + 1, x0 + 1) - sample(y0 + 1, x0)) * fx;
          out.at(in, ic, oy, ox) = top + (bot - top) * fy;
        }
      }
    }
  }
  return out;
}

namespace {

// Affine about the image center: out pixel -> source pixel.
ImageTensor warp_centered(const ImageTensor& img, double a, double b, double c, double d,
                          double tx, double ty) {
  const double cx = (img.w - 1) / 2.0, cy = (img.h - 1) / 2.0;
  double m[6];
  m[0] = a;
  m[1] = b;
  m[2] = cx - a * cx - b * cy + tx;
  m[3] = c;
  m[4] = d;
  m[5] = cy - c * cx - d * cy + ty;
  return affine_warp(img, m);
}

ImageTensor per_pixel(const ImageTensor& img, auto&& fn) {
  ImageTensor out = img;
  for (float& v : out.data) v = fn(v);
  return out;
}

ImageTensor to_gray_blend(const ImageTensor& img, double factor) {
  // factor 1 = original, 0 = grayscale
  ImageTensor out = img;
  if (img.c != 3) return out;
  for (int in = 0; in < img.n; ++in)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) {
        float r = img.at(in, 0, y, x), g = img.at(in, 1, y, x), b = img.at(in, 2, y, x);
        float gray = 0.299f * r + 0.587f * g + 0.114f * b;
        for (int c = 0; c < 3; ++c)
          out.at(in, c, y, x) =
              static_cast<float>(gray + factor * (img.at(in, c, y, x) - gray));
      }
  return out;
}

ImageTensor autocontrast_op(const ImageTensor& img) {
  ImageTensor out = img;
  const size_t hw = img.plane();
  for (int in = 0; in < img.n; ++in)
    for (int ic = 0; ic < img.c; ++ic) {
      const float* p = img.chan(in, ic);
      float lo = p[0], hi = p[0];
      for (size_t i = 0; i < hw; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
      float* o = out.chan(in, ic);
      if (hi - lo < 1e-6f) continue;
      const float s = 1.0f / (hi - lo);
      for (size_t i = 0; i < hw; ++i) o[i] = (p[i] - lo) * s;
    }
  return out;
}

ImageTensor equalize_op(const ImageTensor& img) {
  ImageTensor out = img;
  const size_t hw = img.plane();
  for (int in = 0; in < img.n; ++in)
    for (int ic = 0; ic < img.c; ++ic) {
      const float* p = img.chan(in, ic);
      std::array<int, 256> hist{};
      for (size_t i = 0; i < hw; ++i) {
        int b = std::clamp(static_cast<int>(p[i] * 255.0f + 0.5f), 0, 255);
        ++hist[b];
      }
      std::array<float, 256> cdf{};
      int acc = 0;
      for (int b = 0; b < 256; ++b) {
        acc += hist[b];
        cdf[b] = static_cast<float>(acc) / static_cast<float>(hw);
      }
      float* o = out.chan(in, ic);
      for (size_t i = 0; i < hw; ++i) {
        int b = std::clamp(static_cast<int>(p[i] * 255.0f + 0.5f), 0, 255);
        o[i] = cdf[b];
      }
    }
  return out;
}

}  // namespace

ImageTensor apply_ta_op(const ImageTensor& img, TaOp op, double magnitude,
                        const AugmentConfig& cfg) {
  switch (op) {
    case TaOp::identity:
      return img;
    case TaOp::rotate: {
      const double rad = magnitude * cfg.max_rotate_deg * M_PI / 180.0;
      const double cs = std::cos(rad), sn = std::sin(rad);
      return warp_centered(img, cs, -sn, sn, cs, 0.0, 0.0);
    }
    case TaOp::shear_x:
      return warp_centered(img, 1.0, magnitude * cfg.max_shear, 0.0, 1.0, 0.0, 0.0);
    case TaOp::shear_y:
      return warp_centered(img, 1.0, 0.0, magnitude * cfg.max_shear, 1.0, 0.0, 0.0);
    case TaOp::translate_x:
      return warp_centered(img, 1.0, 0.0, 0.0, 1.0, magnitude * cfg.max_translate * img.w, 0.0);
    case TaOp::translate_y:
      return warp_centered(img, 1.0, 0.0, 0.0, 1.0, 0.0, magnitude * cfg.max_translate * img.h);
    case TaOp::brightness: {
      const float f = static_cast<float>(1.0 + magnitude * cfg.max_color);
      return per_pixel(img, [f](float v) { return v * f; });
    }
    case TaOp::contrast: {
      double sum = 0.0;
      for (float v : img.data) sum += v;
      const float mean = static_cast<float>(sum / img.data.size());
      const float f = static_cast<float>(1.0 + magnitude * cfg.max_color);
      return per_pixel(img, [f, mean](float v) { return mean + f * (v - mean); });
    }
    case TaOp::saturation:
      return to_gray_blend(img, 1.0 + magnitude * cfg.max_color);
    case TaOp::posterize: {
      // 8 bits at zero magnitude down to 2 at full strength
      const int bits = std::clamp(8 - static_cast<int>(std::abs(magnitude) * 6.0), 2, 8);
      const float levels = static_cast<float>((1 << bits) - 1);
      return per_pixel(img, [levels](float v) {
        return std::round(std::clamp(v, 0.0f, 1.0f) * levels) / levels;
      });
    }
    case TaOp::solarize: {
      const float thresh = static_cast<float>(1.0 - std::abs(magnitude));
      return per_pixel(img, [thresh](float v) { return v >= thresh ? 1.0f - v : v; });
    }
    case TaOp::autocontrast:
      return autocontrast_op(img);
    case TaOp::equalize:
      return equalize_op(img);
  }
  return img;
}

ImageTensor trivial_augment(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg) {
  if (cfg.ta_ops.empty()) fail(ErrorCode::invalid_config, "trivial_augment: empty op list");
  const TaOp op = cfg.ta_ops[rng.uniform_int(cfg.ta_ops.size())];
  const int strength = static_cast<int>(rng.uniform_int(cfg.ta_strength_levels + 1));
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double magnitude = sign * static_cast<double>(strength) / cfg.ta_strength_levels;
  ImageTensor out = apply_ta_op(img, op, magnitude, cfg);
  clamp_unit(out);
  return out;
}

ImageTensor random_erasing(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg) {
  if (!rng.bernoulli(cfg.re_prob)) return img;
  if (img.h <= 1 || img.w <= 1) return img;  // no rectangle fits
  const int area = img.h * img.w;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double frac = rng.uniform(cfg.re_scale_lo, cfg.re_scale_hi);
    const double aspect = rng.uniform(cfg.re_aspect_lo, cfg.re_aspect_hi);
    const int rh = static_cast<int>(std::round(std::sqrt(frac * area * aspect)));
    const int rw = static_cast<int>(std::round(std::sqrt(frac * area / aspect)));
    if (rh < 1 || rw < 1 || rh > img.h || rw > img.w) continue;
    const int y0 = static_cast<int>(rng.uniform_int(img.h - rh + 1));
    const int x0 = static_cast<int>(rng.uniform_int(img.w - rw + 1));
    ImageTensor out = img;
    for (int in = 0; in < img.n; ++in)
      for (int ic = 0; ic < img.c; ++ic)
        for (int y = y0; y < y0 + rh; ++y)
          for (int x = x0; x < x0 + rw; ++x)
            out.at(in, ic, y, x) = static_cast<float>(rng.uniform());
    return out;
  }
  return img;  // no admissible rectangle
}

ImageTensor patched_noise(const ImageTensor& img, Rng& rng, const AugmentConfig& cfg) {
  if (cfg.noise_families.empty())
    fail(ErrorCode::invalid_config, "patched_noise: empty noise family list");
  const double side_frac = rng.uniform(cfg.noise_patch_lo, cfg.noise_patch_hi);
  const int side = std::max(1, static_cast<int>(std::round(side_frac * std::min(img.h, img.w))));
  const int y0 = static_cast<int>(rng.uniform_int(img.h - side + 1));
  const int x0 = static_cast<int>(rng.uniform_int(img.w - side + 1));
  const NoiseFamily& fam = cfg.noise_families[rng.uniform_int(cfg.noise_families.size())];
  ImageTensor out = img;
  for (int in = 0; in < img.n; ++in)
    for (int ic = 0; ic < img.c; ++ic)
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) {
          float eps = 0.0f;
          switch (fam.kind) {
            case NoiseFamily::Kind::uniform_linf:
              eps = static_cast<float>(rng.uniform(-fam.magnitude, fam.magnitude));
              break;
            case NoiseFamily::Kind::gaussian:
              eps = static_cast<float>(rng.normal() * fam.magnitude);
              break;
          }
          out.at(in, ic, y, x) = std::clamp(out.at(in, ic, y, x) + eps, 0.0f, 1.0f);
        }
  return out;
}

namespace {

std::vector<int> partner_permutation(int n, Rng& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  return perm;
}

void check_labels(const ImageTensor& batch, const std::vector<LabelVec>& labels) {
  if (batch.n < 2) fail(ErrorCode::invalid_shape, "mix ops need batch n >= 2");
  if (static_cast<int>(labels.size()) != batch.n)
    fail(ErrorCode::invalid_shape, "label count mismatch");
}

void mix_labels(std::vector<LabelVec>& out, const std::vector<LabelVec>& in,
                const std::vector<int>& perm, const std::vector<float>& w) {
  for (size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i];
    const LabelVec& partner = in[perm[i]];
    for (size_t k = 0; k < out[i].size(); ++k)
      out[i][k] = w[i] * in[i][k] + (1.0f - w[i]) * partner[k];
  }
}

}  // namespace

MixResult mixup(const ImageTensor& batch, const std::vector<LabelVec>& labels,
                Rng& rng, double alpha) {
  check_labels(batch, labels);
  const std::vector<int> perm = partner_permutation(batch.n, rng);
  std::vector<float> w(batch.n);
  for (int i = 0; i < batch.n; ++i) w[i] = static_cast<float>(rng.beta(alpha, alpha));
  MixResult res;
  res.batch = batch;
  const size_t stride = static_cast<size_t>(batch.c) * batch.plane();
  for (int i = 0; i < batch.n; ++i) {
    const float* self = batch.data.data() + i * stride;
    const float* partner = batch.data.data() + perm[i] * stride;
    float* out = res.batch.data.data() + i * stride;
    for (size_t k = 0; k < stride; ++k) out[k] = w[i] * self[k] + (1.0f - w[i]) * partner[k];
  }
  res.labels.resize(batch.n);
  mix_labels(res.labels, labels, perm, w);
  return res;
}

MixResult cutmix(const ImageTensor& batch, const std::vector<LabelVec>& labels,
                 Rng& rng, double alpha) {
  check_labels(batch, labels);
  const std::vector<int> perm = partner_permutation(batch.n, rng);
  MixResult res;
  res.batch = batch;
  res.labels.resize(batch.n);
  std::vector<float> w(batch.n);
  for (int i = 0; i < batch.n; ++i) {
    const double lam = rng.beta(alpha, alpha);
    // patch covers fraction 1-lam; self keeps weight = kept-area fraction
    const int rh = static_cast<int>(std::round(batch.h * std::sqrt(1.0 - lam)));
    const int rw = static_cast<int>(std::round(batch.w * std::sqrt(1.0 - lam)));
    const int cy = static_cast<int>(rng.uniform_int(batch.h));
    const int cx = static_cast<int>(rng.uniform_int(batch.w));
    const int y0 = std::clamp(cy - rh / 2, 0, batch.h);
    const int y1 = std::clamp(cy - rh / 2 + rh, 0, batch.h);
    const int x0 = std::clamp(cx - rw / 2, 0, batch.w);
    const int x1 = std::clamp(cx - rw / 2 + rw, 0, batch.w);
    const int pasted = (y1 - y0) * (x1 - x0);
    for (int ic = 0; ic < batch.c; ++ic)
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          res.batch.at(i, ic, y, x) = batch.at(perm[i], ic, y, x);
    w[i] = 1.0f - static_cast<float>(pasted) / static_cast<float>(batch.h * batch.w);
  }
  mix_labels(res.labels, labels, perm, w);
  return res;
}

ImageTensor crop_flip(const ImageTensor& img, Rng& rng, int pad) {
  if (pad < 0) fail(ErrorCode::invalid_config, "crop_flip: negative pad");
  ImageTensor out = img;
  if (pad > 0) {
    const int oy = static_cast<int>(rng.uniform_int(2 * pad + 1));
    const int ox = static_cast<int>(rng.uniform_int(2 * pad + 1));
    out = ImageTensor(img.n, img.c, img.h, img.w, img.domain);
    auto reflect = [](int i, int extent) {
      if (extent == 1) return 0;
      while (i < 0 || i >= extent) {
        if (i < 0) i = -i;
        if (i >= extent) i = 2 * extent - 2 - i;
      }
      return i;
    };
    for (int in = 0; in < img.n; ++in)
      for (int ic = 0; ic < img.c; ++ic)
        for (int y = 0; y < img.h; ++y)
          for (int x = 0; x < img.w; ++x)
            out.at(in, ic, y, x) =
                img.at(in, ic, reflect(y + oy - pad, img.h), reflect(x + ox - pad, img.w));
  }
  if (rng.bernoulli(0.5)) {
    ImageTensor flipped = out;
    for (int in = 0; in < out.n; ++in)
      for (int ic = 0; ic < out.c; ++ic)
        for (int y = 0; y < out.h; ++y)
          for (int x = 0; x < out.w; ++x)
            flipped.at(in, ic, y, x) = out.at(in, ic, y, out.w - 1 - x);
    out = std::move(flipped);
  }
  return out;
}

}  // namespace smx
