#include "smx/toydata.hpp"

#include <algorithm>
#include <cmath>

namespace smx {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Texture {
  // Sum of three oriented sinusoids per channel around a base color.
  double base[3];
  double amp[3][3];    // [wave][channel]
  double fx[3], fy[3], phase[3];

  double sample(int ch, double x, double y) const {
    double v = base[ch];
    for (int k = 0; k < 3; ++k)
      v += amp[k][ch] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
    return v;
  }
};

Texture draw_texture(Rng& rng, double base_lo, double base_hi, double amp_hi) {
  Texture t;
  const double hue[3] = {rng.uniform(base_lo, base_hi), rng.uniform(base_lo, base_hi),
                         rng.uniform(base_lo, base_hi)};
  for (int c = 0; c < 3; ++c) t.base[c] = hue[c];
  for (int k = 0; k < 3; ++k) {
    const double freq = rng.uniform(0.3, 1.6);
    const double angle = rng.uniform(0.0, kPi);
    t.fx[k] = freq * std::cos(angle);
    t.fy[k] = freq * std::sin(angle);
    t.phase[k] = rng.uniform(0.0, 2 * kPi);
    const double a = rng.uniform(0.2, 1.0) * amp_hi;
    for (int c = 0; c < 3; ++c) t.amp[k][c] = a * rng.uniform(0.3, 1.0);
  }
  return t;
}

// Signed distance to the class shape in rotated, centered coordinates;
// negative inside. r is the shape radius in pixels.
double shape_sdf(int label, double u, double v, double r) {
  switch (label) {
    case 0:  // circle
      return std::hypot(u, v) - r;
    case 1:  // square
      return std::max(std::abs(u), std::abs(v)) - r * 0.82;
    case 2: {  // triangle, apex up
      const double k = std::sqrt(3.0);
      double d = v + 0.5 * r;                        // base half-plane
      d = std::max(d, -0.5 * v + 0.5 * k * u - r);   // right edge
      d = std::max(d, -0.5 * v - 0.5 * k * u - r);   // left edge
      return d * 0.7;
    }
    default: {  // cross
      const double t = 0.34 * r;
      const double bar1 = std::max(std::abs(u) - r, std::abs(v) - t);
      const double bar2 = std::max(std::abs(v) - r, std::abs(u) - t);
      return std::min(bar1, bar2);
    }
  }
}

}  // namespace

const char* toy_class_name(int label) {
  switch (label) {
    case 0: return "circle";
    case 1: return "square";
    case 2: return "triangle";
    case 3: return "cross";
  }
  fail(ErrorCode::invalid_config, "toy label out of range");
}

Dataset make_toy_shapes(int n, uint64_t seed, const ToyOptions& opt) {
  if (n < 1) fail(ErrorCode::invalid_config, "make_toy_shapes: n must be >= 1");
  if (opt.res < 8) fail(ErrorCode::invalid_config, "make_toy_shapes: res must be >= 8");
  const int res = opt.res;
  Dataset ds;
  ds.class_count = kToyClassCount;
  ds.images = ImageTensor(n, 3, res, res, ValueDomain::unit);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(stream_key(seed, "toy-shape", static_cast<uint64_t>(i)));
    const int label = i % kToyClassCount;
    ds.labels[i] = label;

    const double cx = res * rng.uniform(0.35, 0.65);
    const double cy = res * rng.uniform(0.35, 0.65);
    const double r = res * rng.uniform(0.16, 0.3);
    // Mild pose jitter only: oriented edge statistics survive global
    // pooling, which keeps the classes separable for very small nets.
    const double rot = rng.uniform(-0.3, 0.3);
    const double cs = std::cos(rot), sn = std::sin(rot);

    // Keep foreground and background apart in brightness so shapes stay
    // legible in both appearance domains.
    // Fixed polarity (dark background, bright foreground): contrast flips
    // would cancel under the classifier's global pooling and make the
    // classes much harder to separate.
    const double bg_lo = 0.1, bg_hi = 0.45;
    const double fg_lo = 0.55, fg_hi = 0.9;

    Texture bg = draw_texture(rng, bg_lo, bg_hi, opt.textured ? 0.12 : 0.0);
    Texture fg = draw_texture(rng, fg_lo, fg_hi, opt.textured ? 0.12 : 0.0);

    // The textured domain carries a class-correlated high-frequency stripe
    // pattern on the foreground — an easy appearance shortcut that noise,
    // blur, and pixelation destroy. Flat renders have no texture at all, so
    // mixing them into training forces the model back onto shape.
    if (opt.textured) {
      const double angle = label * (kPi / 4) + rng.uniform(-0.15, 0.15);
      const double freq = rng.uniform(1.7, 2.2);
      fg.fx[0] = freq * std::cos(angle);
      fg.fy[0] = freq * std::sin(angle);
      for (int c = 0; c < 3; ++c) fg.amp[0][c] = 0.22;
    }

    // Distractor blobs clutter the textured domain only: they carry no class
    // information but bury the class shape's outline among extra edges. Flat
    // renders stay clutter-free, so they are the clean source of geometry.
    struct Blob {
      int kind;
      double cx, cy, r, cs, sn;
      Texture tex;
    };
    std::vector<Blob> blobs;
    if (opt.textured) {
      for (int bidx = 0; bidx < 2; ++bidx) {
        Blob b;
        b.kind = static_cast<int>(rng.uniform_int(kToyClassCount));
        b.cx = res * rng.uniform(0.1, 0.9);
        b.cy = res * rng.uniform(0.1, 0.9);
        b.r = res * rng.uniform(0.08, 0.14);
        const double brot = rng.uniform(0.0, 2 * kPi);
        b.cs = std::cos(brot);
        b.sn = std::sin(brot);
        b.tex = draw_texture(rng, fg_lo, fg_hi, 0.12);
        blobs.push_back(b);
      }
    }

    Rng noise_rng(stream_key(seed, "toy-noise", static_cast<uint64_t>(i)));
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = cs * dx + sn * dy, v = -sn * dx + cs * dy;
        const double d = shape_sdf(label, u, v, r);
        const double cover = std::clamp(0.5 - d, 0.0, 1.0);  // 1px soft edge
        for (int c = 0; c < 3; ++c) {
          double val = bg.sample(c, x, y);
          for (const Blob& b : blobs) {
            const double bu = b.cs * (x - b.cx) + b.sn * (y - b.cy);
            const double bv = -b.sn * (x - b.cx) + b.cs * (y - b.cy);
            const double bcover =
                std::clamp(0.5 - shape_sdf(b.kind, bu, bv, b.r), 0.0, 1.0);
            val = (1.0 - bcover) * val + bcover * b.tex.sample(c, x, y);
          }
          val = (1.0 - cover) * val + cover * fg.sample(c, x, y);
          if (opt.textured && opt.pixel_noise > 0)
            val += noise_rng.uniform(-opt.pixel_noise, opt.pixel_noise);
          ds.images.at(i, c, y, x) = static_cast<float>(std::clamp(val, 0.0, 1.0));
        }
      }
  }
  return ds;
}

ImageTensor make_toy_styles(int n, int res, uint64_t seed) {
  if (n < 1) fail(ErrorCode::invalid_config, "make_toy_styles: n must be >= 1");
  if (res < 4) fail(ErrorCode::invalid_config, "make_toy_styles: res must be >= 4");
  ImageTensor out(n, 3, res, res, ValueDomain::unit);
  for (int i = 0; i < n; ++i) {
    Rng rng(stream_key(seed, "toy-style", static_cast<uint64_t>(i)));
    Texture t = draw_texture(rng, 0.15, 0.85, 0.45);
    const bool stripes = rng.bernoulli(0.4);
    const double sf = rng.uniform(0.5, 1.8), sa = rng.uniform(0.0, kPi);
    const double sfx = sf * std::cos(sa), sfy = sf * std::sin(sa);
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const double hard = stripes
            ? (std::sin(sfx * x + sfy * y) > 0 ? 0.18 : -0.18)
            : 0.0;
        for (int c = 0; c < 3; ++c)
          out.at(i, c, y, x) =
              static_cast<float>(std::clamp(t.sample(c, x, y) + hard, 0.0, 1.0));
      }
  }
  return out;
}

}  // namespace smx
