#include "smx/nst.hpp"

#include <algorithm>
#include <cstdio>

#include "smx/image_io.hpp"

namespace smx {

AlphaSpec AlphaSpec::fixed(double v) {
  AlphaSpec s;
  s.kind = Kind::fixed;
  s.value = v;
  s.validate();
  return s;
}

AlphaSpec AlphaSpec::uniform(double lo, double hi) {
  AlphaSpec s;
  s.kind = Kind::uniform;
  s.lo = lo;
  s.hi = hi;
  s.validate();
  return s;
}

void AlphaSpec::validate() const {
  if (kind == Kind::fixed) {
    if (value < 0.0 || value > 1.0)
      fail(ErrorCode::invalid_config, "alpha value outside [0,1]");
  } else {
    if (lo < 0.0 || hi > 1.0 || lo > hi)
      fail(ErrorCode::invalid_config, "alpha range invalid");
  }
}

double AlphaSpec::draw(Rng& rng) const {
  return kind == Kind::fixed ? value : rng.uniform(lo, hi);
}

ImageTensor adain(const ImageTensor& c_feat, const ImageTensor& s_feat, float eps) {
  if (c_feat.c != s_feat.c)
    fail(ErrorCode::invalid_shape, "adain: channel count mismatch");
  if (s_feat.n != c_feat.n && s_feat.n != 1)
    fail(ErrorCode::invalid_shape, "adain: batch mismatch");
  ChannelStats cs = channel_stats(c_feat, eps);
  ChannelStats ss = channel_stats(s_feat, eps);
  ImageTensor out(c_feat.n, c_feat.c, c_feat.h, c_feat.w, c_feat.domain);
  const size_t hw = c_feat.plane();
  for (int in = 0; in < c_feat.n; ++in) {
    const int sn = s_feat.n == 1 ? 0 : in;
    for (int ic = 0; ic < c_feat.c; ++ic) {
      const float mu_c = cs.m(in, ic), sd_c = cs.s(in, ic);
      const float mu_s = ss.m(sn, ic), sd_s = ss.s(sn, ic);
      const float scale = sd_s / sd_c;
      const float* src = c_feat.chan(in, ic);
      float* dst = out.chan(in, ic);
      for (size_t i = 0; i < hw; ++i) dst[i] = scale * (src[i] - mu_c) + mu_s;
    }
  }
  return out;
}

ImageTensor stylize_latent(const ImageTensor& c_feat, const ImageTensor& s_feat,
                           double alpha) {
  ImageTensor styled = adain(c_feat, s_feat, kAdainEps);
  const float a = static_cast<float>(alpha);
  for (size_t i = 0; i < styled.data.size(); ++i)
    styled.data[i] = (1.0f - a) * c_feat.data[i] + a * styled.data[i];
  return styled;
}

ImageTensor stylize(const ImageTensor& c, const ImageTensor& s_feat, double alpha,
                    const FeatureEncoder& enc, const FeatureDecoder& dec, int work_res) {
  if (alpha < 0.0 || alpha > 1.0) fail(ErrorCode::invalid_config, "alpha outside [0,1]");
  if (work_res < enc.downsample_factor())
    fail(ErrorCode::invalid_config, "work_res below encoder minimum");
  ImageTensor up = resize_bilinear(c, work_res, work_res);
  ImageTensor latent = stylize_latent(encode(enc, up), s_feat, alpha);
  ImageTensor img = decode(dec, latent);
  img = resize_bilinear(img, c.h, c.w);
  clamp_unit(img);
  return img;
}

StyleBank build_style_bank(const std::vector<ImageTensor>& images, int n,
                           const FeatureEncoder& enc, int work_res, uint64_t seed) {
  if (static_cast<int>(images.size()) < n)
    fail(ErrorCode::insufficient_samples,
         "insufficient styles: have " + std::to_string(images.size()) +
             ", need " + std::to_string(n));
  StyleBank bank;
  bank.seed = seed;
  bank.source_count = n;
  // seeded partial Fisher-Yates: first n entries form the sample
  std::vector<int> idx(images.size());
  for (size_t i = 0; i < images.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng(stream_key(seed, "style-select"));
  for (int i = 0; i < n; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  for (int i = 0; i < n; ++i) {
    ImageTensor up = resize_bilinear(images[idx[i]], work_res, work_res);
    bank.styles.push_back(encode(enc, up));
  }
  return bank;
}

StyleBank build_style_bank(const std::string& style_dir, int n,
                           const FeatureEncoder& enc, int work_res, uint64_t seed) {
  std::vector<ImageTensor> images;
  int skipped = 0;
  for (const auto& path : list_pngs(style_dir)) {
    try {
      images.push_back(load_png(path));
    } catch (const Error&) {
      std::fprintf(stderr, "warning: skipping undecodable style image %s\n", path.c_str());
      ++skipped;
    }
  }
  if (skipped > 0)
    std::fprintf(stderr, "warning: skipped %d undecodable style images\n", skipped);
  return build_style_bank(images, n, enc, work_res, seed);
}

StyleDraw draw_style(const StyleBank& bank, const AlphaSpec& spec, Rng& rng) {
  if (bank.styles.empty()) fail(ErrorCode::invalid_config, "empty style bank");
  StyleDraw d;
  d.style_index = static_cast<int>(rng.uniform_int(bank.styles.size()));
  d.alpha = spec.draw(rng);
  return d;
}

ImageTensor stylize_batch(const ImageTensor& batch, const std::vector<bool>& mask,
                          const StyleBank& bank, const std::vector<StyleDraw>& draws,
                          const FeatureEncoder& enc, const FeatureDecoder& dec,
                          int work_res) {
  if (static_cast<int>(mask.size()) != batch.n)
    fail(ErrorCode::invalid_shape, "stylize_batch: mask length mismatch");
  bool any = std::find(mask.begin(), mask.end(), true) != mask.end();
  if (any && bank.styles.empty())
    fail(ErrorCode::invalid_config, "stylize_batch: empty bank with masked images");
  ImageTensor out = batch;
  for (int i = 0; i < batch.n; ++i) {
    if (!mask[i]) continue;
    const StyleDraw& d = draws[i];
    if (d.style_index < 0 || d.style_index >= static_cast<int>(bank.styles.size()))
      fail(ErrorCode::invalid_config, "stylize_batch: style index out of range");
    out.set_image(i, stylize(batch.image(i), bank.styles[d.style_index], d.alpha,
                             enc, dec, work_res));
  }
  return out;
}

ImageTensor stylize_batch(const ImageTensor& batch, const std::vector<bool>& mask,
                          const StyleBank& bank, const AlphaSpec& alpha_spec,
                          const FeatureEncoder& enc, const FeatureDecoder& dec,
                          int work_res, uint64_t rng_key) {
  std::vector<StyleDraw> draws(batch.n);
  for (int i = 0; i < batch.n; ++i) {
    if (!mask[i]) continue;
    Rng rng(hash_combine(rng_key, static_cast<uint64_t>(i)));
    draws[i] = draw_style(bank, alpha_spec, rng);
  }
  return stylize_batch(batch, mask, bank, draws, enc, dec, work_res);
}

}  // namespace smx
