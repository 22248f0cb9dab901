#include "smx/fid.hpp"

#include <memory>

namespace smx {

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::invalid_shape, "fid: dimension mismatch");
  const int d = a.dim();
  SymMatrix ca = a.cov, cb = b.cov;
  if (a.n < d) ca += 1e-6 * SymMatrix::Identity(d, d);
  if (b.n < d) cb += 1e-6 * SymMatrix::Identity(d, d);
  Eigen::VectorXd diff = a.mu - b.mu;
  // symmetrized product keeps the argument PSD; its trace equals tr((Ca Cb)^1/2)
  SymMatrix sa = matrix_sqrt_psd(ca);
  SymMatrix inner = sa * cb * sa;
  inner = 0.5 * (inner + inner.transpose());
  SymMatrix cross = matrix_sqrt_psd(inner);
  return diff.squaredNorm() + ca.trace() + cb.trace() - 2.0 * cross.trace();
}

ImageStream stream_of(const std::vector<ImageTensor>& images) {
  auto idx = std::make_shared<size_t>(0);
  return [&images, idx]() -> std::optional<ImageTensor> {
    if (*idx >= images.size()) return std::nullopt;
    return images[(*idx)++];
  };
}

ImageStream stream_of(const ImageTensor& batch) {
  auto idx = std::make_shared<int>(0);
  return [&batch, idx]() -> std::optional<ImageTensor> {
    if (*idx >= batch.n) return std::nullopt;
    return batch.image((*idx)++);
  };
}

Eigen::VectorXd image_features(const ImageTensor& img, const FeatureEncoder& enc) {
  ImageTensor feat = encode(enc, img);
  Eigen::VectorXd v(feat.c);
  const size_t hw = feat.plane();
  for (int c = 0; c < feat.c; ++c) {
    double sum = 0.0;
    const float* p = feat.chan(0, c);
    for (size_t i = 0; i < hw; ++i) sum += p[i];
    v[c] = sum / static_cast<double>(hw);
  }
  return v;
}

GaussianStats gaussian_of_stream(ImageStream stream, const FeatureEncoder& enc) {
  std::vector<Eigen::VectorXd> feats;
  while (auto img = stream()) feats.push_back(image_features(*img, enc));
  if (feats.size() < 2)
    fail(ErrorCode::insufficient_samples, "need >= 2 images per set for FID");
  Eigen::MatrixXd rows(feats.size(), feats[0].size());
  for (size_t i = 0; i < feats.size(); ++i) rows.row(i) = feats[i];
  return estimate_gaussian(rows);
}

double fid_images(ImageStream set_a, ImageStream set_b, const FeatureEncoder& enc) {
  return fid(gaussian_of_stream(std::move(set_a), enc),
             gaussian_of_stream(std::move(set_b), enc));
}

double fid_stylized_stream(ImageStream original, ImageStream synthetic,
                           const StyleBank& bank, double lambda_s,
                           const AlphaSpec& alpha_spec, const FeatureEncoder& enc_nst,
                           const FeatureDecoder& dec, const FeatureEncoder& enc_fid,
                           uint64_t seed, const StylizedStreamOptions& opt) {
  if (lambda_s < 0.0 || lambda_s > 1.0)
    fail(ErrorCode::invalid_config, "lambda_s outside [0,1]");
  GaussianStats ga = gaussian_of_stream(std::move(original), enc_fid);
  std::vector<Eigen::VectorXd> feats;
  uint64_t i = 0;
  while (auto img = synthetic()) {
    Rng rng(stream_key(seed, "fid-stylize", i++));
    ImageTensor out = *img;
    if (lambda_s > 0.0 && rng.bernoulli(lambda_s)) {
      StyleDraw d = draw_style(bank, alpha_spec, rng);
      out = stylize(out, bank.styles[d.style_index], d.alpha, enc_nst, dec, opt.work_res);
    }
    feats.push_back(image_features(out, enc_fid));
  }
  if (feats.size() < 2)
    fail(ErrorCode::insufficient_samples, "need >= 2 synthetic images for FID");
  Eigen::MatrixXd rows(feats.size(), feats[0].size());
  for (size_t k = 0; k < feats.size(); ++k) rows.row(k) = feats[k];
  return fid(ga, estimate_gaussian(rows));
}

}  // namespace smx
