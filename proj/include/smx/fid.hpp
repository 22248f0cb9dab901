#pragma once

#include <functional>
#include <optional>

#include "smx/nst.hpp"
#include "smx/numerics.hpp"

namespace smx {

// Squared Frechet distance between two Gaussian fits. Covariances of fits
// with fewer samples than dimensions get a 1e-6 ridge.
double fid(const GaussianStats& a, const GaussianStats& b);

// Pull-based stream of single images; nullopt terminates.
using ImageStream = std::function<std::optional<ImageTensor>()>;

ImageStream stream_of(const std::vector<ImageTensor>& images);
ImageStream stream_of(const ImageTensor& batch);

// Per-image feature vector: global average pooling of the deepest encoder stage.
Eigen::VectorXd image_features(const ImageTensor& img, const FeatureEncoder& enc);

GaussianStats gaussian_of_stream(ImageStream stream, const FeatureEncoder& enc);

double fid_images(ImageStream set_a, ImageStream set_b, const FeatureEncoder& enc);

struct StylizedStreamOptions {
  int work_res = 64;
};

// Each synthetic image is independently stylized with probability lambda_s,
// then the result is scored against the original set through enc_fid.
double fid_stylized_stream(ImageStream original, ImageStream synthetic,
                           const StyleBank& bank, double lambda_s,
                           const AlphaSpec& alpha_spec, const FeatureEncoder& enc_nst,
                           const FeatureDecoder& dec, const FeatureEncoder& enc_fid,
                           uint64_t seed, const StylizedStreamOptions& opt = {});

}  // namespace smx
