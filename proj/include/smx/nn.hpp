#pragma once

#include <cstdint>
#include <vector>

#include "smx/rng.hpp"
#include "smx/tensor.hpp"

namespace smx {

// Minimal conv-net toolkit with explicit forward/backward passes.
// Reflect padding k/2 throughout; no autodiff graph, the caller keeps a tape.

enum class LayerKind : uint8_t {
  conv = 0,
  relu = 1,
  pool2 = 2,
  upsample2 = 3,
  maxpool2 = 4,
  lrelu = 5,  // slope 0.1 on the negative side
};

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int in_c = 0, out_c = 0, k = 3, stride = 1;  // conv only
};

inline LayerSpec conv_spec(int in_c, int out_c, int k = 3, int stride = 1) {
  return {LayerKind::conv, in_c, out_c, k, stride};
}
inline LayerSpec relu_spec() { return {LayerKind::relu}; }
inline LayerSpec pool2_spec() { return {LayerKind::pool2}; }
inline LayerSpec upsample2_spec() { return {LayerKind::upsample2}; }
inline LayerSpec maxpool2_spec() { return {LayerKind::maxpool2}; }
inline LayerSpec lrelu_spec() { return {LayerKind::lrelu}; }

constexpr float kLreluSlope = 0.1f;

struct ConvParams {
  int in_c = 0, out_c = 0, k = 3, stride = 1;
  std::vector<float> w;  // [out_c][in_c][k][k]
  std::vector<float> b;  // [out_c]
};

struct ConvNet {
  std::vector<LayerSpec> specs;
  std::vector<ConvParams> convs;  // one per conv spec, in order

  void init(const std::vector<LayerSpec>& layers, Rng& rng);
  ImageTensor forward(const ImageTensor& x) const;

  int out_channels() const;
  int downsample_factor() const;  // product of pool strides / upsample factors
  int min_input() const;          // smallest admissible spatial extent

  size_t param_count() const;
  bool same_arch(const ConvNet& o) const;
};

struct NetGrads {
  std::vector<std::vector<float>> gw, gb;  // parallel to net.convs
  void zero(const ConvNet& net);
  void add(const NetGrads& o);
  void scale(float s);
};

struct NetTape {
  std::vector<ImageTensor> acts;  // acts[0] = input, acts[i] = output of layer i-1
};

ImageTensor net_forward_train(const ConvNet& net, const ImageTensor& x, NetTape& tape);
// Returns grad wrt input; accumulates parameter grads.
ImageTensor net_backward(const ConvNet& net, const NetTape& tape,
                         const ImageTensor& grad_out, NetGrads& grads);

// Plain SGD with momentum and decoupled-style weight decay on conv weights
// (biases excluded).
struct SgdState {
  std::vector<std::vector<float>> vw, vb;
  void init(const ConvNet& net);
};
void sgd_step(ConvNet& net, const NetGrads& grads, SgdState& st,
              float lr, float momentum, float weight_decay);

// Standalone kernels, reused by the tape-free forward path.
ImageTensor conv2d(const ConvParams& p, const ImageTensor& x);
ImageTensor avg_pool2(const ImageTensor& x);
ImageTensor max_pool2(const ImageTensor& x);
ImageTensor upsample2_nearest(const ImageTensor& x);

void he_init(ConvParams& p, Rng& rng);

}  // namespace smx
