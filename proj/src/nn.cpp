#include "smx/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace smx {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapRowMat = Eigen::Map<const RowMat>;

// Reflect-101 index (edge pixel not duplicated), valid for |i| < extent.
inline int reflect(int i, int extent) {
  if (extent == 1) return 0;
  if (i < 0) return -i;
  if (i >= extent) return 2 * extent - 2 - i;
  return i;
}

// Copies one channel plane into a (h+2p) x (w+2p) reflect-padded buffer.
void pad_reflect(const float* src, int h, int w, int p, float* dst) {
  const int pw = w + 2 * p;
  for (int y = -p; y < h + p; ++y) {
    const float* row = src + static_cast<size_t>(reflect(y, h)) * w;
    float* drow = dst + static_cast<size_t>(y + p) * pw;
    for (int x = -p; x < w + p; ++x) drow[x + p] = row[reflect(x, w)];
  }
}

// Scatter grads from the padded buffer back onto the interior.
void unpad_reflect_accum(const float* gpad, int h, int w, int p, float* gdst) {
  const int pw = w + 2 * p;
  for (int y = -p; y < h + p; ++y) {
    const float* grow = gpad + static_cast<size_t>(y + p) * pw;
    float* drow = gdst + static_cast<size_t>(reflect(y, h)) * w;
    for (int x = -p; x < w + p; ++x) drow[reflect(x, w)] += grow[x + p];
  }
}

inline int conv_out(int extent, int k, int stride) {
  const int p = k / 2;
  return (extent + 2 * p - k) / stride + 1;
}

// im2col over a reflect-padded multi-channel plane: row (ic, ky, kx) holds
// the input values each output position multiplies by w[ic][ky][kx].
void im2col(const float* padded, int in_c, int ph, int pw, int k, int stride, int oh,
            int ow, RowMat& col) {
  col.resize(static_cast<Eigen::Index>(in_c) * k * k, static_cast<Eigen::Index>(oh) * ow);
  Eigen::Index r = 0;
  for (int ic = 0; ic < in_c; ++ic) {
    const float* plane = padded + static_cast<size_t>(ic) * ph * pw;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++r) {
        float* dst = col.data() + r * col.cols();
        for (int oy = 0; oy < oh; ++oy) {
          const float* src = plane + static_cast<size_t>(oy * stride + ky) * pw + kx;
          if (stride == 1) {
            std::memcpy(dst, src, sizeof(float) * ow);
            dst += ow;
          } else {
            for (int ox = 0; ox < ow; ++ox) *dst++ = src[ox * stride];
          }
        }
      }
  }
}

// Scatter-add of an im2col-shaped gradient back onto the padded plane.
void col2im_accum(const RowMat& gcol, int in_c, int ph, int pw, int k, int stride,
                  int oh, int ow, float* gpad) {
  Eigen::Index r = 0;
  for (int ic = 0; ic < in_c; ++ic) {
    float* plane = gpad + static_cast<size_t>(ic) * ph * pw;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++r) {
        const float* src = gcol.data() + r * gcol.cols();
        for (int oy = 0; oy < oh; ++oy) {
          float* dst = plane + static_cast<size_t>(oy * stride + ky) * pw + kx;
          if (stride == 1) {
            for (int ox = 0; ox < ow; ++ox) dst[ox] += src[ox];
            src += ow;
          } else {
            for (int ox = 0; ox < ow; ++ox) dst[ox * stride] += *src++;
          }
        }
      }
  }
}

}  // namespace

ImageTensor conv2d(const ConvParams& p, const ImageTensor& x) {
  if (x.c != p.in_c) fail(ErrorCode::invalid_shape, "conv2d: channel mismatch");
  const int pad = p.k / 2;
  if (x.h < 1 || x.w < 1) fail(ErrorCode::invalid_shape, "conv2d: empty input");
  const int oh = conv_out(x.h, p.k, p.stride);
  const int ow = conv_out(x.w, p.k, p.stride);
  if (oh < 1 || ow < 1) fail(ErrorCode::invalid_shape, "conv2d: input too small");
  ImageTensor y(x.n, p.out_c, oh, ow);
  const int ph = x.h + 2 * pad, pw = x.w + 2 * pad;
  const Eigen::Index ick2 = static_cast<Eigen::Index>(p.in_c) * p.k * p.k;
  const Eigen::Index ohw = static_cast<Eigen::Index>(oh) * ow;
  // All GEMM operands live in Eigen-owned storage: vectorized kernels pick
  // their unrolling from pointer alignment, so mapping heap buffers directly
  // would make the float accumulation order depend on where the allocator
  // happened to place them — breaking bit-reproducibility.
  const RowMat wmat = ConstMapRowMat(p.w.data(), p.out_c, ick2);
  std::vector<float> padded(static_cast<size_t>(p.in_c) * ph * pw);
  RowMat col, ymat(p.out_c, ohw);
  for (int in = 0; in < x.n; ++in) {
    for (int ic = 0; ic < p.in_c; ++ic)
      pad_reflect(x.chan(in, ic), x.h, x.w, pad, padded.data() + static_cast<size_t>(ic) * ph * pw);
    im2col(padded.data(), p.in_c, ph, pw, p.k, p.stride, oh, ow, col);
    ymat.noalias() = wmat * col;
    float* out = y.chan(in, 0);
    for (int oc = 0; oc < p.out_c; ++oc) {
      const float* row = ymat.data() + static_cast<size_t>(oc) * ohw;
      const float b = p.b[oc];
      for (Eigen::Index i = 0; i < ohw; ++i) out[i] = row[i] + b;
      out += ohw;
    }
  }
  return y;
}

namespace {

// Accumulates input/weight/bias grads for one conv; returns grad wrt x.
ImageTensor conv2d_backward(const ConvParams& p, const ImageTensor& x,
                            const ImageTensor& gy, std::vector<float>& gw,
                            std::vector<float>& gb) {
  const int pad = p.k / 2;
  const int oh = gy.h, ow = gy.w;
  const int ph = x.h + 2 * pad, pw = x.w + 2 * pad;
  ImageTensor gx(x.n, x.c, x.h, x.w);
  const Eigen::Index ick2 = static_cast<Eigen::Index>(p.in_c) * p.k * p.k;
  const Eigen::Index ohw = static_cast<Eigen::Index>(oh) * ow;
  // Eigen-owned copies for the same alignment-determinism reason as the
  // forward pass: mapped heap pointers would make kernel accumulation order
  // depend on allocator placement.
  const RowMat wmat = ConstMapRowMat(p.w.data(), p.out_c, ick2);
  RowMat gwacc = RowMat::Zero(p.out_c, ick2);
  std::vector<float> padded(static_cast<size_t>(p.in_c) * ph * pw);
  std::vector<float> gpad(padded.size());
  RowMat col, gcol, gymat(p.out_c, ohw);
  for (int in = 0; in < x.n; ++in) {
    for (int ic = 0; ic < p.in_c; ++ic)
      pad_reflect(x.chan(in, ic), x.h, x.w, pad, padded.data() + static_cast<size_t>(ic) * ph * pw);
    im2col(padded.data(), p.in_c, ph, pw, p.k, p.stride, oh, ow, col);
    std::memcpy(gymat.data(), gy.chan(in, 0), sizeof(float) * p.out_c * ohw);
    for (int oc = 0; oc < p.out_c; ++oc) gb[oc] += gymat.row(oc).sum();
    gwacc.noalias() += gymat * col.transpose();
    gcol.noalias() = wmat.transpose() * gymat;
    std::fill(gpad.begin(), gpad.end(), 0.0f);
    col2im_accum(gcol, p.in_c, ph, pw, p.k, p.stride, oh, ow, gpad.data());
    for (int ic = 0; ic < p.in_c; ++ic)
      unpad_reflect_accum(gpad.data() + static_cast<size_t>(ic) * ph * pw, x.h, x.w, pad,
                          gx.chan(in, ic));
  }
  for (Eigen::Index oc = 0; oc < p.out_c; ++oc)
    for (Eigen::Index j = 0; j < ick2; ++j) gw[static_cast<size_t>(oc) * ick2 + j] += gwacc(oc, j);
  return gx;
}

}  // namespace

ImageTensor avg_pool2(const ImageTensor& x) {
  if (x.h % 2 || x.w % 2) fail(ErrorCode::invalid_shape, "avg_pool2 needs even extent");
  ImageTensor y(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int ic = 0; ic < x.c; ++ic) {
      const float* s = x.chan(in, ic);
      float* d = y.chan(in, ic);
      for (int oy = 0; oy < y.h; ++oy)
        for (int ox = 0; ox < y.w; ++ox) {
          const float* r0 = s + static_cast<size_t>(2 * oy) * x.w + 2 * ox;
          const float* r1 = r0 + x.w;
          d[static_cast<size_t>(oy) * y.w + ox] = 0.25f * (r0[0] + r0[1] + r1[0] + r1[1]);
        }
    }
  return y;
}

ImageTensor max_pool2(const ImageTensor& x) {
  if (x.h % 2 || x.w % 2) fail(ErrorCode::invalid_shape, "max_pool2 needs even extent");
  ImageTensor y(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int ic = 0; ic < x.c; ++ic) {
      const float* s = x.chan(in, ic);
      float* d = y.chan(in, ic);
      for (int oy = 0; oy < y.h; ++oy)
        for (int ox = 0; ox < y.w; ++ox) {
          const float* r0 = s + static_cast<size_t>(2 * oy) * x.w + 2 * ox;
          const float* r1 = r0 + x.w;
          d[static_cast<size_t>(oy) * y.w + ox] =
              std::max(std::max(r0[0], r0[1]), std::max(r1[0], r1[1]));
        }
    }
  return y;
}

ImageTensor upsample2_nearest(const ImageTensor& x) {
  ImageTensor y(x.n, x.c, x.h * 2, x.w * 2);
  for (int in = 0; in < x.n; ++in)
    for (int ic = 0; ic < x.c; ++ic) {
      const float* s = x.chan(in, ic);
      float* d = y.chan(in, ic);
      for (int oy = 0; oy < y.h; ++oy) {
        const float* srow = s + static_cast<size_t>(oy / 2) * x.w;
        float* drow = d + static_cast<size_t>(oy) * y.w;
        for (int ox = 0; ox < y.w; ++ox) drow[ox] = srow[ox / 2];
      }
    }
  return y;
}

void he_init(ConvParams& p, Rng& rng) {
  p.w.resize(static_cast<size_t>(p.out_c) * p.in_c * p.k * p.k);
  p.b.assign(p.out_c, 0.0f);
  const float scale = std::sqrt(2.0f / static_cast<float>(p.in_c * p.k * p.k));
  for (float& v : p.w) v = static_cast<float>(rng.normal()) * scale;
}

void ConvNet::init(const std::vector<LayerSpec>& layers, Rng& rng) {
  specs = layers;
  convs.clear();
  for (const auto& s : specs) {
    if (s.kind != LayerKind::conv) continue;
    ConvParams p;
    p.in_c = s.in_c;
    p.out_c = s.out_c;
    p.k = s.k;
    p.stride = s.stride;
    he_init(p, rng);
    convs.push_back(std::move(p));
  }
}

ImageTensor ConvNet::forward(const ImageTensor& x) const {
  ImageTensor cur = x;
  size_t ci = 0;
  for (const auto& s : specs) {
    switch (s.kind) {
      case LayerKind::conv: cur = conv2d(convs[ci++], cur); break;
      case LayerKind::relu:
        for (float& v : cur.data) v = v > 0.0f ? v : 0.0f;
        break;
      case LayerKind::pool2: cur = avg_pool2(cur); break;
      case LayerKind::upsample2: cur = upsample2_nearest(cur); break;
      case LayerKind::maxpool2: cur = max_pool2(cur); break;
      case LayerKind::lrelu:
        for (float& v : cur.data) v = v > 0.0f ? v : kLreluSlope * v;
        break;
    }
  }
  return cur;
}

int ConvNet::out_channels() const {
  for (auto it = specs.rbegin(); it != specs.rend(); ++it)
    if (it->kind == LayerKind::conv) return it->out_c;
  return 0;
}

int ConvNet::downsample_factor() const {
  double f = 1.0;
  for (const auto& s : specs) {
    if (s.kind == LayerKind::pool2 || s.kind == LayerKind::maxpool2) f *= 2.0;
    else if (s.kind == LayerKind::upsample2) f /= 2.0;
    else if (s.kind == LayerKind::conv) f *= s.stride;
  }
  return f >= 1.0 ? static_cast<int>(f + 0.5) : 1;
}

int ConvNet::min_input() const {
  int f = downsample_factor();
  return f > 1 ? f : 1;
}

size_t ConvNet::param_count() const {
  size_t t = 0;
  for (const auto& c : convs) t += c.w.size() + c.b.size();
  return t;
}

bool ConvNet::same_arch(const ConvNet& o) const {
  if (specs.size() != o.specs.size()) return false;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto &a = specs[i], &b = o.specs[i];
    if (a.kind != b.kind || a.in_c != b.in_c || a.out_c != b.out_c ||
        a.k != b.k || a.stride != b.stride)
      return false;
  }
  return true;
}

void NetGrads::zero(const ConvNet& net) {
  gw.resize(net.convs.size());
  gb.resize(net.convs.size());
  for (size_t i = 0; i < net.convs.size(); ++i) {
    gw[i].assign(net.convs[i].w.size(), 0.0f);
    gb[i].assign(net.convs[i].b.size(), 0.0f);
  }
}

void NetGrads::add(const NetGrads& o) {
  for (size_t i = 0; i < gw.size(); ++i) {
    for (size_t j = 0; j < gw[i].size(); ++j) gw[i][j] += o.gw[i][j];
    for (size_t j = 0; j < gb[i].size(); ++j) gb[i][j] += o.gb[i][j];
  }
}

void NetGrads::scale(float s) {
  for (auto& v : gw)
    for (float& x : v) x *= s;
  for (auto& v : gb)
    for (float& x : v) x *= s;
}

ImageTensor net_forward_train(const ConvNet& net, const ImageTensor& x, NetTape& tape) {
  tape.acts.clear();
  tape.acts.push_back(x);
  size_t ci = 0;
  for (const auto& s : net.specs) {
    const ImageTensor& cur = tape.acts.back();
    ImageTensor next;
    switch (s.kind) {
      case LayerKind::conv: next = conv2d(net.convs[ci++], cur); break;
      case LayerKind::relu:
        next = cur;
        for (float& v : next.data) v = v > 0.0f ? v : 0.0f;
        break;
      case LayerKind::pool2: next = avg_pool2(cur); break;
      case LayerKind::upsample2: next = upsample2_nearest(cur); break;
      case LayerKind::maxpool2: next = max_pool2(cur); break;
      case LayerKind::lrelu:
        next = cur;
        for (float& v : next.data) v = v > 0.0f ? v : kLreluSlope * v;
        break;
    }
    tape.acts.push_back(std::move(next));
  }
  return tape.acts.back();
}

ImageTensor net_backward(const ConvNet& net, const NetTape& tape,
                         const ImageTensor& grad_out, NetGrads& grads) {
  ImageTensor g = grad_out;
  size_t ci = net.convs.size();
  for (size_t li = net.specs.size(); li-- > 0;) {
    const LayerSpec& s = net.specs[li];
    const ImageTensor& in = tape.acts[li];
    const ImageTensor& out = tape.acts[li + 1];
    switch (s.kind) {
      case LayerKind::conv:
        --ci;
        g = conv2d_backward(net.convs[ci], in, g, grads.gw[ci], grads.gb[ci]);
        break;
      case LayerKind::relu: {
        ImageTensor gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i)
          if (out.data[i] <= 0.0f) gx.data[i] = 0.0f;
        g = std::move(gx);
        break;
      }
      case LayerKind::pool2: {
        ImageTensor gx(in.n, in.c, in.h, in.w);
        for (int n = 0; n < in.n; ++n)
          for (int c = 0; c < in.c; ++c) {
            const float* gp = g.chan(n, c);
            float* gxp = gx.chan(n, c);
            for (int oy = 0; oy < g.h; ++oy)
              for (int ox = 0; ox < g.w; ++ox) {
                float v = 0.25f * gp[static_cast<size_t>(oy) * g.w + ox];
                float* r0 = gxp + static_cast<size_t>(2 * oy) * in.w + 2 * ox;
                r0[0] = v; r0[1] = v; r0[in.w] = v; r0[in.w + 1] = v;
              }
          }
        g = std::move(gx);
        break;
      }
      case LayerKind::lrelu: {
        ImageTensor gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i)
          if (out.data[i] <= 0.0f) gx.data[i] *= kLreluSlope;
        g = std::move(gx);
        break;
      }
      case LayerKind::maxpool2: {
        // Route the gradient to the first element of each 2x2 block that
        // attains the max, so ties resolve deterministically.
        ImageTensor gx(in.n, in.c, in.h, in.w);
        for (int n = 0; n < in.n; ++n)
          for (int c = 0; c < in.c; ++c) {
            const float* ip = in.chan(n, c);
            const float* op = out.chan(n, c);
            const float* gp = g.chan(n, c);
            float* gxp = gx.chan(n, c);
            for (int oy = 0; oy < g.h; ++oy)
              for (int ox = 0; ox < g.w; ++ox) {
                const size_t base = static_cast<size_t>(2 * oy) * in.w + 2 * ox;
                const size_t idx[4] = {base, base + 1, base + in.w, base + in.w + 1};
                const float m = op[static_cast<size_t>(oy) * g.w + ox];
                for (size_t k : idx)
                  if (ip[k] == m) {
                    gxp[k] += gp[static_cast<size_t>(oy) * g.w + ox];
                    break;
                  }
              }
          }
        g = std::move(gx);
        break;
      }
      case LayerKind::upsample2: {
        ImageTensor gx(in.n, in.c, in.h, in.w);
        for (int n = 0; n < in.n; ++n)
          for (int c = 0; c < in.c; ++c) {
            const float* gp = g.chan(n, c);
            float* gxp = gx.chan(n, c);
            for (int oy = 0; oy < g.h; ++oy) {
              const float* grow = gp + static_cast<size_t>(oy) * g.w;
              float* xrow = gxp + static_cast<size_t>(oy / 2) * in.w;
              for (int ox = 0; ox < g.w; ++ox) xrow[ox / 2] += grow[ox];
            }
          }
        g = std::move(gx);
        break;
      }
    }
  }
  return g;
}

void SgdState::init(const ConvNet& net) {
  vw.resize(net.convs.size());
  vb.resize(net.convs.size());
  for (size_t i = 0; i < net.convs.size(); ++i) {
    vw[i].assign(net.convs[i].w.size(), 0.0f);
    vb[i].assign(net.convs[i].b.size(), 0.0f);
  }
}

void sgd_step(ConvNet& net, const NetGrads& grads, SgdState& st,
              float lr, float momentum, float weight_decay) {
  for (size_t i = 0; i < net.convs.size(); ++i) {
    auto& c = net.convs[i];
    for (size_t j = 0; j < c.w.size(); ++j) {
      float g = grads.gw[i][j] + weight_decay * c.w[j];
      st.vw[i][j] = momentum * st.vw[i][j] + g;
      c.w[j] -= lr * st.vw[i][j];
    }
    for (size_t j = 0; j < c.b.size(); ++j) {
      // biases exempt from weight decay
      st.vb[i][j] = momentum * st.vb[i][j] + grads.gb[i][j];
      c.b[j] -= lr * st.vb[i][j];
    }
  }
}

}  // namespace smx
