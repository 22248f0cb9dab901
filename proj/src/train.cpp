#include "smx/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace smx {

void TrainConfig::validate() const {
  if (epochs < 0) fail(ErrorCode::invalid_config, "epochs must be >= 0");
  if (batch_size < 1) fail(ErrorCode::invalid_config, "batch_size must be >= 1");
  if (!(lr0 > 0.0)) fail(ErrorCode::invalid_config, "lr0 must be > 0");
  if (!(swa_start_frac > 0.0 && swa_start_frac <= 1.0))
    fail(ErrorCode::invalid_config, "swa_start_frac must lie in (0,1]");
  if (!(label_smooth >= 0.0 && label_smooth < 1.0))
    fail(ErrorCode::invalid_config, "label_smooth must lie in [0,1)");
  if (sched.t0 <= 0.0 || sched.mult < 1.0)
    fail(ErrorCode::invalid_config, "cosine schedule needs t0 > 0 and mult >= 1");
  if (feature_noise.add_std < 0.0 || feature_noise.mult_std < 0.0)
    fail(ErrorCode::invalid_config, "feature noise stds must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0)
    fail(ErrorCode::invalid_config, "dropout must lie in [0,1)");
}

double lr_at(double epoch, const TrainConfig& cfg) {
  if (epoch < 0.0) fail(ErrorCode::invalid_config, "lr_at: epoch must be >= 0");
  double pos = epoch, len = cfg.sched.t0;
  while (pos >= len) {
    pos -= len;
    len *= cfg.sched.mult;
  }
  return cfg.lr0 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * pos / len));
}

namespace {

// log-softmax into out; returns logsumexp shift for reuse
void log_softmax(const std::vector<float>& logits, std::vector<double>& logp) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double lse = 0.0;
  for (float l : logits) lse += std::exp(l - m);
  lse = std::log(lse);
  logp.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) logp[i] = logits[i] - m - lse;
}

}  // namespace

double smoothed_ce_vec(const std::vector<float>& logits, const LabelVec& target,
                       double smooth, std::vector<float>* grad) {
  if (logits.empty()) fail(ErrorCode::invalid_shape, "smoothed_ce: empty logits");
  if (logits.size() != target.size())
    fail(ErrorCode::length_mismatch, "smoothed_ce: logits/target length mismatch");
  if (!(smooth >= 0.0 && smooth < 1.0))
    fail(ErrorCode::invalid_config, "smoothed_ce: smooth must lie in [0,1)");
  const size_t k = logits.size();
  std::vector<double> logp;
  log_softmax(logits, logp);
  double loss = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double q = (1.0 - smooth) * target[i] + smooth / static_cast<double>(k);
    loss -= q * logp[i];
  }
  if (grad) {
    grad->resize(k);
    for (size_t i = 0; i < k; ++i) {
      const double q = (1.0 - smooth) * target[i] + smooth / static_cast<double>(k);
      (*grad)[i] = static_cast<float>(std::exp(logp[i]) - q);
    }
  }
  return loss;
}

double smoothed_ce(const std::vector<float>& logits, int target, double smooth,
                   std::vector<float>* grad) {
  if (target < 0 || target >= static_cast<int>(logits.size()))
    fail(ErrorCode::invalid_config, "smoothed_ce: target class out of range");
  LabelVec onehot(logits.size(), 0.0f);
  onehot[target] = 1.0f;
  return smoothed_ce_vec(logits, onehot, smooth, grad);
}

double jsd_loss(const std::vector<double>& p1, const std::vector<double>& p2,
                const std::vector<double>& p3,
                std::array<std::vector<double>, 3>* grads) {
  const std::vector<double>* ps[3] = {&p1, &p2, &p3};
  const size_t k = p1.size();
  if (k == 0) fail(ErrorCode::invalid_shape, "jsd_loss: empty distribution");
  for (const auto* p : ps) {
    if (p->size() != k) fail(ErrorCode::length_mismatch, "jsd_loss: length mismatch");
    double sum = 0.0;
    for (double v : *p) {
      if (v < 0.0) fail(ErrorCode::invalid_distribution, "jsd_loss: negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      fail(ErrorCode::invalid_distribution, "jsd_loss: distribution does not sum to 1");
  }
  constexpr double tiny = 1e-12;
  double loss = 0.0;
  std::vector<double> m(k);
  for (size_t i = 0; i < k; ++i) m[i] = ((*ps[0])[i] + (*ps[1])[i] + (*ps[2])[i]) / 3.0;
  for (const auto* p : ps)
    for (size_t i = 0; i < k; ++i) {
      const double v = (*p)[i];
      if (v > 0.0) loss += v * (std::log(std::max(v, tiny)) - std::log(std::max(m[i], tiny)));
    }
  loss /= 3.0;
  if (grads) {
    for (int j = 0; j < 3; ++j) {
      (*grads)[j].resize(k);
      for (size_t i = 0; i < k; ++i)
        (*grads)[j][i] =
            std::log(std::max((*ps[j])[i], tiny) / std::max(m[i], tiny)) / 3.0;
    }
  }
  return std::max(loss, 0.0);
}

ImageTensor feature_noise(const ImageTensor& hidden, Rng& rng, double add_std,
                          double mult_std) {
  if (add_std < 0.0 || mult_std < 0.0)
    fail(ErrorCode::invalid_config, "feature_noise: stds must be >= 0");
  if (add_std == 0.0 && mult_std == 0.0) return hidden;
  ImageTensor out = hidden;
  for (float& v : out.data) {
    const double em = mult_std > 0.0 ? rng.normal() * mult_std : 0.0;
    const double ea = add_std > 0.0 ? rng.normal() * add_std : 0.0;
    v = static_cast<float>(v * (1.0 + em) + ea);
  }
  return out;
}

TinyClassifier make_classifier(int class_count, int width, uint64_t seed) {
  if (class_count < 2) fail(ErrorCode::invalid_config, "class_count must be >= 2");
  if (width < 1) fail(ErrorCode::invalid_config, "classifier width must be >= 1");
  Rng rng(stream_key(seed, "classifier-init"));
  TinyClassifier m;
  m.class_count = class_count;
  m.feat_channels = 2 * width;
  // Leaky activations: without normalization layers, plain ReLU trunks die
  // unrecoverably on a nontrivial fraction of seeds.
  m.front.init({conv_spec(3, width), lrelu_spec(), maxpool2_spec(),
                conv_spec(width, 2 * width), lrelu_spec(), maxpool2_spec()},
               rng);
  m.back.init({conv_spec(2 * width, 2 * width), lrelu_spec()}, rng);
  m.head_w.resize(static_cast<size_t>(class_count) * m.feat_channels);
  m.head_b.assign(class_count, 0.0f);
  const double scale = std::sqrt(1.0 / m.feat_channels);
  for (float& v : m.head_w) v = static_cast<float>(rng.normal() * scale);
  return m;
}

namespace {

// Per-image global average pooling: [n][c]
std::vector<std::vector<float>> gap(const ImageTensor& feat) {
  std::vector<std::vector<float>> out(feat.n, std::vector<float>(feat.c, 0.0f));
  const float inv = 1.0f / static_cast<float>(feat.plane());
  for (int i = 0; i < feat.n; ++i)
    for (int c = 0; c < feat.c; ++c) {
      const float* p = feat.chan(i, c);
      float s = 0.0f;
      for (size_t k = 0; k < feat.plane(); ++k) s += p[k];
      out[i][c] = s * inv;
    }
  return out;
}

std::vector<float> head_logits(const TinyClassifier& m, const std::vector<float>& g) {
  std::vector<float> logits(m.class_count);
  for (int k = 0; k < m.class_count; ++k) {
    float s = m.head_b[k];
    const float* w = m.head_w.data() + static_cast<size_t>(k) * m.feat_channels;
    for (int c = 0; c < m.feat_channels; ++c) s += w[c] * g[c];
    logits[k] = s;
  }
  return logits;
}

}  // namespace

std::vector<std::vector<float>> classifier_logits_batch(const TinyClassifier& m,
                                                        const ImageTensor& batch) {
  ImageTensor feat = m.back.forward(m.front.forward(batch));
  std::vector<std::vector<float>> pooled = gap(feat);
  std::vector<std::vector<float>> out;
  out.reserve(batch.n);
  for (int i = 0; i < batch.n; ++i) out.push_back(head_logits(m, pooled[i]));
  return out;
}

std::vector<float> classifier_logits(const TinyClassifier& m, const ImageTensor& img) {
  return classifier_logits_batch(m, img)[0];
}

int classify(const TinyClassifier& m, const ImageTensor& img) {
  const std::vector<float> logits = classifier_logits(m, img);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                          logits.begin());
}

void save_classifier(const TinyClassifier& m, const std::string& path) {
  std::vector<unsigned char> buf;
  wire_begin(buf, kWireKindClassifier);
  wire_put_u32(buf, static_cast<uint32_t>(m.class_count));
  wire_put_u32(buf, static_cast<uint32_t>(m.feat_channels));
  wire_put_net(buf, m.front);
  wire_put_net(buf, m.back);
  for (float v : m.head_w) wire_put_f32(buf, v);
  for (float v : m.head_b) wire_put_f32(buf, v);
  write_file_atomic(path, buf);
}

TinyClassifier load_classifier(const std::string& path) {
  const std::vector<unsigned char> buf = read_file_bytes(path);
  WireReader r;
  const uint8_t kind = wire_open(buf, path, r);
  if (kind != kWireKindClassifier)
    fail(ErrorCode::format_error, path + " holds model kind " + std::to_string(kind) +
                                      ", expected a classifier");
  TinyClassifier m;
  m.class_count = static_cast<int>(r.u32("class count"));
  m.feat_channels = static_cast<int>(r.u32("feature channels"));
  if (m.class_count < 2 || m.class_count > 100000 || m.feat_channels < 1)
    fail(ErrorCode::format_error, "implausible classifier header in " + path);
  m.front = wire_read_net(r);
  m.back = wire_read_net(r);
  m.head_w.resize(static_cast<size_t>(m.class_count) * m.feat_channels);
  m.head_b.resize(m.class_count);
  for (float& v : m.head_w) v = r.f32("head weights");
  for (float& v : m.head_b) v = r.f32("head biases");
  if (r.left != 0) fail(ErrorCode::format_error, "trailing bytes in " + path);
  return m;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::string out = "epoch,lr,train_loss,train_acc,val_acc,val_robust_acc,wall_s\n";
  char line[256];
  for (const EpochMetrics& m : metrics) {
    auto opt = [](double v) {
      if (v < 0.0) return std::string();
      char b[40];
      std::snprintf(b, sizeof(b), "%.9g", v);
      return std::string(b);
    };
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,", m.epoch, m.lr, m.train_loss,
                  m.train_acc);
    out += line;
    out += opt(m.val_acc) + "," + opt(m.val_robust_acc) + ",";
    std::snprintf(line, sizeof(line), "%.3f\n", m.wall_s);
    out += line;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << out;
  }
  std::filesystem::rename(tmp, path);
}

namespace {

struct HeadState {
  std::vector<float> vw, vb, gw, gb;
  void zero_grads(const TinyClassifier& m) {
    gw.assign(m.head_w.size(), 0.0f);
    gb.assign(m.head_b.size(), 0.0f);
  }
};

void head_step(TinyClassifier& m, HeadState& st, float lr, float momentum,
               float weight_decay) {
  if (st.vw.empty()) {
    st.vw.assign(m.head_w.size(), 0.0f);
    st.vb.assign(m.head_b.size(), 0.0f);
  }
  for (size_t j = 0; j < m.head_w.size(); ++j) {
    const float g = st.gw[j] + weight_decay * m.head_w[j];
    st.vw[j] = momentum * st.vw[j] + g;
    m.head_w[j] -= lr * st.vw[j];
  }
  for (size_t j = 0; j < m.head_b.size(); ++j) {
    st.vb[j] = momentum * st.vb[j] + st.gb[j];
    m.head_b[j] -= lr * st.vb[j];
  }
}

struct SwaAccum {
  std::vector<double> sums;
  int count = 0;

  static std::vector<float> flatten(const TinyClassifier& m) {
    std::vector<float> v;
    for (const ConvNet* net : {&m.front, &m.back})
      for (const auto& c : net->convs) {
        v.insert(v.end(), c.w.begin(), c.w.end());
        v.insert(v.end(), c.b.begin(), c.b.end());
      }
    v.insert(v.end(), m.head_w.begin(), m.head_w.end());
    v.insert(v.end(), m.head_b.begin(), m.head_b.end());
    return v;
  }

  void ingest(const TinyClassifier& m) {
    const std::vector<float> flat = flatten(m);
    if (sums.empty()) sums.assign(flat.size(), 0.0);
    for (size_t i = 0; i < flat.size(); ++i) sums[i] += flat[i];
    ++count;
  }

  TinyClassifier mean(const TinyClassifier& shape) const {
    TinyClassifier out = shape;
    size_t idx = 0;
    auto take = [&](std::vector<float>& dst) {
      for (float& v : dst) v = static_cast<float>(sums[idx++] / count);
    };
    for (ConvNet* net : {&out.front, &out.back})
      for (auto& c : net->convs) {
        take(c.w);
        take(c.b);
      }
    take(out.head_w);
    take(out.head_b);
    return out;
  }
};

struct ViewPass {
  NetTape front_tape, back_tape;
  ImageTensor noise_mult;  // empty when feature noise is off
  std::vector<std::vector<float>> pooled;
  std::vector<std::vector<float>> logits;  // per image
  ImageTensor feat;                        // back output, for shape bookkeeping
};

ViewPass forward_views(TinyClassifier& model, const ImageTensor& images,
                       const TrainConfig& cfg, bool with_noise, uint64_t noise_key) {
  ViewPass v;
  ImageTensor h = net_forward_train(model.front, images, v.front_tape);
  if (with_noise && cfg.feature_noise.enabled()) {
    Rng rng(noise_key);
    v.noise_mult = ImageTensor(h.n, h.c, h.h, h.w);
    for (size_t i = 0; i < h.data.size(); ++i) {
      const double em =
          cfg.feature_noise.mult_std > 0.0 ? rng.normal() * cfg.feature_noise.mult_std : 0.0;
      const double ea =
          cfg.feature_noise.add_std > 0.0 ? rng.normal() * cfg.feature_noise.add_std : 0.0;
      v.noise_mult.data[i] = static_cast<float>(1.0 + em);
      h.data[i] = static_cast<float>(h.data[i] * (1.0 + em) + ea);
    }
  }
  v.feat = net_forward_train(model.back, h, v.back_tape);
  v.pooled = gap(v.feat);
  v.logits.reserve(images.n);
  for (int i = 0; i < images.n; ++i) v.logits.push_back(head_logits(model, v.pooled[i]));
  return v;
}

// Accumulates head grads and returns the gradient tensor flowing into the
// front net, ready for sgd; dlogits is per image.
void backward_views(TinyClassifier& model, ViewPass& v,
                    const std::vector<std::vector<float>>& dlogits, HeadState& head,
                    NetGrads& front_g, NetGrads& back_g) {
  const int n = v.feat.n;
  const float inv_plane = 1.0f / static_cast<float>(v.feat.plane());
  ImageTensor dfeat(v.feat.n, v.feat.c, v.feat.h, v.feat.w);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < model.class_count; ++k) {
      const float dl = dlogits[i][k];
      if (dl == 0.0f) continue;
      float* gw = head.gw.data() + static_cast<size_t>(k) * model.feat_channels;
      const float* w = model.head_w.data() + static_cast<size_t>(k) * model.feat_channels;
      head.gb[k] += dl;
      for (int c = 0; c < model.feat_channels; ++c) gw[c] += dl * v.pooled[i][c];
      for (int c = 0; c < model.feat_channels; ++c) {
        const float d = dl * w[c] * inv_plane;
        float* p = dfeat.chan(i, c);
        for (size_t s = 0; s < dfeat.plane(); ++s) p[s] += d;
      }
    }
  }
  ImageTensor dh = net_backward(model.back, v.back_tape, dfeat, back_g);
  if (v.noise_mult.n > 0)
    for (size_t i = 0; i < dh.data.size(); ++i) dh.data[i] *= v.noise_mult.data[i];
  net_backward(model.front, v.front_tape, dh, front_g);
}

std::vector<double> softmax_of(const std::vector<float>& logits) {
  std::vector<double> logp;
  log_softmax(logits, logp);
  for (double& v : logp) v = std::exp(v);
  return logp;
}

}  // namespace

TrainResult train(const TinyClassifier& init, const EpochStreamFn& stream_fn,
                  const TrainConfig& cfg, const EvalHook& hook) {
  cfg.validate();
  TrainResult res;
  res.model = init;
  SgdState front_st, back_st;
  front_st.init(res.model.front);
  back_st.init(res.model.back);
  HeadState head_st;
  NetGrads front_g, back_g, front_jg, back_jg;
  SwaAccum swa;
  const int swa_start =
      static_cast<int>(std::ceil(cfg.swa_start_frac * cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool in_swa = epoch >= swa_start;
    const float lr = static_cast<float>(in_swa ? cfg.swa_lr : lr_at(epoch, cfg));
    double loss_sum = 0.0;
    long correct = 0, seen = 0;
    BatchStream stream = stream_fn(epoch);
    int batch_idx = -1;
    while (auto maybe = stream()) {
      ++batch_idx;
      Batch& batch = *maybe;
      const int bs = batch.images.n;
      ViewPass main = forward_views(
          res.model, batch.images, cfg, true,
          stream_key(cfg.seed, "fnoise", static_cast<uint64_t>(epoch),
                     static_cast<uint64_t>(batch_idx)));
      std::vector<std::vector<float>> dlogits(bs);
      double batch_loss = 0.0;
      for (int i = 0; i < bs; ++i) {
        std::vector<float> g;
        batch_loss += smoothed_ce_vec(main.logits[i], batch.labels[i], cfg.label_smooth, &g);
        dlogits[i] = std::move(g);
        const int pred = static_cast<int>(
            std::max_element(main.logits[i].begin(), main.logits[i].end()) -
            main.logits[i].begin());
        const int truth = static_cast<int>(
            std::max_element(batch.labels[i].begin(), batch.labels[i].end()) -
            batch.labels[i].begin());
        correct += pred == truth;
      }

      std::vector<ViewPass> extra;
      std::vector<std::vector<std::vector<float>>> extra_dlogits;
      if (cfg.jsd.enabled()) {
        // views: pipeline output plus two fresh TrivialAugment redraws
        AugmentConfig aug;
        for (int view = 1; view < cfg.jsd.views; ++view) {
          ImageTensor imgs = batch.images;
          for (int i = 0; i < bs; ++i) {
            Rng rng(stream_key(cfg.seed, "jsd-view",
                               static_cast<uint64_t>(epoch) * 1000003ull + batch_idx,
                               static_cast<uint64_t>(i) * 7ull + view));
            imgs.set_image(i, trivial_augment(imgs.image(i), rng, aug));
          }
          extra.push_back(forward_views(res.model, imgs, cfg, true,
                                        stream_key(cfg.seed, "fnoise-jsd",
                                                   static_cast<uint64_t>(epoch),
                                                   static_cast<uint64_t>(batch_idx) * 4 + view)));
        }
        extra_dlogits.assign(extra.size(),
                             std::vector<std::vector<float>>(
                                 bs, std::vector<float>(res.model.class_count, 0.0f)));
        for (int i = 0; i < bs; ++i) {
          std::vector<double> p1 = softmax_of(main.logits[i]);
          std::vector<double> p2 = softmax_of(extra[0].logits[i]);
          std::vector<double> p3 = softmax_of(extra[1].logits[i]);
          std::array<std::vector<double>, 3> gp;
          batch_loss += cfg.jsd.weight * jsd_loss(p1, p2, p3, &gp);
          const std::vector<double>* probs[3] = {&p1, &p2, &p3};
          for (int view = 0; view < 3; ++view) {
            // through softmax: dl = p .* (g - <g, p>)
            double dot = 0.0;
            for (int k = 0; k < res.model.class_count; ++k)
              dot += gp[view][k] * (*probs[view])[k];
            for (int k = 0; k < res.model.class_count; ++k) {
              const float d = static_cast<float>(cfg.jsd.weight * (*probs[view])[k] *
                                                 (gp[view][k] - dot));
              if (view == 0)
                dlogits[i][k] += d;
              else
                extra_dlogits[view - 1][i][k] += d;
            }
          }
        }
      }

      if (!std::isfinite(batch_loss))
        fail(ErrorCode::divergence, "training diverged: non-finite loss at epoch " +
                                        std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_idx));
      loss_sum += batch_loss;
      seen += bs;

      const float inv_bs = 1.0f / static_cast<float>(bs);
      for (auto& g : dlogits)
        for (float& v : g) v *= inv_bs;
      front_g.zero(res.model.front);
      back_g.zero(res.model.back);
      head_st.zero_grads(res.model);
      backward_views(res.model, main, dlogits, head_st, front_g, back_g);
      for (size_t e = 0; e < extra.size(); ++e) {
        for (auto& g : extra_dlogits[e])
          for (float& v : g) v *= inv_bs;
        backward_views(res.model, extra[e], extra_dlogits[e], head_st, front_g, back_g);
      }
      if (cfg.grad_clip > 0.0) {
        // Global L2 clip across all parameter groups: restart epochs jump the
        // learning rate back to lr0, and unclipped spikes there can diverge.
        double sq = 0.0;
        const auto accum = [&sq](const std::vector<std::vector<float>>& vv) {
          for (const auto& v : vv)
            for (float x : v) sq += static_cast<double>(x) * x;
        };
        accum(front_g.gw);
        accum(front_g.gb);
        accum(back_g.gw);
        accum(back_g.gb);
        for (float x : head_st.gw) sq += static_cast<double>(x) * x;
        for (float x : head_st.gb) sq += static_cast<double>(x) * x;
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) {
          const float s = static_cast<float>(cfg.grad_clip / norm);
          front_g.scale(s);
          back_g.scale(s);
          for (float& x : head_st.gw) x *= s;
          for (float& x : head_st.gb) x *= s;
        }
      }
      sgd_step(res.model.front, front_g, front_st, lr, static_cast<float>(cfg.momentum),
               static_cast<float>(cfg.weight_decay));
      sgd_step(res.model.back, back_g, back_st, lr, static_cast<float>(cfg.momentum),
               static_cast<float>(cfg.weight_decay));
      head_step(res.model, head_st, lr, static_cast<float>(cfg.momentum),
                static_cast<float>(cfg.weight_decay));
    }

    if (in_swa) {
      swa.ingest(res.model);
      ++res.swa_snapshots;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    m.train_acc = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
    const bool do_eval = hook.every > 0 && ((epoch + 1) % hook.every == 0 ||
                                            epoch == cfg.epochs - 1);
    if (do_eval && hook.val_acc) m.val_acc = hook.val_acc(res.model);
    if (do_eval && hook.val_robust) m.val_robust_acc = hook.val_robust(res.model);
    m.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.metrics.push_back(m);
  }

  res.swa_model = swa.count > 0 ? swa.mean(res.model) : res.model;
  return res;
}

}  // namespace smx
