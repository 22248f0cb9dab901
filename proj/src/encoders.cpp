#include "smx/encoders.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <vector>

namespace smx {

namespace {
constexpr char kMagic[4] = {'S', 'M', 'X', 'W'};
constexpr uint8_t kVersion = 1;
}  // namespace

int FeatureDecoder::upsample_factor() const {
  double f = 1.0;
  for (const auto& s : net.specs)
    if (s.kind == LayerKind::upsample2) f *= 2.0;
  return static_cast<int>(f + 0.5);
}

FeatureEncoder make_encoder(int width, uint64_t seed) {
  if (width < 1) fail(ErrorCode::invalid_config, "encoder width must be >= 1");
  Rng rng(stream_key(seed, "encoder-init"));
  FeatureEncoder e;
  e.net.init({conv_spec(3, width), relu_spec(), pool2_spec(),
              conv_spec(width, 2 * width), relu_spec(), pool2_spec(),
              conv_spec(2 * width, 2 * width), relu_spec()},
             rng);
  return e;
}

FeatureDecoder make_decoder(int width, uint64_t seed) {
  if (width < 1) fail(ErrorCode::invalid_config, "decoder width must be >= 1");
  Rng rng(stream_key(seed, "decoder-init"));
  FeatureDecoder d;
  d.net.init({conv_spec(2 * width, 2 * width), relu_spec(), upsample2_spec(),
              conv_spec(2 * width, width), relu_spec(), upsample2_spec(),
              conv_spec(width, 3)},
             rng);
  return d;
}

ImageTensor encode(const FeatureEncoder& e, const ImageTensor& img) {
  const int f = e.downsample_factor();
  if (img.h < f || img.w < f)
    fail(ErrorCode::invalid_shape, "encode: input smaller than downsample factor");
  return e.net.forward(img);
}

ImageTensor decode(const FeatureDecoder& d, const ImageTensor& feat) {
  if (feat.c != d.in_channels())
    fail(ErrorCode::invalid_shape, "decode: feature channel mismatch");
  ImageTensor img = d.net.forward(feat);
  clamp_unit(img);
  return img;
}

std::pair<FeatureEncoder, FeatureDecoder> train_autoencoder(
    const ImageTensor& dataset, int epochs, uint64_t seed,
    const AutoencoderTrainOptions& opt) {
  if (dataset.n < 1) fail(ErrorCode::insufficient_samples, "train_autoencoder: empty dataset");
  FeatureEncoder enc = make_encoder(opt.width, seed);
  FeatureDecoder dec = make_decoder(opt.width, seed + 1);
  SgdState enc_st, dec_st;
  enc_st.init(enc.net);
  dec_st.init(dec.net);
  NetGrads enc_g, dec_g;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(stream_key(seed, "ae-shuffle", epoch));
    std::vector<int> order(dataset.n);
    for (int i = 0; i < dataset.n; ++i) order[i] = i;
    for (int i = dataset.n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    for (int start = 0; start < dataset.n; start += opt.batch_size) {
      const int bs = std::min(opt.batch_size, dataset.n - start);
      ImageTensor batch(bs, dataset.c, dataset.h, dataset.w, dataset.domain);
      for (int i = 0; i < bs; ++i) batch.set_image(i, dataset.image(order[start + i]));
      NetTape enc_tape, dec_tape;
      ImageTensor latent = net_forward_train(enc.net, batch, enc_tape);
      ImageTensor recon = net_forward_train(dec.net, latent, dec_tape);
      // MSE grad; no clamp inside training so gradients stay alive
      ImageTensor grad = recon;
      const float scale = 2.0f / static_cast<float>(recon.size());
      for (size_t i = 0; i < grad.data.size(); ++i)
        grad.data[i] = scale * (recon.data[i] - batch.data[i]);
      enc_g.zero(enc.net);
      dec_g.zero(dec.net);
      ImageTensor glatent = net_backward(dec.net, dec_tape, grad, dec_g);
      net_backward(enc.net, enc_tape, glatent, enc_g);
      sgd_step(enc.net, enc_g, enc_st, opt.lr, opt.momentum, 0.0f);
      sgd_step(dec.net, dec_g, dec_st, opt.lr, opt.momentum, 0.0f);
    }
  }
  return {std::move(enc), std::move(dec)};
}

void wire_put_u32(std::vector<unsigned char>& buf, uint32_t v) {
  buf.push_back(v & 0xff);
  buf.push_back((v >> 8) & 0xff);
  buf.push_back((v >> 16) & 0xff);
  buf.push_back((v >> 24) & 0xff);
}

void wire_put_f32(std::vector<unsigned char>& buf, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  wire_put_u32(buf, u);
}

void WireReader::need(size_t k, const char* what) {
  if (left < k) fail(ErrorCode::format_error, std::string("truncated weight file at ") + what);
}

uint32_t WireReader::u32(const char* what) {
  need(4, what);
  uint32_t v = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  p += 4;
  left -= 4;
  return v;
}

float WireReader::f32(const char* what) {
  uint32_t v = u32(what);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

void wire_put_net(std::vector<unsigned char>& buf, const ConvNet& net) {
  wire_put_u32(buf, static_cast<uint32_t>(net.specs.size()));
  for (const auto& s : net.specs) {
    wire_put_u32(buf, static_cast<uint32_t>(s.kind));
    wire_put_u32(buf, static_cast<uint32_t>(s.in_c));
    wire_put_u32(buf, static_cast<uint32_t>(s.out_c));
    wire_put_u32(buf, static_cast<uint32_t>(s.k));
    wire_put_u32(buf, static_cast<uint32_t>(s.stride));
  }
  for (const auto& c : net.convs) {
    for (float v : c.w) wire_put_f32(buf, v);
    for (float v : c.b) wire_put_f32(buf, v);
  }
}

ConvNet wire_read_net(WireReader& r) {
  uint32_t n_layers = r.u32("layer count");
  if (n_layers > 1000) fail(ErrorCode::format_error, "implausible layer count");
  ConvNet net;
  for (uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec s;
    uint32_t kind = r.u32("layer kind");
    if (kind > 5) fail(ErrorCode::format_error, "unknown layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.in_c = static_cast<int>(r.u32("in_c"));
    s.out_c = static_cast<int>(r.u32("out_c"));
    s.k = static_cast<int>(r.u32("kernel"));
    s.stride = static_cast<int>(r.u32("stride"));
    if (s.kind == LayerKind::conv &&
        (s.in_c < 1 || s.out_c < 1 || s.k < 1 || s.k > 15 || s.stride < 1))
      fail(ErrorCode::format_error, "invalid conv shape header");
    net.specs.push_back(s);
  }
  for (const auto& s : net.specs) {
    if (s.kind != LayerKind::conv) continue;
    ConvParams c;
    c.in_c = s.in_c;
    c.out_c = s.out_c;
    c.k = s.k;
    c.stride = s.stride;
    c.w.resize(static_cast<size_t>(c.out_c) * c.in_c * c.k * c.k);
    c.b.resize(c.out_c);
    for (float& v : c.w) v = r.f32("conv weights");
    for (float& v : c.b) v = r.f32("conv biases");
    net.convs.push_back(std::move(c));
  }
  return net;
}

void wire_begin(std::vector<unsigned char>& buf, uint8_t kind) {
  buf.insert(buf.end(), kMagic, kMagic + 4);
  buf.push_back(kVersion);
  buf.push_back(kind);
}

uint8_t wire_open(const std::vector<unsigned char>& buf, const std::string& path,
                  WireReader& r) {
  if (buf.size() < 6 || std::memcmp(buf.data(), kMagic, 4) != 0)
    fail(ErrorCode::format_error, "bad magic bytes in " + path);
  if (buf[4] != kVersion) fail(ErrorCode::format_error, "unsupported weight version");
  r.p = buf.data() + 6;
  r.left = buf.size() - 6;
  return buf[5];
}

void write_file_atomic(const std::string& path, const std::vector<unsigned char>& buf) {
  const std::string tmp = path + ".tmp";
  FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
  size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (written != buf.size()) fail(ErrorCode::io_error, "short write to " + tmp);
  std::filesystem::rename(tmp, path);
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  long len = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<unsigned char> buf(static_cast<size_t>(len));
  size_t got = std::fread(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (got != buf.size()) fail(ErrorCode::io_error, "short read from " + path);
  return buf;
}

void save_net(const ConvNet& net, const std::string& path) {
  std::vector<unsigned char> buf;
  wire_begin(buf, kWireKindFeatureNet);
  wire_put_net(buf, net);
  write_file_atomic(path, buf);
}

ConvNet load_net(const std::string& path) {
  const std::vector<unsigned char> buf = read_file_bytes(path);
  WireReader r;
  const uint8_t kind = wire_open(buf, path, r);
  if (kind != kWireKindFeatureNet)
    fail(ErrorCode::format_error, path + " holds model kind " + std::to_string(kind) +
                                      ", expected a feature net");
  ConvNet net = wire_read_net(r);
  if (r.left != 0) fail(ErrorCode::format_error, "trailing bytes in " + path);
  return net;
}

FeatureEncoder load_encoder(const std::string& path) {
  FeatureEncoder e;
  e.net = load_net(path);
  for (const auto& s : e.net.specs)
    if (s.kind == LayerKind::upsample2)
      fail(ErrorCode::format_error, path + " holds a decoder, not an encoder");
  return e;
}

FeatureDecoder load_decoder(const std::string& path) {
  FeatureDecoder d;
  d.net = load_net(path);
  if (d.upsample_factor() < 2)
    fail(ErrorCode::format_error, path + " holds an encoder, not a decoder");
  return d;
}

}  // namespace smx
