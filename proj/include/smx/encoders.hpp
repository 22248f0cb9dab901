#pragma once

#include <string>
#include <utility>

#include "smx/nn.hpp"

namespace smx {

// Stand-ins for the pretrained encoder/decoder pair: a "fixed" seeded conv
// stack (never trained) and a "tiny-ae" pair trained to reconstruct images.

struct FeatureEncoder {
  ConvNet net;

  int out_channels() const { return net.out_channels(); }
  int downsample_factor() const { return net.downsample_factor(); }
};

struct FeatureDecoder {
  ConvNet net;

  int in_channels() const {
    for (const auto& s : net.specs)
      if (s.kind == LayerKind::conv) return s.in_c;
    return 0;
  }
  int upsample_factor() const;
};

// Latent with out_channels = 2*width, downsample factor 4.
FeatureEncoder make_encoder(int width, uint64_t seed);
FeatureDecoder make_decoder(int width, uint64_t seed);

ImageTensor encode(const FeatureEncoder& e, const ImageTensor& img);
// Clamps to [0,1].
ImageTensor decode(const FeatureDecoder& d, const ImageTensor& feat);

struct AutoencoderTrainOptions {
  int width = 16;
  int batch_size = 8;
  float lr = 0.02f;
  float momentum = 0.9f;
};

std::pair<FeatureEncoder, FeatureDecoder> train_autoencoder(
    const ImageTensor& dataset, int epochs, uint64_t seed,
    const AutoencoderTrainOptions& opt = {});

// "SMXW" weight files: magic, version byte, model-kind byte, then the
// kind-specific payload. Kind 0 is a plain feature net: layer count,
// per-layer (kind,in,out,k,stride) u32 LE header, then f32 LE weights and
// biases per conv layer. Other kinds (e.g. classifier checkpoints) embed
// the same net block plus extra sections.
constexpr uint8_t kWireKindFeatureNet = 0;
constexpr uint8_t kWireKindClassifier = 1;

void wire_put_u32(std::vector<unsigned char>& buf, uint32_t v);
void wire_put_f32(std::vector<unsigned char>& buf, float v);

struct WireReader {
  const unsigned char* p = nullptr;
  size_t left = 0;
  void need(size_t k, const char* what);
  uint32_t u32(const char* what);
  float f32(const char* what);
};

void wire_put_net(std::vector<unsigned char>& buf, const ConvNet& net);
ConvNet wire_read_net(WireReader& r);

// Emits magic + version + kind, then returns; caller appends the payload.
void wire_begin(std::vector<unsigned char>& buf, uint8_t kind);
// Validates magic + version, returns the kind byte and a payload reader.
uint8_t wire_open(const std::vector<unsigned char>& buf, const std::string& path,
                  WireReader& r);

void write_file_atomic(const std::string& path, const std::vector<unsigned char>& buf);
std::vector<unsigned char> read_file_bytes(const std::string& path);

void save_net(const ConvNet& net, const std::string& path);
ConvNet load_net(const std::string& path);

inline void save_weights(const FeatureEncoder& e, const std::string& path) { save_net(e.net, path); }
inline void save_weights(const FeatureDecoder& d, const std::string& path) { save_net(d.net, path); }
FeatureEncoder load_encoder(const std::string& path);
FeatureDecoder load_decoder(const std::string& path);

}  // namespace smx
