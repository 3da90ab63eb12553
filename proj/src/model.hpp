#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "autodiff.hpp"
#include "field.hpp"

namespace heatflow {

struct ModelConfig {
  int input_size = 128;  // power of two, >= 32
  int base_channels = 16;
  int max_channels = 512;
  uint64_t seed = 0;
};

/// Training metadata carried inside a checkpoint.
struct TrainMeta {
  int epochs = 0;
  uint64_t seed = 0;
  double lambda_progress = 0.0;
};

struct LayerShape {
  int in_channels = 0;
  int out_channels = 0;
  int in_size = 0;   // spatial side entering the layer
  int out_size = 0;  // spatial side leaving the layer
};

/// Fully convolutional encoder-decoder with skip connections.
///
/// Encoder: log2(input_size) blocks of [4x4 conv, stride 2, pad 1 ->
/// leaky_relu(0.2)], channels doubling from base_channels up to max_channels,
/// ending in a spatially 1x1 latent. Decoder mirrors with transposed convs,
/// each taking the previous decoder output concatenated with the matching
/// encoder activation; the final block outputs one channel through a sigmoid.
/// The output border ring is overwritten with the input border.
class Model {
 public:
  static Model build(const ModelConfig& config);

  /// input (N,1,n,n) in [0,1]; returns (N,1,n,n) in [0,1], border imposed.
  ad::Tensor forward(const ad::Tensor& input) const;

  /// Degrees in, degrees out: normalizes by 100, runs forward, rescales, and
  /// re-imposes the problem border exactly (double precision).
  TemperatureField predict(const TemperatureField& problem) const;

  const ModelConfig& config() const { return config_; }
  int input_size() const { return config_.input_size; }
  int encoder_layers() const { return static_cast<int>(encoder_.size()); }
  int decoder_layers() const { return static_cast<int>(decoder_.size()); }
  std::vector<LayerShape> encoder_shapes() const;
  std::vector<LayerShape> decoder_shapes() const;

  std::vector<ad::Tensor> parameters() const;
  int64_t parameter_count() const;

  const TrainMeta& meta() const { return meta_; }
  void set_meta(const TrainMeta& meta) { meta_ = meta; }

  // Versioned container: "LFCK" magic, format version, JSON header with the
  // config and a tensor directory (name/shape/offset), then a raw
  // little-endian float32 payload. Round trips reproduce forward outputs
  // bit-for-bit.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  struct ConvLayer {
    ad::Tensor weight;
    ad::Tensor bias;
    int in_channels = 0;
    int out_channels = 0;
  };

  ModelConfig config_;
  std::vector<ConvLayer> encoder_;
  std::vector<ConvLayer> decoder_;
  TrainMeta meta_;
};

bool is_power_of_two(int value);

}  // namespace heatflow
