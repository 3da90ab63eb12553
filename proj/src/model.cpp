#include "model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "rng.hpp"

namespace heatflow {

using ad::Tensor;

bool is_power_of_two(int value) {
  return value > 0 && (value & (value - 1)) == 0;
}

namespace {

constexpr int kKernel = 4;
constexpr int kStride = 2;
constexpr int kPad = 1;
constexpr float kLeakySlope = 0.2f;
constexpr float kInitStd = 0.02f;
constexpr char kMagic[4] = {'L', 'F', 'C', 'K'};
constexpr uint32_t kFormatVersion = 1;

int log2_int(int value) {
  int bits = 0;
  while ((1 << bits) < value) ++bits;
  return bits;
}

Tensor init_weight(ad::Shape shape, Rng& rng) {
  std::vector<float> data(static_cast<size_t>(ad::numel(shape)));
  for (auto& v : data) {
    v = static_cast<float>(rng.normal(0.0, kInitStd));
  }
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

}  // namespace

Model Model::build(const ModelConfig& config) {
  if (!is_power_of_two(config.input_size) || config.input_size < 32) {
    fail(ErrorCode::invalid_argument,
         "build_model: input_size must be a power of two >= 32, got " +
             std::to_string(config.input_size));
  }
  if (config.base_channels < 1 || config.max_channels < config.base_channels) {
    fail(ErrorCode::invalid_argument, "build_model: invalid channel counts");
  }
  Model model;
  model.config_ = config;
  const int levels = log2_int(config.input_size);
  auto channels_at = [&](int layer) {
    int64_t c = static_cast<int64_t>(config.base_channels) << layer;
    return static_cast<int>(
        std::min<int64_t>(c, config.max_channels));
  };

  Rng rng(config.seed);
  int in_c = 1;
  for (int layer = 0; layer < levels; ++layer) {
    const int out_c = channels_at(layer);
    ConvLayer conv;
    conv.in_channels = in_c;
    conv.out_channels = out_c;
    conv.weight = init_weight({out_c, in_c, kKernel, kKernel}, rng);
    conv.bias = Tensor::zeros({out_c}, true);
    model.encoder_.push_back(std::move(conv));
    in_c = out_c;
  }
  for (int layer = 0; layer < levels; ++layer) {
    // First decoder block consumes the latent alone; the rest consume the
    // previous output concatenated with the mirror encoder activation.
    const int dec_in = (layer == 0) ? channels_at(levels - 1)
                                    : 2 * channels_at(levels - 1 - layer);
    const int dec_out = (layer == levels - 1) ? 1
                                              : channels_at(levels - 2 - layer);
    ConvLayer conv;
    conv.in_channels = dec_in;
    conv.out_channels = dec_out;
    conv.weight = init_weight({dec_in, dec_out, kKernel, kKernel}, rng);
    conv.bias = Tensor::zeros({dec_out}, true);
    model.decoder_.push_back(std::move(conv));
  }
  return model;
}

Tensor Model::forward(const Tensor& input) const {
  if (!input.defined() || input.shape().size() != 4 || input.dim(1) != 1 ||
      input.dim(2) != config_.input_size || input.dim(3) != config_.input_size) {
    fail(ErrorCode::dimension_mismatch,
         "forward: expected input (N,1," + std::to_string(config_.input_size) +
             "," + std::to_string(config_.input_size) + "), got " +
             (input.defined() ? ad::shape_str(input.shape()) : "undefined"));
  }
  std::vector<Tensor> activations;
  activations.reserve(encoder_.size());
  Tensor x = input;
  for (const auto& layer : encoder_) {
    x = ad::leaky_relu(
        ad::conv2d(x, layer.weight, layer.bias, kStride, kPad), kLeakySlope);
    activations.push_back(x);
  }
  const int levels = static_cast<int>(encoder_.size());
  Tensor y = activations.back();
  for (int layer = 0; layer < levels; ++layer) {
    Tensor in = (layer == 0)
                    ? y
                    : ad::concat_channels(
                          y, activations[static_cast<size_t>(levels - 1 - layer)]);
    Tensor out = ad::conv2d_transposed(in, decoder_[static_cast<size_t>(layer)].weight,
                                       decoder_[static_cast<size_t>(layer)].bias,
                                       kStride, kPad);
    y = (layer == levels - 1) ? ad::sigmoid(out)
                              : ad::leaky_relu(out, kLeakySlope);
  }
  return ad::impose_border(y, input);
}

TemperatureField Model::predict(const TemperatureField& problem) const {
  const int n = config_.input_size;
  if (problem.height() != n || problem.width() != n) {
    fail(ErrorCode::dimension_mismatch,
         "predict: model input size " + std::to_string(n) +
             " does not match problem " + std::to_string(problem.height()) +
             "x" + std::to_string(problem.width()));
  }
  std::vector<float> data(problem.values().size());
  for (size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(problem.values()[i] / kTemperatureRange);
  }
  Tensor input = Tensor::from_data({1, 1, n, n}, std::move(data), false);
  Tensor output = forward(input);
  TemperatureField result(n, n);
  auto out = output.data();
  for (int64_t i = 0; i < result.size(); ++i) {
    result.values()[static_cast<size_t>(i)] =
        static_cast<double>(out[static_cast<size_t>(i)]) * kTemperatureRange;
  }
  // Re-impose the exact border in double precision.
  for (int j = 0; j < n; ++j) {
    result(0, j) = problem(0, j);
    result(n - 1, j) = problem(n - 1, j);
  }
  for (int i = 0; i < n; ++i) {
    result(i, 0) = problem(i, 0);
    result(i, n - 1) = problem(i, n - 1);
  }
  return result;
}

std::vector<LayerShape> Model::encoder_shapes() const {
  std::vector<LayerShape> shapes;
  int size = config_.input_size;
  for (const auto& layer : encoder_) {
    shapes.push_back({layer.in_channels, layer.out_channels, size, size / 2});
    size /= 2;
  }
  return shapes;
}

std::vector<LayerShape> Model::decoder_shapes() const {
  std::vector<LayerShape> shapes;
  int size = 1;
  for (const auto& layer : decoder_) {
    shapes.push_back({layer.in_channels, layer.out_channels, size, size * 2});
    size *= 2;
  }
  return shapes;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> params;
  params.reserve(2 * (encoder_.size() + decoder_.size()));
  for (const auto& layer : encoder_) {
    params.push_back(layer.weight);
    params.push_back(layer.bias);
  }
  for (const auto& layer : decoder_) {
    params.push_back(layer.weight);
    params.push_back(layer.bias);
  }
  return params;
}

int64_t Model::parameter_count() const {
  int64_t count = 0;
  for (const auto& p : parameters()) count += p.size();
  return count;
}

namespace {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<NamedTensor> named_parameters(const Model& model,
                                          std::vector<Tensor> params) {
  // parameters() order: encoder (w, b) pairs then decoder (w, b) pairs.
  std::vector<NamedTensor> named;
  const size_t enc = static_cast<size_t>(model.encoder_layers());
  for (size_t i = 0; i < params.size(); i += 2) {
    const size_t layer = i / 2;
    const bool is_enc = layer < enc;
    const std::string prefix =
        (is_enc ? "enc" : "dec") + std::to_string(is_enc ? layer : layer - enc);
    named.push_back({prefix + ".weight", params[i]});
    named.push_back({prefix + ".bias", params[i + 1]});
  }
  return named;
}

}  // namespace

void Model::save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint payload is little-endian");
  auto named = named_parameters(*this, parameters());

  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["model_config"] = {{"input_size", config_.input_size},
                            {"base_channels", config_.base_channels},
                            {"max_channels", config_.max_channels},
                            {"seed", config_.seed}};
  header["metadata"] = {{"epochs", meta_.epochs},
                        {"seed", meta_.seed},
                        {"lambda_progress", meta_.lambda_progress}};
  nlohmann::json dir = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, tensor] : named) {
    const uint64_t nbytes = static_cast<uint64_t>(tensor.size()) * sizeof(float);
    dir.push_back({{"name", name},
                   {"shape", tensor.shape()},
                   {"offset", offset},
                   {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["tensors"] = dir;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  uint32_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, tensor] : named) {
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open for reading: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::format, "not a checkpoint file (bad magic): " + path.string());
  }
  uint32_t version = 0;
  uint64_t header_len = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) ||
      !in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len))) {
    fail(ErrorCode::format, "truncated checkpoint header: " + path.string());
  }
  if (version != kFormatVersion) {
    fail(ErrorCode::format, "unsupported checkpoint version " +
                                std::to_string(version) + ": " + path.string());
  }
  if (header_len > (1ull << 30)) {
    fail(ErrorCode::format, "implausible header length: " + path.string());
  }
  std::string header_str(header_len, '\0');
  if (!in.read(header_str.data(), static_cast<std::streamsize>(header_len))) {
    fail(ErrorCode::format, "truncated checkpoint header: " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format,
         "invalid checkpoint header JSON: " + std::string(e.what()));
  }

  std::vector<char> payload(std::istreambuf_iterator<char>(in), {});
  try {
    ModelConfig config;
    config.input_size = header.at("model_config").at("input_size").get<int>();
    config.base_channels =
        header.at("model_config").at("base_channels").get<int>();
    config.max_channels =
        header.at("model_config").at("max_channels").get<int>();
    config.seed = header.at("model_config").at("seed").get<uint64_t>();
    Model model = build(config);
    TrainMeta meta;
    meta.epochs = header.at("metadata").at("epochs").get<int>();
    meta.seed = header.at("metadata").at("seed").get<uint64_t>();
    meta.lambda_progress =
        header.at("metadata").at("lambda_progress").get<double>();
    model.set_meta(meta);

    auto named = named_parameters(model, model.parameters());
    const auto& dir = header.at("tensors");
    if (dir.size() != named.size()) {
      fail(ErrorCode::format,
           "checkpoint tensor directory has " + std::to_string(dir.size()) +
               " entries, expected " + std::to_string(named.size()));
    }
    for (size_t i = 0; i < named.size(); ++i) {
      const auto& entry = dir.at(i);
      const std::string name = entry.at("name").get<std::string>();
      if (name != named[i].name) {
        fail(ErrorCode::format, "unexpected tensor '" + name + "', expected '" +
                                    named[i].name + "'");
      }
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape != named[i].tensor.shape()) {
        fail(ErrorCode::format,
             "tensor '" + name + "' has shape " + ad::shape_str(shape) +
                 ", expected " + ad::shape_str(named[i].tensor.shape()));
      }
      const uint64_t offset = entry.at("offset").get<uint64_t>();
      const uint64_t nbytes = entry.at("nbytes").get<uint64_t>();
      const uint64_t expected =
          static_cast<uint64_t>(named[i].tensor.size()) * sizeof(float);
      if (nbytes != expected || offset + nbytes > payload.size()) {
        fail(ErrorCode::format,
             "tensor '" + name + "' payload is inconsistent with its shape");
      }
      std::memcpy(named[i].tensor.data().data(), payload.data() + offset,
                  nbytes);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format,
         "invalid checkpoint header: " + std::string(e.what()));
  }
}

}  // namespace heatflow
