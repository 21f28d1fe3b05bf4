#pragma once

#include <torch/torch.h>

#include <nlohmann/json.hpp>
#include <set>

#include "vtf/blocks.hpp"

namespace vtf::models {

struct GeneratorSpec {
  int64_t in_channels = 3;
  int64_t out_channels = 3;
  int64_t base_width = 64;
  int64_t max_width = 512;
  int64_t encoder_depth = 6;
  int64_t decoder_depth = 5;
  double dropout_rate = 0.5;
  std::set<int64_t> encoder_dropout{3, 4};  // 1-based module indices
  std::set<int64_t> decoder_dropout{2, 3};
  int64_t blur_kernel = 3;

  void validate() const;
  /// Spatial sizes must be divisible by this (2^encoder_depth).
  int64_t input_multiple() const { return int64_t{1} << encoder_depth; }
  /// Feature width of encoder module i (1-based).
  int64_t encoder_width(int64_t i) const;
};

struct DiscriminatorSpec {
  int64_t in_channels = 6;
  int64_t base_width = 64;
  int64_t max_width = 512;
  int64_t blocks = 4;
  int64_t blur_kernel = 3;
  int64_t power_iterations = 1;

  void validate() const;
  int64_t block_width(int64_t i) const;
};

nlohmann::json to_json(const GeneratorSpec& spec);
nlohmann::json to_json(const DiscriminatorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
DiscriminatorSpec discriminator_spec_from_json(const nlohmann::json& j);

/// 4x4 conv (stride 1, pad 1) -> LeakyReLU(0.2) -> BlurPool(stride 2) [-> dropout]
class EncoderBlockImpl : public torch::nn::Module {
 public:
  EncoderBlockImpl(int64_t in, int64_t out, double dropout, int64_t blur_kernel);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  blocks::BlurPool2d blur_{nullptr};
  torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(EncoderBlock);

/// 4x4 transposed conv (stride 2, pad 1) -> BlurPool(stride 1) -> InstanceNorm -> ReLU [-> dropout]
class DecoderBlockImpl : public torch::nn::Module {
 public:
  DecoderBlockImpl(int64_t in, int64_t out, double dropout, int64_t blur_kernel);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::ConvTranspose2d up_{nullptr};
  blocks::BlurPool2d blur_{nullptr};
  torch::nn::InstanceNorm2d norm_{nullptr};
  torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(DecoderBlock);

/// Anti-aliased U-Net. Encoder module i feeds decoder module (depth - i) via
/// channel concatenation; a final 2x up-convolution with tanh restores the
/// input resolution.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorSpec spec = {});
  torch::Tensor forward(const torch::Tensor& visible);
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  std::vector<EncoderBlock> encoders_;
  std::vector<DecoderBlock> decoders_;
  torch::nn::ConvTranspose2d head_{nullptr};
};
TORCH_MODULE(Generator);

/// PatchGAN over the channel-concatenated (condition, candidate) pair. Every
/// convolution is spectrally normalized; the output is a raw logit map.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorSpec spec = {});
  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& candidate);
  const DiscriminatorSpec& spec() const { return spec_; }

  /// All spectrally normalized convolutions, input side first.
  std::vector<blocks::SNConv2d> convolutions() const;

 private:
  DiscriminatorSpec spec_;
  std::vector<blocks::SNConv2d> convs_;
  std::vector<blocks::BlurPool2d> blurs_;
  blocks::SNConv2d projection_{nullptr};
};
TORCH_MODULE(Discriminator);

/// N(0, 0.02) conv weights, zero biases; draws from the torch global generator.
void init_weights(torch::nn::Module& module);

}  // namespace vtf::models
