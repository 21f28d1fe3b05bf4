#include "vtf/models.hpp"

#include <sstream>

#include "vtf/errors.hpp"

namespace vtf::models {

namespace nn = torch::nn;

void GeneratorSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || base_width <= 0 || max_width < base_width) {
    throw ContractError("invalid generator widths");
  }
  if (encoder_depth < 2 || decoder_depth != encoder_depth - 1) {
    throw ContractError("generator needs decoder_depth == encoder_depth - 1");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ContractError("dropout must be in [0, 1)");
}

int64_t GeneratorSpec::encoder_width(int64_t i) const {
  return std::min(max_width, base_width << std::min<int64_t>(i - 1, 30));
}

void DiscriminatorSpec::validate() const {
  if (in_channels <= 0 || base_width <= 0 || blocks < 1 || max_width < base_width) {
    throw ContractError("invalid discriminator spec");
  }
}

int64_t DiscriminatorSpec::block_width(int64_t i) const {
  return std::min(max_width, base_width << std::min<int64_t>(i - 1, 30));
}

nlohmann::json to_json(const GeneratorSpec& s) {
  return {{"kind", "generator"},
          {"in_channels", s.in_channels},
          {"out_channels", s.out_channels},
          {"base_width", s.base_width},
          {"max_width", s.max_width},
          {"encoder_depth", s.encoder_depth},
          {"decoder_depth", s.decoder_depth},
          {"dropout_rate", s.dropout_rate},
          {"encoder_dropout", s.encoder_dropout},
          {"decoder_dropout", s.decoder_dropout},
          {"blur_kernel", s.blur_kernel}};
}

nlohmann::json to_json(const DiscriminatorSpec& s) {
  return {{"kind", "discriminator"},   {"in_channels", s.in_channels}, {"base_width", s.base_width},
          {"max_width", s.max_width},  {"blocks", s.blocks},           {"blur_kernel", s.blur_kernel},
          {"power_iterations", s.power_iterations}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  s.in_channels = j.at("in_channels");
  s.out_channels = j.at("out_channels");
  s.base_width = j.at("base_width");
  s.max_width = j.at("max_width");
  s.encoder_depth = j.at("encoder_depth");
  s.decoder_depth = j.at("decoder_depth");
  s.dropout_rate = j.at("dropout_rate");
  s.encoder_dropout = j.at("encoder_dropout").get<std::set<int64_t>>();
  s.decoder_dropout = j.at("decoder_dropout").get<std::set<int64_t>>();
  s.blur_kernel = j.at("blur_kernel");
  s.validate();
  return s;
}

DiscriminatorSpec discriminator_spec_from_json(const nlohmann::json& j) {
  DiscriminatorSpec s;
  s.in_channels = j.at("in_channels");
  s.base_width = j.at("base_width");
  s.max_width = j.at("max_width");
  s.blocks = j.at("blocks");
  s.blur_kernel = j.at("blur_kernel");
  s.power_iterations = j.at("power_iterations");
  s.validate();
  return s;
}

EncoderBlockImpl::EncoderBlockImpl(int64_t in, int64_t out, double dropout, int64_t blur_kernel) {
  conv_ = register_module("conv", nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(1).padding(1)));
  blur_ = register_module("blur", blocks::BlurPool2d(blocks::BlurPoolSpec{blur_kernel, 2}));
  if (dropout > 0.0) dropout_ = register_module("dropout", nn::Dropout(dropout));
}

torch::Tensor EncoderBlockImpl::forward(const torch::Tensor& x) {
  torch::Tensor y = blur_(torch::leaky_relu(conv_(x), 0.2));
  return dropout_ ? dropout_(y) : y;
}

DecoderBlockImpl::DecoderBlockImpl(int64_t in, int64_t out, double dropout, int64_t blur_kernel) {
  up_ = register_module("up", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
  blur_ = register_module("blur", blocks::BlurPool2d(blocks::BlurPoolSpec{blur_kernel, 1}));
  norm_ = register_module("norm", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out)));
  if (dropout > 0.0) dropout_ = register_module("dropout", nn::Dropout(dropout));
}

torch::Tensor DecoderBlockImpl::forward(const torch::Tensor& x) {
  torch::Tensor y = torch::relu(norm_(blur_(up_(x))));
  return dropout_ ? dropout_(y) : y;
}

GeneratorImpl::GeneratorImpl(GeneratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int64_t depth = spec_.encoder_depth;
  int64_t in = spec_.in_channels;
  for (int64_t i = 1; i <= depth; ++i) {
    const double p = spec_.encoder_dropout.count(i) ? spec_.dropout_rate : 0.0;
    encoders_.push_back(register_module("encoder" + std::to_string(i),
                                        EncoderBlock(in, spec_.encoder_width(i), p, spec_.blur_kernel)));
    in = spec_.encoder_width(i);
  }
  // Decoder j upsamples and is concatenated with encoder (depth - j).
  for (int64_t j = 1; j <= spec_.decoder_depth; ++j) {
    const int64_t out = spec_.encoder_width(depth - j);
    const double p = spec_.decoder_dropout.count(j) ? spec_.dropout_rate : 0.0;
    decoders_.push_back(
        register_module("decoder" + std::to_string(j), DecoderBlock(in, out, p, spec_.blur_kernel)));
    in = out * 2;
  }
  head_ = register_module("head", nn::ConvTranspose2d(
                                      nn::ConvTranspose2dOptions(in, spec_.out_channels, 4).stride(2).padding(1)));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& visible) {
  if (visible.dim() != 4) throw ShapeError("generator expects [N,C,H,W]");
  const int64_t m = spec_.input_multiple();
  if (visible.size(2) % m != 0 || visible.size(3) % m != 0) {
    std::ostringstream msg;
    msg << "generator input " << visible.size(2) << "x" << visible.size(3) << " is not divisible by " << m;
    throw ShapeError(msg.str());
  }
  std::vector<torch::Tensor> skips;
  torch::Tensor x = visible;
  for (auto& enc : encoders_) {
    x = enc(x);
    skips.push_back(x);
  }
  const auto depth = static_cast<size_t>(spec_.encoder_depth);
  for (size_t j = 1; j <= decoders_.size(); ++j) {
    x = decoders_[j - 1](x);
    x = torch::cat({x, skips[depth - j - 1]}, 1);
  }
  return torch::tanh(head_(x));
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  int64_t in = spec_.in_channels;
  for (int64_t i = 1; i <= spec_.blocks; ++i) {
    const int64_t out = spec_.block_width(i);
    convs_.push_back(register_module("conv" + std::to_string(i),
                                     blocks::SNConv2d(in, out, 4, 1, 1, spec_.power_iterations)));
    blurs_.push_back(register_module("blur" + std::to_string(i),
                                     blocks::BlurPool2d(blocks::BlurPoolSpec{spec_.blur_kernel, 2})));
    in = out;
  }
  projection_ = register_module("projection", blocks::SNConv2d(in, 1, 1, 1, 0, spec_.power_iterations));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& condition, const torch::Tensor& candidate) {
  if (!condition.sizes().equals(candidate.sizes())) {
    std::ostringstream msg;
    msg << "discriminator inputs differ in shape: " << condition.sizes() << " vs " << candidate.sizes();
    throw ShapeError(msg.str());
  }
  torch::Tensor x = torch::cat({condition, candidate}, 1);
  if (x.size(1) != spec_.in_channels) throw ShapeError("discriminator channel count mismatch");
  for (size_t i = 0; i < convs_.size(); ++i) {
    x = blurs_[i](torch::leaky_relu(convs_[i](x), 0.2));
  }
  return projection_(x);
}

std::vector<blocks::SNConv2d> DiscriminatorImpl::convolutions() const {
  std::vector<blocks::SNConv2d> all = convs_;
  all.push_back(projection_);
  return all;
}

void init_weights(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& item : module.named_parameters()) {
    const std::string& name = item.key();
    torch::Tensor& p = item.value();
    if (name.ends_with("bias")) {
      p.zero_();
    } else if (p.dim() == 4) {
      p.normal_(0.0, 0.02);
    }
  }
}

}  // namespace vtf::models
