#include <cmath>

#include "vtf/diffusion.hpp"
#include "vtf/errors.hpp"

namespace vtf::diffusion {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

void DenoiserSpec::validate() const {
  if (condition_channels < 1 || target_channels < 1 || base_width < 1 || levels < 1 || time_embed_dim < 2) {
    throw ContractError("invalid denoiser spec");
  }
}

nlohmann::json to_json(const DenoiserSpec& s) {
  return {{"kind", "denoiser"},         {"condition_channels", s.condition_channels},
          {"target_channels", s.target_channels}, {"base_width", s.base_width},
          {"levels", s.levels},         {"time_embed_dim", s.time_embed_dim}};
}

DenoiserSpec denoiser_spec_from_json(const nlohmann::json& j) {
  DenoiserSpec s;
  s.condition_channels = j.at("condition_channels");
  s.target_channels = j.at("target_channels");
  s.base_width = j.at("base_width");
  s.levels = j.at("levels");
  s.time_embed_dim = j.at("time_embed_dim");
  s.validate();
  return s;
}

namespace {

int64_t groups_for(int64_t channels) {
  for (int64_t g : {8, 4, 2}) {
    if (channels % g == 0) return g;
  }
  return 1;
}

nn::GroupNorm group_norm(int64_t channels) { return nn::GroupNorm(nn::GroupNormOptions(groups_for(channels), channels)); }

nn::Conv2d conv3(int64_t in, int64_t out, int64_t stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

}  // namespace

torch::Tensor timestep_embedding(const torch::Tensor& t, int64_t dim) {
  const int64_t half = dim / 2;
  torch::Tensor freqs =
      torch::exp(-std::log(10000.0) * torch::arange(half, torch::kFloat64) / static_cast<double>(half));
  torch::Tensor args = t.to(torch::kFloat64).unsqueeze(1) * freqs.unsqueeze(0);
  torch::Tensor emb = torch::cat({torch::cos(args), torch::sin(args)}, 1);
  if (dim % 2 == 1) emb = F::pad(emb, F::PadFuncOptions({0, 1}));
  return emb.to(torch::kFloat32);
}

ResBlockImpl::ResBlockImpl(int64_t in, int64_t out, int64_t time_dim) {
  norm1_ = register_module("norm1", group_norm(in));
  conv1_ = register_module("conv1", conv3(in, out));
  time_ = register_module("time", nn::Linear(time_dim, out));
  norm2_ = register_module("norm2", group_norm(out));
  conv2_ = register_module("conv2", conv3(out, out));
  if (in != out) skip_ = register_module("skip", nn::Conv2d(nn::Conv2dOptions(in, out, 1)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb) {
  torch::Tensor h = conv1_(torch::silu(norm1_(x)));
  h = h + time_(torch::silu(temb)).unsqueeze(-1).unsqueeze(-1);
  h = conv2_(torch::silu(norm2_(h)));
  return (skip_ ? skip_(x) : x) + h;
}

SelfAttentionImpl::SelfAttentionImpl(int64_t channels) {
  norm_ = register_module("norm", group_norm(channels));
  qkv_ = register_module("qkv", nn::Conv2d(nn::Conv2dOptions(channels, 3 * channels, 1)));
  proj_ = register_module("proj", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x) {
  const int64_t n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  torch::Tensor qkv = qkv_(norm_(x)).reshape({n, 3, c, h * w});
  torch::Tensor q = qkv.select(1, 0).transpose(1, 2);  // [N, HW, C]
  torch::Tensor k = qkv.select(1, 1);                  // [N, C, HW]
  torch::Tensor v = qkv.select(1, 2).transpose(1, 2);  // [N, HW, C]
  torch::Tensor attn = torch::softmax(torch::bmm(q, k) / std::sqrt(static_cast<double>(c)), -1);
  torch::Tensor out = torch::bmm(attn, v).transpose(1, 2).reshape({n, c, h, w});
  return x + proj_(out);
}

DenoiserImpl::DenoiserImpl(DenoiserSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int64_t td = spec_.time_embed_dim;
  time_mlp_ = register_module("time_mlp", nn::Sequential(nn::Linear(td, td), nn::SiLU(), nn::Linear(td, td)));
  auto width = [&](int64_t level) { return spec_.base_width << level; };

  in_conv_ = register_module("in_conv", conv3(spec_.condition_channels + spec_.target_channels, width(0)));
  int64_t ch = width(0);
  for (int64_t l = 0; l < spec_.levels; ++l) {
    down_blocks_.push_back(register_module("down" + std::to_string(l), ResBlock(ch, width(l), td)));
    ch = width(l);
    if (l + 1 < spec_.levels) {
      downsamples_.push_back(register_module("downsample" + std::to_string(l), conv3(ch, ch, 2)));
    }
  }
  mid_ = register_module("mid", ResBlock(ch, ch, td));
  attention_ = register_module("attention", SelfAttention(ch));
  for (int64_t l = spec_.levels - 1; l >= 0; --l) {
    up_blocks_.push_back(register_module("up" + std::to_string(l), ResBlock(ch + width(l), width(l), td)));
    ch = width(l);
    if (l > 0) {
      upsamples_.push_back(register_module("upsample" + std::to_string(l), conv3(ch, width(l - 1))));
      ch = width(l - 1);
    }
  }
  out_norm_ = register_module("out_norm", group_norm(ch));
  out_conv_ = register_module("out_conv", conv3(ch, spec_.target_channels));
  torch::NoGradGuard no_grad;
  out_conv_->weight.zero_();
  out_conv_->bias.zero_();
}

torch::Tensor DenoiserImpl::forward(const torch::Tensor& model_input, const torch::Tensor& t) {
  if (model_input.dim() != 4 || model_input.size(1) != spec_.condition_channels + spec_.target_channels) {
    throw ShapeError("denoiser input must be [N, condition + target channels, H, W]");
  }
  const int64_t multiple = int64_t{1} << (spec_.levels - 1);
  if (model_input.size(2) % multiple != 0 || model_input.size(3) % multiple != 0) {
    throw ShapeError("denoiser input size must be divisible by " + std::to_string(multiple));
  }
  torch::Tensor temb = time_mlp_->forward(timestep_embedding(t, spec_.time_embed_dim).to(model_input.options()));

  torch::Tensor h = in_conv_(model_input);
  std::vector<torch::Tensor> skips;
  for (size_t l = 0; l < down_blocks_.size(); ++l) {
    h = down_blocks_[l](h, temb);
    skips.push_back(h);
    if (l < downsamples_.size()) h = downsamples_[l](h);
  }
  h = attention_(mid_(h, temb));
  for (size_t i = 0; i < up_blocks_.size(); ++i) {
    h = up_blocks_[i](torch::cat({h, skips[skips.size() - 1 - i]}, 1), temb);
    if (i < upsamples_.size()) {
      h = F::interpolate(h, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
      h = upsamples_[i](h);
    }
  }
  return out_conv_(torch::silu(out_norm_(h)));
}

NoisePredictor as_predictor(Denoiser& denoiser) {
  return [denoiser](const torch::Tensor& input, const torch::Tensor& t) mutable { return denoiser(input, t); };
}

}  // namespace vtf::diffusion
