#pragma once

#include <torch/torch.h>

#include <functional>
#include <nlohmann/json.hpp>
#include <vector>

#include "vtf/core.hpp"

namespace vtf::diffusion {

/// Cumulative signal coefficients for t = 0..T (alpha_bar[0] == 1).
struct NoiseSchedule {
  int64_t steps = 0;               // T
  std::vector<double> alpha_bar;   // size T + 1
  std::vector<double> alpha;       // size T + 1, alpha[0] unused (= 1)
  std::vector<double> beta;        // size T + 1, beta[0] unused (= 0)

  void check_timestep(int64_t t) const;
};

/// Squared-cosine schedule: f(t) = cos^2(((t/T + s) / (1 + s)) * pi/2),
/// beta_t = min(1 - f(t)/f(t-1), max_beta); alpha_bar is the running product
/// of the clipped alphas so the two always agree.
NoiseSchedule build_schedule(int64_t steps, double offset = 0.008, double max_beta = 0.999);

/// sqrt(alpha_bar_t) y0 + sqrt(1 - alpha_bar_t) eps, with per-sample t ([N] int64).
torch::Tensor q_sample(const torch::Tensor& y0, const torch::Tensor& t, const torch::Tensor& noise,
                       const NoiseSchedule& schedule);
torch::Tensor q_sample(const torch::Tensor& y0, int64_t t, const torch::Tensor& noise, const NoiseSchedule& schedule);

struct DenoiserSpec {
  int64_t condition_channels = 1;
  int64_t target_channels = 1;
  int64_t base_width = 32;
  int64_t levels = 2;          // resolutions; attention sits at the coarsest
  int64_t time_embed_dim = 128;

  void validate() const;
};

nlohmann::json to_json(const DenoiserSpec& spec);
DenoiserSpec denoiser_spec_from_json(const nlohmann::json& j);

/// Sinusoidal embedding of (float) timesteps, [N] -> [N, dim].
torch::Tensor timestep_embedding(const torch::Tensor& t, int64_t dim);

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int64_t in, int64_t out, int64_t time_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb);

 private:
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::Linear time_{nullptr};
};
TORCH_MODULE(ResBlock);

class SelfAttentionImpl : public torch::nn::Module {
 public:
  explicit SelfAttentionImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::GroupNorm norm_{nullptr};
  torch::nn::Conv2d qkv_{nullptr}, proj_{nullptr};
};
TORCH_MODULE(SelfAttention);

/// Noise predictor f(concat(x, y_t), t): a small U-Net with residual blocks,
/// one self-attention block and a learned timestep embedding.
class DenoiserImpl : public torch::nn::Module {
 public:
  explicit DenoiserImpl(DenoiserSpec spec = {});
  torch::Tensor forward(const torch::Tensor& model_input, const torch::Tensor& t);
  const DenoiserSpec& spec() const { return spec_; }

 private:
  DenoiserSpec spec_;
  torch::nn::Sequential time_mlp_{nullptr};
  torch::nn::Conv2d in_conv_{nullptr};
  std::vector<ResBlock> down_blocks_;
  std::vector<torch::nn::Conv2d> downsamples_;
  ResBlock mid_{nullptr};
  SelfAttention attention_{nullptr};
  std::vector<torch::nn::Conv2d> upsamples_;
  std::vector<ResBlock> up_blocks_;
  torch::nn::GroupNorm out_norm_{nullptr};
  torch::nn::Conv2d out_conv_{nullptr};
};
TORCH_MODULE(Denoiser);

/// (model_input [N, Cx + Cy, H, W], t [N] int64) -> predicted noise [N, Cy, H, W]
using NoisePredictor = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

NoisePredictor as_predictor(Denoiser& denoiser);

/// Exact noise for a known clean target: (y_t - sqrt(ab_t) y0) / sqrt(1 - ab_t).
NoisePredictor oracle_predictor(const torch::Tensor& y0, const NoiseSchedule& schedule);

/// Rejects colour inputs unless `allow_color`.
void require_grayscale(const torch::Tensor& x, const char* what, bool allow_color);

struct DiffusionLoss {
  torch::Tensor loss;
  torch::Tensor t;
  torch::Tensor noise;
};

/// t ~ U{1..T}, eps ~ N(0, I) from `seed`; loss = mean (eps - f(concat(x, y_t), t))^2.
DiffusionLoss diffusion_loss(const NoisePredictor& predictor, const torch::Tensor& condition,
                             const torch::Tensor& target, const NoiseSchedule& schedule, core::RunSeed seed,
                             bool allow_color = false);

/// One optimisation step on `denoiser`; returns the loss value. Throws
/// TrainingError when the loss or a gradient is non-finite.
double diffusion_training_step(Denoiser& denoiser, torch::optim::Optimizer& optimizer,
                               const torch::Tensor& condition, const torch::Tensor& target,
                               const NoiseSchedule& schedule, core::RunSeed seed, bool allow_color = false);

/// Ancestral sampling from y_T ~ N(0, I) with reverse variance beta_t (no
/// noise at t = 1); the result is clamped to [-1, 1].
torch::Tensor sample(const NoisePredictor& predictor, const torch::Tensor& condition, const NoiseSchedule& schedule,
                     core::RunSeed seed, int64_t target_channels = 1, bool allow_color = false);

}  // namespace vtf::diffusion
