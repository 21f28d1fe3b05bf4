#pragma once

#include <torch/torch.h>

namespace vtf::blocks {

/// Fixed binomial low-pass filter applied depthwise before subsampling.
struct BlurPoolSpec {
  int64_t kernel_size = 3;  // binomial row of this length, e.g. 3 -> [1,2,1]/4
  int64_t stride = 2;

  void validate() const;
};

/// Normalized 2-D binomial kernel [k,k]; entries sum to one.
torch::Tensor binomial_kernel(int64_t size, torch::ScalarType dtype = torch::kFloat32);

/// Reflect-pad, blur and subsample a [C,H,W] or [N,C,H,W] map. Output spatial
/// size is ceil(H/stride) x ceil(W/stride). Axes too short to reflect fall
/// back to edge replication.
torch::Tensor blurpool(const torch::Tensor& x, const BlurPoolSpec& spec);

class BlurPool2dImpl : public torch::nn::Module {
 public:
  explicit BlurPool2dImpl(BlurPoolSpec spec = {});
  torch::Tensor forward(const torch::Tensor& x);
  const BlurPoolSpec& spec() const { return spec_; }

 private:
  BlurPoolSpec spec_;
};
TORCH_MODULE(BlurPool2d);

struct SpectralNormState {
  torch::Tensor u;  // left singular-vector estimate, unit norm
  torch::Tensor v;  // right singular-vector estimate, unit norm
  int64_t power_iterations = 1;
  double eps = 1e-12;

  /// Random unit start vectors for a weight reshaped to [rows, cols].
  static SpectralNormState init(int64_t rows, int64_t cols, torch::ScalarType dtype = torch::kFloat32);
};

/// Runs `state.power_iterations` power-iteration updates on a detached copy
/// of `matrix` ([rows, cols]) and refreshes state.u / state.v.
void power_iterate(const torch::Tensor& matrix, SpectralNormState& state);

/// sigma = u^T W v using the current state; differentiable in `matrix`.
torch::Tensor sigma_estimate(const torch::Tensor& matrix, const SpectralNormState& state);

/// Divides `weight` by its estimated largest singular value. The weight is
/// flattened to [out, rest] for the estimate and returned in its own shape.
/// When `update` is set the state is advanced first.
torch::Tensor spectral_normalize(const torch::Tensor& weight, SpectralNormState& state, bool update = true);

/// Conv2d whose weight is spectrally normalized on every forward. The power
/// iteration only advances in training mode.
class SNConv2dImpl : public torch::nn::Module {
 public:
  SNConv2dImpl(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride, int64_t padding,
               int64_t power_iterations = 1);
  torch::Tensor forward(const torch::Tensor& x);

  /// The normalized weight as used by forward (without advancing the state).
  torch::Tensor normalized_weight();

  torch::Tensor weight;  // un-normalized
  torch::Tensor bias;
  torch::Tensor u;
  torch::Tensor v;

 private:
  int64_t stride_;
  int64_t padding_;
  int64_t power_iterations_;
};
TORCH_MODULE(SNConv2d);

}  // namespace vtf::blocks
