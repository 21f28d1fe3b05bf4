#include "vtf/blocks.hpp"

#include <cmath>

#include "vtf/errors.hpp"

namespace vtf::blocks {

namespace F = torch::nn::functional;

void BlurPoolSpec::validate() const {
  if (kernel_size < 1 || kernel_size > 7) throw ContractError("blur kernel size must be in [1, 7]");
  if (stride < 1) throw ContractError("blur stride must be positive");
}

torch::Tensor binomial_kernel(int64_t size, torch::ScalarType dtype) {
  std::vector<double> row{1.0};
  for (int64_t i = 1; i < size; ++i) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  torch::Tensor r = torch::tensor(row, torch::kFloat64);
  torch::Tensor k = torch::outer(r, r);
  return (k / k.sum()).to(dtype);
}

torch::Tensor blurpool(const torch::Tensor& x, const BlurPoolSpec& spec) {
  spec.validate();
  const bool unbatched = x.dim() == 3;
  torch::Tensor in = unbatched ? x.unsqueeze(0) : x;
  if (in.dim() != 4) throw ShapeError("blurpool expects [C,H,W] or [N,C,H,W]");
  const int64_t h = in.size(2), w = in.size(3);
  if (h < 1 || w < 1) throw ShapeError("blurpool: degenerate spatial dims");

  const int64_t k = spec.kernel_size;
  const int64_t lo = (k - 1) / 2, hi = k / 2;
  if (k > 1) {
    auto pad_mode = [](int64_t extent, int64_t pad) -> F::PadFuncOptions::mode_t {
      if (extent > pad) return torch::kReflect;
      return torch::kReplicate;
    };
    // Reflection needs each axis longer than the pad; pad axes separately so a
    // short axis does not force replication on the other.
    in = F::pad(in, F::PadFuncOptions({lo, hi, 0, 0}).mode(pad_mode(w, std::max(lo, hi))));
    in = F::pad(in, F::PadFuncOptions({0, 0, lo, hi}).mode(pad_mode(h, std::max(lo, hi))));
  }
  const int64_t c = in.size(1);
  torch::Tensor kernel = binomial_kernel(k, in.scalar_type()).to(in.device()).expand({c, 1, k, k});
  torch::Tensor out = F::conv2d(in, kernel, F::Conv2dFuncOptions().stride(spec.stride).groups(c));
  return unbatched ? out.squeeze(0) : out;
}

BlurPool2dImpl::BlurPool2dImpl(BlurPoolSpec spec) : spec_(spec) { spec_.validate(); }

torch::Tensor BlurPool2dImpl::forward(const torch::Tensor& x) { return blurpool(x, spec_); }

SpectralNormState SpectralNormState::init(int64_t rows, int64_t cols, torch::ScalarType dtype) {
  SpectralNormState state;
  state.u = F::normalize(torch::randn({rows}, dtype), F::NormalizeFuncOptions().dim(0).eps(state.eps));
  state.v = F::normalize(torch::randn({cols}, dtype), F::NormalizeFuncOptions().dim(0).eps(state.eps));
  return state;
}

void power_iterate(const torch::Tensor& matrix, SpectralNormState& state) {
  torch::NoGradGuard no_grad;
  if (matrix.dim() != 2) throw ShapeError("power_iterate expects a 2-D matrix");
  const torch::Tensor w = matrix.detach();
  auto unit = [&](const torch::Tensor& t) { return F::normalize(t, F::NormalizeFuncOptions().dim(0).eps(state.eps)); };
  for (int64_t i = 0; i < state.power_iterations; ++i) {
    state.v = unit(torch::mv(w.t(), state.u));
    state.u = unit(torch::mv(w, state.v));
  }
}

torch::Tensor sigma_estimate(const torch::Tensor& matrix, const SpectralNormState& state) {
  return torch::dot(state.u, torch::mv(matrix, state.v));
}

torch::Tensor spectral_normalize(const torch::Tensor& weight, SpectralNormState& state, bool update) {
  if (weight.dim() < 2) throw ShapeError("spectral_normalize needs at least a 2-D weight");
  const torch::Tensor matrix = weight.reshape({weight.size(0), -1});
  if (update) power_iterate(matrix, state);
  return weight / (sigma_estimate(matrix, state) + state.eps);
}

SNConv2dImpl::SNConv2dImpl(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
                           int64_t padding, int64_t power_iterations)
    : stride_(stride), padding_(padding), power_iterations_(power_iterations) {
  weight = register_parameter("weight", torch::randn({out_channels, in_channels, kernel, kernel}) * 0.02);
  bias = register_parameter("bias", torch::zeros({out_channels}));
  SpectralNormState state = SpectralNormState::init(out_channels, in_channels * kernel * kernel);
  u = register_buffer("u", state.u);
  v = register_buffer("v", state.v);
}

torch::Tensor SNConv2dImpl::normalized_weight() {
  SpectralNormState state{u, v, power_iterations_};
  return spectral_normalize(weight, state, false);
}

torch::Tensor SNConv2dImpl::forward(const torch::Tensor& x) {
  SpectralNormState state{u, v, power_iterations_};
  const bool update = is_training();
  torch::Tensor w = spectral_normalize(weight, state, update);
  if (update) {
    torch::NoGradGuard no_grad;
    u.copy_(state.u);
    v.copy_(state.v);
  }
  return F::conv2d(x, w, F::Conv2dFuncOptions().bias(bias).stride(stride_).padding(padding_));
}

}  // namespace vtf::blocks
