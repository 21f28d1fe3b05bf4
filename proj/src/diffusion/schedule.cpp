#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vtf/diffusion.hpp"
#include "vtf/errors.hpp"

namespace vtf::diffusion {

void NoiseSchedule::check_timestep(int64_t t) const {
  if (t < 0 || t > steps) {
    throw ContractError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps) + "]");
  }
}

NoiseSchedule build_schedule(int64_t steps, double offset, double max_beta) {
  if (steps < 1) throw ContractError("schedule needs T >= 1");
  if (!(max_beta > 0.0 && max_beta < 1.0)) throw ContractError("max_beta must lie in (0, 1)");
  auto f = [&](double t) {
    const double c = std::cos(((t / static_cast<double>(steps) + offset) / (1.0 + offset)) * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule s;
  s.steps = steps;
  s.alpha_bar.assign(static_cast<size_t>(steps + 1), 1.0);
  s.alpha.assign(static_cast<size_t>(steps + 1), 1.0);
  s.beta.assign(static_cast<size_t>(steps + 1), 0.0);
  for (int64_t t = 1; t <= steps; ++t) {
    const auto i = static_cast<size_t>(t);
    const double beta = std::min(1.0 - f(static_cast<double>(t)) / f(static_cast<double>(t - 1)), max_beta);
    s.beta[i] = beta;
    s.alpha[i] = 1.0 - beta;
    s.alpha_bar[i] = s.alpha_bar[i - 1] * s.alpha[i];
  }
  return s;
}

namespace {

torch::Tensor gather_coeff(const std::vector<double>& table, const torch::Tensor& t, const torch::Tensor& like) {
  torch::Tensor values = torch::tensor(table, torch::kFloat64).index_select(0, t.to(torch::kInt64).cpu());
  std::vector<int64_t> shape(static_cast<size_t>(like.dim()), 1);
  shape[0] = values.size(0);
  return values.view(shape).to(like.options());
}

}  // namespace

torch::Tensor q_sample(const torch::Tensor& y0, const torch::Tensor& t, const torch::Tensor& noise,
                       const NoiseSchedule& schedule) {
  if (!y0.sizes().equals(noise.sizes())) throw ShapeError("q_sample: noise shape differs from y0");
  if (t.dim() != 1 || t.size(0) != y0.size(0)) throw ShapeError("q_sample: need one timestep per sample");
  const auto lo = t.min().item<int64_t>(), hi = t.max().item<int64_t>();
  schedule.check_timestep(lo);
  schedule.check_timestep(hi);
  torch::Tensor ab = gather_coeff(schedule.alpha_bar, t, y0);
  return ab.sqrt() * y0 + (1.0 - ab).sqrt() * noise;
}

torch::Tensor q_sample(const torch::Tensor& y0, int64_t t, const torch::Tensor& noise, const NoiseSchedule& schedule) {
  return q_sample(y0, torch::full({y0.size(0)}, t, torch::kInt64), noise, schedule);
}

NoisePredictor oracle_predictor(const torch::Tensor& y0, const NoiseSchedule& schedule) {
  return [y0, &schedule](const torch::Tensor& input, const torch::Tensor& t) {
    const int64_t cy = y0.size(1);
    torch::Tensor yt = input.narrow(1, input.size(1) - cy, cy);
    torch::Tensor ab = gather_coeff(schedule.alpha_bar, t, yt);
    return (yt - ab.sqrt() * y0) / (1.0 - ab).sqrt();
  };
}

void require_grayscale(const torch::Tensor& x, const char* what, bool allow_color) {
  if (x.dim() != 4) throw ShapeError(std::string(what) + ": expected [N,C,H,W]");
  if (!allow_color && x.size(1) != 1) {
    throw ContractError(std::string(what) + ": grayscale input required (got " + std::to_string(x.size(1)) +
                        " channels)");
  }
}

DiffusionLoss diffusion_loss(const NoisePredictor& predictor, const torch::Tensor& condition,
                             const torch::Tensor& target, const NoiseSchedule& schedule, core::RunSeed seed,
                             bool allow_color) {
  require_grayscale(condition, "condition", allow_color);
  require_grayscale(target, "target", allow_color);
  if (condition.size(0) != target.size(0) || condition.size(2) != target.size(2) ||
      condition.size(3) != target.size(3)) {
    throw ShapeError("condition and target differ in batch or spatial size");
  }
  const int64_t n = target.size(0);
  std::mt19937_64 rng(seed.value);
  std::uniform_int_distribution<int64_t> pick(1, schedule.steps);
  std::vector<int64_t> ts(static_cast<size_t>(n));
  for (auto& t : ts) t = pick(rng);

  DiffusionLoss out;
  out.t = torch::tensor(ts, torch::kInt64);
  auto gen = at::detail::createCPUGenerator(seed.derive(1).value);
  out.noise = torch::randn(target.sizes(), gen, target.options().requires_grad(false));
  torch::Tensor yt = q_sample(target, out.t, out.noise, schedule);
  torch::Tensor prediction = predictor(torch::cat({condition, yt}, 1), out.t);
  out.loss = (out.noise - prediction).pow(2).mean();
  return out;
}

double diffusion_training_step(Denoiser& denoiser, torch::optim::Optimizer& optimizer,
                               const torch::Tensor& condition, const torch::Tensor& target,
                               const NoiseSchedule& schedule, core::RunSeed seed, bool allow_color) {
  denoiser->train();
  optimizer.zero_grad();
  DiffusionLoss l = diffusion_loss(as_predictor(denoiser), condition, target, schedule, seed, allow_color);
  const double value = l.loss.item<double>();
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite diffusion loss " << value << " (timesteps " << l.t << ")";
    throw TrainingError(msg.str());
  }
  l.loss.backward();
  for (const auto& p : denoiser->parameters()) {
    if (p.grad().defined() && !torch::isfinite(p.grad()).all().item<bool>()) {
      throw TrainingError("non-finite gradient in denoiser");
    }
  }
  optimizer.step();
  return value;
}

torch::Tensor sample(const NoisePredictor& predictor, const torch::Tensor& condition, const NoiseSchedule& schedule,
                     core::RunSeed seed, int64_t target_channels, bool allow_color) {
  require_grayscale(condition, "condition", allow_color);
  torch::NoGradGuard no_grad;
  auto gen = at::detail::createCPUGenerator(seed.value);
  const int64_t n = condition.size(0);
  torch::Tensor y = torch::randn({n, target_channels, condition.size(2), condition.size(3)}, gen,
                                 condition.options());
  for (int64_t t = schedule.steps; t >= 1; --t) {
    const auto i = static_cast<size_t>(t);
    torch::Tensor tt = torch::full({n}, t, torch::kInt64);
    torch::Tensor eps = predictor(torch::cat({condition, y}, 1), tt);
    const double coef = schedule.beta[i] / std::sqrt(1.0 - schedule.alpha_bar[i]);
    y = (y - coef * eps) / std::sqrt(schedule.alpha[i]);
    if (t > 1) y = y + std::sqrt(schedule.beta[i]) * torch::randn(y.sizes(), gen, y.options());
  }
  return y.clamp(-1.0, 1.0);
}

}  // namespace vtf::diffusion
