#pragma once

// Directional central-difference gradient checks for the training losses.

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vtf/dataio.hpp"
#include "vtf/losses.hpp"

namespace gradcheck {

using LossFn = std::function<torch::Tensor(const torch::Tensor&)>;

struct Case {
  std::string name;
  LossFn loss;                    // scalar loss of the differentiable argument
  std::vector<int64_t> shape;     // shape of that argument
  double lo = -1.0, hi = 1.0;     // sampling box for random points
};

struct Outcome {
  std::string name;
  int accepted = 0;
  int rejected = 0;
  double worst_rel_error = 0.0;
  bool pass = false;
};

inline double eval(const LossFn& f, const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  return f(x).item<double>();
}

/// At each random point x and random unit direction d, compares <grad f(x), d>
/// with (f(x + h d) - f(x - h d)) / 2h. Points whose forward and backward
/// one-sided slopes disagree sit on a kink (hinge, ReLU or phase wrap) inside
/// the stencil and are redrawn.
inline Outcome run(const Case& c, uint64_t seed, int points = 10, double h = 1e-3, double rtol = 1e-2,
                   int max_attempts = 200) {
  Outcome out;
  out.name = c.name;
  auto gen = at::detail::createCPUGenerator(seed);
  while (out.accepted < points && out.accepted + out.rejected < max_attempts) {
    torch::Tensor x = (torch::rand(c.shape, gen, torch::kFloat64) * (c.hi - c.lo) + c.lo).requires_grad_(true);
    torch::Tensor d = torch::randn(c.shape, gen, torch::kFloat64);
    d = d / d.norm();
    const torch::Tensor value = c.loss(x);
    const torch::Tensor grad = torch::autograd::grad({value}, {x})[0];
    const double analytic = (grad * d).sum().item<double>();

    const torch::Tensor xd = x.detach();
    const double f0 = value.item<double>();
    const double fp = eval(c.loss, xd + h * d);
    const double fm = eval(c.loss, xd - h * d);
    const double forward = (fp - f0) / h, backward = (f0 - fm) / h;
    const double numeric = (fp - fm) / (2.0 * h);
    const double scale = std::max({std::abs(forward), std::abs(backward), 1e-8});
    if (std::abs(forward - backward) > 0.5 * rtol * scale) {
      ++out.rejected;
      continue;
    }
    const double err = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    out.worst_rel_error = std::max(out.worst_rel_error, err);
    ++out.accepted;
  }
  out.pass = out.accepted == points && out.worst_rel_error <= rtol;
  return out;
}

/// Every differentiable loss on 3x32x32 inputs (batch of two).
inline std::vector<Case> loss_cases(uint64_t seed) {
  using namespace vtf;
  auto gen = at::detail::createCPUGenerator(seed);
  const std::vector<int64_t> img{2, 3, 32, 32};
  auto fixed_image = [&] { return torch::rand(img, gen, torch::kFloat64) * 2.0 - 1.0; };
  const torch::Tensor real = fixed_image();
  const torch::Tensor positive = fixed_image(), negative = fixed_image();
  const torch::Tensor other_logits = torch::randn(img, gen, torch::kFloat64);
  auto extractor = std::make_shared<losses::RandomConvExtractor>(seed);
  extractor->to(torch::kFloat64);

  std::vector<Case> cases;
  cases.push_back({"triplet", [=](const torch::Tensor& x) { return losses::triplet(x, positive, negative); }, img});
  cases.push_back({"patch_loss",
                   [=](const torch::Tensor& x) { return losses::patch_loss(x, real, 16, core::RunSeed{seed}); }, img});
  cases.push_back({"temperature_loss",
                   [=](const torch::Tensor& x) {
                     return losses::temperature_loss(x, real, dataio::JitterParams{}, core::RunSeed{seed});
                   },
                   img});
  cases.push_back(
      {"perceptual_loss", [=](const torch::Tensor& x) { return losses::perceptual_loss(x, real, *extractor); }, img});
  cases.push_back({"bce_logits", [](const torch::Tensor& x) { return losses::bce_logits(x, 0.9); }, img, -4.0, 4.0});
  cases.push_back({"gan_generator_adv(fake)",
                   [=](const torch::Tensor& x) { return losses::gan_generator_adv(x, other_logits); }, img, -4.0, 4.0});
  cases.push_back({"gan_generator_adv(real)",
                   [=](const torch::Tensor& x) { return losses::gan_generator_adv(other_logits, x); }, img, -4.0, 4.0});
  cases.push_back({"discriminator_loss(real)",
                   [=](const torch::Tensor& x) { return losses::discriminator_loss(x, other_logits).total; }, img,
                   -4.0, 4.0});
  cases.push_back({"discriminator_loss(fake)",
                   [=](const torch::Tensor& x) { return losses::discriminator_loss(other_logits, x).total; }, img,
                   -4.0, 4.0});
  cases.push_back({"fft_loss_patch",
                   [=](const torch::Tensor& x) { return losses::fft_loss_patch(x, real).total; }, img});
  cases.push_back({"fft_loss_global",
                   [=](const torch::Tensor& x) { return losses::fft_loss_global(x, real).total; }, img});
  cases.push_back({"fft_loss_global(wrapped)",
                   [=](const torch::Tensor& x) {
                     return losses::fft_loss_global(x, real, losses::PhaseDistance::kWrapped).total;
                   },
                   img});
  return cases;
}

}  // namespace gradcheck
