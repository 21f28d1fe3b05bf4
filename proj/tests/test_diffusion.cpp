#include "testing.hpp"

#include <cmath>

#include "oracles.hpp"
#include "vtf/dataio.hpp"
#include "vtf/diffusion.hpp"
#include "vtf/errors.hpp"

using namespace vtf;

TEST_CASE("squared-cosine schedule") {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  REQUIRE(s.alpha_bar.size() == 501);
  CHECK(s.alpha_bar[0] == 1.0);
  CHECK(s.alpha_bar[500] < 1e-3);
  CHECK(std::sqrt(s.alpha_bar[500]) < 0.04);

  const std::vector<double> ref = oracle::cosine_alpha_bar(500, 0.008, 0.999);
  double product = 1.0;
  for (int64_t t = 1; t <= 500; ++t) {
    const auto i = static_cast<size_t>(t);
    product *= s.alpha[i];
    CHECK(s.alpha_bar[i] == doctest::Approx(product).epsilon(1e-6));
    CHECK(s.alpha_bar[i] == doctest::Approx(ref[i]).epsilon(1e-6));
    CHECK(s.alpha_bar[i] < s.alpha_bar[i - 1]);
    CHECK(s.beta[i] > 0.0);
    CHECK(s.beta[i] < 1.0);
    CHECK(s.alpha[i] == doctest::Approx(1.0 - s.beta[i]));
  }
  CHECK_THROWS_AS(diffusion::build_schedule(0), ContractError);
  CHECK_NOTHROW(diffusion::build_schedule(1));
}

TEST_CASE("forward noising") {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  const torch::Tensor y0 = torch::rand({3, 1, 8, 8}, torch::kFloat64) * 2 - 1;
  const torch::Tensor eps = torch::randn({3, 1, 8, 8}, torch::kFloat64);

  CHECK(diffusion::q_sample(y0, 0, eps, s).equal(y0));
  const torch::Tensor end = diffusion::q_sample(y0, 500, eps, s);
  CHECK((end - eps).abs().max().item<double>() < 0.04 * 2.0 + 1e-3);

  // Per-sample timesteps pick their own coefficients.
  const torch::Tensor t = torch::tensor({0, 250, 500}, torch::kInt64);
  const torch::Tensor mixed = diffusion::q_sample(y0, t, eps, s);
  for (int64_t i = 0; i < 3; ++i) {
    const double ab = s.alpha_bar[static_cast<size_t>(t[i].item<int64_t>())];
    const torch::Tensor want = std::sqrt(ab) * y0[i] + std::sqrt(1 - ab) * eps[i];
    CHECK(torch::allclose(mixed[i], want, 1e-12, 1e-12));
  }
  CHECK_THROWS_AS(diffusion::q_sample(y0, 501, eps, s), ContractError);
  CHECK_THROWS_AS(diffusion::q_sample(y0, -1, eps, s), ContractError);
  CHECK_THROWS_AS(diffusion::q_sample(y0, 10, eps.narrow(0, 0, 2), s), ShapeError);
}

TEST_CASE("forward marginal moments, Monte Carlo") {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  const int64_t draws = 10000;
  for (int64_t t : {1, 50, 250, 499}) {
    CAPTURE(t);
    auto gen = at::detail::createCPUGenerator(static_cast<uint64_t>(1000 + t));
    const torch::Tensor y0 = torch::full({draws, 1}, 0.5, torch::kFloat64);
    const torch::Tensor eps = torch::randn({draws, 1}, gen, torch::kFloat64);
    const torch::Tensor y = diffusion::q_sample(y0, t, eps, s);
    const double ab = s.alpha_bar[static_cast<size_t>(t)];
    const double mean = 0.5 * std::sqrt(ab), var = 1.0 - ab;
    const double se_mean = std::sqrt(var / draws);
    const double se_var = var * std::sqrt(2.0 / (draws - 1));
    CHECK(std::abs(y.mean().item<double>() - mean) < 3 * se_mean);
    CHECK(std::abs(y.var().item<double>() - var) < 3 * se_var);
  }
}

TEST_CASE("training loss with stub predictors") {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  const torch::Tensor x = torch::rand({64, 1, 32, 32}) * 2 - 1;
  const torch::Tensor y0 = torch::rand({64, 1, 32, 32}) * 2 - 1;

  const diffusion::DiffusionLoss exact = diffusion::diffusion_loss(diffusion::oracle_predictor(y0, s), x, y0, s,
                                                                   core::RunSeed{1});
  CHECK(exact.loss.item<double>() < 1e-8);

  const diffusion::NoisePredictor zero = [](const torch::Tensor& in, const torch::Tensor&) {
    return torch::zeros_like(in.narrow(1, 1, 1));
  };
  const diffusion::DiffusionLoss blank = diffusion::diffusion_loss(zero, x, y0, s, core::RunSeed{2});
  CHECK(blank.loss.item<double>() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(blank.t.min().item<int64_t>() >= 1);
  CHECK(blank.t.max().item<int64_t>() <= 500);

  // Same seed, same timesteps and noise.
  const diffusion::DiffusionLoss again = diffusion::diffusion_loss(zero, x, y0, s, core::RunSeed{2});
  CHECK(again.t.equal(blank.t));
  CHECK(again.noise.equal(blank.noise));

  const torch::Tensor rgb = torch::rand({2, 3, 32, 32});
  CHECK_THROWS_AS(diffusion::diffusion_loss(zero, rgb, y0.narrow(0, 0, 2), s, core::RunSeed{1}), ContractError);
}

TEST_CASE("sampling with the exact predictor recovers the target") {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  const torch::Tensor x = torch::rand({2, 1, 16, 16}, torch::kFloat64) * 2 - 1;
  const torch::Tensor y0 = torch::rand({2, 1, 16, 16}, torch::kFloat64) * 1.8 - 0.9;
  const torch::Tensor out = diffusion::sample(diffusion::oracle_predictor(y0, s), x, s, core::RunSeed{5});
  CHECK(out.sizes() == x.sizes());
  CHECK((out - y0).abs().max().item<double>() < 1e-3);

  const diffusion::NoisePredictor zero = [](const torch::Tensor& in, const torch::Tensor&) {
    return torch::zeros_like(in.narrow(1, 1, 1));
  };
  CHECK(diffusion::sample(zero, x, s, core::RunSeed{9}).equal(diffusion::sample(zero, x, s, core::RunSeed{9})));
  CHECK(!diffusion::sample(zero, x, s, core::RunSeed{9}).equal(diffusion::sample(zero, x, s, core::RunSeed{10})));
  CHECK(diffusion::sample(zero, x, s, core::RunSeed{9}).abs().max().item<double>() <= 1.0);

  const torch::Tensor rgb = torch::rand({1, 3, 16, 16});
  CHECK_THROWS_AS(diffusion::sample(zero, rgb, s, core::RunSeed{1}), ContractError);
  const diffusion::NoisePredictor zero3 = [](const torch::Tensor& in, const torch::Tensor&) {
    return torch::zeros_like(in.narrow(1, 3, 3));
  };
  CHECK(diffusion::sample(zero3, rgb, s, core::RunSeed{1}, 3, true).sizes() == rgb.sizes());
}

TEST_CASE("denoiser shapes and spec") {
  diffusion::DenoiserSpec spec;
  spec.base_width = 8;
  diffusion::Denoiser d(spec);
  const torch::Tensor in = torch::randn({2, 2, 32, 32});
  const torch::Tensor out = d(in, torch::tensor({1, 400}, torch::kInt64));
  CHECK(out.sizes() == torch::IntArrayRef({2, 1, 32, 32}));
  CHECK_THROWS_AS(d(torch::randn({1, 2, 31, 31}), torch::tensor({1}, torch::kInt64)), ShapeError);
  CHECK_THROWS_AS(d(torch::randn({1, 3, 32, 32}), torch::tensor({1}, torch::kInt64)), ShapeError);

  const diffusion::DenoiserSpec back = diffusion::denoiser_spec_from_json(diffusion::to_json(spec));
  CHECK(back.base_width == 8);
  CHECK(back.levels == spec.levels);

  const torch::Tensor emb = diffusion::timestep_embedding(torch::tensor({0.0, 10.0}), 16);
  CHECK(emb.sizes() == torch::IntArrayRef({2, 16}));
  CHECK(!emb[0].equal(emb[1]));
}

TEST_CASE("a short training run lowers the loss") {
  torch::manual_seed(0);
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  const dataio::PairedSet data = dataio::synth_set(dataio::SyntheticFaceParams{.image_size = 32}, 8, core::RunSeed{3});
  const torch::Tensor x = dataio::luminance(data.visible).unsqueeze(1);
  const torch::Tensor y = dataio::luminance(data.thermal).unsqueeze(1);
  diffusion::DenoiserSpec spec;
  spec.base_width = 16;
  diffusion::Denoiser d(spec);
  torch::optim::Adam opt(d->parameters(), torch::optim::AdamOptions(2e-3));
  std::vector<double> trace;
  for (uint64_t step = 0; step < 60; ++step) {
    trace.push_back(diffusion::diffusion_training_step(d, opt, x, y, s, core::RunSeed{step}));
  }
  auto block_mean = [&](size_t from, size_t to) {
    double acc = 0.0;
    for (size_t i = from; i < to; ++i) acc += trace[i];
    return acc / static_cast<double>(to - from);
  };
  CHECK(block_mean(40, 60) < block_mean(0, 20));
}
