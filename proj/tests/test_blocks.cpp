#include "testing.hpp"

#include "oracles.hpp"
#include "vtf/blocks.hpp"
#include "vtf/errors.hpp"

using namespace vtf;
using blocks::BlurPoolSpec;

TEST_CASE("binomial kernels match Pascal's triangle") {
  for (int64_t k = 1; k <= 7; ++k) {
    const auto row = oracle::binomial_row(k - 1);
    double total = 0.0;
    for (double v : row) total += v;
    const torch::Tensor kernel = blocks::binomial_kernel(k, torch::kFloat64);
    CHECK(kernel.sum().item<double>() == doctest::Approx(1.0).epsilon(1e-12));
    for (int64_t i = 0; i < k; ++i) {
      for (int64_t j = 0; j < k; ++j) {
        const double expected = row[static_cast<size_t>(i)] * row[static_cast<size_t>(j)] / (total * total);
        CHECK(kernel[i][j].item<double>() == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  // Size 3 is [1,2,1]/4 per axis.
  CHECK(blocks::binomial_kernel(3, torch::kFloat64)[1][1].item<double>() == doctest::Approx(0.25));
}

TEST_CASE("blurpool preserves constants and halves the grid") {
  const torch::Tensor c = torch::full({2, 5, 64, 64}, 0.37, torch::kFloat64);
  const torch::Tensor out = blocks::blurpool(c, {});
  CHECK(out.sizes() == torch::IntArrayRef({2, 5, 32, 32}));
  CHECK((out - 0.37).abs().max().item<double>() < 1e-12);
  CHECK(blocks::blurpool(torch::zeros({1, 7, 9}), {}).sizes() == torch::IntArrayRef({1, 4, 5}));
  CHECK(blocks::blurpool(torch::zeros({1, 7, 9}), {3, 1}).sizes() == torch::IntArrayRef({1, 7, 9}));
}

TEST_CASE("blurpool removes the Nyquist stripe") {
  const torch::Tensor cols = torch::arange(16, torch::kFloat64).remainder(2) * -2.0 + 1.0;  // +1, -1, ...
  const torch::Tensor stripes = cols.view({1, 1, 16}).expand({1, 16, 16}).contiguous();
  const torch::Tensor out = blocks::blurpool(stripes, {});
  CHECK(out.abs().max().item<double>() < stripes.abs().max().item<double>());
  CHECK(out.abs().max().item<double>() < 1e-12);
}

TEST_CASE("blurpool is linear and depthwise") {
  const torch::Tensor x = torch::randn({2, 4, 12, 12}, torch::kFloat64);
  const torch::Tensor y = torch::randn({2, 4, 12, 12}, torch::kFloat64);
  const torch::Tensor lhs = blocks::blurpool(2.5 * x - 0.75 * y, {});
  const torch::Tensor rhs = 2.5 * blocks::blurpool(x, {}) - 0.75 * blocks::blurpool(y, {});
  CHECK((lhs - rhs).abs().max().item<double>() < 1e-12);
  const torch::Tensor perm = torch::tensor({2, 0, 3, 1}, torch::kLong);
  CHECK(torch::allclose(blocks::blurpool(x.index_select(1, perm), {}), blocks::blurpool(x, {}).index_select(1, perm)));
}

TEST_CASE("blurpool falls back to edge replication on tiny maps") {
  const torch::Tensor x = torch::full({1, 3, 1, 1}, 0.5);
  const torch::Tensor out = blocks::blurpool(x, {});
  CHECK(out.sizes() == torch::IntArrayRef({1, 3, 1, 1}));
  CHECK(out.sub(0.5).abs().max().item<float>() < 1e-7);
  CHECK_THROWS_AS(blocks::blurpool(torch::zeros({2, 2}), {}), ShapeError);
  CHECK_THROWS_AS(blocks::blurpool(x, {9, 2}), ContractError);
}

TEST_CASE("power iteration converges to the top singular value") {
  SUBCASE("diag(3, 1)") {
    const torch::Tensor w = torch::diag(torch::tensor({3.0, 1.0}, torch::kFloat64));
    auto state = blocks::SpectralNormState::init(2, 2, torch::kFloat64);
    state.power_iterations = 30;
    const torch::Tensor normalized = blocks::spectral_normalize(w, state);
    CHECK(blocks::sigma_estimate(w, state).item<double>() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(oracle::largest_singular_value(normalized) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(state.u.norm().item<double>() == doctest::Approx(1.0));
  }
  SUBCASE("identity is unchanged") {
    const torch::Tensor eye = torch::eye(4, torch::kFloat64);
    auto state = blocks::SpectralNormState::init(4, 4, torch::kFloat64);
    state.power_iterations = 5;
    CHECK((blocks::spectral_normalize(eye, state) - eye).abs().max().item<double>() < 1e-9);
  }
  SUBCASE("random 8x8 against the SVD oracle after 50 iterations") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const torch::Tensor w = oracle::gapped_matrix(8, seed);
      auto state = blocks::SpectralNormState::init(8, 8, torch::kFloat64);
      state.power_iterations = 50;
      blocks::power_iterate(w, state);
      CHECK(std::abs(blocks::sigma_estimate(w, state).item<double>() - oracle::largest_singular_value(w)) < 1e-4);
    }
  }
  SUBCASE("gaussian 8x8 converge with enough iterations") {
    // The error decays like (s2/s1)^(2k), so near-degenerate tops need more steps.
    for (int seed = 0; seed < 20; ++seed) {
      torch::manual_seed(seed);
      const torch::Tensor w = torch::randn({8, 8}, torch::kFloat64);
      auto state = blocks::SpectralNormState::init(8, 8, torch::kFloat64);
      state.power_iterations = 2000;
      blocks::power_iterate(w, state);
      CHECK(std::abs(blocks::sigma_estimate(w, state).item<double>() - oracle::largest_singular_value(w)) < 1e-4);
    }
  }
  SUBCASE("zero weight stays finite") {
    auto state = blocks::SpectralNormState::init(3, 3);
    CHECK(torch::isfinite(blocks::spectral_normalize(torch::zeros({3, 3}), state)).all().item<bool>());
  }
}

TEST_CASE("SNConv2d") {
  torch::manual_seed(3);
  blocks::SNConv2d conv(4, 6, 3, 1, 1);
  const torch::Tensor x = torch::randn({1, 4, 8, 8});

  SUBCASE("power iteration only advances in training mode") {
    conv->eval();
    const torch::Tensor u0 = conv->u.clone();
    conv(x);
    CHECK(torch::equal(conv->u, u0));
    conv->train();
    conv(x);
    CHECK_FALSE(torch::equal(conv->u, u0));
    CHECK(conv->u.norm().item<float>() == doctest::Approx(1.0f));
  }
  SUBCASE("normalized weight has spectral norm near one after warm-up") {
    conv->train();
    for (int i = 0; i < 30; ++i) conv(x);
    const torch::Tensor w = conv->normalized_weight().detach().reshape({6, -1});
    CHECK(oracle::largest_singular_value(w) <= 1.0 + 1e-3);
  }
  SUBCASE("buffers are part of the module state") {
    const auto buffers = conv->named_buffers();
    CHECK(buffers.contains("u"));
    CHECK(buffers.contains("v"));
  }
}
