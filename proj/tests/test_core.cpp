#include "testing.hpp"

#include "vtf/core.hpp"
#include "vtf/errors.hpp"

using namespace vtf;
using core::ImageTensor;
using core::PixelRange;

TEST_CASE("normalize maps the byte endpoints onto [-1, 1]") {
  const ImageTensor bytes(torch::tensor({0.0f, 127.5f, 255.0f}).view({1, 1, 3}), PixelRange::kByte);
  const ImageTensor unit = core::normalize(bytes);
  CHECK(unit.range() == PixelRange::kUnitSigned);
  CHECK(unit.data()[0][0][0].item<float>() == doctest::Approx(-1.0));
  CHECK(unit.data()[0][0][1].item<float>() == doctest::Approx(0.0));
  CHECK(unit.data()[0][0][2].item<float>() == doctest::Approx(1.0));
}

TEST_CASE("every byte value survives normalize -> denormalize -> to_bytes") {
  const torch::Tensor all = torch::arange(256, torch::kFloat32).view({1, 16, 16});
  const ImageTensor back = core::denormalize(core::normalize({all, PixelRange::kByte}));
  CHECK(torch::equal(core::to_bytes(back), all.to(torch::kUInt8)));
}

TEST_CASE("range tags are enforced") {
  const ImageTensor unit(torch::zeros({3, 4, 4}), PixelRange::kUnitSigned);
  CHECK_THROWS_AS(core::normalize(unit), ContractError);
  const ImageTensor bytes(torch::zeros({3, 4, 4}), PixelRange::kByte);
  CHECK_THROWS_AS(core::denormalize(bytes), ContractError);
  CHECK_THROWS_AS(ImageTensor(torch::zeros({4, 4}), PixelRange::kByte), ShapeError);
}

TEST_CASE("in_range reflects the tag bounds") {
  CHECK(ImageTensor(torch::full({1, 2, 2}, 1.0), PixelRange::kUnitSigned).in_range());
  CHECK_FALSE(ImageTensor(torch::full({1, 2, 2}, 1.01), PixelRange::kUnitSigned).in_range());
  CHECK(ImageTensor(torch::full({1, 2, 2}, 200.0), PixelRange::kByte).in_range());
}

TEST_CASE("to_bytes rounds half to even") {
  const ImageTensor x(torch::tensor({0.5f, 1.5f, 2.5f, 254.5f}).view({1, 1, 4}), PixelRange::kByte);
  const torch::Tensor b = core::to_bytes(x);
  CHECK(b[0][0][0].item<uint8_t>() == 0);
  CHECK(b[0][0][1].item<uint8_t>() == 2);
  CHECK(b[0][0][2].item<uint8_t>() == 2);
  CHECK(b[0][0][3].item<uint8_t>() == 254);
}

TEST_CASE("derived seeds are deterministic and distinct") {
  const core::RunSeed root{42};
  CHECK(root.derive(1).value == root.derive(1).value);
  CHECK(root.derive(1).value != root.derive(2).value);
  CHECK(root.derive(1).derive(0).value != root.derive(0).derive(1).value);
  CHECK(core::RunSeed{1}.derive(0).value != core::RunSeed{2}.derive(0).value);
}

TEST_CASE("grid_side accepts perfect squares only") {
  CHECK(core::grid_side(16) == 4);
  CHECK(core::grid_side(1) == 1);
  CHECK_THROWS_AS(core::grid_side(15), ShapeError);
  CHECK_THROWS_AS(core::grid_side(0), ShapeError);
}

TEST_CASE("split_patches is row-major and reassembles exactly") {
  const torch::Tensor x = torch::arange(3 * 8 * 8, torch::kFloat32).view({3, 8, 8});
  const ImageTensor img(x, PixelRange::kByte);
  const core::PatchGrid grid = core::split_patches(img, 16);
  REQUIRE(grid.patches.size() == 16);
  CHECK(grid.rows == 4);
  // Patch 1 is the top row, second column: pixels (0..1, 2..3).
  CHECK(torch::equal(grid.patches[1].data(), x.slice(1, 0, 2).slice(2, 2, 4)));
  // Patch 4 starts the second row.
  CHECK(torch::equal(grid.patches[4].data(), x.slice(1, 2, 4).slice(2, 0, 2)));
  CHECK(torch::equal(core::reassemble(grid).data(), x));
  CHECK_THROWS_AS(core::split_patches(ImageTensor(torch::zeros({1, 6, 6}), PixelRange::kByte), 16), ShapeError);
}

TEST_CASE("patchify agrees with split_patches for every batch element") {
  const torch::Tensor batch = torch::randn({2, 3, 12, 12});
  const torch::Tensor tiles = core::patchify(batch, 9);
  CHECK(tiles.sizes() == torch::IntArrayRef({2, 9, 3, 4, 4}));
  for (int64_t n = 0; n < 2; ++n) {
    const auto grid = core::split_patches(ImageTensor(batch[n], PixelRange::kUnitSigned), 9);
    for (int64_t k = 0; k < 9; ++k) CHECK(torch::equal(tiles[n][k], grid.patches[static_cast<size_t>(k)].data()));
  }
}

TEST_CASE("red_channel keeps channel 0") {
  const torch::Tensor x = torch::stack({torch::full({2, 2}, 1.0), torch::full({2, 2}, 2.0), torch::full({2, 2}, 3.0)});
  const ImageTensor red = core::red_channel(ImageTensor(x, PixelRange::kByte));
  CHECK(red.channels() == 1);
  CHECK(red.data().eq(1.0).all().item<bool>());
}
