#include "vtf/core.hpp"

#include <cmath>
#include <sstream>

#include "vtf/errors.hpp"

namespace vtf::core {

std::string_view to_string(PixelRange range) {
  return range == PixelRange::kByte ? "byte" : "unit_signed";
}

ImageTensor::ImageTensor(torch::Tensor data, PixelRange range) : data_(std::move(data)), range_(range) {
  if (data_.dim() != 3) {
    std::ostringstream msg;
    msg << "ImageTensor expects [C,H,W], got " << data_.sizes();
    throw ShapeError(msg.str());
  }
  if (data_.size(1) <= 0 || data_.size(2) <= 0) {
    throw ShapeError("ImageTensor height and width must be positive");
  }
}

bool ImageTensor::in_range() const {
  const double lo = range_ == PixelRange::kByte ? 0.0 : -1.0;
  const double hi = range_ == PixelRange::kByte ? 255.0 : 1.0;
  return data_.ge(lo).all().item<bool>() && data_.le(hi).all().item<bool>();
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RunSeed RunSeed::derive(uint64_t stream) const { return RunSeed{mix64(value ^ mix64(stream + 1))}; }

namespace {

void require_range(const ImageTensor& image, PixelRange expected, const char* op) {
  if (image.range() != expected) {
    std::ostringstream msg;
    msg << op << " expects a " << to_string(expected) << " image, got " << to_string(image.range());
    throw ContractError(msg.str());
  }
}

}  // namespace

ImageTensor normalize(const ImageTensor& image) {
  require_range(image, PixelRange::kByte, "normalize");
  return {image.data().to(torch::kFloat32) / 127.5 - 1.0, PixelRange::kUnitSigned};
}

ImageTensor denormalize(const ImageTensor& image) {
  require_range(image, PixelRange::kUnitSigned, "denormalize");
  return {((image.data() + 1.0) * 127.5).clamp(0.0, 255.0), PixelRange::kByte};
}

torch::Tensor to_bytes(const ImageTensor& image) {
  const ImageTensor bytes = image.range() == PixelRange::kByte ? image : denormalize(image);
  // torch::round rounds half to even.
  return torch::round(bytes.data()).clamp(0, 255).to(torch::kUInt8);
}

int64_t grid_side(int64_t count) {
  if (count <= 0) throw ShapeError("patch count must be positive");
  const auto side = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (side * side != count) {
    throw ShapeError("patch count " + std::to_string(count) + " is not a perfect square");
  }
  return side;
}

torch::Tensor patchify(const torch::Tensor& batch, int64_t count) {
  if (batch.dim() != 4) throw ShapeError("patchify expects [N,C,H,W]");
  const int64_t side = grid_side(count);
  const int64_t n = batch.size(0), c = batch.size(1), h = batch.size(2), w = batch.size(3);
  if (h % side != 0 || w % side != 0) {
    std::ostringstream msg;
    msg << "image " << h << "x" << w << " is not divisible into a " << side << "x" << side << " grid";
    throw ShapeError(msg.str());
  }
  const int64_t ph = h / side, pw = w / side;
  return batch.reshape({n, c, side, ph, side, pw}).permute({0, 2, 4, 1, 3, 5}).reshape({n, count, c, ph, pw});
}

PatchGrid split_patches(const ImageTensor& image, int64_t count) {
  const torch::Tensor tiles = patchify(image.data().unsqueeze(0), count).squeeze(0);
  PatchGrid grid;
  grid.rows = grid.cols = grid_side(count);
  grid.source_shape = {image.channels(), image.height(), image.width()};
  grid.patches.reserve(static_cast<size_t>(count));
  for (int64_t k = 0; k < count; ++k) {
    grid.patches.emplace_back(tiles[k].contiguous(), image.range());
  }
  return grid;
}

ImageTensor reassemble(const PatchGrid& grid) {
  if (grid.patches.empty() || static_cast<int64_t>(grid.patches.size()) != grid.rows * grid.cols) {
    throw ShapeError("patch grid is incomplete");
  }
  std::vector<torch::Tensor> rows;
  rows.reserve(static_cast<size_t>(grid.rows));
  for (int64_t r = 0; r < grid.rows; ++r) {
    std::vector<torch::Tensor> cols;
    for (int64_t c = 0; c < grid.cols; ++c) {
      cols.push_back(grid.patches[static_cast<size_t>(r * grid.cols + c)].data());
    }
    rows.push_back(torch::cat(cols, 2));
  }
  return {torch::cat(rows, 1), grid.patches.front().range()};
}

ImageTensor red_channel(const ImageTensor& image) {
  if (image.channels() < 1) throw ShapeError("red_channel needs at least one channel");
  return {image.data().narrow(0, 0, 1), image.range()};
}

torch::Tensor as_batch(const torch::Tensor& x) {
  if (x.dim() == 3) return x.unsqueeze(0);
  if (x.dim() == 4) return x;
  std::ostringstream msg;
  msg << "expected [C,H,W] or [N,C,H,W], got " << x.sizes();
  throw ShapeError(msg.str());
}

}  // namespace vtf::core
