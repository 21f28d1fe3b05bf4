#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace vtf::core {

enum class PixelRange { kUnitSigned, kByte };

std::string_view to_string(PixelRange range);

/// A single C x H x W image together with the pixel range its values live in.
///
/// Compute happens in the unit-signed range [-1, 1]; the byte range [0, 255]
/// only appears at file boundaries. Channel order is RGB, so the red channel
/// is index 0.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(torch::Tensor data, PixelRange range);

  const torch::Tensor& data() const { return data_; }
  PixelRange range() const { return range_; }

  int64_t channels() const { return data_.size(0); }
  int64_t height() const { return data_.size(1); }
  int64_t width() const { return data_.size(2); }

  /// True when every value lies within the bounds of range().
  bool in_range() const;

 private:
  torch::Tensor data_;
  PixelRange range_ = PixelRange::kUnitSigned;
};

struct RunSeed {
  uint64_t value = 0;

  /// Derives an independent child seed; used to give each step, epoch and
  /// sample its own stream without sharing generator state.
  RunSeed derive(uint64_t stream) const;
};

/// splitmix64 finaliser.
uint64_t mix64(uint64_t x);

struct PatchGrid {
  std::vector<ImageTensor> patches;
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> source_shape;  // {C, H, W}
};

ImageTensor normalize(const ImageTensor& image);
ImageTensor denormalize(const ImageTensor& image);

/// Rounds half-to-even and converts to uint8. Only used when writing files.
torch::Tensor to_bytes(const ImageTensor& image);

/// Integer square root of `count` if it is a perfect square, otherwise throws.
int64_t grid_side(int64_t count);

PatchGrid split_patches(const ImageTensor& image, int64_t count);
ImageTensor reassemble(const PatchGrid& grid);

/// Batched tiling used in the loss path: [N,C,H,W] -> [N,K,C,H/s,W/s] with
/// patches in row-major order, s = sqrt(K).
torch::Tensor patchify(const torch::Tensor& batch, int64_t count);

ImageTensor red_channel(const ImageTensor& image);

/// Adds a leading batch dimension to a CHW tensor; NCHW passes through.
torch::Tensor as_batch(const torch::Tensor& x);

}  // namespace vtf::core
