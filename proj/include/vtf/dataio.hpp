#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vtf/core.hpp"

namespace vtf::dataio {

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::string id;
  std::filesystem::path visible;  // resolved against Manifest::root
  std::filesystem::path thermal;
  Split split = Split::kTrain;
  std::string subject;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  size_t count(Split split) const;
  std::vector<ManifestEntry> select(Split split) const;
};

/// Reads and validates a manifest: non-empty, unique ids, known splits,
/// and both images of every entry present on disk.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// 8-bit PNG I/O. Grayscale files are replicated to three channels on read.
core::ImageTensor read_png(const std::filesystem::path& path);
void write_png(const core::ImageTensor& image, const std::filesystem::path& path);

/// Bilinear resize (half-pixel centres) to `size` x `size`.
core::ImageTensor resize(const core::ImageTensor& image, int64_t size);

/// Decodes, resizes and normalizes one visible/thermal pair.
std::pair<core::ImageTensor, core::ImageTensor> load_pair(const ManifestEntry& entry, int64_t resolution);

/// Per-axis jitter strengths. Brightness, contrast and saturation multipliers
/// are drawn from [max(0, 1 - f), 1 + f]; the hue shift from [-f, f].
struct JitterParams {
  double brightness = 0.5;
  double contrast = 0.75;
  double saturation = 1.5;
  double hue = 0.5;

  static JitterParams none() { return {0.0, 0.0, 0.0, 0.0}; }
  void validate() const;
};

core::ImageTensor color_jitter(const core::ImageTensor& image, const JitterParams& params, core::RunSeed seed);

/// Batched jitter: sample i draws its factors from seed.derive(i).
torch::Tensor color_jitter_batch(const torch::Tensor& batch, const JitterParams& params, core::RunSeed seed);

/// Luma Y = 0.299 R + 0.587 G + 0.114 B, replicated to three channels unless
/// `keep_single_channel`.
core::ImageTensor to_grayscale(const core::ImageTensor& image, bool keep_single_channel = false);
torch::Tensor luminance(const torch::Tensor& rgb_batch);

struct SyntheticFaceParams {
  int64_t image_size = 64;
  // Skin tone is interpolated between these two RGB anchors (byte scale).
  std::array<double, 3> skin_light{236.0, 200.0, 170.0};
  std::array<double, 3> skin_dark{120.0, 80.0, 55.0};
  double face_half_width_min = 0.55, face_half_width_max = 0.70;
  double face_half_height_min = 0.70, face_half_height_max = 0.85;
  double eye_spacing_min = 0.25, eye_spacing_max = 0.38;  // fraction of face half width
  double eye_radius_min = 0.06, eye_radius_max = 0.09;
  double nose_radius_min = 0.07, nose_radius_max = 0.11;
  double mouth_half_width_min = 0.15, mouth_half_width_max = 0.25;
  // Thermal red channel is confined to [thermal_min, thermal_max].
  double thermal_min = 30.0;
  double thermal_max = 230.0;
  // Relative temperature anchors in [0, 1] before mapping to the byte range.
  double background_level = 0.05;
  double skin_level = 0.55;
  double periorbital_level = 0.95;
  double nose_tip_level = 0.25;

  void validate() const;
};

/// Geometry-aligned visible/thermal pair; both unit-signed, 3 x S x S.
std::pair<core::ImageTensor, core::ImageTensor> synth_pair(const SyntheticFaceParams& params, core::RunSeed seed);

/// A fully materialised paired set, stacked as [N,3,H,W] tensors.
struct PairedSet {
  torch::Tensor visible;
  torch::Tensor thermal;
  std::vector<std::string> ids;

  int64_t size() const { return visible.defined() ? visible.size(0) : 0; }
};

/// Loads a split, optionally on several worker threads. The result is
/// ordered as in the manifest regardless of `workers`.
PairedSet load_split(const Manifest& manifest, Split split, int64_t resolution, int workers = 1);

PairedSet synth_set(const SyntheticFaceParams& params, int64_t count, core::RunSeed seed);

/// Seeded shuffle of [0, n) cut into batches of `batch_size` (last batch may be short).
std::vector<std::vector<int64_t>> epoch_batches(int64_t n, int64_t batch_size, core::RunSeed seed);

/// Writes `count` synthetic pairs as PNGs plus manifest.json under `out_dir`.
/// The last ceil(count * test_fraction) pairs form the test split.
Manifest write_synthetic_dataset(const SyntheticFaceParams& params, int64_t count, core::RunSeed seed,
                                 double test_fraction, const std::filesystem::path& out_dir);

}  // namespace vtf::dataio
