#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "vtf/core.hpp"
#include "vtf/dataio.hpp"
#include "vtf/diffusion.hpp"
#include "vtf/harness/config.hpp"
#include "vtf/losses.hpp"
#include "vtf/models.hpp"

namespace vtf::harness {

/// One row of the loss trace. Terms that were not computed stay empty.
struct StepRecord {
  int64_t step = 0;  // 1-based, global across epochs
  int64_t epoch = 0;
  std::optional<double> gan, perc, temp, patch, fft;
  std::optional<double> d_real, d_fake;
  std::optional<double> generator_total;
  std::optional<double> l1;             // mean |B̂ - B| of the generator-phase output
  std::optional<double> diffusion_mse;  // noise-prediction loss
};

std::string csv_header(Variant v);
std::string csv_row(const StepRecord& r, Variant v);

struct CheckpointManifest {
  int64_t epoch = 0;
  int64_t step = 0;
  std::filesystem::path dir;
  std::filesystem::path params;  // params.bin holding G and D, or the denoiser
  std::filesystem::path optimizer;
  std::string config_hash;
  nlohmann::json metrics = nlohmann::json::object();  // per-epoch loss means

  nlohmann::json to_json() const;
};

/// Reads meta.json of a checkpoint directory and checks that the files it refers to exist.
CheckpointManifest read_checkpoint(const std::filesystem::path& dir);

/// Loss scaling for mixed precision. When disabled it only backpropagates,
/// checks gradients and steps.
class DynamicGradScaler {
 public:
  explicit DynamicGradScaler(bool enabled, double init_scale = 65536.0, double growth = 2.0, double backoff = 0.5,
                             int64_t growth_interval = 2000);

  /// Backpropagates `loss` and steps `optimizer` unless the scaled gradients
  /// overflowed. Returns whether the step was applied. Non-finite gradients
  /// without scaling raise TrainingError naming `what`.
  bool step(const torch::Tensor& loss, torch::optim::Optimizer& optimizer, const std::string& what);

  double scale() const { return scale_; }
  nlohmann::json state() const;
  void restore(const nlohmann::json& j);

 private:
  bool enabled_;
  double scale_, growth_, backoff_;
  int64_t growth_interval_, good_steps_ = 0;
};

/// The adversarial min-max protocol: one generator phase then
/// `d_steps_per_g` discriminator phases per batch.
class GanTrainer {
 public:
  explicit GanTrainer(const TrainConfig& config);

  StepRecord step(const torch::Tensor& visible, const torch::Tensor& thermal, int64_t global_step);

  /// Generator phase alone: θ^D is frozen, every L_G term of the variant is
  /// computed and θ^G is updated. Returns the generated batch (detached).
  torch::Tensor generator_phase(const torch::Tensor& visible, const torch::Tensor& thermal, int64_t global_step,
                                StepRecord& record);
  /// Discriminator phase on a detached generated batch.
  void discriminator_phase(const torch::Tensor& visible, const torch::Tensor& thermal, const torch::Tensor& generated,
                           StepRecord& record);

  models::Generator& generator() { return generator_; }
  models::Discriminator& discriminator() { return discriminator_; }
  torch::optim::Adam& generator_optimizer() { return *g_optim_; }
  torch::optim::Adam& discriminator_optimizer() { return *d_optim_; }
  const TrainConfig& config() const { return config_; }

  CheckpointManifest save(const std::filesystem::path& dir, int64_t epoch, int64_t step,
                          const nlohmann::json& metrics = nlohmann::json::object()) const;
  /// Restores weights, optimizer and scaler state; returns the checkpoint's manifest.
  CheckpointManifest load(const std::filesystem::path& dir);

 private:
  TrainConfig config_;
  core::RunSeed seed_;
  models::Generator generator_{nullptr};
  models::Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> g_optim_, d_optim_;
  std::shared_ptr<losses::PerceptualExtractor> perceptual_;
  DynamicGradScaler g_scaler_, d_scaler_;
};

class DiffusionTrainer {
 public:
  explicit DiffusionTrainer(const TrainConfig& config);

  StepRecord step(const torch::Tensor& visible, const torch::Tensor& thermal, int64_t global_step);

  diffusion::Denoiser& denoiser() { return denoiser_; }
  const diffusion::NoiseSchedule& schedule() const { return schedule_; }
  const TrainConfig& config() const { return config_; }

  CheckpointManifest save(const std::filesystem::path& dir, int64_t epoch, int64_t step,
                          const nlohmann::json& metrics = nlohmann::json::object()) const;
  CheckpointManifest load(const std::filesystem::path& dir);

 private:
  TrainConfig config_;
  core::RunSeed seed_;
  diffusion::Denoiser denoiser_{nullptr};
  diffusion::NoiseSchedule schedule_;
  std::unique_ptr<torch::optim::Adam> optim_;
  DynamicGradScaler scaler_;
};

/// Train / test pairs for a config: the manifest splits when `manifest` is
/// set, otherwise seeded synthetic sets. Diffusion variants get single-channel
/// luminance images unless `allow_color`.
struct TrainingData {
  dataio::PairedSet train;
  dataio::PairedSet test;
};
TrainingData load_training_data(const TrainConfig& config);

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const CheckpointManifest&)> on_checkpoint;
};

struct TrainResult {
  std::vector<StepRecord> trace;
  std::vector<CheckpointManifest> checkpoints;
  std::string config_hash;
  uint64_t data_order_fingerprint = 0;  // hash of every batch's sample indices, in order
  int64_t last_epoch = 0;
  int64_t last_step = 0;
  std::shared_ptr<GanTrainer> gan;             // set for GAN variants
  std::shared_ptr<DiffusionTrainer> diffusion;  // set for vtf_diff
};

/// Runs the configured variant. With `out_dir` set, writes config.json,
/// losses.csv and per-epoch checkpoints; `resume_from` continues a run.
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});

/// Mean of `values` over a centred window, clipped at the ends.
std::vector<double> smooth(const std::vector<double>& values, int64_t window);

}  // namespace vtf::harness
