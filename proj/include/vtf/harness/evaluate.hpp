#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "vtf/dataio.hpp"
#include "vtf/harness/config.hpp"
#include "vtf/harness/train.hpp"
#include "vtf/metrics.hpp"

namespace vtf::harness {

/// visible batch [N,C,H,W] -> generated thermal batch
using GenerateFn = std::function<torch::Tensor(const torch::Tensor&)>;

struct EvalOptions {
  std::string expected_config_hash;  // warn when the checkpoint disagrees
  std::string fid_model;             // TorchScript feature network; empty: random projection
  int64_t batch_size = 8;
  int64_t grid_rows = 8;
  uint64_t sample_seed = 0;          // diffusion sampling
};

/// Scores `generate` on a test set: FID, spectrum MSE, sample grid
/// (real visible | real thermal | generated) and mean spectra under `out_dir`
/// (skipped when empty).
metrics::MetricsReport evaluate_generator(const GenerateFn& generate, const dataio::PairedSet& test,
                                          const std::filesystem::path& out_dir, metrics::FeatureExtractor& extractor,
                                          const std::string& config_hash, int64_t batch_size = 8,
                                          int64_t grid_rows = 8);

/// Loads a GAN or diffusion checkpoint, generates every test pair of
/// `manifest` and writes report.json next to the figures.
metrics::MetricsReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                                const std::filesystem::path& out_dir, const EvalOptions& options = {});

/// Generator in eval mode restored from a checkpoint directory.
models::Generator load_generator(const std::filesystem::path& checkpoint);

/// Rows of a sample grid, each [C,H,3W]; returns the stacked [C,rows*H,3W] image.
torch::Tensor sample_grid(const torch::Tensor& visible, const torch::Tensor& thermal, const torch::Tensor& generated,
                          int64_t rows);

struct AblationRow {
  std::string name;  // "full", "-temp", "-patch"
  std::set<std::string> ablate;
  metrics::MetricsReport report;
  std::map<std::string, double> final_losses;  // mean over the last 10 steps
  uint64_t data_order_fingerprint = 0;
  int64_t patch_loss_evaluations = 0;  // tilings done by L_patch during the run
  int64_t steps = 0;
};

struct AblationReport {
  std::string variant;
  std::vector<AblationRow> rows;

  const AblationRow& row(const std::string& name) const;
  /// Model | FID | DBCNN | MSE SPEC, one line per row.
  std::string markdown() const;
  nlohmann::json to_json() const;
};

/// Trains {full, -temp, -patch} from `base` with identical seeds and scores each on the test set.
AblationReport ablate(const TrainConfig& base, const TrainHooks& hooks = {});

}  // namespace vtf::harness
