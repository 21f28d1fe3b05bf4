#pragma once

#include <torch/torch.h>

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace vtf::metrics {

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int64_t n = 0;
};

/// Maps a batch of unit-signed images [N,C,H,W] to feature vectors [N,d].
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual torch::Tensor embed(const torch::Tensor& images) = 0;
  virtual std::string name() const = 0;
};

/// Fixed-seed random conv features, globally pooled and randomly projected.
class RandomProjectionFeatures : public FeatureExtractor {
 public:
  explicit RandomProjectionFeatures(uint64_t seed = 0xf1d, int64_t dim = 64);
  torch::Tensor embed(const torch::Tensor& images) override;
  std::string name() const override { return "random-projection"; }

 private:
  std::vector<torch::Tensor> weights_;
  torch::Tensor projection_;
};

/// TorchScript network returning [N,d] pooled features.
class ScriptedFeatures : public FeatureExtractor {
 public:
  explicit ScriptedFeatures(const std::filesystem::path& module_path);
  torch::Tensor embed(const torch::Tensor& images) override;
  std::string name() const override { return "scripted"; }

 private:
  struct Holder;
  std::shared_ptr<Holder> holder_;
};

std::shared_ptr<FeatureExtractor> make_feature_extractor(const std::filesystem::path& module_path,
                                                         uint64_t seed = 0xf1d);

GaussianStats extract_stats(const torch::Tensor& images, FeatureExtractor& extractor, int64_t batch_size = 32);
GaussianStats stats_from_features(const Eigen::MatrixXd& features);

/// Trace of the principal square root of sigma1 * sigma2, computed through the
/// symmetric form sqrt(sqrt(S1) S2 sqrt(S1)).
double trace_sqrt_product(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), clamped at zero.
double fid(const GaussianStats& a, const GaussianStats& b);

/// Centered log(1 + |DFT|) of the luminance, on the byte scale. Returns [H,W] float64.
torch::Tensor magnitude_spectrum(const torch::Tensor& image);

/// Zero-mean, unit-variance copy (mean removal only when the variance vanishes).
torch::Tensor standardize(const torch::Tensor& x);

/// Mean over pairs of the per-pixel MSE between standardized spectra.
double mse_spec(const torch::Tensor& generated, const torch::Tensor& real);

/// Writes the spectrum as an 8-bit grayscale PNG, min-max scaled.
void write_spectrum_png(const torch::Tensor& spectrum, const std::filesystem::path& path);

struct MetricsReport {
  double fid = 0.0;
  double mse_spec = 0.0;
  std::optional<double> dbcnn;
  std::string config_hash;
  int64_t n_images = 0;
  nlohmann::json meta = nlohmann::json::object();

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// Throws if `j` does not follow the report schema.
void validate_report_json(const nlohmann::json& j);

/// FID and spectrum MSE between two equally sized image sets.
MetricsReport score_sets(const torch::Tensor& generated, const torch::Tensor& real, FeatureExtractor& extractor,
                         const std::string& config_hash = "");

}  // namespace vtf::metrics
