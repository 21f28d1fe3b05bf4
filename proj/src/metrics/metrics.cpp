#include "vtf/metrics.hpp"

#include <torch/script.h>

#include <cmath>

#include "vtf/core.hpp"
#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"

namespace vtf::metrics {

namespace F = torch::nn::functional;

RandomProjectionFeatures::RandomProjectionFeatures(uint64_t seed, int64_t dim) {
  torch::NoGradGuard no_grad;
  auto gen = at::detail::createCPUGenerator(seed);
  int64_t in = 3, total = 0;
  for (int64_t out : {16, 32, 64}) {
    weights_.push_back(torch::randn({out, in, 3, 3}, gen, torch::kFloat64) * std::sqrt(2.0 / (9.0 * in)));
    in = out;
    total += out;
  }
  projection_ = torch::randn({total, dim}, gen, torch::kFloat64) / std::sqrt(static_cast<double>(total));
}

torch::Tensor RandomProjectionFeatures::embed(const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  torch::Tensor x = core::as_batch(images).to(torch::kFloat64);
  if (x.size(1) == 1) x = x.expand({-1, 3, -1, -1});
  if (x.size(1) != 3) throw ShapeError("feature extractor expects 1 or 3 channels");
  std::vector<torch::Tensor> pooled;
  for (size_t l = 0; l < weights_.size(); ++l) {
    if (l > 0) x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2).ceil_mode(true));
    x = torch::relu(F::conv2d(x, weights_[l], F::Conv2dFuncOptions().padding(1)));
    pooled.push_back(x.mean({2, 3}));
  }
  return torch::matmul(torch::cat(pooled, 1), projection_);
}

struct ScriptedFeatures::Holder {
  torch::jit::script::Module module;
};

ScriptedFeatures::ScriptedFeatures(const std::filesystem::path& module_path) : holder_(std::make_shared<Holder>()) {
  try {
    holder_->module = torch::jit::load(module_path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot load feature network " + module_path.string() + ": " + e.what_without_backtrace());
  }
  holder_->module.eval();
}

torch::Tensor ScriptedFeatures::embed(const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  torch::Tensor x = core::as_batch(images);
  if (x.size(1) == 1) x = x.expand({-1, 3, -1, -1});
  torch::Tensor out = holder_->module.forward({x}).toTensor();
  return out.flatten(1).to(torch::kFloat64);
}

std::shared_ptr<FeatureExtractor> make_feature_extractor(const std::filesystem::path& module_path, uint64_t seed) {
  if (!module_path.empty() && std::filesystem::is_regular_file(module_path)) {
    return std::make_shared<ScriptedFeatures>(module_path);
  }
  return std::make_shared<RandomProjectionFeatures>(seed);
}

GaussianStats stats_from_features(const Eigen::MatrixXd& features) {
  const auto n = features.rows();
  if (n < 2) throw ContractError("feature statistics need at least two samples");
  GaussianStats s;
  s.n = n;
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return s;
}

GaussianStats extract_stats(const torch::Tensor& images, FeatureExtractor& extractor, int64_t batch_size) {
  const torch::Tensor x = core::as_batch(images);
  if (x.size(0) < 2) throw ContractError("extract_stats needs at least two images");
  std::vector<torch::Tensor> chunks;
  for (int64_t start = 0; start < x.size(0); start += batch_size) {
    chunks.push_back(extractor.embed(x.narrow(0, start, std::min(batch_size, x.size(0) - start))));
  }
  const torch::Tensor feats = torch::cat(chunks, 0).to(torch::kFloat64).contiguous();
  Eigen::MatrixXd m(feats.size(0), feats.size(1));
  auto acc = feats.accessor<double, 2>();
  for (int64_t i = 0; i < feats.size(0); ++i) {
    for (int64_t j = 0; j < feats.size(1); ++j) m(i, j) = acc[i][j];
  }
  return stats_from_features(m);
}

namespace {

constexpr double kEigenDust = 1e-6;

Eigen::VectorXd clipped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver) {
  if (solver.info() != Eigen::Success) throw NumericalError("matrix square root did not converge");
  Eigen::VectorXd lambda = solver.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < 0.0) {
      if (-lambda(i) > kEigenDust * scale) throw NumericalError("covariance is not positive semi-definite");
      lambda(i) = 0.0;
    }
  }
  return lambda;
}

Eigen::MatrixXd symmetric(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

double trace_sqrt_product(const Eigen::MatrixXd& sigma1, const Eigen::MatrixXd& sigma2) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> first(symmetric(sigma1));
  const Eigen::VectorXd l1 = clipped_eigenvalues(first);
  const Eigen::MatrixXd root1 =
      first.eigenvectors() * l1.cwiseSqrt().asDiagonal() * first.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inner(symmetric(root1 * sigma2 * root1),
                                                       Eigen::EigenvaluesOnly);
  return clipped_eigenvalues(inner).cwiseSqrt().sum();
}

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.mu.size() != b.mu.size() || a.sigma.rows() != b.sigma.rows()) {
    throw ShapeError("fid: feature dimensions differ");
  }
  const double mean_term = (a.mu - b.mu).squaredNorm();
  const double value = mean_term + a.sigma.trace() + b.sigma.trace() - 2.0 * trace_sqrt_product(a.sigma, b.sigma);
  return std::max(0.0, value);
}

torch::Tensor magnitude_spectrum(const torch::Tensor& image) {
  torch::Tensor x = image.dim() == 4 ? image.squeeze(0) : image;
  if (x.dim() == 2) x = x.unsqueeze(0);
  if (x.dim() != 3) throw ShapeError("magnitude_spectrum expects one image");
  x = x.to(torch::kFloat64);
  torch::Tensor gray = x.size(0) == 3 ? dataio::luminance(x) : x.mean(0);
  torch::Tensor bytes = (gray + 1.0) * 127.5;
  torch::Tensor spectrum = torch::fft::fftshift(torch::fft::fft2(bytes));
  return torch::log1p(torch::abs(spectrum));
}

torch::Tensor standardize(const torch::Tensor& x) {
  torch::Tensor centered = x - x.mean();
  const double sd = std::sqrt(centered.pow(2).mean().item<double>());
  return sd > 1e-12 ? centered / sd : centered;
}

double mse_spec(const torch::Tensor& generated, const torch::Tensor& real) {
  const torch::Tensor g = core::as_batch(generated), r = core::as_batch(real);
  if (!g.sizes().equals(r.sizes())) throw ShapeError("mse_spec: sets differ in length or shape");
  double total = 0.0;
  for (int64_t i = 0; i < g.size(0); ++i) {
    total += (standardize(magnitude_spectrum(g[i])) - standardize(magnitude_spectrum(r[i]))).pow(2).mean().item<double>();
  }
  return total / static_cast<double>(g.size(0));
}

void write_spectrum_png(const torch::Tensor& spectrum, const std::filesystem::path& path) {
  torch::Tensor s = spectrum.to(torch::kFloat64);
  const double lo = s.min().item<double>(), hi = s.max().item<double>();
  torch::Tensor unit = hi > lo ? (s - lo) / (hi - lo) : torch::zeros_like(s);
  dataio::write_png({(unit * 255.0).unsqueeze(0).to(torch::kFloat32), core::PixelRange::kByte}, path);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = {{"fid", fid},
                      {"mse_spec", mse_spec},
                      {"dbcnn", nullptr},
                      {"config_hash", config_hash},
                      {"n_images", n_images},
                      {"meta", meta}};
  if (dbcnn) j["dbcnn"] = *dbcnn;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  validate_report_json(j);
  MetricsReport r;
  r.fid = j.at("fid");
  r.mse_spec = j.at("mse_spec");
  if (!j.at("dbcnn").is_null()) r.dbcnn = j.at("dbcnn").get<double>();
  r.config_hash = j.at("config_hash");
  r.n_images = j.at("n_images");
  if (j.contains("meta")) r.meta = j.at("meta");
  return r;
}

void validate_report_json(const nlohmann::json& j) {
  auto fail = [](const std::string& what) { throw DataError("metrics report: " + what); };
  if (!j.is_object()) fail("not an object");
  for (const char* key : {"fid", "mse_spec"}) {
    if (!j.contains(key) || !j[key].is_number()) fail(std::string(key) + " must be a number");
  }
  if (!j.contains("dbcnn") || !(j["dbcnn"].is_null() || j["dbcnn"].is_number())) fail("dbcnn must be number|null");
  if (!j.contains("config_hash") || !j["config_hash"].is_string()) fail("config_hash must be a string");
  if (!j.contains("n_images") || !j["n_images"].is_number_integer()) fail("n_images must be an integer");
  if (j.contains("meta") && !j["meta"].is_object()) fail("meta must be an object");
}

MetricsReport score_sets(const torch::Tensor& generated, const torch::Tensor& real, FeatureExtractor& extractor,
                         const std::string& config_hash) {
  const torch::Tensor g = core::as_batch(generated), r = core::as_batch(real);
  if (!g.sizes().equals(r.sizes())) throw ShapeError("score_sets: generated and real sets differ in shape");
  MetricsReport report;
  report.fid = fid(extract_stats(g, extractor), extract_stats(r, extractor));
  report.mse_spec = mse_spec(g, r);
  report.config_hash = config_hash;
  report.n_images = g.size(0);
  report.meta = {{"feature_extractor", extractor.name()},
                 {"spectrum", "log(1+|DFT|) of byte-scale luminance, centered, per-image standardized"},
                 {"dbcnn", "not computed"}};
  return report;
}

}  // namespace vtf::metrics
