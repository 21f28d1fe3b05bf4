#include <torch/script.h>

#include <cmath>

#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::losses {

namespace F = torch::nn::functional;

RandomConvExtractor::RandomConvExtractor(uint64_t seed, std::vector<int64_t> widths) {
  if (widths.empty()) throw ContractError("random extractor needs at least one layer");
  torch::NoGradGuard no_grad;
  auto gen = at::detail::createCPUGenerator(seed);
  int64_t in = 3;
  for (int64_t out : widths) {
    const double scale = std::sqrt(2.0 / static_cast<double>(in * 9));
    weights_.push_back(torch::randn({out, in, 3, 3}, gen) * scale);
    biases_.push_back(torch::randn({out}, gen) * 0.1);
    in = out;
  }
}

void RandomConvExtractor::to(torch::ScalarType dtype) {
  for (auto& w : weights_) w = w.to(dtype);
  for (auto& b : biases_) b = b.to(dtype);
}

std::vector<torch::Tensor> RandomConvExtractor::features(const torch::Tensor& images) {
  torch::Tensor x = core::as_batch(images);
  if (x.size(1) == 1) x = x.expand({-1, 3, -1, -1});
  if (x.size(1) != 3) throw ShapeError("perceptual extractor expects 1 or 3 channels");
  if (weights_.front().scalar_type() != x.scalar_type()) to(x.scalar_type());

  std::vector<torch::Tensor> taps;
  for (size_t l = 0; l < weights_.size(); ++l) {
    if (l > 0) x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2));
    x = torch::relu(F::conv2d(x, weights_[l], F::Conv2dFuncOptions().bias(biases_[l]).padding(1)));
    taps.push_back(x);
  }
  return taps;
}

struct ScriptedExtractor::Holder {
  torch::jit::script::Module module;
};

ScriptedExtractor::ScriptedExtractor(const std::filesystem::path& module_path)
    : holder_(std::make_shared<Holder>()), path_(module_path) {
  try {
    holder_->module = torch::jit::load(module_path.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot load feature network " + module_path.string() + ": " + e.what_without_backtrace());
  }
  holder_->module.eval();
  for (auto p : holder_->module.parameters()) p.set_requires_grad(false);
  if (holder_->module.hasattr("tau")) {
    for (const auto& t : holder_->module.attr("tau").toTensorVector()) {
      if (t.lt(0).any().item<bool>()) throw DataError("feature network tau weights must be non-negative");
      tau_.push_back(t.detach());
    }
  }
}

std::vector<torch::Tensor> ScriptedExtractor::features(const torch::Tensor& images) {
  torch::Tensor x = core::as_batch(images);
  if (x.size(1) == 1) x = x.expand({-1, 3, -1, -1});
  const c10::IValue out = holder_->module.forward({x});
  std::vector<torch::Tensor> taps;
  if (out.isTensor()) {
    taps.push_back(out.toTensor());
  } else if (out.isTensorList()) {
    for (const auto& t : out.toTensorVector()) taps.push_back(t);
  } else if (out.isList()) {
    for (const auto& v : out.toListRef()) taps.push_back(v.toTensor());
  } else if (out.isTuple()) {
    for (const auto& v : out.toTupleRef().elements()) taps.push_back(v.toTensor());
  } else {
    throw DataError("feature network must return a tensor or a list/tuple of tensors");
  }
  return taps;
}

std::shared_ptr<PerceptualExtractor> make_perceptual_extractor(const std::filesystem::path& module_path,
                                                               uint64_t seed) {
  if (!module_path.empty() && std::filesystem::is_regular_file(module_path)) {
    return std::make_shared<ScriptedExtractor>(module_path);
  }
  return std::make_shared<RandomConvExtractor>(seed);
}

torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& real,
                              PerceptualExtractor& extractor) {
  if (!generated.sizes().equals(real.sizes())) throw ShapeError("perceptual_loss: shape mismatch");
  const std::vector<torch::Tensor> fg = extractor.features(generated);
  std::vector<torch::Tensor> fr;
  {
    torch::NoGradGuard no_grad;
    fr = extractor.features(real);
  }
  if (fg.size() != fr.size()) throw ShapeError("extractor returned a different number of taps");
  const std::vector<torch::Tensor> tau = extractor.layer_weights();

  auto unit = [](const torch::Tensor& f) { return f / (f.pow(2).sum(1, true) + 1e-12).sqrt(); };
  torch::Tensor total = torch::zeros({}, generated.options());
  for (size_t l = 0; l < fg.size(); ++l) {
    torch::Tensor diff = (unit(fg[l]) - unit(fr[l])).pow(2);
    if (l < tau.size() && tau[l].defined()) diff = diff * tau[l].view({1, -1, 1, 1});
    total = total + diff.sum(1).mean();
  }
  return total;
}

}  // namespace vtf::losses
