#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::losses {

void LossWeights::validate() const {
  if (gan < 0 || perc < 0 || temp < 0 || patch < 0 || fft < 0) throw ContractError("loss weights must be >= 0");
}

torch::Tensor total_generator_loss(const GeneratorLossParts& parts, GanVariant variant, const LossWeights& weights) {
  weights.validate();
  struct Term {
    const char* name;
    const torch::Tensor& value;
    double weight;
  };
  std::vector<Term> terms{{"L_GAN", parts.gan, weights.gan},
                          {"L_perc", parts.perc, weights.perc},
                          {"L_temp", parts.temp, weights.temp},
                          {"L_patch", parts.patch, weights.patch}};
  if (variant != GanVariant::kBase) {
    if (!parts.fft.defined()) throw TrainingError("L_FFT is required by the FFT variants");
    terms.push_back({"L_FFT", parts.fft, weights.fft});
  }

  torch::Tensor total;
  for (const Term& t : terms) {
    if (!t.value.defined()) continue;
    if (!torch::isfinite(t.value).all().item<bool>()) {
      throw TrainingError(std::string("non-finite generator loss term ") + t.name);
    }
    torch::Tensor contribution = t.value * t.weight;
    total = total.defined() ? total + contribution : contribution;
  }
  if (!total.defined()) return torch::zeros({});
  return total;
}

}  // namespace vtf::losses
