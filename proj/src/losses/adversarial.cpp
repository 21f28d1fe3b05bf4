#include <sstream>

#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::losses {

void AdversarialTargets::validate() const {
  if (!(0.0 <= fake && fake < valid && valid <= 1.0)) throw ContractError("targets must satisfy 0 <= F < V <= 1");
}

torch::Tensor bce_logits(const torch::Tensor& logits, double target) {
  if (target < 0.0 || target > 1.0) throw ContractError("bce target must lie in [0, 1]");
  if (!torch::isfinite(logits).all().item<bool>()) throw NumericalError("bce_logits: non-finite logits");
  // max(x,0) - x t + log(1 + exp(-|x|)) is the overflow-free form.
  return (logits.clamp_min(0.0) - logits * target + torch::log1p(torch::exp(-logits.abs()))).mean();
}

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream msg;
    msg << "logit maps differ in shape: " << a.sizes() << " vs " << b.sizes();
    throw ShapeError(msg.str());
  }
}

}  // namespace

torch::Tensor gan_generator_adv(const torch::Tensor& fake_logits, const torch::Tensor& real_logits,
                                const AdversarialTargets& targets) {
  targets.validate();
  require_same_shape(fake_logits, real_logits);
  return bce_logits(fake_logits - real_logits, targets.valid);
}

DiscriminatorLoss discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits,
                                     const AdversarialTargets& targets) {
  targets.validate();
  require_same_shape(real_logits, fake_logits);
  DiscriminatorLoss out;
  out.real = bce_logits(real_logits - fake_logits, targets.valid);
  out.fake = bce_logits(fake_logits - real_logits, targets.fake);
  out.total = 0.5 * (out.real + out.fake);
  return out;
}

}  // namespace vtf::losses
