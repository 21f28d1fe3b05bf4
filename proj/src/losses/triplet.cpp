#include <random>
#include <sstream>

#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::losses {

namespace {

std::atomic<int64_t> g_patch_loss_evaluations{0};

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream msg;
    msg << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw ShapeError(msg.str());
  }
}

}  // namespace

void TripletSpec::validate() const {
  if (!(margin > 0.0)) throw ContractError("triplet margin must be positive");
}

torch::Tensor l2_distance(const torch::Tensor& x, const torch::Tensor& y) {
  require_same_shape(x, y, "l2_distance");
  return torch::linalg_vector_norm((x - y).flatten(1), 2, std::vector<int64_t>{1});
}

torch::Tensor triplet(const torch::Tensor& anchor, const torch::Tensor& positive, const torch::Tensor& negative,
                      const TripletSpec& spec) {
  spec.validate();
  require_same_shape(anchor, positive, "triplet");
  require_same_shape(anchor, negative, "triplet");
  if (anchor.dim() < 1) throw ShapeError("triplet inputs need a leading sample dimension");
  torch::Tensor hinge = (l2_distance(anchor, positive) - l2_distance(anchor, negative) + spec.margin).clamp_min(0.0);
  return hinge.mean();
}

torch::Tensor draw_negative_patches(int64_t batch, int64_t count, core::RunSeed seed) {
  if (count < 2) throw ShapeError("patch loss needs at least two patches to draw a negative");
  std::mt19937_64 rng(seed.value);
  std::uniform_int_distribution<int64_t> pick(0, count - 2);
  torch::Tensor idx = torch::empty({batch, count}, torch::kInt64);
  auto acc = idx.accessor<int64_t, 2>();
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t k = 0; k < count; ++k) {
      const int64_t j = pick(rng);
      acc[n][k] = j >= k ? j + 1 : j;  // uniform over the other K - 1 patches
    }
  }
  return idx;
}

torch::Tensor patch_loss(const torch::Tensor& generated, const torch::Tensor& real, int64_t count,
                         const torch::Tensor& negatives, const TripletSpec& spec) {
  require_same_shape(generated, real, "patch_loss");
  ++g_patch_loss_evaluations;
  const torch::Tensor gen = core::patchify(core::as_batch(generated), count);
  const torch::Tensor ref = core::patchify(core::as_batch(real), count);
  const int64_t n = gen.size(0);
  if (negatives.size(0) != n || negatives.size(1) != count) throw ShapeError("negative index table has wrong shape");

  std::vector<int64_t> expand_to{n, count};
  for (int64_t d = 2; d < ref.dim(); ++d) expand_to.push_back(ref.size(d));
  std::vector<int64_t> view_as{n, count};
  view_as.resize(static_cast<size_t>(ref.dim()), 1);
  const torch::Tensor index = negatives.to(ref.device()).view(view_as).expand(expand_to);
  const torch::Tensor neg = ref.gather(1, index);

  auto flat = [&](const torch::Tensor& t) { return t.reshape({n * count, -1}); };
  return triplet(flat(gen), flat(ref), flat(neg), spec);
}

torch::Tensor patch_loss(const torch::Tensor& generated, const torch::Tensor& real, int64_t count,
                         core::RunSeed seed, const TripletSpec& spec) {
  const int64_t n = core::as_batch(generated).size(0);
  return patch_loss(generated, real, count, draw_negative_patches(n, count, seed), spec);
}

int64_t patch_loss_evaluations() { return g_patch_loss_evaluations.load(); }

bool TemperatureField::in_range() const {
  return celsius.ge(kMinFaceCelsius).all().item<bool>() && celsius.le(kMaxFaceCelsius).all().item<bool>();
}

TemperatureField temperature_map(const core::ImageTensor& thermal) {
  const core::ImageTensor red = core::red_channel(thermal);
  torch::Tensor bytes = red.range() == core::PixelRange::kByte ? red.data() : (red.data() + 1.0) * 127.5;
  return {kMinFaceCelsius + bytes / 255.0 * (kMaxFaceCelsius - kMinFaceCelsius)};
}

torch::Tensor temperature_map(const torch::Tensor& batch) {
  const torch::Tensor x = core::as_batch(batch);
  if (x.size(1) < 1) throw ShapeError("temperature_map needs a red channel");
  torch::Tensor bytes = (x.narrow(1, 0, 1) + 1.0) * 127.5;
  return kMinFaceCelsius + bytes / 255.0 * (kMaxFaceCelsius - kMinFaceCelsius);
}

torch::Tensor temperature_loss_with_negative(const torch::Tensor& generated, const torch::Tensor& real,
                                             const torch::Tensor& jittered_real, const TripletSpec& spec) {
  require_same_shape(generated, real, "temperature_loss");
  require_same_shape(real, jittered_real, "temperature_loss");
  return triplet(temperature_map(generated), temperature_map(real).detach(),
                 temperature_map(jittered_real).detach(), spec);
}

torch::Tensor temperature_loss(const torch::Tensor& generated, const torch::Tensor& real,
                               const dataio::JitterParams& jitter, core::RunSeed seed, const TripletSpec& spec) {
  const torch::Tensor jittered = dataio::color_jitter_batch(core::as_batch(real).detach(), jitter, seed);
  return temperature_loss_with_negative(core::as_batch(generated), core::as_batch(real), jittered, spec);
}

}  // namespace vtf::losses
