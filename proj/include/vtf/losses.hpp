#pragma once

#include <torch/torch.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vtf/core.hpp"
#include "vtf/dataio.hpp"

namespace vtf::losses {

// ---------------------------------------------------------------------------
// Triplet family
// ---------------------------------------------------------------------------

struct TripletSpec {
  double margin = 1.0;
  void validate() const;
};

/// Per-sample Euclidean distance over everything but the leading dimension.
torch::Tensor l2_distance(const torch::Tensor& x, const torch::Tensor& y);

/// mean_i max{ d(a_i, p_i) - d(a_i, n_i) + margin, 0 } over the leading dim.
torch::Tensor triplet(const torch::Tensor& anchor, const torch::Tensor& positive, const torch::Tensor& negative,
                      const TripletSpec& spec = {});

/// For every sample and patch k, the index of a different patch of the real
/// image used as the negative. Shape [N, K], int64.
torch::Tensor draw_negative_patches(int64_t batch, int64_t count, core::RunSeed seed);

/// Mean over samples and patches of triplet(B̂_k, B_k, B_{neg(k)}).
torch::Tensor patch_loss(const torch::Tensor& generated, const torch::Tensor& real, int64_t count,
                         core::RunSeed seed, const TripletSpec& spec = {});
torch::Tensor patch_loss(const torch::Tensor& generated, const torch::Tensor& real, int64_t count,
                         const torch::Tensor& negatives, const TripletSpec& spec = {});

/// Number of times patch_loss has tiled its inputs since process start.
int64_t patch_loss_evaluations();

inline constexpr double kMinFaceCelsius = 24.0;
inline constexpr double kMaxFaceCelsius = 38.0;

/// Per-pixel degrees Celsius, [1,H,W].
struct TemperatureField {
  torch::Tensor celsius;
  bool in_range() const;
};

/// Red channel mapped linearly from byte value [0,255] to [24, 38] degrees C.
/// Accepts byte or unit-signed images.
TemperatureField temperature_map(const core::ImageTensor& thermal);
/// Batched form on unit-signed [N,C,H,W]; returns [N,1,H,W].
torch::Tensor temperature_map(const torch::Tensor& unit_signed_batch);

/// triplet(T(B̂), T(B), T(jitter(B))) with per-sample jitter drawn from `seed`.
torch::Tensor temperature_loss(const torch::Tensor& generated, const torch::Tensor& real,
                               const dataio::JitterParams& jitter, core::RunSeed seed, const TripletSpec& spec = {});
/// Same with an explicit jittered copy of `real`.
torch::Tensor temperature_loss_with_negative(const torch::Tensor& generated, const torch::Tensor& real,
                                             const torch::Tensor& jittered_real, const TripletSpec& spec = {});

// ---------------------------------------------------------------------------
// Perceptual
// ---------------------------------------------------------------------------

/// Layer taps of a frozen feature network plus per-layer channel weights.
class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  /// Feature maps [N, C_l, H_l, W_l] for each tapped layer.
  virtual std::vector<torch::Tensor> features(const torch::Tensor& images) = 0;
  /// Non-negative channel weights per layer; empty means unit weights.
  virtual std::vector<torch::Tensor> layer_weights() { return {}; }
  virtual std::string name() const = 0;
};

/// Fixed-seed random convolutional stack (3x3 convs, ReLU, 2x average pooling).
class RandomConvExtractor : public PerceptualExtractor {
 public:
  explicit RandomConvExtractor(uint64_t seed = 0x5eed, std::vector<int64_t> widths = {16, 32, 64});
  std::vector<torch::Tensor> features(const torch::Tensor& images) override;
  std::string name() const override { return "random-conv"; }
  void to(torch::ScalarType dtype);

 private:
  std::vector<torch::Tensor> weights_;
  std::vector<torch::Tensor> biases_;
};

/// TorchScript network whose forward returns a list (or tuple) of feature maps.
/// A module attribute `tau` holding a list of per-layer channel weights is
/// used as the calibration; without it every channel weighs 1.
class ScriptedExtractor : public PerceptualExtractor {
 public:
  explicit ScriptedExtractor(const std::filesystem::path& module_path);
  std::vector<torch::Tensor> features(const torch::Tensor& images) override;
  std::vector<torch::Tensor> layer_weights() override { return tau_; }
  std::string name() const override { return "scripted:" + path_.filename().string(); }

 private:
  struct Holder;
  std::shared_ptr<Holder> holder_;
  std::filesystem::path path_;
  std::vector<torch::Tensor> tau_;
};

/// Scripted extractor when `module_path` names an existing file, otherwise
/// the random-conv fallback.
std::shared_ptr<PerceptualExtractor> make_perceptual_extractor(const std::filesystem::path& module_path,
                                                               uint64_t seed = 0x5eed);

/// sum_l mean_{n,h,w} sum_c tau_c (f̂ - f)^2 on channel-normalized features.
torch::Tensor perceptual_loss(const torch::Tensor& generated, const torch::Tensor& real,
                              PerceptualExtractor& extractor);

// ---------------------------------------------------------------------------
// Relativistic adversarial
// ---------------------------------------------------------------------------

struct AdversarialTargets {
  double valid = 0.9;
  double fake = 0.0;
  void validate() const;
};

/// Binary cross entropy on logits against a constant target, mean reduced.
torch::Tensor bce_logits(const torch::Tensor& logits, double target);

/// bce(ŷ_f - ŷ_r, V)
torch::Tensor gan_generator_adv(const torch::Tensor& fake_logits, const torch::Tensor& real_logits,
                                const AdversarialTargets& targets = {});

struct DiscriminatorLoss {
  torch::Tensor real;   // bce(ŷ_r - ŷ_f, V)
  torch::Tensor fake;   // bce(ŷ_f - ŷ_r, F)
  torch::Tensor total;  // mean of the two
};

DiscriminatorLoss discriminator_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits,
                                     const AdversarialTargets& targets = {});

// ---------------------------------------------------------------------------
// Fourier
// ---------------------------------------------------------------------------

/// Real-input 2-D DFT over the last two dims, keeping columns 0..W/2.
torch::Tensor dft2(const torch::Tensor& x);
/// Rebuilds the full [.., H, W] spectrum from dft2 output via X[-u,-v] = conj(X[u,v]).
torch::Tensor hermitian_full_plane(const torch::Tensor& half, int64_t width);

torch::Tensor amplitude(const torch::Tensor& spectrum);
/// atan2(Im, Re) in (-pi, pi], with atan2(0, 0) = 0.
torch::Tensor phase(const torch::Tensor& spectrum);

enum class PhaseDistance { kRaw, kWrapped };

struct FourierLoss {
  torch::Tensor amplitude;
  torch::Tensor phase;
  torch::Tensor total;  // 0.5 * (amplitude + phase)
};

FourierLoss fft_loss_patch(const torch::Tensor& generated, const torch::Tensor& real, int64_t count = 16,
                           PhaseDistance distance = PhaseDistance::kRaw);
FourierLoss fft_loss_global(const torch::Tensor& generated, const torch::Tensor& real,
                            PhaseDistance distance = PhaseDistance::kRaw);

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

enum class GanVariant { kBase, kFftPatch, kFftGlobal };

struct LossWeights {
  double gan = 1.0;
  double perc = 1.0;
  double temp = 1.0;
  double patch = 1.0;
  double fft = 1.0;
  void validate() const;
};

/// Generator loss components. An undefined tensor means "not computed".
struct GeneratorLossParts {
  torch::Tensor gan;
  torch::Tensor perc;
  torch::Tensor temp;
  torch::Tensor patch;
  torch::Tensor fft;
};

/// Weighted sum of the parts used by `variant`. Base ignores the FFT term.
/// Undefined parts (ablated terms) contribute nothing.
torch::Tensor total_generator_loss(const GeneratorLossParts& parts, GanVariant variant,
                                   const LossWeights& weights = {});

}  // namespace vtf::losses
