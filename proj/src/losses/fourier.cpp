#include <cmath>
#include <numbers>
#include <sstream>

#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::losses {

torch::Tensor dft2(const torch::Tensor& x) {
  if (x.is_complex()) throw ContractError("dft2 expects a real input");
  if (x.dim() < 2) throw ShapeError("dft2 needs at least two dimensions");
  return torch::fft::rfft2(x, c10::nullopt, std::vector<int64_t>{-2, -1});
}

torch::Tensor hermitian_full_plane(const torch::Tensor& half, int64_t width) {
  const int64_t h = half.size(-2);
  if (half.size(-1) != width / 2 + 1) throw ShapeError("half-plane width does not match");
  if (width / 2 + 1 == width) return half;  // width 1 or 2: nothing is mirrored
  // Columns v = W/2+1 .. W-1 come from conj(X[(-u) mod H, W - v]).
  std::vector<int64_t> rows(static_cast<size_t>(h)), cols;
  for (int64_t u = 0; u < h; ++u) rows[static_cast<size_t>(u)] = (h - u) % h;
  for (int64_t v = width / 2 + 1; v < width; ++v) cols.push_back(width - v);
  const auto opts = torch::TensorOptions().dtype(torch::kInt64).device(half.device());
  torch::Tensor mirrored =
      half.index_select(-2, torch::tensor(rows, opts)).index_select(-1, torch::tensor(cols, opts)).conj();
  return torch::cat({half, mirrored.resolve_conj()}, -1);
}

namespace {

// Re/Im with (0,0) replaced by (1,0) so neither sqrt nor atan2 sees a 0/0 in
// the backward pass; the mask restores the exact forward value.
struct SafeParts {
  torch::Tensor re, im, zero;
};

SafeParts safe_parts(const torch::Tensor& spectrum) {
  if (!spectrum.is_complex()) throw ContractError("expected a complex spectrum");
  torch::Tensor re = torch::real(spectrum);
  torch::Tensor im = torch::imag(spectrum) + 0.0;  // -0.0 -> +0.0, keeps atan2 in (-pi, pi]
  torch::Tensor zero = (re == 0) & (im == 0);
  return {torch::where(zero, torch::ones_like(re), re), torch::where(zero, torch::zeros_like(im), im), zero};
}

torch::Tensor phase_distance(const torch::Tensor& a, const torch::Tensor& b, PhaseDistance mode) {
  torch::Tensor d = a - b;
  if (mode == PhaseDistance::kWrapped) {
    const double pi = std::numbers::pi;
    d = torch::remainder(d + pi, 2.0 * pi) - pi;
  }
  return d.abs();
}

FourierLoss fourier_terms(const torch::Tensor& generated, const torch::Tensor& real, PhaseDistance mode) {
  const torch::Tensor sg = dft2(generated), sr = dft2(real);
  FourierLoss out;
  out.amplitude = (amplitude(sr) - amplitude(sg)).abs().mean();
  out.phase = phase_distance(phase(sr), phase(sg), mode).mean();
  out.total = 0.5 * (out.amplitude + out.phase);
  return out;
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream msg;
    msg << "fft loss: shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw ShapeError(msg.str());
  }
}

}  // namespace

torch::Tensor amplitude(const torch::Tensor& spectrum) {
  const SafeParts p = safe_parts(spectrum);
  torch::Tensor mag = (p.re * p.re + p.im * p.im).sqrt();
  return torch::where(p.zero, torch::zeros_like(mag), mag);
}

torch::Tensor phase(const torch::Tensor& spectrum) {
  const SafeParts p = safe_parts(spectrum);
  // At masked entries the safe parts are (1, 0), whose angle is already 0.
  return torch::atan2(p.im, p.re);
}

FourierLoss fft_loss_patch(const torch::Tensor& generated, const torch::Tensor& real, int64_t count,
                           PhaseDistance distance) {
  require_same_shape(generated, real);
  return fourier_terms(core::patchify(core::as_batch(generated), count), core::patchify(core::as_batch(real), count),
                       distance);
}

FourierLoss fft_loss_global(const torch::Tensor& generated, const torch::Tensor& real, PhaseDistance distance) {
  require_same_shape(generated, real);
  return fourier_terms(core::as_batch(generated), core::as_batch(real), distance);
}

}  // namespace vtf::losses
