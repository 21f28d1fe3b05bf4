#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"

namespace vtf::dataio {

void JitterParams::validate() const {
  if (brightness < 0 || contrast < 0 || saturation < 0 || hue < 0) {
    throw ContractError("jitter factors must be non-negative");
  }
  if (hue > 0.5) throw ContractError("hue jitter must be <= 0.5");
}

torch::Tensor luminance(const torch::Tensor& rgb) {
  // Works on [..., 3, H, W].
  const int64_t cdim = rgb.dim() - 3;
  if (rgb.size(cdim) != 3) throw ShapeError("luminance expects 3 channels");
  return 0.299 * rgb.select(cdim, 0) + 0.587 * rgb.select(cdim, 1) + 0.114 * rgb.select(cdim, 2);
}

core::ImageTensor to_grayscale(const core::ImageTensor& image, bool keep_single_channel) {
  if (image.channels() != 3) throw ShapeError("to_grayscale expects an RGB image");
  torch::Tensor y = luminance(image.data()).unsqueeze(0);
  if (!keep_single_channel) y = y.expand({3, -1, -1}).contiguous();
  return {y, image.range()};
}

namespace {

// RGB <-> HSV on [3,H,W] tensors with values in [0,1].
torch::Tensor rgb_to_hsv(const torch::Tensor& img) {
  torch::Tensor r = img[0], g = img[1], b = img[2];
  torch::Tensor maxc = std::get<0>(img.max(0));
  torch::Tensor minc = std::get<0>(img.min(0));
  torch::Tensor delta = maxc - minc;
  torch::Tensor v = maxc;
  torch::Tensor safe_max = torch::where(maxc > 0, maxc, torch::ones_like(maxc));
  torch::Tensor s = torch::where(maxc > 0, delta / safe_max, torch::zeros_like(maxc));
  torch::Tensor safe_delta = torch::where(delta > 0, delta, torch::ones_like(delta));
  torch::Tensor rc = (maxc - r) / safe_delta;
  torch::Tensor gc = (maxc - g) / safe_delta;
  torch::Tensor bc = (maxc - b) / safe_delta;
  torch::Tensor h = torch::where(maxc == r, bc - gc, torch::where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc));
  h = torch::where(delta > 0, torch::remainder(h / 6.0, 1.0), torch::zeros_like(h));
  return torch::stack({h, s, v});
}

torch::Tensor hsv_to_rgb(const torch::Tensor& img) {
  torch::Tensor h = img[0], s = img[1], v = img[2];
  torch::Tensor i = torch::floor(h * 6.0);
  torch::Tensor f = h * 6.0 - i;
  torch::Tensor p = v * (1.0 - s);
  torch::Tensor q = v * (1.0 - s * f);
  torch::Tensor t = v * (1.0 - s * (1.0 - f));
  torch::Tensor sector = torch::remainder(i, 6.0);
  auto pick = [&](const std::array<torch::Tensor, 6>& options) {
    torch::Tensor out = options[5];
    for (int k = 4; k >= 0; --k) out = torch::where(sector == k, options[static_cast<size_t>(k)], out);
    return out;
  };
  return torch::stack({pick({v, q, p, p, t, v}), pick({t, v, v, q, p, p}), pick({p, p, t, v, v, q})});
}

torch::Tensor blend(const torch::Tensor& a, const torch::Tensor& b, double ratio) {
  return (ratio * a + (1.0 - ratio) * b).clamp(0.0, 1.0);
}

// Operates on a unit-interval [C,H,W] image.
torch::Tensor jitter_unit(torch::Tensor img, const JitterParams& params, core::RunSeed seed) {
  std::mt19937_64 rng(seed.value);
  auto factor = [&](double strength) {
    std::uniform_real_distribution<double> dist(std::max(0.0, 1.0 - strength), 1.0 + strength);
    return dist(rng);
  };
  const double b = factor(params.brightness);
  const double c = factor(params.contrast);
  const double s = factor(params.saturation);
  const double h = std::uniform_real_distribution<double>(-params.hue, params.hue)(rng);
  std::array<int, 4> order{0, 1, 2, 3};
  std::shuffle(order.begin(), order.end(), rng);

  const bool rgb = img.size(0) == 3;
  auto gray = [&](const torch::Tensor& x) { return rgb ? luminance(x).unsqueeze(0) : x; };
  for (int op : order) {
    switch (op) {
      case 0:
        if (params.brightness > 0) img = blend(img, torch::zeros_like(img), b);
        break;
      case 1:
        if (params.contrast > 0) img = blend(img, gray(img).mean().expand_as(img), c);
        break;
      case 2:
        if (params.saturation > 0 && rgb) img = blend(img, gray(img).expand_as(img), s);
        break;
      case 3:
        if (params.hue > 0 && rgb) {
          torch::Tensor hsv = rgb_to_hsv(img);
          hsv[0] = torch::remainder(hsv[0] + h, 1.0);
          img = hsv_to_rgb(hsv).clamp(0.0, 1.0);
        }
        break;
    }
  }
  return img;
}

}  // namespace

core::ImageTensor color_jitter(const core::ImageTensor& image, const JitterParams& params, core::RunSeed seed) {
  if (image.range() != core::PixelRange::kUnitSigned) {
    throw ContractError("color_jitter expects a unit_signed image");
  }
  params.validate();
  if (params.brightness == 0 && params.contrast == 0 && params.saturation == 0 && params.hue == 0) {
    return {image.data().detach().clone(), image.range()};
  }
  torch::NoGradGuard no_grad;
  torch::Tensor unit = (image.data() + 1.0) * 0.5;
  torch::Tensor out = jitter_unit(unit, params, seed);
  return {(out * 2.0 - 1.0).clamp(-1.0, 1.0), core::PixelRange::kUnitSigned};
}

torch::Tensor color_jitter_batch(const torch::Tensor& batch, const JitterParams& params, core::RunSeed seed) {
  std::vector<torch::Tensor> out;
  out.reserve(static_cast<size_t>(batch.size(0)));
  for (int64_t i = 0; i < batch.size(0); ++i) {
    out.push_back(color_jitter({batch[i].detach(), core::PixelRange::kUnitSigned}, params,
                               seed.derive(static_cast<uint64_t>(i)))
                      .data());
  }
  return torch::stack(out);
}

}  // namespace vtf::dataio
