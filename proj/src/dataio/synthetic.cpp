#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"

namespace vtf::dataio {

void SyntheticFaceParams::validate() const {
  if (image_size < 8) throw ContractError("synthetic image_size must be >= 8");
  if (!(0.0 <= thermal_min && thermal_min < thermal_max && thermal_max <= 255.0)) {
    throw ContractError("thermal byte range must satisfy 0 <= min < max <= 255");
  }
  auto ordered = [](double lo, double hi) { return lo <= hi; };
  if (!ordered(face_half_width_min, face_half_width_max) || !ordered(face_half_height_min, face_half_height_max) ||
      !ordered(eye_spacing_min, eye_spacing_max) || !ordered(eye_radius_min, eye_radius_max) ||
      !ordered(nose_radius_min, nose_radius_max) || !ordered(mouth_half_width_min, mouth_half_width_max)) {
    throw ContractError("synthetic geometry ranges must be ordered min <= max");
  }
}

namespace {

struct FaceLayout {
  double cx, cy, ax, ay;
  double eye_dx, eye_y, eye_r;
  double nose_y, nose_r;
  double mouth_y, mouth_w, mouth_h;
  double hair_line;
  double skin_t;
  std::array<double, 3> background;
  double light_dir;
};

FaceLayout draw_layout(const SyntheticFaceParams& p, core::RunSeed seed) {
  std::mt19937_64 rng(seed.value);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  FaceLayout f{};
  f.cx = u(-0.06, 0.06);
  f.cy = u(-0.04, 0.08);
  f.ax = u(p.face_half_width_min, p.face_half_width_max);
  f.ay = u(p.face_half_height_min, p.face_half_height_max);
  f.eye_dx = u(p.eye_spacing_min, p.eye_spacing_max) * f.ax;
  f.eye_y = f.cy - u(0.18, 0.28) * f.ay;
  f.eye_r = u(p.eye_radius_min, p.eye_radius_max);
  f.nose_y = f.cy + u(0.05, 0.15) * f.ay;
  f.nose_r = u(p.nose_radius_min, p.nose_radius_max);
  f.mouth_y = f.cy + u(0.38, 0.5) * f.ay;
  f.mouth_w = u(p.mouth_half_width_min, p.mouth_half_width_max);
  f.mouth_h = u(0.035, 0.06);
  f.hair_line = f.cy - u(0.55, 0.75) * f.ay;
  f.skin_t = u(0.0, 1.0);
  f.background = {u(20, 235), u(20, 235), u(20, 235)};
  f.light_dir = u(-0.5, 0.5);
  return f;
}

// Smooth inside-indicator: ~1 well inside (d << 0), ~0 outside.
double soft_inside(double d, double sharpness) { return 1.0 / (1.0 + std::exp(sharpness * d)); }

double gauss(double dx, double dy, double r) { return std::exp(-(dx * dx + dy * dy) / (2.0 * r * r)); }

}  // namespace

std::pair<core::ImageTensor, core::ImageTensor> synth_pair(const SyntheticFaceParams& p, core::RunSeed seed) {
  p.validate();
  const FaceLayout f = draw_layout(p, seed);
  const int64_t n = p.image_size;
  torch::Tensor visible = torch::empty({3, n, n}, torch::kFloat32);
  torch::Tensor thermal = torch::empty({3, n, n}, torch::kFloat32);
  auto vis = visible.accessor<float, 3>();
  auto thr = thermal.accessor<float, 3>();

  std::array<double, 3> skin{};
  for (size_t c = 0; c < 3; ++c) skin[c] = p.skin_light[c] + f.skin_t * (p.skin_dark[c] - p.skin_light[c]);
  const double sharp = 4.0 * static_cast<double>(n);  // edge width ~ a quarter pixel in unit coords

  for (int64_t i = 0; i < n; ++i) {
    const double y = (2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n)) - 1.0;
    for (int64_t j = 0; j < n; ++j) {
      const double x = (2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(n)) - 1.0;
      const double ex = (x - f.cx) / f.ax, ey = (y - f.cy) / f.ay;
      const double face = soft_inside(std::sqrt(ex * ex + ey * ey) - 1.0, sharp * 0.3);
      const double hair = face * soft_inside(y - f.hair_line, sharp * 0.5);
      double eyes = 0.0;
      for (double side : {-1.0, 1.0}) {
        const double dx = x - (f.cx + side * f.eye_dx), dy = y - f.eye_y;
        eyes = std::max(eyes, soft_inside(std::sqrt(dx * dx + dy * dy) - f.eye_r, sharp));
      }
      const double mx = (x - f.cx) / f.mouth_w, my = (y - f.mouth_y) / f.mouth_h;
      const double mouth = soft_inside(std::sqrt(mx * mx + my * my) - 1.0, sharp * 0.1);
      const double nose_shade = gauss(x - f.cx, y - f.nose_y, f.nose_r);

      // Visible spectrum.
      const double light = 1.0 + f.light_dir * x * 0.3;
      for (int c = 0; c < 3; ++c) {
        const auto cu = static_cast<size_t>(c);
        double skin_px = skin[cu] * light * (1.0 - 0.15 * nose_shade);
        const double lips = c == 0 ? 170.0 : (c == 1 ? 70.0 : 80.0);
        skin_px = skin_px * (1.0 - mouth) + lips * mouth;
        skin_px = skin_px * (1.0 - eyes) + 35.0 * eyes;
        double px = f.background[cu] * (1.0 - face) + skin_px * face;
        px = px * (1.0 - hair) + 30.0 * hair;
        vis[c][i][j] = static_cast<float>(std::clamp(px, 0.0, 255.0));
      }

      // Thermal: smooth relative temperature in [0, 1].
      double level = p.background_level + (p.skin_level - p.background_level) * face;
      level -= (p.skin_level - p.background_level) * 0.5 * hair;
      double periorbital = 0.0;
      for (double side : {-1.0, 1.0}) {
        const double inner_x = f.cx + side * (f.eye_dx - 0.8 * f.eye_r);
        periorbital = std::max(periorbital, gauss(x - inner_x, y - f.eye_y, 1.3 * f.eye_r));
      }
      level += (p.periorbital_level - p.skin_level) * periorbital * face;
      level += (p.nose_tip_level - p.skin_level) * gauss(x - f.cx, y - f.nose_y, f.nose_r) * face;
      level += 0.1 * mouth * face;
      level = std::clamp(level, 0.0, 1.0);
      const double v = p.thermal_min + level * (p.thermal_max - p.thermal_min);
      // Warm palette whose red channel carries the temperature.
      thr[0][i][j] = static_cast<float>(v);
      thr[1][i][j] = static_cast<float>(v * (0.25 + 0.75 * level));
      thr[2][i][j] = static_cast<float>((p.thermal_max - v) * 0.6 + 10.0 * level);
    }
  }
  return {core::normalize({visible, core::PixelRange::kByte}), core::normalize({thermal, core::PixelRange::kByte})};
}

PairedSet synth_set(const SyntheticFaceParams& params, int64_t count, core::RunSeed seed) {
  if (count <= 0) throw ContractError("synthetic set size must be positive");
  std::vector<torch::Tensor> a, b;
  PairedSet set;
  for (int64_t i = 0; i < count; ++i) {
    auto [va, tb] = synth_pair(params, seed.derive(static_cast<uint64_t>(i)));
    a.push_back(va.data());
    b.push_back(tb.data());
    std::ostringstream id;
    id << "synth_" << std::setw(5) << std::setfill('0') << i;
    set.ids.push_back(id.str());
  }
  set.visible = torch::stack(a);
  set.thermal = torch::stack(b);
  return set;
}

Manifest write_synthetic_dataset(const SyntheticFaceParams& params, int64_t count, core::RunSeed seed,
                                 double test_fraction, const std::filesystem::path& out_dir) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw ContractError("test_fraction must be in [0, 1)");
  const PairedSet set = synth_set(params, count, seed);
  const auto n_test = static_cast<int64_t>(std::ceil(static_cast<double>(count) * test_fraction));
  Manifest manifest;
  manifest.root = out_dir;
  for (int64_t i = 0; i < count; ++i) {
    const auto& id = set.ids[static_cast<size_t>(i)];
    ManifestEntry entry;
    entry.id = id;
    entry.subject = id;
    entry.visible = out_dir / "visible" / (id + ".png");
    entry.thermal = out_dir / "thermal" / (id + ".png");
    entry.split = i >= count - n_test ? Split::kTest : Split::kTrain;
    write_png({set.visible[i], core::PixelRange::kUnitSigned}, entry.visible);
    write_png({set.thermal[i], core::PixelRange::kUnitSigned}, entry.thermal);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace vtf::dataio
