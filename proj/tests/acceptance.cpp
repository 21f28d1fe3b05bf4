// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <torch/torch.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "vtf/blocks.hpp"
#include "vtf/diffusion.hpp"
#include "vtf/harness.hpp"
#include "vtf/losses.hpp"
#include "vtf/metrics.hpp"
#include "vtf/models.hpp"

using namespace vtf;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kAnalyticTol = 1e-6;
constexpr double kGradRtol = 1e-2;
constexpr double kGradStep = 1e-3;
constexpr double kShiftAmplitudeTol = 1e-6;
constexpr double kParsevalRtol = 1e-6;
constexpr double kRelativisticTol = 1e-9;
constexpr double kSigmaTol = 1e-4;
constexpr double kL1Drop = 0.30;
constexpr double kScheduleRtol = 1e-6;
constexpr double kOracleSampleTol = 1e-3;
constexpr double kFidRtol = 1e-6;
constexpr double kZeroTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no runtime bound
  std::function<void(Outcome&)> run;
};

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "vtf_acceptance";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

torch::Tensor uniform(std::vector<int64_t> shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  auto gen = at::detail::createCPUGenerator(seed);
  return torch::rand(shape, gen, torch::kFloat64) * (hi - lo) + lo;
}

double triplet_at(double dp, double dn) {
  const torch::Tensor a = torch::zeros({1, 2}, torch::kFloat64);
  return losses::triplet(a, torch::tensor({{dp, 0.0}}, torch::kFloat64), torch::tensor({{0.0, dn}}, torch::kFloat64))
      .item<double>();
}

// 1 -------------------------------------------------------------------------
void loss_analytics(Outcome& o) {
  const torch::Tensor x = uniform({2, 3, 4, 4}, 1);
  const torch::Tensor zero = torch::zeros({1, 1, 4, 4}, torch::kFloat64);
  torch::Tensor red = torch::zeros({3, 1, 2});
  red[0][0][1] = 255.0;
  const torch::Tensor celsius =
      losses::temperature_map(core::ImageTensor(red, core::PixelRange::kByte)).celsius.to(torch::kFloat64);
  const int64_t d = 8;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d), mu1 = Eigen::VectorXd::Ones(d);
  auto stats = [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) { return metrics::GaussianStats{mu, s, 2}; };

  const std::vector<std::pair<std::string, std::pair<double, double>>> cases{
      {"triplet(a=p=n)", {losses::triplet(x, x, x).item<double>(), 1.0}},
      {"triplet(0,3)", {triplet_at(0.0, 3.0), 0.0}},
      {"triplet(2,0.5)", {triplet_at(2.0, 0.5), 2.5}},
      {"bce(0,0.9)", {losses::bce_logits(zero, 0.9).item<double>(), std::log(2.0)}},
      {"bce(0,0)", {losses::bce_logits(zero, 0.0).item<double>(), std::log(2.0)}},
      {"T(0)", {celsius[0][0][0].item<double>(), 24.0}},
      {"T(255)", {celsius[0][0][1].item<double>(), 38.0}},
      {"fid(mu 0 vs 1, I)", {metrics::fid(stats(mu0, eye), stats(mu1, eye)), double(d)}},
      {"fid(4I vs I)", {metrics::fid(stats(mu0, 4.0 * eye), stats(mu0, eye)), double(d)}},
      {"Tr sqrt(4I I)", {metrics::trace_sqrt_product(4.0 * eye, eye), 2.0 * d}},
      {"fid(s,s)", {metrics::fid(stats(mu1, 4.0 * eye), stats(mu1, 4.0 * eye)), 0.0}},
  };
  double worst = 0.0;
  for (const auto& [name, v] : cases) {
    const double err = std::abs(v.first - v.second);
    worst = std::max(worst, err);
    o.require(err <= kAnalyticTol, name);
  }
  o.detail << cases.size() << " cases, worst abs error " << worst;
}

// 2 -------------------------------------------------------------------------
void gradient_suite(Outcome& o) {
  double worst = 0.0;
  int rejected = 0;
  const auto cases = gradcheck::loss_cases(2024);
  for (const auto& c : cases) {
    const gradcheck::Outcome r = gradcheck::run(c, 7, 10, kGradStep, kGradRtol);
    worst = std::max(worst, r.worst_rel_error);
    rejected += r.rejected;
    o.require(r.pass, c.name);
  }
  o.detail << cases.size() << " losses x 10 points, worst rel error " << worst << ", " << rejected
           << " kink points redrawn";
}

// 3 -------------------------------------------------------------------------
void fourier_properties(Outcome& o) {
  // Amplitude invariance under circular shift, per coefficient.
  const torch::Tensor img = uniform({3, 32, 32}, 3);
  const torch::Tensor a = losses::amplitude(losses::dft2(img));
  const torch::Tensor b = losses::amplitude(losses::dft2(img.roll({5, -9}, {1, 2})));
  const double shift_err = (a - b).abs().max().item<double>();
  o.require(shift_err <= kShiftAmplitudeTol, "shift amplitude invariance");

  // Hermitian reconstruction and Parseval against a brute-force transform.
  double worst_coeff = 0.0, worst_parseval = 0.0;
  for (auto [h, w] : std::vector<std::pair<int64_t, int64_t>>{{16, 16}, {12, 9}, {7, 10}}) {
    const torch::Tensor x = uniform({h, w}, static_cast<uint64_t>(h * 100 + w));
    const auto ref = oracle::dft2(oracle::to_vector(x), h, w);
    const torch::Tensor full = losses::hermitian_full_plane(losses::dft2(x), w);
    const torch::Tensor re = torch::real(full).contiguous(), im = torch::imag(full).contiguous();
    double energy = 0.0;
    for (double v : oracle::to_vector(x)) energy += v * v;
    for (int64_t u = 0; u < h; ++u) {
      for (int64_t v = 0; v < w; ++v) {
        const std::complex<double> got(re[u][v].item<double>(), im[u][v].item<double>());
        worst_coeff = std::max(worst_coeff, std::abs(got - ref[static_cast<size_t>(u * w + v)]));
      }
    }
    const double spectral = (re.pow(2) + im.pow(2)).sum().item<double>() / static_cast<double>(h * w);
    worst_parseval = std::max(worst_parseval, std::abs(spectral - energy) / energy);
  }
  o.require(worst_coeff <= 1e-9, "hermitian reconstruction");
  o.require(worst_parseval <= kParsevalRtol, "parseval");

  const torch::Tensor batch = uniform({2, 3, 32, 32}, 4);
  const double lp = losses::fft_loss_patch(batch, batch).total.item<double>();
  const double lg = losses::fft_loss_global(batch, batch).total.item<double>();
  o.require(lp == 0.0 && lg == 0.0, "fft losses vanish on equal inputs");
  o.detail << "shift err " << shift_err << ", coeff err " << worst_coeff << ", parseval rel " << worst_parseval
           << ", L_patch(X,X)=" << lp << ", L_global(X,X)=" << lg;
}

// 4 -------------------------------------------------------------------------
void relativistic_invariance(Outcome& o) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> constant(-50.0, 50.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const torch::Tensor r = uniform({2, 1, 16, 16}, 1000 + trial, -5, 5);
    const torch::Tensor f = uniform({2, 1, 16, 16}, 2000 + trial, -5, 5);
    const double c = constant(rng);
    worst = std::max(worst, std::abs(losses::gan_generator_adv(f + c, r + c).item<double>() -
                                     losses::gan_generator_adv(f, r).item<double>()));
    worst = std::max(worst, std::abs(losses::discriminator_loss(r + c, f + c).total.item<double>() -
                                     losses::discriminator_loss(r, f).total.item<double>()));
  }
  o.require(worst < kRelativisticTol, "constant shift changed a loss");
  o.detail << "100 trials, worst change " << worst;
}

// 5 -------------------------------------------------------------------------
void architecture_contracts(Outcome& o) {
  torch::manual_seed(5);
  torch::NoGradGuard no_grad;
  models::Generator g{models::GeneratorSpec{}};
  models::Discriminator d{models::DiscriminatorSpec{}};
  models::init_weights(*g);
  g->eval();
  d->eval();
  const torch::Tensor visible = torch::rand({1, 3, 256, 256}) * 2 - 1;
  const torch::Tensor out = g(visible);
  o.require(out.sizes() == torch::IntArrayRef({1, 3, 256, 256}), "generator shape");
  o.require(out.abs().max().item<float>() <= 1.0f, "generator range");
  const torch::Tensor logits = d(visible, out);
  o.require(logits.sizes() == torch::IntArrayRef({1, 1, 16, 16}), "discriminator 16x16 logits");

  double blur_err = 0.0;
  for (int64_t k = 1; k <= 7; ++k) {
    const torch::Tensor c = torch::full({1, 4, 32, 32}, 0.3, torch::kFloat64);
    const torch::Tensor y = blocks::blurpool(c, {k, 2});
    o.require(y.sizes() == torch::IntArrayRef({1, 4, 16, 16}), "blurpool halving k=" + std::to_string(k));
    blur_err = std::max(blur_err, (y - 0.3).abs().max().item<double>());
  }
  o.require(blur_err <= 1e-12, "blurpool keeps constants");

  double sigma_err = 0.0;
  for (uint64_t trial = 0; trial < 20; ++trial) {
    const torch::Tensor w = oracle::gapped_matrix(8, 5500 + trial);
    blocks::SpectralNormState state = blocks::SpectralNormState::init(8, 8, torch::kFloat64);
    for (int i = 0; i < 50; ++i) blocks::power_iterate(w, state);
    sigma_err = std::max(sigma_err, std::abs(blocks::sigma_estimate(w, state).item<double>() -
                                             oracle::largest_singular_value(w)));
  }
  o.require(sigma_err <= kSigmaTol, "spectral norm estimate");
  o.detail << "G " << out.sizes() << ", D " << logits.sizes() << ", blur err " << blur_err << ", sigma err "
           << sigma_err;
}

// 6 -------------------------------------------------------------------------
void gan_training_smoke(Outcome& o, const fs::path& work) {
  for (harness::Variant v :
       {harness::Variant::kVtfGan, harness::Variant::kVtfGanFftP, harness::Variant::kVtfGanFftG}) {
    harness::TrainConfig c = harness::desk_preset(v);
    const harness::TrainResult r = harness::train(c);
    std::vector<double> l1;
    for (const auto& rec : r.trace) l1.push_back(*rec.l1);
    const std::vector<double> s = harness::smooth(l1, 21);
    const double start = s.at(9), end = s.back();
    const double drop = 1.0 - end / start;
    o.require(r.last_step == 300, harness::to_string(v) + " ran 300 steps");
    o.require(drop >= kL1Drop, harness::to_string(v) + " L1 drop");
    o.detail << harness::to_string(v) << " L1 " << start << " -> " << end << " (" << std::lround(drop * 100)
             << "%); ";
  }
  harness::TrainConfig c = harness::desk_preset(harness::Variant::kVtfGan);
  c.max_steps = 8;
  c.out_dir = (work / "ablation").string();
  const harness::AblationReport report = harness::ablate(c);
  o.require(report.rows.size() == 3, "three ablation rows");
  bool same_order = true;
  for (const auto& row : report.rows) {
    same_order = same_order && row.data_order_fingerprint == report.rows.front().data_order_fingerprint;
  }
  o.require(same_order, "ablation data order");
  o.require(report.row("-patch").patch_loss_evaluations == 0, "-patch never tiles");
  o.detail << "ablation rows:";
  for (const auto& row : report.rows) o.detail << " " << row.name;
}

// 7 -------------------------------------------------------------------------
void diffusion_suite(Outcome& o) {
  const diffusion::NoiseSchedule s = diffusion::build_schedule(500);
  double product = 1.0, worst_rel = 0.0;
  for (int64_t t = 1; t <= 500; ++t) {
    product *= s.alpha[static_cast<size_t>(t)];
    worst_rel = std::max(worst_rel, std::abs(s.alpha_bar[static_cast<size_t>(t)] - product) / product);
  }
  o.require(worst_rel <= kScheduleRtol, "alpha_bar running product");
  o.require(s.alpha_bar[0] == 1.0 && s.alpha_bar[500] < 1e-3, "schedule endpoints");

  int moment_failures = 0;
  const int64_t draws = 10000;
  for (int64_t t : {1, 100, 250, 400, 500}) {
    auto gen = at::detail::createCPUGenerator(static_cast<uint64_t>(t));
    const torch::Tensor y0 = torch::full({draws, 1}, -0.4, torch::kFloat64);
    const torch::Tensor y = diffusion::q_sample(y0, t, torch::randn({draws, 1}, gen, torch::kFloat64), s);
    const double ab = s.alpha_bar[static_cast<size_t>(t)];
    const double var = 1.0 - ab;
    if (std::abs(y.mean().item<double>() + 0.4 * std::sqrt(ab)) > 3.0 * std::sqrt(var / draws)) ++moment_failures;
    if (std::abs(y.var().item<double>() - var) > 3.0 * var * std::sqrt(2.0 / (draws - 1))) ++moment_failures;
  }
  o.require(moment_failures == 0, "q_sample moments");

  const torch::Tensor cond = uniform({4, 1, 32, 32}, 70);
  const torch::Tensor y0 = uniform({4, 1, 32, 32}, 71, -0.95, 0.95);
  const double recover =
      (diffusion::sample(diffusion::oracle_predictor(y0, s), cond, s, core::RunSeed{72}) - y0).abs().max().item<double>();
  o.require(recover <= kOracleSampleTol, "oracle sampling");

  harness::TrainConfig c = harness::desk_preset(harness::Variant::kVtfDiff);
  c.max_steps = 200;
  const harness::TrainResult r = harness::train(c);
  std::vector<double> mse;
  for (const auto& rec : r.trace) mse.push_back(*rec.diffusion_mse);
  // Smoothed MSE sampled at the centres of four 50-step blocks.
  const std::vector<double> sm = harness::smooth(mse, 50);
  std::vector<double> points;
  for (size_t i : {25u, 75u, 125u, 175u}) points.push_back(sm.at(i));
  bool decreasing = r.last_step == 200;
  for (size_t i = 1; i < points.size(); ++i) decreasing = decreasing && points[i] < points[i - 1];
  o.require(decreasing, "smoothed diffusion MSE strictly decreasing");
  o.detail << "schedule rel " << worst_rel << ", moment misses " << moment_failures << ", oracle L_inf " << recover
           << ", smoothed MSE";
  for (double p : points) o.detail << " " << p;
}

// 8 -------------------------------------------------------------------------
void metrics_oracles(Outcome& o) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double worst_rel = 0.0, self = 0.0;
  for (int64_t d = 1; d <= 16; ++d) {
    const Eigen::MatrixXd s1 = oracle::random_spd(d, rng), s2 = oracle::random_spd(d, rng);
    Eigen::VectorXd m1(d), m2(d);
    for (int64_t i = 0; i < d; ++i) {
      m1(i) = normal(rng);
      m2(i) = normal(rng);
    }
    const double want = oracle::fid(m1, s1, m2, s2);
    const double got = metrics::fid({m1, s1, 2}, {m2, s2, 2});
    worst_rel = std::max(worst_rel, std::abs(got - want) / std::abs(want));
    self = std::max(self, metrics::fid({m1, s1, 2}, {m1, s1, 2}));
  }
  o.require(worst_rel <= kFidRtol, "fid vs brute force");
  o.require(self <= kZeroTol, "fid(s,s) = 0");

  harness::TrainConfig c = harness::desk_preset(harness::Variant::kVtfGan);
  const harness::TrainingData data = harness::load_training_data(c);
  metrics::RandomProjectionFeatures ext;
  int64_t offset = 0;
  const harness::GenerateFn identity = [&](const torch::Tensor& v) {
    torch::Tensor t = data.test.thermal.narrow(0, offset, v.size(0));
    offset += v.size(0);
    return t;
  };
  const metrics::MetricsReport id = harness::evaluate_generator(identity, data.test, "", ext, "");
  const harness::GenerateFn noise = [](const torch::Tensor& v) {
    auto gen = at::detail::createCPUGenerator(9);
    return torch::rand(v.sizes(), gen) * 2 - 1;
  };
  const metrics::MetricsReport nz = harness::evaluate_generator(noise, data.test, "", ext, "");
  o.require(id.fid <= kZeroTol && id.mse_spec <= kZeroTol, "identity generator scores zero");
  o.require(nz.fid > id.fid && nz.mse_spec > id.mse_spec, "noise generator scores worse");
  o.detail << "fid rel err " << worst_rel << ", identity fid " << id.fid << " mse_spec " << id.mse_spec
           << ", noise fid " << nz.fid << " mse_spec " << nz.mse_spec;
}

// 9 -------------------------------------------------------------------------
std::vector<std::string> trace_rows(const harness::TrainResult& r, harness::Variant v) {
  std::vector<std::string> rows;
  for (const auto& rec : r.trace) rows.push_back(harness::csv_row(rec, v));
  return rows;
}

void determinism(Outcome& o, const fs::path& work) {
  for (harness::Variant v : {harness::Variant::kVtfGanFftP, harness::Variant::kVtfDiff}) {
    const std::string name = harness::to_string(v);
    harness::TrainConfig c = harness::desk_preset(v);
    c.max_steps = 12;
    const auto first = trace_rows(harness::train(c), v);
    const auto second = trace_rows(harness::train(c), v);
    o.require(first == second, name + " identical traces");

    // Interrupt mid-epoch at step 6 and resume to 12.
    harness::TrainConfig head = c;
    head.max_steps = 6;
    head.out_dir = (work / ("resume_" + name)).string();
    harness::train(head);
    harness::TrainConfig tail = c;
    tail.out_dir = head.out_dir;
    tail.resume_from = (fs::path(head.out_dir) / "checkpoints" / "final").string();
    const auto resumed = trace_rows(harness::train(tail), v);
    const std::vector<std::string> expected(first.begin() + 6, first.end());
    o.require(resumed == expected, name + " resume continuation");
    o.detail << name << ": " << first.size() << " steps twice, resumed " << resumed.size() << "; ";
  }
}

}  // namespace

int main() {
  torch::set_num_threads(1);
  const fs::path work = work_dir();
  const std::vector<Criterion> criteria{
      {1, "loss analytics", 5, loss_analytics},
      {2, "gradient suite", 120, gradient_suite},
      {3, "fourier properties", 30, fourier_properties},
      {4, "relativistic invariance", 0, relativistic_invariance},
      {5, "architecture contracts", 0, architecture_contracts},
      {6, "gan training smoke", 900, [&](Outcome& o) { gan_training_smoke(o, work); }},
      {7, "diffusion suite", 600, diffusion_suite},
      {8, "metrics oracles", 0, metrics_oracles},
      {9, "determinism and resume", 0, [&](Outcome& o) { determinism(o, work); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail << " [over the " << c.budget_seconds << " s budget]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.str().c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
