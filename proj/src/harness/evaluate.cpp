#include "vtf/harness/evaluate.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vtf/errors.hpp"
#include "vtf/losses.hpp"

namespace vtf::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

torch::Tensor three_channels(const torch::Tensor& x) { return x.size(1) == 1 ? x.expand({-1, 3, -1, -1}) : x; }

torch::Tensor mean_spectrum(const torch::Tensor& images) {
  torch::Tensor sum;
  for (int64_t i = 0; i < images.size(0); ++i) {
    torch::Tensor s = metrics::magnitude_spectrum(images[i]);
    sum = sum.defined() ? sum + s : s;
  }
  return sum / static_cast<double>(images.size(0));
}

}  // namespace

torch::Tensor sample_grid(const torch::Tensor& visible, const torch::Tensor& thermal, const torch::Tensor& generated,
                          int64_t rows) {
  rows = std::min(rows, visible.size(0));
  std::vector<torch::Tensor> lines;
  for (int64_t i = 0; i < rows; ++i) {
    lines.push_back(torch::cat({three_channels(visible.narrow(0, i, 1))[0], three_channels(thermal.narrow(0, i, 1))[0],
                                three_channels(generated.narrow(0, i, 1))[0]},
                               2));
  }
  return torch::cat(lines, 1);
}

metrics::MetricsReport evaluate_generator(const GenerateFn& generate, const dataio::PairedSet& test,
                                          const fs::path& out_dir, metrics::FeatureExtractor& extractor,
                                          const std::string& config_hash, int64_t batch_size, int64_t grid_rows) {
  if (test.size() == 0) throw DataError("evaluation needs a non-empty test split");
  std::vector<torch::Tensor> chunks;
  const auto started = std::chrono::steady_clock::now();
  for (int64_t start = 0; start < test.size(); start += batch_size) {
    const int64_t len = std::min(batch_size, test.size() - start);
    torch::NoGradGuard no_grad;
    chunks.push_back(generate(test.visible.narrow(0, start, len)).to(torch::kFloat32));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const torch::Tensor generated = torch::cat(chunks, 0).clamp(-1.0, 1.0);
  if (!generated.sizes().equals(test.thermal.sizes())) throw ShapeError("generated set does not match the test targets");

  metrics::MetricsReport report = metrics::score_sets(generated, test.thermal, extractor, config_hash);
  report.meta["seconds_per_image"] = seconds / static_cast<double>(test.size());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const torch::Tensor grid = sample_grid(test.visible, test.thermal, generated, grid_rows);
    dataio::write_png({grid, core::PixelRange::kUnitSigned}, out_dir / "grid.png");
    metrics::write_spectrum_png(mean_spectrum(generated), out_dir / "spectrum_generated.png");
    metrics::write_spectrum_png(mean_spectrum(test.thermal), out_dir / "spectrum_real.png");
    std::ofstream(out_dir / "report.json") << report.to_json().dump(2) << '\n';
  }
  return report;
}

models::Generator load_generator(const fs::path& checkpoint) {
  const CheckpointManifest m = read_checkpoint(checkpoint);
  const json spec = read_json(checkpoint / "spec.json");
  if (spec.value("kind", "") != "gan") throw DataError(checkpoint.string() + " is not a GAN checkpoint");
  models::Generator g(models::generator_spec_from_json(spec.at("generator")));
  try {
    torch::serialize::InputArchive params, ga;
    params.load_from(m.params.string());
    params.read("generator", ga);
    g->load(ga);
  } catch (const c10::Error& e) {
    throw DataError("cannot load generator from " + checkpoint.string() + ": " + e.what_without_backtrace());
  }
  g->eval();
  return g;
}

metrics::MetricsReport evaluate(const fs::path& checkpoint, const fs::path& manifest_path, const fs::path& out_dir,
                                const EvalOptions& options) {
  const CheckpointManifest m = read_checkpoint(checkpoint);
  const json meta = read_json(checkpoint / "meta.json");
  if (!options.expected_config_hash.empty() && options.expected_config_hash != m.config_hash) {
    std::cerr << "warning: checkpoint config hash " << m.config_hash << " differs from expected "
              << options.expected_config_hash << '\n';
  }
  TrainConfig config = config_from_toml({});
  try {
    const json& c = meta.at("config");
    config.variant = variant_from_string(c.at("variant"));
    config.resolution = c.at("resolution");
    config.allow_color = c.value("allow_color", false);
    config.timesteps = c.value("timesteps", config.timesteps);
  } catch (const json::exception& e) {
    throw DataError(checkpoint.string() + "/meta.json: " + e.what());
  }

  const dataio::Manifest manifest = dataio::load_manifest(manifest_path);
  if (manifest.count(dataio::Split::kTest) == 0) throw DataError(manifest_path.string() + ": test split is empty");
  dataio::PairedSet test = dataio::load_split(manifest, dataio::Split::kTest, config.resolution);
  auto extractor = metrics::make_feature_extractor(options.fid_model);

  GenerateFn generate;
  if (is_gan(config.variant)) {
    models::Generator g = load_generator(checkpoint);
    generate = [g](const torch::Tensor& visible) mutable { return g->forward(visible); };
  } else {
    if (!config.allow_color) {
      test.visible = dataio::luminance(test.visible).unsqueeze(1).contiguous();
      test.thermal = dataio::luminance(test.thermal).unsqueeze(1).contiguous();
    }
    const json spec = read_json(checkpoint / "spec.json");
    diffusion::Denoiser d(diffusion::denoiser_spec_from_json(spec.at("denoiser")));
    torch::serialize::InputArchive params, da;
    params.load_from(m.params.string());
    params.read("denoiser", da);
    d->load(da);
    d->eval();
    auto schedule = std::make_shared<diffusion::NoiseSchedule>(
        diffusion::build_schedule(spec.at("schedule").at("steps").get<int64_t>()));
    const core::RunSeed seed{options.sample_seed};
    auto batch_index = std::make_shared<uint64_t>(0);
    const int64_t channels = d->spec().target_channels;
    const bool color = config.allow_color;
    generate = [d, schedule, seed, batch_index, channels, color](const torch::Tensor& visible) mutable {
      return diffusion::sample(diffusion::as_predictor(d), visible, *schedule, seed.derive((*batch_index)++), channels,
                               color);
    };
  }
  metrics::MetricsReport report = evaluate_generator(generate, test, out_dir, *extractor, m.config_hash,
                                                     options.batch_size, options.grid_rows);
  report.meta["checkpoint"] = checkpoint.string();
  report.meta["variant"] = to_string(config.variant);
  if (!out_dir.empty()) std::ofstream(out_dir / "report.json") << report.to_json().dump(2) << '\n';
  return report;
}

// ---------------------------------------------------------------------------

const AblationRow& AblationReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw ContractError("no ablation row named " + name);
}

std::string AblationReport::markdown() const {
  std::string model = variant == "vtf_gan_fft_p" ? "VTF-GAN-FFT-P" : variant == "vtf_gan_fft_g" ? "VTF-GAN-FFT-G" : "VTF-GAN";
  std::ostringstream s;
  s << "| Model | FID | DBCNN | MSE SPEC |\n|---|---:|---:|---:|\n";
  s << std::fixed << std::setprecision(3);
  for (const auto& r : rows) {
    std::string label = model;
    if (r.name == "-temp") label += " (-Temp Loss)";
    if (r.name == "-patch") label += " (-Patch Loss)";
    s << "| " << label << " | " << r.report.fid << " | "
      << (r.report.dbcnn ? std::to_string(*r.report.dbcnn) : std::string("n/a")) << " | " << r.report.mse_spec
      << " |\n";
  }
  return s.str();
}

json AblationReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"name", r.name},
                         {"ablate", std::vector<std::string>(r.ablate.begin(), r.ablate.end())},
                         {"report", r.report.to_json()},
                         {"final_losses", r.final_losses},
                         {"data_order_fingerprint", r.data_order_fingerprint},
                         {"patch_loss_evaluations", r.patch_loss_evaluations},
                         {"steps", r.steps}});
  }
  return {{"variant", variant}, {"rows", rows_json}};
}

AblationReport ablate(const TrainConfig& base, const TrainHooks& hooks) {
  if (!is_gan(base.variant)) throw ConfigError("ablate needs a GAN variant");
  if (!base.resume_from.empty()) throw ConfigError("ablate starts fresh runs; resume_from must be empty");
  const TrainingData data = load_training_data(base);
  if (data.test.size() < 2) throw DataError("ablation needs at least two test pairs");
  auto extractor = metrics::make_feature_extractor(base.fid_model);

  AblationReport report;
  report.variant = to_string(base.variant);
  // Same order as the published ablation table.
  const std::vector<std::pair<std::string, std::set<std::string>>> plan{
      {"-temp", {"temp"}}, {"-patch", {"patch"}}, {"full", {}}};
  for (const auto& [name, terms] : plan) {
    TrainConfig config = base;
    config.ablate = terms;
    if (!base.out_dir.empty()) config.out_dir = (fs::path(base.out_dir) / ("run_" + name.substr(name[0] == '-'))).string();
    const int64_t patch_before = losses::patch_loss_evaluations();
    TrainResult run = train(config, hooks);
    AblationRow row;
    row.name = name;
    row.ablate = terms;
    row.patch_loss_evaluations = losses::patch_loss_evaluations() - patch_before;
    row.data_order_fingerprint = run.data_order_fingerprint;
    row.steps = run.last_step;

    const size_t tail = std::min<size_t>(10, run.trace.size());
    std::map<std::string, std::pair<double, int>> acc;
    for (size_t i = run.trace.size() - tail; i < run.trace.size(); ++i) {
      const StepRecord& r = run.trace[i];
      for (const auto& [key, v] : {std::pair{"L_GAN", r.gan}, {"L_perc", r.perc}, {"L_temp", r.temp},
                                   {"L_patch", r.patch}, {"L_FFT", r.fft}, {"L_D_real", r.d_real},
                                   {"L_D_fake", r.d_fake}, {"L1", r.l1}}) {
        if (v) {
          acc[key].first += *v;
          acc[key].second += 1;
        }
      }
    }
    for (const auto& [key, sum] : acc) row.final_losses[key] = sum.first / sum.second;

    models::Generator g = run.gan->generator();
    g->eval();
    const fs::path eval_dir = config.out_dir.empty() ? fs::path{} : fs::path(config.out_dir) / "eval";
    row.report = evaluate_generator([&g](const torch::Tensor& v) { return g->forward(v); }, data.test, eval_dir,
                                    *extractor, run.config_hash);
    report.rows.push_back(std::move(row));
  }
  if (!base.out_dir.empty()) {
    std::ofstream(fs::path(base.out_dir) / "ablation.md") << report.markdown();
    std::ofstream(fs::path(base.out_dir) / "ablation.json") << report.to_json().dump(2) << '\n';
  }
  return report;
}

}  // namespace vtf::harness
