#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"
#include "vtf/harness.hpp"
#include "vtf/metrics.hpp"

namespace fs = std::filesystem;
using namespace vtf;

namespace {

void print_step(const harness::StepRecord& r, harness::Variant variant, int64_t every) {
  if (every <= 0 || r.step % every != 0) return;
  std::cout << "step " << r.step << " epoch " << r.epoch << std::fixed << std::setprecision(4);
  auto show = [](const char* name, const std::optional<double>& v) {
    if (v) std::cout << ' ' << name << '=' << *v;
  };
  if (variant == harness::Variant::kVtfDiff) {
    show("loss", r.diffusion_mse);
  } else {
    show("L_GAN", r.gan);
    show("L_perc", r.perc);
    show("L_temp", r.temp);
    show("L_patch", r.patch);
    show("L_FFT", r.fft);
    show("L_D_real", r.d_real);
    show("L_D_fake", r.d_fake);
    show("L1", r.l1);
  }
  std::cout << std::defaultfloat << '\n';
}

int run_train(const std::string& config_path, bool want_gan, int64_t log_every) {
  const harness::TrainConfig config = harness::load_config(config_path);
  if (harness::is_gan(config.variant) != want_gan) {
    throw ConfigError(std::string("variant ") + harness::to_string(config.variant) + " does not belong to " +
                      (want_gan ? "train-gan" : "train-diff"));
  }
  harness::TrainHooks hooks;
  hooks.on_step = [&](const harness::StepRecord& r) { print_step(r, config.variant, log_every); };
  hooks.on_checkpoint = [](const harness::CheckpointManifest& m) {
    std::cout << "checkpoint " << m.dir.string() << " (step " << m.step << ", " << m.epoch << " epochs complete)\n";
  };
  const harness::TrainResult result = harness::train(config, hooks);
  std::cout << "finished " << result.last_step << " steps, config " << result.config_hash << '\n';
  return 0;
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Pairs <root>/<subject>/visible/<stem>.png with <root>/<subject>/thermal/<stem>.png.
// Whole subjects go to the test split so no face appears in both.
dataio::Manifest manifest_from_tree(const fs::path& root, double test_fraction) {
  std::vector<fs::path> subjects;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) subjects.push_back(e.path());
  }
  std::sort(subjects.begin(), subjects.end());
  if (subjects.empty()) throw DataError(root.string() + ": no subject directories");
  const auto n_test = static_cast<size_t>(std::ceil(test_fraction * static_cast<double>(subjects.size())));

  dataio::Manifest manifest;
  manifest.root = root;
  for (size_t i = 0; i < subjects.size(); ++i) {
    const std::string subject = subjects[i].filename().string();
    if (!fs::is_directory(subjects[i] / "visible") || !fs::is_directory(subjects[i] / "thermal")) {
      throw DataError(subjects[i].string() + ": expected visible/ and thermal/ subdirectories");
    }
    for (const auto& v : png_files(subjects[i] / "visible")) {
      const fs::path t = subjects[i] / "thermal" / v.filename();
      if (!fs::is_regular_file(t)) throw DataError("no thermal counterpart for " + v.string());
      manifest.entries.push_back({subject + "_" + v.stem().string(), v, t,
                                  i + n_test >= subjects.size() ? dataio::Split::kTest : dataio::Split::kTrain,
                                  subject});
    }
  }
  if (manifest.entries.empty()) throw DataError(root.string() + ": no image pairs found");
  return manifest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visible-to-thermal face translation: data, training, evaluation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth-data", "Write a synthetic paired face dataset with manifest.json");
  int64_t n = 64, size = 64;
  uint64_t seed = 0;
  double test_fraction = 0.25;
  std::string out;
  synth->add_option("--n", n, "number of pairs")->check(CLI::PositiveNumber);
  synth->add_option("--size", size, "image side in pixels")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--test-fraction", test_fraction, "share of pairs in the test split")->check(CLI::Range(0.0, 0.99));
  synth->add_option("--out", out, "output directory")->required();

  auto* make_manifest = app.add_subcommand(
      "make-manifest", "Index a <root>/<subject>/{visible,thermal}/<name>.png tree as manifest.json");
  std::string data_root;
  make_manifest->add_option("--root", data_root, "dataset root")->required()->check(CLI::ExistingDirectory);
  make_manifest->add_option("--test-fraction", test_fraction, "share of subjects in the test split")
      ->check(CLI::Range(0.0, 0.99));
  make_manifest->add_option("--out", out, "manifest path (default <root>/manifest.json)");

  std::string config_path;
  int64_t log_every = 10;
  auto* train_gan = app.add_subcommand("train-gan", "Train a GAN variant from a TOML config");
  train_gan->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train_gan->add_option("--log-every", log_every, "print every n-th step (0: silent)");
  auto* train_diff = app.add_subcommand("train-diff", "Train the conditional diffusion model from a TOML config");
  train_diff->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train_diff->add_option("--log-every", log_every, "print every n-th step (0: silent)");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test split of a manifest");
  std::string checkpoint, manifest, fid_model, expected_hash;
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "directory for report.json and figures")->required();
  eval->add_option("--fid-model", fid_model, "TorchScript feature network for FID");
  eval->add_option("--config-hash", expected_hash, "warn if the checkpoint was trained with another config");
  eval->add_option("--seed", seed, "sampling seed (diffusion)");

  auto* spectra = app.add_subcommand("spectra", "Write log-magnitude spectra of every PNG in a directory");
  std::string images;
  spectra->add_option("--images", images, "directory of PNG files")->required()->check(CLI::ExistingDirectory);
  spectra->add_option("--out", out)->required();

  auto* ablation = app.add_subcommand("ablate", "Train full, -temp and -patch runs and tabulate their metrics");
  ablation->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  ablation->add_option("--log-every", log_every, "print every n-th step (0: silent)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      dataio::SyntheticFaceParams params;
      params.image_size = size;
      const auto m = dataio::write_synthetic_dataset(params, n, core::RunSeed{seed}, test_fraction, out);
      std::cout << "wrote " << m.count(dataio::Split::kTrain) << " train / " << m.count(dataio::Split::kTest)
                << " test pairs to " << (fs::path(out) / "manifest.json").string() << '\n';
    } else if (make_manifest->parsed()) {
      const dataio::Manifest m = manifest_from_tree(data_root, test_fraction);
      const fs::path path = out.empty() ? fs::path(data_root) / "manifest.json" : fs::path(out);
      dataio::save_manifest(m, path);
      dataio::load_manifest(path);
      std::cout << "wrote " << m.count(dataio::Split::kTrain) << " train / " << m.count(dataio::Split::kTest)
                << " test pairs to " << path.string() << '\n';
    } else if (train_gan->parsed()) {
      return run_train(config_path, true, log_every);
    } else if (train_diff->parsed()) {
      return run_train(config_path, false, log_every);
    } else if (eval->parsed()) {
      harness::EvalOptions options;
      options.fid_model = fid_model;
      options.expected_config_hash = expected_hash;
      options.sample_seed = seed;
      const auto report = harness::evaluate(checkpoint, manifest, out, options);
      std::cout << report.to_json().dump(2) << '\n';
      if (report.meta.contains("seconds_per_image")) {
        std::cout << "seconds per image: " << report.meta["seconds_per_image"].get<double>() << '\n';
      }
    } else if (spectra->parsed()) {
      fs::create_directories(out);
      const auto files = png_files(images);
      for (const auto& f : files) {
        const core::ImageTensor img = core::normalize(dataio::read_png(f));
        metrics::write_spectrum_png(metrics::magnitude_spectrum(img.data()),
                                    fs::path(out) / (f.stem().string() + "_spectrum.png"));
      }
      std::cout << "wrote " << files.size() << " spectra to " << out << '\n';
    } else if (ablation->parsed()) {
      const harness::TrainConfig config = harness::load_config(config_path);
      harness::TrainHooks hooks;
      hooks.on_step = [&](const harness::StepRecord& r) { print_step(r, config.variant, log_every); };
      const auto report = harness::ablate(config, hooks);
      std::cout << report.markdown();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
