#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vtf/losses.hpp"

namespace vtf::harness {

/// Flat TOML subset: `key = value` lines with strings, integers, floats,
/// booleans and single-level arrays. Tables are rejected.
using TomlValue = std::variant<bool, int64_t, double, std::string, std::vector<std::string>>;
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);

enum class Variant { kVtfGan, kVtfGanFftP, kVtfGanFftG, kVtfDiff };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool is_gan(Variant v);
losses::GanVariant gan_variant(Variant v);

struct TrainConfig {
  Variant variant = Variant::kVtfGan;
  int64_t batch_size = 32;
  int64_t epochs = 200;
  double lr = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.99;
  uint64_t seed = 0;
  int64_t resolution = 256;
  bool mixed_precision = false;
  std::set<std::string> ablate;

  // data
  std::string manifest;            // empty: generate synthetic pairs in memory
  int64_t synthetic_pairs = 32;
  int64_t synthetic_test_pairs = 8;
  int64_t loader_workers = 1;

  // run control
  std::string out_dir;             // empty: no files written
  std::string resume_from;         // checkpoint directory
  int64_t max_steps = 0;           // 0: run all epochs
  int64_t checkpoint_every = 1;    // epochs; 0 disables
  bool deterministic = true;

  // GAN
  int64_t gen_base_width = 64;
  int64_t gen_max_width = 512;
  int64_t disc_base_width = 64;
  int64_t disc_max_width = 512;
  int64_t d_steps_per_g = 1;
  double w_gan = 1.0;
  double w_perc = 1.0;
  double w_temp = 1.0;
  double w_patch = 1.0;
  double w_fft = 1.0;
  int64_t patch_count = 16;
  std::string phase_distance = "raw";
  std::string perceptual_model;    // TorchScript file; empty: random-conv features
  std::string fid_model;

  // diffusion
  int64_t timesteps = 500;
  int64_t diff_base_width = 32;
  int64_t diff_levels = 2;
  bool allow_color = false;

  void validate() const;
  losses::LossWeights weights() const;
  losses::PhaseDistance phase_mode() const;
  bool ablated(const std::string& term) const { return ablate.count(term) > 0; }
};

/// Paper-scale defaults for a variant (256x256 / batch 32 GAN, 128x128 / batch 12 diffusion).
TrainConfig paper_preset(Variant v);
/// Small CPU preset used by the acceptance runs (64x64 GAN / 32x32 diffusion).
TrainConfig desk_preset(Variant v);

/// `preset` and `variant` pick the starting point; every other key overrides a field.
TrainConfig config_from_toml(const TomlTable& table);
TrainConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const TrainConfig& config);

/// FNV-1a over the canonical JSON of the fields that shape training
/// (paths, run length and checkpoint cadence are excluded).
std::string config_hash(const TrainConfig& config);

}  // namespace vtf::harness
