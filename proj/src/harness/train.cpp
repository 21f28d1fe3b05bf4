#include "vtf/harness/train.hpp"

#include <ATen/autocast_mode.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vtf/errors.hpp"

#ifndef VTF_GIT_HASH
#define VTF_GIT_HASH "unknown"
#endif

namespace vtf::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams. Each consumer of randomness gets its own branch of the run seed.
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kEpochStream = 2;
constexpr uint64_t kStepStream = 3;
constexpr uint64_t kPerceptualStream = 4;
constexpr uint64_t kTrainDataStream = 5;
constexpr uint64_t kTestDataStream = 6;

class AutocastGuard {
 public:
  explicit AutocastGuard(bool on) : on_(on) {
    if (!on_) return;
    previous_ = at::autocast::is_autocast_enabled(at::kCPU);
    at::autocast::set_autocast_dtype(at::kCPU, at::kBFloat16);
    at::autocast::set_autocast_enabled(at::kCPU, true);
  }
  ~AutocastGuard() {
    if (!on_) return;
    at::autocast::set_autocast_enabled(at::kCPU, previous_);
    if (!previous_) at::autocast::clear_cache();
  }
  AutocastGuard(const AutocastGuard&) = delete;
  AutocastGuard& operator=(const AutocastGuard&) = delete;

 private:
  bool on_;
  bool previous_ = false;
};

// Freezes parameters for the lifetime of the guard.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<torch::Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.set_requires_grad(true);
  }

 private:
  std::vector<torch::Tensor> params_;
};

double value_of(const torch::Tensor& t) { return t.detach().to(torch::kFloat64).item<double>(); }

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json checkpoint_meta(const std::string& kind, const TrainConfig& config, int64_t epoch, int64_t step,
                     const json& metrics) {
  return {{"kind", kind},
          {"git_hash", VTF_GIT_HASH},
          {"config_hash", config_hash(config)},
          {"epoch", epoch},
          {"step", step},
          {"config", to_json(config)},
          {"metrics", metrics}};
}

void check_resume_hash(const CheckpointManifest& m, const TrainConfig& config) {
  const std::string expected = config_hash(config);
  if (m.config_hash != expected) {
    throw ConfigError("checkpoint " + m.dir.string() + " was written by config " + m.config_hash +
                      ", current config is " + expected);
  }
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(17) << *v;
  return s.str();
}

}  // namespace

std::string csv_header(Variant v) {
  if (v == Variant::kVtfDiff) return "step,loss";
  return "step,L_GAN,L_perc,L_temp,L_patch,L_FFT,L_D_real,L_D_fake";
}

std::string csv_row(const StepRecord& r, Variant v) {
  std::ostringstream s;
  s << r.step;
  if (v == Variant::kVtfDiff) {
    s << ',' << format_optional(r.diffusion_mse);
  } else {
    for (const auto* field : {&r.gan, &r.perc, &r.temp, &r.patch, &r.fft, &r.d_real, &r.d_fake}) {
      s << ',' << format_optional(*field);
    }
  }
  return s.str();
}

json CheckpointManifest::to_json() const {
  return {{"epoch", epoch},
          {"step", step},
          {"dir", dir.string()},
          {"params", params.string()},
          {"optimizer", optimizer.string()},
          {"config_hash", config_hash},
          {"metrics", metrics}};
}

CheckpointManifest read_checkpoint(const fs::path& dir) {
  const json meta = read_json(dir / "meta.json");
  CheckpointManifest m;
  m.dir = dir;
  m.params = dir / "params.bin";
  m.optimizer = dir / "optimizer.bin";
  for (const auto& p : {m.params, dir / "spec.json"}) {
    if (!fs::is_regular_file(p)) throw DataError("checkpoint " + dir.string() + " is missing " + p.filename().string());
  }
  try {
    m.epoch = meta.at("epoch");
    m.step = meta.at("step");
    m.config_hash = meta.at("config_hash");
    m.metrics = meta.value("metrics", json::object());
  } catch (const json::exception& e) {
    throw DataError(dir.string() + "/meta.json: " + e.what());
  }
  return m;
}

DynamicGradScaler::DynamicGradScaler(bool enabled, double init_scale, double growth, double backoff,
                                     int64_t growth_interval)
    : enabled_(enabled),
      scale_(enabled ? init_scale : 1.0),
      growth_(growth),
      backoff_(backoff),
      growth_interval_(growth_interval) {}

bool DynamicGradScaler::step(const torch::Tensor& loss, torch::optim::Optimizer& optimizer, const std::string& what) {
  (enabled_ ? loss * scale_ : loss).backward();
  bool finite = true;
  for (const auto& group : optimizer.param_groups()) {
    for (const auto& p : group.params()) {
      if (p.grad().defined() && !torch::isfinite(p.grad()).all().item<bool>()) finite = false;
    }
  }
  if (!finite) {
    if (!enabled_) throw TrainingError(what + " gradient is non-finite");
    scale_ *= backoff_;
    good_steps_ = 0;
    optimizer.zero_grad();
    return false;
  }
  if (enabled_) {
    torch::NoGradGuard no_grad;
    for (auto& group : optimizer.param_groups()) {
      for (auto& p : group.params()) {
        if (p.grad().defined()) p.mutable_grad().div_(scale_);
      }
    }
  }
  optimizer.step();
  if (enabled_ && ++good_steps_ == growth_interval_) {
    scale_ *= growth_;
    good_steps_ = 0;
  }
  return true;
}

json DynamicGradScaler::state() const { return {{"scale", scale_}, {"good_steps", good_steps_}}; }

void DynamicGradScaler::restore(const json& j) {
  scale_ = j.at("scale");
  good_steps_ = j.at("good_steps");
}

// ---------------------------------------------------------------------------

GanTrainer::GanTrainer(const TrainConfig& config)
    : config_(config),
      seed_{config.seed},
      g_scaler_(config.mixed_precision),
      d_scaler_(config.mixed_precision) {
  config_.validate();
  if (!is_gan(config_.variant)) throw ConfigError("GanTrainer needs a GAN variant");
  torch::manual_seed(seed_.derive(kInitStream).value);
  models::GeneratorSpec gs;
  gs.base_width = config_.gen_base_width;
  gs.max_width = config_.gen_max_width;
  models::DiscriminatorSpec ds;
  ds.base_width = config_.disc_base_width;
  ds.max_width = config_.disc_max_width;
  generator_ = models::Generator(gs);
  discriminator_ = models::Discriminator(ds);
  models::init_weights(*generator_);
  models::init_weights(*discriminator_);
  const auto adam = torch::optim::AdamOptions(config_.lr).betas({config_.adam_beta1, config_.adam_beta2});
  g_optim_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), adam);
  d_optim_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(), adam);
  perceptual_ = losses::make_perceptual_extractor(config_.perceptual_model, seed_.derive(kPerceptualStream).value);
}

torch::Tensor GanTrainer::generator_phase(const torch::Tensor& visible, const torch::Tensor& thermal,
                                          int64_t global_step, StepRecord& record) {
  const core::RunSeed s = seed_.derive(kStepStream).derive(static_cast<uint64_t>(global_step));
  torch::manual_seed(s.derive(0).value);  // dropout masks
  generator_->train();
  discriminator_->train();
  g_optim_->zero_grad();
  d_optim_->zero_grad();
  FreezeGuard frozen(discriminator_->parameters());

  torch::Tensor fake, fake_logits, real_logits;
  {
    AutocastGuard amp(config_.mixed_precision);
    fake = generator_->forward(visible);
    fake_logits = discriminator_->forward(visible, fake);
    real_logits = discriminator_->forward(visible, thermal);
  }
  fake = fake.to(torch::kFloat32);
  fake_logits = fake_logits.to(torch::kFloat32);
  real_logits = real_logits.to(torch::kFloat32);

  losses::GeneratorLossParts parts;
  try {
    parts.gan = losses::gan_generator_adv(fake_logits, real_logits);
  } catch (const NumericalError& e) {
    throw TrainingError(std::string("L_GAN: ") + e.what());
  }
  parts.perc = losses::perceptual_loss(fake, thermal, *perceptual_);
  if (!config_.ablated("temp")) parts.temp = losses::temperature_loss(fake, thermal, dataio::JitterParams{}, s.derive(2));
  if (!config_.ablated("patch")) parts.patch = losses::patch_loss(fake, thermal, config_.patch_count, s.derive(1));
  if (config_.variant == Variant::kVtfGanFftP) {
    parts.fft = losses::fft_loss_patch(fake, thermal, config_.patch_count, config_.phase_mode()).total;
  } else if (config_.variant == Variant::kVtfGanFftG) {
    parts.fft = losses::fft_loss_global(fake, thermal, config_.phase_mode()).total;
  }
  const torch::Tensor total = losses::total_generator_loss(parts, gan_variant(config_.variant), config_.weights());
  g_scaler_.step(total, *g_optim_, "generator");

  auto maybe = [](const torch::Tensor& t) -> std::optional<double> {
    return t.defined() ? std::optional<double>(value_of(t)) : std::nullopt;
  };
  record.step = global_step;
  record.gan = maybe(parts.gan);
  record.perc = maybe(parts.perc);
  record.temp = maybe(parts.temp);
  record.patch = maybe(parts.patch);
  record.fft = maybe(parts.fft);
  record.generator_total = value_of(total);
  record.l1 = value_of((fake.detach() - thermal).abs().mean());
  return fake.detach();
}

void GanTrainer::discriminator_phase(const torch::Tensor& visible, const torch::Tensor& thermal,
                                     const torch::Tensor& generated, StepRecord& record) {
  const torch::Tensor fake = generated.detach();
  discriminator_->train();
  for (int64_t i = 0; i < config_.d_steps_per_g; ++i) {
    d_optim_->zero_grad();
    torch::Tensor real_logits, fake_logits;
    {
      AutocastGuard amp(config_.mixed_precision);
      real_logits = discriminator_->forward(visible, thermal);
      fake_logits = discriminator_->forward(visible, fake);
    }
    losses::DiscriminatorLoss loss;
    try {
      loss = losses::discriminator_loss(real_logits.to(torch::kFloat32), fake_logits.to(torch::kFloat32));
    } catch (const NumericalError& e) {
      throw TrainingError(std::string("L_D: ") + e.what());
    }
    if (!torch::isfinite(loss.total).item<bool>()) throw TrainingError("L_D is non-finite");
    d_scaler_.step(loss.total, *d_optim_, "discriminator");
    record.d_real = value_of(loss.real);
    record.d_fake = value_of(loss.fake);
  }
}

StepRecord GanTrainer::step(const torch::Tensor& visible, const torch::Tensor& thermal, int64_t global_step) {
  if (visible.dim() != 4 || !visible.sizes().equals(thermal.sizes())) {
    throw ShapeError("gan step expects matching [N,3,H,W] visible/thermal batches");
  }
  StepRecord record;
  const torch::Tensor fake = generator_phase(visible, thermal, global_step, record);
  discriminator_phase(visible, thermal, fake, record);
  return record;
}

CheckpointManifest GanTrainer::save(const fs::path& dir, int64_t epoch, int64_t step, const json& metrics) const {
  fs::create_directories(dir);
  torch::serialize::OutputArchive params, g, d;
  generator_->save(g);
  discriminator_->save(d);
  params.write("generator", g);
  params.write("discriminator", d);
  params.save_to((dir / "params.bin").string());

  torch::serialize::OutputArchive optim, go, dopt;
  g_optim_->save(go);
  d_optim_->save(dopt);
  optim.write("generator", go);
  optim.write("discriminator", dopt);
  optim.save_to((dir / "optimizer.bin").string());

  write_json({{"kind", "gan"},
              {"generator", models::to_json(generator_->spec())},
              {"discriminator", models::to_json(discriminator_->spec())}},
             dir / "spec.json");
  json meta = checkpoint_meta("gan", config_, epoch, step, metrics);
  meta["scaler"] = {{"generator", g_scaler_.state()}, {"discriminator", d_scaler_.state()}};
  write_json(meta, dir / "meta.json");
  return read_checkpoint(dir);
}

CheckpointManifest GanTrainer::load(const fs::path& dir) {
  CheckpointManifest m = read_checkpoint(dir);
  const json meta = read_json(dir / "meta.json");
  if (meta.value("kind", "") != "gan") throw DataError(dir.string() + " is not a GAN checkpoint");
  check_resume_hash(m, config_);
  try {
    torch::serialize::InputArchive params, g, d;
    params.load_from(m.params.string());
    params.read("generator", g);
    params.read("discriminator", d);
    generator_->load(g);
    discriminator_->load(d);
    if (fs::is_regular_file(m.optimizer)) {
      torch::serialize::InputArchive optim, go, dopt;
      optim.load_from(m.optimizer.string());
      optim.read("generator", go);
      optim.read("discriminator", dopt);
      g_optim_->load(go);
      d_optim_->load(dopt);
    }
  } catch (const c10::Error& e) {
    throw DataError("cannot restore " + dir.string() + ": " + e.what_without_backtrace());
  }
  if (meta.contains("scaler")) {
    g_scaler_.restore(meta["scaler"]["generator"]);
    d_scaler_.restore(meta["scaler"]["discriminator"]);
  }
  return m;
}

// ---------------------------------------------------------------------------

DiffusionTrainer::DiffusionTrainer(const TrainConfig& config)
    : config_(config), seed_{config.seed}, scaler_(config.mixed_precision) {
  config_.validate();
  if (is_gan(config_.variant)) throw ConfigError("DiffusionTrainer needs variant vtf_diff");
  torch::manual_seed(seed_.derive(kInitStream).value);
  diffusion::DenoiserSpec spec;
  const int64_t channels = config_.allow_color ? 3 : 1;
  spec.condition_channels = channels;
  spec.target_channels = channels;
  spec.base_width = config_.diff_base_width;
  spec.levels = config_.diff_levels;
  denoiser_ = diffusion::Denoiser(spec);
  schedule_ = diffusion::build_schedule(config_.timesteps);
  optim_ = std::make_unique<torch::optim::Adam>(
      denoiser_->parameters(), torch::optim::AdamOptions(config_.lr).betas({config_.adam_beta1, config_.adam_beta2}));
}

StepRecord DiffusionTrainer::step(const torch::Tensor& visible, const torch::Tensor& thermal, int64_t global_step) {
  const core::RunSeed s = seed_.derive(kStepStream).derive(static_cast<uint64_t>(global_step));
  torch::manual_seed(s.derive(0).value);
  denoiser_->train();
  optim_->zero_grad();
  torch::Tensor loss;
  {
    AutocastGuard amp(config_.mixed_precision);
    loss = diffusion::diffusion_loss(diffusion::as_predictor(denoiser_), visible, thermal, schedule_, s.derive(3),
                                     config_.allow_color)
               .loss;
  }
  loss = loss.to(torch::kFloat32);
  if (!torch::isfinite(loss).item<bool>()) throw TrainingError("diffusion noise-prediction loss is non-finite");
  scaler_.step(loss, *optim_, "denoiser");
  StepRecord record;
  record.step = global_step;
  record.diffusion_mse = value_of(loss);
  return record;
}

CheckpointManifest DiffusionTrainer::save(const fs::path& dir, int64_t epoch, int64_t step, const json& metrics) const {
  fs::create_directories(dir);
  torch::serialize::OutputArchive params, d;
  denoiser_->save(d);
  params.write("denoiser", d);
  params.save_to((dir / "params.bin").string());
  torch::serialize::OutputArchive optim;
  optim_->save(optim);
  optim.save_to((dir / "optimizer.bin").string());
  write_json({{"kind", "diffusion"},
              {"denoiser", diffusion::to_json(denoiser_->spec())},
              {"schedule", {{"steps", schedule_.steps}, {"offset", 0.008}, {"max_beta", 0.999}}}},
             dir / "spec.json");
  json meta = checkpoint_meta("diffusion", config_, epoch, step, metrics);
  meta["scaler"] = scaler_.state();
  write_json(meta, dir / "meta.json");
  return read_checkpoint(dir);
}

CheckpointManifest DiffusionTrainer::load(const fs::path& dir) {
  CheckpointManifest m = read_checkpoint(dir);
  const json meta = read_json(dir / "meta.json");
  if (meta.value("kind", "") != "diffusion") throw DataError(dir.string() + " is not a diffusion checkpoint");
  check_resume_hash(m, config_);
  try {
    torch::serialize::InputArchive params, d;
    params.load_from(m.params.string());
    params.read("denoiser", d);
    denoiser_->load(d);
    if (fs::is_regular_file(m.optimizer)) {
      torch::serialize::InputArchive optim;
      optim.load_from(m.optimizer.string());
      optim_->load(optim);
    }
  } catch (const c10::Error& e) {
    throw DataError("cannot restore " + dir.string() + ": " + e.what_without_backtrace());
  }
  if (meta.contains("scaler")) scaler_.restore(meta["scaler"]);
  return m;
}

// ---------------------------------------------------------------------------

TrainingData load_training_data(const TrainConfig& config) {
  TrainingData data;
  const core::RunSeed seed{config.seed};
  if (!config.manifest.empty()) {
    const dataio::Manifest manifest = dataio::load_manifest(config.manifest);
    if (manifest.count(dataio::Split::kTrain) == 0) throw DataError(config.manifest + ": no training pairs");
    const int workers = static_cast<int>(config.loader_workers);
    data.train = dataio::load_split(manifest, dataio::Split::kTrain, config.resolution, workers);
    if (manifest.count(dataio::Split::kTest) > 0) {
      data.test = dataio::load_split(manifest, dataio::Split::kTest, config.resolution, workers);
    }
  } else {
    dataio::SyntheticFaceParams params;
    params.image_size = config.resolution;
    data.train = dataio::synth_set(params, config.synthetic_pairs, seed.derive(kTrainDataStream));
    if (config.synthetic_test_pairs > 0) {
      data.test = dataio::synth_set(params, config.synthetic_test_pairs, seed.derive(kTestDataStream));
    }
  }
  if (config.variant == Variant::kVtfDiff && !config.allow_color) {
    for (auto* set : {&data.train, &data.test}) {
      if (set->size() == 0) continue;
      set->visible = dataio::luminance(set->visible).unsqueeze(1).contiguous();
      set->thermal = dataio::luminance(set->thermal).unsqueeze(1).contiguous();
    }
  }
  return data;
}

namespace {

// Keeps the header and the rows up to `last_step`; used when resuming into an existing run directory.
void truncate_trace(const fs::path& csv, int64_t last_step, const std::string& header) {
  std::vector<std::string> kept{header};
  if (std::ifstream in(csv); in) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= last_step) kept.push_back(line);
    }
  }
  std::ofstream out(csv, std::ios::trunc);
  for (const auto& l : kept) out << l << '\n';
}

void accumulate(json& sums, const StepRecord& r) {
  auto add = [&](const char* key, const std::optional<double>& v) {
    if (v) sums[key] = sums.value(key, 0.0) + *v;
  };
  add("L_GAN", r.gan);
  add("L_perc", r.perc);
  add("L_temp", r.temp);
  add("L_patch", r.patch);
  add("L_FFT", r.fft);
  add("L_D_real", r.d_real);
  add("L_D_fake", r.d_fake);
  add("L1", r.l1);
  add("loss", r.diffusion_mse);
}

template <typename Trainer>
void run_loop(const TrainConfig& config, const TrainHooks& hooks, Trainer& trainer, TrainResult& result) {
  const TrainingData data = load_training_data(config);
  const int64_t n = data.train.size();
  const int64_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const core::RunSeed seed{config.seed};

  int64_t step = 0;
  if (!config.resume_from.empty()) step = trainer.load(config.resume_from).step;

  const fs::path out = config.out_dir;
  std::ofstream csv;
  if (!out.empty()) {
    fs::create_directories(out);
    write_json(to_json(config), out / "config.json");
    const fs::path trace = out / "losses.csv";
    if (step > 0) truncate_trace(trace, step, csv_header(config.variant));
    else std::ofstream(trace, std::ios::trunc) << csv_header(config.variant) << '\n';
    csv.open(trace, std::ios::app);
  }

  auto save = [&](const fs::path& dir, int64_t epoch, const json& metrics) {
    CheckpointManifest m = trainer.save(dir, epoch, step, metrics);
    std::ofstream(out / "checkpoints.jsonl", std::ios::app) << m.to_json().dump() << '\n';
    result.checkpoints.push_back(m);
    if (hooks.on_checkpoint) hooks.on_checkpoint(m);
  };

  uint64_t fingerprint = 0xcbf29ce484222325ULL;
  auto budget_left = [&] { return config.max_steps == 0 || step < config.max_steps; };
  for (int64_t epoch = step / per_epoch + 1; epoch <= config.epochs && budget_left(); ++epoch) {
    const auto batches = dataio::epoch_batches(n, config.batch_size, seed.derive(kEpochStream).derive(epoch));
    json sums = json::object();
    int64_t taken = 0;
    for (size_t b = static_cast<size_t>(step % per_epoch); b < batches.size() && budget_left(); ++b) {
      ++step;
      ++taken;
      for (int64_t i : batches[b]) fingerprint = core::mix64(fingerprint ^ static_cast<uint64_t>(i));
      const torch::Tensor idx = torch::tensor(batches[b], torch::kLong);
      StepRecord record =
          trainer.step(data.train.visible.index_select(0, idx), data.train.thermal.index_select(0, idx), step);
      record.epoch = epoch;
      accumulate(sums, record);
      if (csv.is_open()) csv << csv_row(record, config.variant) << '\n' << std::flush;
      result.trace.push_back(record);
      if (hooks.on_step) hooks.on_step(record);
    }
    for (auto& [key, value] : sums.items()) value = value.template get<double>() / static_cast<double>(taken);
    result.last_epoch = epoch;
    const bool epoch_done = step % per_epoch == 0;
    if (!out.empty() && epoch_done && config.checkpoint_every > 0 &&
        (epoch % config.checkpoint_every == 0 || epoch == config.epochs)) {
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << epoch;
      save(out / "checkpoints" / name.str(), epoch, sums);
    }
  }
  if (!out.empty() && step > 0) save(out / "checkpoints" / "final", step / per_epoch, json::object());
  result.last_step = step;
  result.data_order_fingerprint = fingerprint;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (config.deterministic) at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
  TrainResult result;
  result.config_hash = config_hash(config);
  try {
    if (is_gan(config.variant)) {
      result.gan = std::make_shared<GanTrainer>(config);
      run_loop(config, hooks, *result.gan, result);
    } else {
      result.diffusion = std::make_shared<DiffusionTrainer>(config);
      run_loop(config, hooks, *result.diffusion, result);
    }
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(std::string("training I/O: ") + e.what());
  }
  return result;
}

std::vector<double> smooth(const std::vector<double>& values, int64_t window) {
  if (window < 1) throw ContractError("smoothing window must be positive");
  std::vector<double> out(values.size());
  const auto n = static_cast<int64_t>(values.size());
  const int64_t half = window / 2;
  for (int64_t i = 0; i < n; ++i) {
    const int64_t lo = std::max<int64_t>(0, i - half), hi = std::min(n, i - half + window);
    double sum = 0.0;
    for (int64_t j = lo; j < hi; ++j) sum += values[static_cast<size_t>(j)];
    out[static_cast<size_t>(i)] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

}  // namespace vtf::harness
