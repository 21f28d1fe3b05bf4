#include "vtf/harness/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "vtf/core.hpp"
#include "vtf/errors.hpp"

namespace vtf::harness {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Drops a trailing comment, ignoring '#' inside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  TomlValue parse() {
    TomlValue v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string string_literal() {
    const char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      char c = s_[pos_++];
      if (quote == '"' && c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  TomlValue scalar() {
    size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && !std::isspace(static_cast<unsigned char>(s_[end]))) {
      ++end;
    }
    std::string tok = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char c : tok) {
      if (c != '_') digits.push_back(c);
    }
    if (digits.empty()) fail("missing value");
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
    try {
      size_t used = 0;
      if (is_float) {
        const double d = std::stod(digits, &used);
        if (used == digits.size()) return d;
      } else {
        const long long i = std::stoll(digits, &used, 10);
        if (used == digits.size()) return static_cast<int64_t>(i);
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  TomlValue value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"' || c == '\'') return string_literal();
    if (c == '[') {
      ++pos_;
      std::vector<std::string> items;
      for (;;) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return items;
        }
        TomlValue item = value();
        if (auto* str = std::get_if<std::string>(&item)) items.push_back(*str);
        else fail("only string arrays are supported");
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ',') ++pos_;
        else if (pos_ >= s_.size() || s_[pos_] != ']') fail("expected ',' or ']' in array");
      }
    }
    if (c == '{') fail("inline tables are not supported");
    return scalar();
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_;
};

bool bare_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string raw, pending;
  int line = 0, start_line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string content = trim(strip_comment(raw));
    if (pending.empty()) {
      if (content.empty()) continue;
      if (content.front() == '[') throw ConfigError("line " + std::to_string(line) + ": tables are not supported");
      start_line = line;
    }
    pending += pending.empty() ? content : " " + content;
    // Arrays may continue over several lines.
    const auto eq = pending.find('=');
    if (eq != std::string::npos) {
      const std::string rhs = trim(pending.substr(eq + 1));
      if (!rhs.empty() && rhs.front() == '[' && std::count(rhs.begin(), rhs.end(), '[') >
                                                     std::count(rhs.begin(), rhs.end(), ']')) {
        continue;
      }
    }
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(start_line) + ": expected key = value");
    const std::string key = trim(pending.substr(0, eq));
    if (!bare_key(key)) throw ConfigError("line " + std::to_string(start_line) + ": invalid key '" + key + "'");
    if (table.count(key)) throw ConfigError("line " + std::to_string(start_line) + ": duplicate key '" + key + "'");
    const std::string rhs = trim(pending.substr(eq + 1));
    table[key] = ValueParser(rhs, start_line).parse();
    pending.clear();
  }
  if (!pending.empty()) throw ConfigError("line " + std::to_string(start_line) + ": unterminated array");
  return table;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kVtfGan: return "vtf_gan";
    case Variant::kVtfGanFftP: return "vtf_gan_fft_p";
    case Variant::kVtfGanFftG: return "vtf_gan_fft_g";
    case Variant::kVtfDiff: return "vtf_diff";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::kVtfGan, Variant::kVtfGanFftP, Variant::kVtfGanFftG, Variant::kVtfDiff}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown variant '" + s + "'");
}

bool is_gan(Variant v) { return v != Variant::kVtfDiff; }

losses::GanVariant gan_variant(Variant v) {
  switch (v) {
    case Variant::kVtfGan: return losses::GanVariant::kBase;
    case Variant::kVtfGanFftP: return losses::GanVariant::kFftPatch;
    case Variant::kVtfGanFftG: return losses::GanVariant::kFftGlobal;
    default: throw ConfigError("vtf_diff has no GAN loss composition");
  }
}

void TrainConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive("batch_size", static_cast<double>(batch_size));
  positive("epochs", static_cast<double>(epochs));
  positive("lr", lr);
  positive("resolution", static_cast<double>(resolution));
  positive("synthetic_pairs", static_cast<double>(synthetic_pairs));
  positive("loader_workers", static_cast<double>(loader_workers));
  positive("d_steps_per_g", static_cast<double>(d_steps_per_g));
  positive("timesteps", static_cast<double>(timesteps));
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0, 1)");
  if (max_steps < 0 || checkpoint_every < 0 || synthetic_test_pairs < 0) {
    throw ConfigError("max_steps, checkpoint_every and synthetic_test_pairs must be non-negative");
  }
  for (const auto& term : ablate) {
    if (term != "temp" && term != "patch") throw ConfigError("ablate accepts only 'temp' and 'patch', got '" + term + "'");
  }
  if (!ablate.empty() && !is_gan(variant)) throw ConfigError("ablate applies to GAN variants only");
  if (phase_distance != "raw" && phase_distance != "wrapped") throw ConfigError("phase_distance must be raw|wrapped");
  weights().validate();
  if (is_gan(variant)) {
    if (patch_count < 2) throw ConfigError("patch_count must be at least 2 (the negative excludes the anchor tile)");
    try {
      if (resolution % core::grid_side(patch_count) != 0) {
        throw ConfigError("resolution is not divisible by the patch grid side");
      }
    } catch (const ShapeError& e) {
      throw ConfigError(std::string("patch_count: ") + e.what());
    }
    if (resolution % 64 != 0) throw ConfigError("GAN resolution must be a multiple of 64");
    if (gen_base_width < 1 || gen_max_width < gen_base_width || disc_base_width < 1 ||
        disc_max_width < disc_base_width) {
      throw ConfigError("invalid network widths");
    }
  } else if (resolution % (int64_t{1} << (diff_levels - 1)) != 0 || diff_levels < 1) {
    throw ConfigError("diffusion resolution must be divisible by 2^(diff_levels-1)");
  }
}

losses::LossWeights TrainConfig::weights() const { return {w_gan, w_perc, w_temp, w_patch, w_fft}; }

losses::PhaseDistance TrainConfig::phase_mode() const {
  return phase_distance == "wrapped" ? losses::PhaseDistance::kWrapped : losses::PhaseDistance::kRaw;
}

TrainConfig paper_preset(Variant v) {
  TrainConfig c;
  c.variant = v;
  if (v == Variant::kVtfDiff) {
    c.batch_size = 12;
    c.resolution = 128;
  }
  return c;
}

TrainConfig desk_preset(Variant v) {
  TrainConfig c = paper_preset(v);
  if (v == Variant::kVtfDiff) {
    c.resolution = 32;
    c.batch_size = 8;
    c.synthetic_pairs = 16;
    c.diff_base_width = 16;
  } else {
    c.resolution = 64;
    c.batch_size = 8;
    c.synthetic_pairs = 32;
    c.gen_base_width = 16;
    c.gen_max_width = 128;
    c.disc_base_width = 16;
    c.disc_max_width = 128;
  }
  c.epochs = 1000;
  c.max_steps = 300;
  c.checkpoint_every = 0;
  return c;
}

namespace {

template <typename T>
T get_as(const std::string& key, const TomlValue& v);

template <>
bool get_as<bool>(const std::string& key, const TomlValue& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(key + ": expected a boolean");
}

template <>
int64_t get_as<int64_t>(const std::string& key, const TomlValue& v) {
  if (auto* i = std::get_if<int64_t>(&v)) return *i;
  throw ConfigError(key + ": expected an integer");
}

template <>
double get_as<double>(const std::string& key, const TomlValue& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError(key + ": expected a number");
}

template <>
std::string get_as<std::string>(const std::string& key, const TomlValue& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key + ": expected a string");
}

}  // namespace

TrainConfig config_from_toml(const TomlTable& table) {
  Variant variant = Variant::kVtfGan;
  if (auto it = table.find("variant"); it != table.end()) {
    variant = variant_from_string(get_as<std::string>("variant", it->second));
  }
  std::string preset = "paper";
  if (auto it = table.find("preset"); it != table.end()) preset = get_as<std::string>("preset", it->second);
  TrainConfig c;
  if (preset == "paper") c = paper_preset(variant);
  else if (preset == "desk") c = desk_preset(variant);
  else throw ConfigError("unknown preset '" + preset + "' (expected paper|desk)");

  for (const auto& [key, value] : table) {
    auto as_int = [&] { return get_as<int64_t>(key, value); };
    auto as_num = [&] { return get_as<double>(key, value); };
    auto as_str = [&] { return get_as<std::string>(key, value); };
    auto as_bool = [&] { return get_as<bool>(key, value); };
    if (key == "variant" || key == "preset") continue;
    else if (key == "batch_size") c.batch_size = as_int();
    else if (key == "epochs") c.epochs = as_int();
    else if (key == "lr") c.lr = as_num();
    else if (key == "adam_beta1") c.adam_beta1 = as_num();
    else if (key == "adam_beta2") c.adam_beta2 = as_num();
    else if (key == "seed") {
      const int64_t s = as_int();
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.seed = static_cast<uint64_t>(s);
    }
    else if (key == "resolution") c.resolution = as_int();
    else if (key == "mixed_precision") c.mixed_precision = as_bool();
    else if (key == "ablate") {
      auto* items = std::get_if<std::vector<std::string>>(&value);
      if (!items) throw ConfigError("ablate: expected an array of strings");
      c.ablate = {items->begin(), items->end()};
    }
    else if (key == "manifest") c.manifest = as_str();
    else if (key == "synthetic_pairs") c.synthetic_pairs = as_int();
    else if (key == "synthetic_test_pairs") c.synthetic_test_pairs = as_int();
    else if (key == "loader_workers") c.loader_workers = as_int();
    else if (key == "out_dir") c.out_dir = as_str();
    else if (key == "resume_from") c.resume_from = as_str();
    else if (key == "max_steps") c.max_steps = as_int();
    else if (key == "checkpoint_every") c.checkpoint_every = as_int();
    else if (key == "deterministic") c.deterministic = as_bool();
    else if (key == "gen_base_width") c.gen_base_width = as_int();
    else if (key == "gen_max_width") c.gen_max_width = as_int();
    else if (key == "disc_base_width") c.disc_base_width = as_int();
    else if (key == "disc_max_width") c.disc_max_width = as_int();
    else if (key == "d_steps_per_g") c.d_steps_per_g = as_int();
    else if (key == "w_gan") c.w_gan = as_num();
    else if (key == "w_perc") c.w_perc = as_num();
    else if (key == "w_temp") c.w_temp = as_num();
    else if (key == "w_patch") c.w_patch = as_num();
    else if (key == "w_fft") c.w_fft = as_num();
    else if (key == "patch_count") c.patch_count = as_int();
    else if (key == "phase_distance") c.phase_distance = as_str();
    else if (key == "perceptual_model") c.perceptual_model = as_str();
    else if (key == "fid_model") c.fid_model = as_str();
    else if (key == "timesteps") c.timesteps = as_int();
    else if (key == "diff_base_width") c.diff_base_width = as_int();
    else if (key == "diff_levels") c.diff_levels = as_int();
    else if (key == "allow_color") c.allow_color = as_bool();
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    TrainConfig c = config_from_toml(parse_toml(ss.str()));
    // Relative paths in a config are relative to the config file.
    const auto base = path.parent_path();
    auto anchor = [&](std::string& p) {
      if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    anchor(c.manifest);
    anchor(c.perceptual_model);
    anchor(c.fid_model);
    return c;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"seed", c.seed},
          {"resolution", c.resolution},
          {"mixed_precision", c.mixed_precision},
          {"ablate", std::vector<std::string>(c.ablate.begin(), c.ablate.end())},
          {"manifest", c.manifest},
          {"synthetic_pairs", c.synthetic_pairs},
          {"synthetic_test_pairs", c.synthetic_test_pairs},
          {"loader_workers", c.loader_workers},
          {"out_dir", c.out_dir},
          {"resume_from", c.resume_from},
          {"max_steps", c.max_steps},
          {"checkpoint_every", c.checkpoint_every},
          {"deterministic", c.deterministic},
          {"gen_base_width", c.gen_base_width},
          {"gen_max_width", c.gen_max_width},
          {"disc_base_width", c.disc_base_width},
          {"disc_max_width", c.disc_max_width},
          {"d_steps_per_g", c.d_steps_per_g},
          {"w_gan", c.w_gan},
          {"w_perc", c.w_perc},
          {"w_temp", c.w_temp},
          {"w_patch", c.w_patch},
          {"w_fft", c.w_fft},
          {"patch_count", c.patch_count},
          {"phase_distance", c.phase_distance},
          {"perceptual_model", c.perceptual_model},
          {"fid_model", c.fid_model},
          {"timesteps", c.timesteps},
          {"diff_base_width", c.diff_base_width},
          {"diff_levels", c.diff_levels},
          {"allow_color", c.allow_color}};
}

std::string config_hash(const TrainConfig& config) {
  nlohmann::json j = to_json(config);
  for (const char* key : {"out_dir", "resume_from", "epochs", "max_steps", "checkpoint_every", "loader_workers"}) {
    j.erase(key);
  }
  const std::string canonical = j.dump();  // keys are sorted by nlohmann::json
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vtf::harness
