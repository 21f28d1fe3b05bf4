#include <algorithm>
#include <fstream>
#include <future>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"

namespace vtf::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

size_t Manifest::count(Split split) const {
  return static_cast<size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

std::vector<ManifestEntry> Manifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.split == split; });
  return out;
}

namespace {

std::string require_string(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key) || !node[key].is_string()) {
    throw DataError(where + ": missing string field \"" + key + "\"");
  }
  return node[key].get<std::string>();
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found: " + path.string());

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError("manifest root must be an object");
  const std::string root = require_string(doc, "root", "manifest");
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw DataError("manifest: missing array field \"entries\"");
  }
  if (doc["entries"].empty()) throw DataError("empty manifest");

  Manifest manifest;
  manifest.root = fs::path(root).is_absolute() ? fs::path(root) : path.parent_path() / root;

  std::set<std::string> seen;
  for (const json& node : doc["entries"]) {
    if (!node.is_object()) throw DataError("manifest entries must be objects");
    ManifestEntry entry;
    entry.id = require_string(node, "id", "manifest entry");
    const std::string where = "manifest entry " + entry.id;
    if (!seen.insert(entry.id).second) throw DataError("duplicate id in manifest: " + entry.id);
    entry.visible = manifest.root / require_string(node, "visible", where);
    entry.thermal = manifest.root / require_string(node, "thermal", where);
    entry.subject = require_string(node, "subject", where);
    const std::string split = require_string(node, "split", where);
    if (split == "train") {
      entry.split = Split::kTrain;
    } else if (split == "test") {
      entry.split = Split::kTest;
    } else {
      throw DataError(where + ": unknown split \"" + split + "\"");
    }
    for (const fs::path& p : {entry.visible, entry.thermal}) {
      if (!fs::is_regular_file(p)) throw DataError(where + ": dangling path " + p.string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  json entries = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    entries.push_back({{"id", e.id},
                       {"visible", fs::relative(e.visible, manifest.root).generic_string()},
                       {"thermal", fs::relative(e.thermal, manifest.root).generic_string()},
                       {"split", e.split == Split::kTrain ? "train" : "test"},
                       {"subject", e.subject}});
  }
  const fs::path root_rel = fs::relative(manifest.root, path.parent_path().empty() ? "." : path.parent_path());
  json doc = {{"root", root_rel.generic_string()}, {"entries", entries}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << doc.dump(2) << "\n";
}

core::ImageTensor resize(const core::ImageTensor& image, int64_t size) {
  if (size <= 0) throw ShapeError("resize target must be positive");
  if (image.height() == size && image.width() == size) return image;
  namespace F = torch::nn::functional;
  torch::Tensor out = F::interpolate(image.data().unsqueeze(0).to(torch::kFloat32),
                                     F::InterpolateFuncOptions()
                                         .size(std::vector<int64_t>{size, size})
                                         .mode(torch::kBilinear)
                                         .align_corners(false))
                          .squeeze(0);
  const double hi = image.range() == core::PixelRange::kByte ? 255.0 : 1.0;
  const double lo = image.range() == core::PixelRange::kByte ? 0.0 : -1.0;
  return {out.clamp(lo, hi), image.range()};
}

std::pair<core::ImageTensor, core::ImageTensor> load_pair(const ManifestEntry& entry, int64_t resolution) {
  auto load = [&](const fs::path& p) {
    try {
      return core::normalize(resize(read_png(p), resolution));
    } catch (const DataError& e) {
      throw DataError("entry " + entry.id + ": " + e.what());
    }
  };
  return {load(entry.visible), load(entry.thermal)};
}

PairedSet load_split(const Manifest& manifest, Split split, int64_t resolution, int workers) {
  const std::vector<ManifestEntry> entries = manifest.select(split);
  if (entries.empty()) throw DataError("split has no entries");
  std::vector<torch::Tensor> visible(entries.size()), thermal(entries.size());

  const size_t n_workers = static_cast<size_t>(std::max(1, workers));
  std::vector<std::future<void>> jobs;
  for (size_t w = 0; w < n_workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (size_t i = w; i < entries.size(); i += n_workers) {
        auto [a, b] = load_pair(entries[i], resolution);
        visible[i] = a.data();
        thermal[i] = b.data();
      }
    }));
  }
  for (auto& job : jobs) job.get();

  PairedSet set;
  set.visible = torch::stack(visible);
  set.thermal = torch::stack(thermal);
  for (const auto& e : entries) set.ids.push_back(e.id);
  return set;
}

std::vector<std::vector<int64_t>> epoch_batches(int64_t n, int64_t batch_size, core::RunSeed seed) {
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed.value);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int64_t>> batches;
  for (int64_t start = 0; start < n; start += batch_size) {
    const int64_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace vtf::dataio
