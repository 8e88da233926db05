#pragma once

// On-disk datasets: a directory with images/, masks/ and manifest.json
// listing each item's id, cohort tag, file names and split assignment.
// Volumes are NIfTI (.nii, .nii.gz) or raw float32 + JSON sidecar (.raw).

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/volumes/nifti.hpp"
#include "hipseg/volumes/orientation.hpp"
#include "hipseg/volumes/raw_io.hpp"

namespace hipseg::io {

namespace fs = std::filesystem;

inline bool is_raw(const fs::path& p) { return p.extension() == ".raw"; }

inline bool is_volume_file(const fs::path& p) {
  const std::string s = p.filename().string();
  auto ends = [&](const std::string& suf) { return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0; };
  return ends(".nii") || ends(".nii.gz") || ends(".raw");
}

// File name without .nii / .nii.gz / .raw.
inline std::string stem_of(const fs::path& p) {
  std::string s = p.filename().string();
  for (const std::string suf : {".nii.gz", ".nii", ".raw"}) {
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) return s.substr(0, s.size() - suf.size());
  }
  return s;
}

struct LoadedVolume {
  Volume volume;
  std::optional<nifti::Header> header;  // NIfTI inputs keep their header for writing outputs on the same grid
};

inline LoadedVolume load_volume(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such volume: " + path.string());
  if (is_raw(path)) return {raw::read(path), std::nullopt};
  nifti::Image img = nifti::read(path.string());
  return {std::move(img.volume), img.header};
}

inline LabelMask load_mask(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such mask: " + path.string());
  return is_raw(path) ? raw::read_mask(path) : nifti::read_mask(path.string());
}

inline void save_mask(const fs::path& path, const LabelMask& mask, const LoadedVolume& like) {
  if (is_raw(path)) {
    raw::write_mask(path, mask, like.volume.spacing, like.volume.axes);
  } else if (like.header) {
    nifti::write_mask(path.string(), mask, *like.header);
  } else {
    nifti::write_mask(path.string(), mask, nifti::make_header(mask.extent(), like.volume.spacing, like.volume.axes, nifti::kUInt8));
  }
}

inline void save_activation(const fs::path& path, const Grid3<float>& data, const LoadedVolume& like) {
  if (is_raw(path)) {
    Volume v;
    v.data = data;
    v.spacing = like.volume.spacing;
    v.axes = like.volume.axes;
    raw::write(path, v);
  } else if (like.header) {
    nifti::write_float(path.string(), data, *like.header);
  } else {
    nifti::write_float(path.string(), data, nifti::make_header(data.extent(), like.volume.spacing, like.volume.axes));
  }
}

struct DatasetItem {
  std::string id;
  std::string cohort;
  std::string volume;  // relative to the dataset root
  std::string mask;
  std::string split;   // train / validation / test / "" (unassigned)
};

struct DatasetManifest {
  fs::path root;
  std::vector<DatasetItem> items;
  nlohmann::json extra = nlohmann::json::object();  // generator spec, split parameters

  std::vector<const DatasetItem*> subset(const std::string& split) const {
    std::vector<const DatasetItem*> out;
    for (const auto& it : items)
      if (split.empty() || it.split == split) out.push_back(&it);
    return out;
  }
};

inline constexpr const char* kManifestName = "manifest.json";

inline void write_manifest(const DatasetManifest& m) {
  nlohmann::json j = m.extra;
  j["items"] = nlohmann::json::array();
  for (const auto& it : m.items) {
    j["items"].push_back({{"id", it.id}, {"cohort", it.cohort}, {"volume", it.volume}, {"mask", it.mask}, {"split", it.split}});
  }
  std::ofstream out(m.root / kManifestName);
  if (!out) throw std::runtime_error("cannot write " + (m.root / kManifestName).string());
  out << j.dump(2) << '\n';
}

// Accepts either the dataset directory or the manifest file itself.
inline DatasetManifest read_manifest(const fs::path& where) {
  const fs::path file = fs::is_directory(where) ? where / kManifestName : where;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("dataset manifest not found: " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.root = file.parent_path();
  for (const auto& it : j.at("items")) {
    m.items.push_back({it.at("id").get<std::string>(), it.value("cohort", std::string()), it.at("volume").get<std::string>(),
                       it.value("mask", std::string()), it.value("split", std::string())});
  }
  j.erase("items");
  m.extra = std::move(j);
  return m;
}

// Loads an item into canonical orientation with its mask.
inline LabeledVolume load_item(const DatasetManifest& m, const DatasetItem& it) {
  LoadedVolume lv = load_volume(m.root / it.volume);
  std::optional<LabelMask> mask;
  if (!it.mask.empty()) mask = load_mask(m.root / it.mask);
  const CanonicalResult c = to_canonical(lv.volume, mask);
  LabeledVolume out;
  out.id = it.id;
  out.cohort = it.cohort;
  out.volume = normalize_minmax(c.volume);
  if (c.mask) out.mask = *c.mask;
  else out.mask = LabelMask(c.volume.extent());
  return out;
}

inline std::vector<LabeledVolume> load_split(const DatasetManifest& m, const std::string& split) {
  std::vector<LabeledVolume> out;
  for (const auto* it : m.subset(split)) out.push_back(load_item(m, *it));
  return out;
}

}  // namespace hipseg::io
