#pragma once

// Portable test format: a raw little-endian float32 array (axis 0 fastest)
// plus a JSON sidecar {"shape": [X,Y,Z], "spacing": [sx,sy,sz], "axes": "RAS"}.
// The sidecar sits next to the array with the extension replaced by ".json".

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "hipseg/volumes/volume.hpp"

namespace hipseg::raw {

static_assert(std::endian::native == std::endian::little, "raw format I/O assumes a little-endian host");

inline std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
  auto p = data_path;
  p.replace_extension(".json");
  return p;
}

inline void write(const std::filesystem::path& data_path, const Volume& v) {
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + data_path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(v.data.values().data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed for " + data_path.string());

  nlohmann::json side;
  side["shape"] = v.extent();
  side["spacing"] = v.spacing;
  if (v.axes) side["axes"] = v.axes->str();
  std::ofstream js(sidecar_path(data_path));
  js << side.dump(2) << '\n';
  if (!js) throw std::runtime_error("write failed for " + sidecar_path(data_path).string());
}

inline Volume read(const std::filesystem::path& data_path) {
  const auto side_path = sidecar_path(data_path);
  std::ifstream js(side_path);
  if (!js) throw std::runtime_error("missing sidecar " + side_path.string());
  const nlohmann::json side = nlohmann::json::parse(js);

  Volume v;
  v.source = data_path.string();
  const auto extent = side.at("shape").get<Extent3>();
  if (side.contains("spacing")) v.spacing = side.at("spacing").get<Spacing3>();
  for (double s : v.spacing) {
    if (!(s > 0)) throw std::runtime_error("non-positive spacing in " + side_path.string());
  }
  if (side.contains("axes")) {
    v.axes = AxisCode::parse(side.at("axes").get<std::string>());
  } else {
    v.orientation_issue = "sidecar has no \"axes\" entry";
  }

  std::vector<float> values(voxel_count(extent));
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + data_path.string());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(float))) {
    throw std::runtime_error("raw array shorter than sidecar shape in " + data_path.string());
  }
  v.data = Grid3<float>(extent, std::move(values));
  return v;
}

inline LabelMask read_mask(const std::filesystem::path& data_path) {
  const Volume v = read(data_path);
  Grid3<std::uint8_t> g(v.extent());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = v.data[i] > 0.5f ? 1 : 0;
  return LabelMask(std::move(g));
}

inline void write_mask(const std::filesystem::path& data_path, const LabelMask& m, const Spacing3& spacing,
                       const std::optional<AxisCode>& axes) {
  Volume v;
  v.data = Grid3<float>(m.extent());
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = m.data[i];
  v.spacing = spacing;
  v.axes = axes;
  write(data_path, v);
}

}  // namespace hipseg::raw
