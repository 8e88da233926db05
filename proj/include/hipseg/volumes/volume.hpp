#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hipseg/common/grid.hpp"

namespace hipseg {

// Anatomical slicing planes. In canonical orientation the enum value is also
// the array axis whose index selects the plane.
enum class Orientation : int { sagittal = 0, coronal = 1, axial = 2 };

inline constexpr std::array<Orientation, 3> kOrientations{Orientation::sagittal, Orientation::coronal,
                                                          Orientation::axial};

inline int axis_of(Orientation o) noexcept { return static_cast<int>(o); }

inline std::string_view name_of(Orientation o) noexcept {
  switch (o) {
    case Orientation::sagittal: return "sagittal";
    case Orientation::coronal: return "coronal";
    case Orientation::axial: return "axial";
  }
  return "?";
}

inline Orientation parse_orientation(std::string_view s) {
  if (s == "sagittal") return Orientation::sagittal;
  if (s == "coronal") return Orientation::coronal;
  if (s == "axial") return Orientation::axial;
  throw std::invalid_argument("unknown orientation '" + std::string(s) + "'");
}

// Per-axis direction letters (R/L, A/P, S/I): letter i names the anatomical
// direction that array axis i increases toward. "RAS" is canonical.
struct AxisCode {
  std::array<char, 3> letters{'R', 'A', 'S'};

  static AxisCode parse(std::string_view code) {
    if (code.size() != 3) throw std::invalid_argument("axis code must have 3 letters, got '" + std::string(code) + "'");
    AxisCode a;
    for (std::size_t i = 0; i < 3; ++i) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(code[i])));
      if (std::string_view("RLAPSI").find(c) == std::string_view::npos) {
        throw std::invalid_argument("invalid axis letter in '" + std::string(code) + "'");
      }
      a.letters[i] = c;
    }
    return a;
  }

  std::string str() const { return std::string(letters.begin(), letters.end()); }
  friend bool operator==(const AxisCode&, const AxisCode&) = default;
};

inline const AxisCode kCanonicalAxes{};

using Spacing3 = std::array<double, 3>;

struct Volume {
  Grid3<float> data;
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::optional<AxisCode> axes;  // nullopt when the source carried no usable orientation
  std::string source;            // file name for diagnostics
  std::string orientation_issue; // why axes is missing, if known

  const Extent3& extent() const noexcept { return data.extent(); }
};

struct LabelMask {
  Grid3<std::uint8_t> data;

  LabelMask() = default;
  explicit LabelMask(Extent3 e) : data(e, 0) {}
  explicit LabelMask(Grid3<std::uint8_t> g) : data(std::move(g)) {}

  const Extent3& extent() const noexcept { return data.extent(); }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count_if(data.values().begin(), data.values().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
  }
  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

// A volume with its ground truth, as used for training and evaluation.
struct LabeledVolume {
  std::string id;
  std::string cohort;
  Volume volume;
  LabelMask mask;
};

struct SlicePlane {
  Orientation orientation = Orientation::sagittal;
  int index = 0;
};

inline void require_valid(const SlicePlane& plane, const Extent3& e) {
  const int n = e[static_cast<std::size_t>(axis_of(plane.orientation))];
  if (plane.index < 0 || plane.index >= n) {
    throw std::out_of_range("slice index " + std::to_string(plane.index) + " outside " +
                            std::string(name_of(plane.orientation)) + " extent " + std::to_string(n));
  }
}

inline void require_binary(const LabelMask& m) {
  for (auto v : m.data.values()) {
    if (v > 1) throw std::invalid_argument("label mask must contain only 0 and 1");
  }
}

inline void require_same_extent(const Extent3& a, const Extent3& b, std::string_view what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": extent mismatch " + to_string(a) + " vs " + to_string(b));
}

// Maps intensities affinely onto [0, 1]; a constant volume becomes all zeros.
inline Volume normalize_minmax(Volume v) {
  auto vals = v.data.values();
  if (vals.empty()) return v;
  const auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(vals.begin(), vals.end(), 0.0f);
    return v;
  }
  const double scale = 1.0 / (hi - lo);
  for (auto& x : vals) x = static_cast<float>((static_cast<double>(x) - lo) * scale);
  // Guard the endpoints against rounding so min == 0 and max == 1 exactly.
  *lo_it = 0.0f;
  *hi_it = 1.0f;
  return v;
}

}  // namespace hipseg
