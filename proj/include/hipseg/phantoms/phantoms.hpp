#pragma once

// Deterministic synthetic brain phantoms with two small curved tubular
// structures placed left and right of the midsagittal plane.
//
// Layout at the default 64^3 (canonical RAS, 1 mm voxels): an ellipsoidal
// brain with a white-matter core and a grey-matter shell, two dark
// ventricles, and the two target structures in the white matter, each with
// a partial dark crescent on its lateral-superior side. Resected cohorts
// drop one structure from the mask and replace its image region with a
// noisy tissue-like cavity surrounded by a dark rim.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hipseg/common/random.hpp"
#include "hipseg/volumes/volume.hpp"

namespace hipseg {

enum class Cohort : int { control = 0, atrophy = 1, resected_left = 2, resected_right = 3 };

inline std::string_view name_of(Cohort c) noexcept {
  switch (c) {
    case Cohort::control: return "control";
    case Cohort::atrophy: return "atrophy";
    case Cohort::resected_left: return "resected-left";
    case Cohort::resected_right: return "resected-right";
  }
  return "?";
}

inline Cohort parse_cohort(std::string_view s) {
  if (s == "control") return Cohort::control;
  if (s == "atrophy") return Cohort::atrophy;
  if (s == "resected-left") return Cohort::resected_left;
  if (s == "resected-right") return Cohort::resected_right;
  throw std::invalid_argument("unknown cohort '" + std::string(s) + "'");
}

inline bool is_resected(Cohort c) noexcept { return c == Cohort::resected_left || c == Cohort::resected_right; }

struct PhantomSpec {
  std::uint64_t seed = 0;
  Extent3 shape{64, 64, 64};
  Cohort cohort = Cohort::control;
  double noise_sigma = 0.02;
  int count = 1;
};

inline constexpr int kMinPhantomExtent = 32;

struct Phantom {
  LabeledVolume sample;
  LabelMask brain;
};

namespace detail {

struct Intensities {
  static constexpr double white = 0.72;
  static constexpr double grey = 0.45;
  static constexpr double csf = 0.15;
  static constexpr double target = 0.52;
  static constexpr double crescent = 0.17;
  static constexpr double cavity = 0.57;
  static constexpr double cavity_texture = 0.07;
  static constexpr double cavity_rim = 0.19;
};

struct Tube {
  std::vector<std::array<double, 3>> centerline;
  double radius_head = 3.0;
  double radius_taper = 0.35;  // fractional radius loss from head to tail
  int side = 1;                // -1 left (low axis-0 indices), +1 right

  double radius_at(double t) const { return radius_head * (1.0 - radius_taper * t); }

  // Distance from p to the centerline and the curve parameter of the closest point.
  std::pair<double, double> closest(const std::array<double, 3>& p) const {
    double best = 1e30, best_t = 0.0;
    const std::size_t n = centerline.size();
    for (std::size_t s = 0; s + 1 < n; ++s) {
      const auto& a = centerline[s];
      const auto& b = centerline[s + 1];
      std::array<double, 3> ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
      std::array<double, 3> ap{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
      const double len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
      double u = len2 > 0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2 : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      const double dx = ap[0] - u * ab[0], dy = ap[1] - u * ab[1], dz = ap[2] - u * ab[2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (d < best) {
        best = d;
        best_t = (static_cast<double>(s) + u) / static_cast<double>(n - 1);
      }
    }
    return {best, best_t};
  }

  std::array<double, 3> point_at(double t) const {
    const double f = t * static_cast<double>(centerline.size() - 1);
    const auto s = std::min(static_cast<std::size_t>(f), centerline.size() - 2);
    const double u = f - static_cast<double>(s);
    const auto& a = centerline[s];
    const auto& b = centerline[s + 1];
    return {a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])};
  }
};

inline Tube make_tube(Rng& rng, const std::array<double, 3>& center, const std::array<double, 3>& scale, int side,
                      double radius_factor) {
  Tube tube;
  tube.side = side;
  const double s_mean = (scale[0] + scale[1] + scale[2]) / 3.0;
  tube.radius_head = uniform(rng, 2.6, 3.1) * s_mean * radius_factor;
  tube.radius_taper = uniform(rng, 0.30, 0.40);
  const double lateral = uniform(rng, 10.5, 12.0) * scale[0];
  const double bow = uniform(rng, 1.0, 2.0) * scale[0];
  const double y0 = center[1] - uniform(rng, 8.0, 9.5) * scale[1];
  const double length = uniform(rng, 15.0, 18.0) * scale[1];
  const double z0 = center[2] - uniform(rng, 6.5, 7.5) * scale[2];
  const double lift = uniform(rng, 2.0, 3.5) * scale[2];
  constexpr int kSamples = 33;
  for (int s = 0; s < kSamples; ++s) {
    const double t = static_cast<double>(s) / (kSamples - 1);
    const double x = center[0] + side * (lateral + bow * std::sin(3.14159265358979 * t));
    const double y = y0 + length * t;
    const double z = z0 + lift * std::sin(0.9 * 3.14159265358979 * t);
    tube.centerline.push_back({x, y, z});
  }
  return tube;
}

}  // namespace detail

inline Phantom generate_one(const PhantomSpec& spec, int index) {
  for (int d : spec.shape) {
    if (d < kMinPhantomExtent) {
      throw std::invalid_argument("phantom shape " + to_string(spec.shape) + " is below the minimum of " +
                                  std::to_string(kMinPhantomExtent) + " voxels per axis");
    }
  }
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  using I = detail::Intensities;

  Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(spec.cohort), static_cast<std::uint64_t>(index)});
  const Extent3 e = spec.shape;
  const std::array<double, 3> scale{e[0] / 64.0, e[1] / 64.0, e[2] / 64.0};
  const std::array<double, 3> center{(e[0] - 1) / 2.0, (e[1] - 1) / 2.0, (e[2] - 1) / 2.0};

  std::array<double, 3> semi{0.40 * e[0], 0.44 * e[1], 0.38 * e[2]};
  for (auto& a : semi) a *= uniform(rng, 0.96, 1.04);
  const double core = uniform(rng, 0.58, 0.66);
  const std::array<double, 3> bias_phase{uniform(rng, 0, 6.283), uniform(rng, 0, 6.283), uniform(rng, 0, 6.283)};
  const double bias_amp = uniform(rng, 0.02, 0.05);

  struct Blob {
    std::array<double, 3> c, r;
  };
  std::array<Blob, 2> ventricles{};
  for (int s = 0; s < 2; ++s) {
    const double side = s == 0 ? -1.0 : 1.0;
    ventricles[static_cast<std::size_t>(s)] = Blob{
        {center[0] + side * uniform(rng, 3.0, 4.0) * scale[0], center[1] + uniform(rng, 0.0, 3.0) * scale[1],
         center[2] + uniform(rng, 2.0, 4.0) * scale[2]},
        {uniform(rng, 1.6, 2.2) * scale[0], uniform(rng, 6.0, 8.0) * scale[1], uniform(rng, 2.5, 3.5) * scale[2]}};
  }

  const double radius_factor = spec.cohort == Cohort::atrophy ? 0.85 : 1.0;
  const std::array<detail::Tube, 2> tubes{detail::make_tube(rng, center, scale, -1, radius_factor),
                                          detail::make_tube(rng, center, scale, +1, radius_factor)};
  const int removed_side = spec.cohort == Cohort::resected_left ? -1 : spec.cohort == Cohort::resected_right ? 1 : 0;

  Phantom ph;
  ph.sample.cohort = std::string(name_of(spec.cohort));
  ph.sample.id = ph.sample.cohort + "-s" + std::to_string(spec.seed) + "-" + std::to_string(index);
  Grid3<float> img(e, 0.0f);
  LabelMask mask(e);
  LabelMask brain(e);

  // Noise is drawn from a stream separate from the geometry draws.
  Rng noise_rng = make_rng(spec.seed, {static_cast<std::uint64_t>(spec.cohort), static_cast<std::uint64_t>(index), 1});
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int k = 0; k < e[2]; ++k)
    for (int j = 0; j < e[1]; ++j)
      for (int i = 0; i < e[0]; ++i) {
        const std::array<double, 3> p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
        double q = 0.0;
        for (std::size_t a = 0; a < 3; ++a) q += ((p[a] - center[a]) / semi[a]) * ((p[a] - center[a]) / semi[a]);
        double value;
        if (q > 1.0) {
          value = std::abs(noise(noise_rng)) * 0.25 * spec.noise_sigma;
          img(i, j, k) = static_cast<float>(value);
          continue;
        }
        brain.data(i, j, k) = 1;
        value = q <= core ? I::white : I::grey;
        for (const auto& v : ventricles) {
          double qv = 0.0;
          for (std::size_t a = 0; a < 3; ++a) qv += ((p[a] - v.c[a]) / v.r[a]) * ((p[a] - v.c[a]) / v.r[a]);
          if (qv <= 1.0) value = I::csf;
        }
        for (const auto& tube : tubes) {
          if ((p[0] - center[0]) * tube.side <= 0) continue;
          const auto [d, t] = tube.closest(p);
          const double r = tube.radius_at(t);
          if (d > r + 2.5) continue;
          if (tube.side == removed_side) {
            if (d <= r + 0.5) {
              value = I::cavity + I::cavity_texture * noise(noise_rng);
            } else if (d <= r + 1.8) {
              value = I::cavity_rim;
            }
            continue;
          }
          const auto c = tube.point_at(t);
          const double lateral = (p[0] - c[0]) * tube.side;
          const double superior = p[2] - c[2];
          if (d > r + 0.5 && d <= r + 1.6 && lateral + superior > 0.4 * d) value = I::crescent;
          // Partial-volume edge: intensity crosses the midpoint at the mask boundary.
          const double w = std::clamp((r - d) / 0.8 + 0.5, 0.0, 1.0);
          value = w * I::target + (1.0 - w) * value;
          if (d <= r) mask.data(i, j, k) = 1;
        }
        const double bias = 1.0 + bias_amp * std::sin(2.0 * p[0] / e[0] * 3.14159 + bias_phase[0]) *
                                      std::cos(2.0 * p[1] / e[1] * 3.14159 + bias_phase[1]) *
                                      std::sin(1.5 * p[2] / e[2] * 3.14159 + bias_phase[2]);
        img(i, j, k) = static_cast<float>(value * bias + spec.noise_sigma * noise(noise_rng));
      }

  ph.sample.volume.data = std::move(img);
  ph.sample.volume.axes = kCanonicalAxes;
  ph.sample.volume.source = ph.sample.id;
  ph.sample.volume = normalize_minmax(std::move(ph.sample.volume));
  ph.sample.mask = std::move(mask);
  ph.brain = std::move(brain);
  return ph;
}

inline std::vector<Phantom> generate(const PhantomSpec& spec) {
  if (spec.count < 0) throw std::invalid_argument("phantom count must be >= 0");
  std::vector<Phantom> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) out.push_back(generate_one(spec, i));
  return out;
}

}  // namespace hipseg
