#pragma once

// Random extended-2D patch sampling.
//
// Positive patches are centred on a hippocampus border voxel: a mask voxel
// with a background 4-neighbour inside the sampled plane (out of bounds counts
// as background). Negative patches are centred on a brain voxel, by default
// restricted to slices that contain hippocampus. Without a brain mask on
// disk, "brain" means normalized intensity >= brain_threshold.

#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/common/random.hpp"
#include "hipseg/sampling/augment.hpp"
#include "hipseg/volumes/slicing.hpp"

namespace hipseg {

enum class NegativeScope { hippocampus_slices, whole_brain };

struct SamplerConfig {
  int patch_rows = 64;
  int patch_cols = 64;
  double positive_fraction = 0.8;
  Orientation orientation = Orientation::sagittal;
  int epoch_size = 5000;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  NegativeScope negative_scope = NegativeScope::hippocampus_slices;
  double brain_threshold = 0.1;
  EdgeMode edge = EdgeMode::replicate;
};

// Paper epoch composition per orientation.
inline int default_epoch_size(Orientation o) noexcept {
  switch (o) {
    case Orientation::sagittal: return 5000;
    case Orientation::coronal: return 4000;
    case Orientation::axial: return 3000;
  }
  return 5000;
}

inline void require_valid(const SamplerConfig& c) {
  if (c.patch_rows < 1 || c.patch_cols < 1) throw std::invalid_argument("patch size must be >= 1");
  if (!(c.positive_fraction >= 0.0 && c.positive_fraction <= 1.0)) {
    throw std::invalid_argument("positive_fraction must be in [0, 1]");
  }
  if (c.epoch_size < 1) throw std::invalid_argument("epoch_size must be >= 1");
}

enum class Draw { positive, negative };

struct PatchProvenance {
  std::string volume_id;
  Orientation orientation = Orientation::sagittal;
  Index3 center{0, 0, 0};  // voxel under target[H/2, W/2]
  bool positive = false;
  friend bool operator==(const PatchProvenance&, const PatchProvenance&) = default;
};

inline nlohmann::json to_json(const PatchProvenance& p) {
  return {{"volume", p.volume_id},
          {"plane", std::string(name_of(p.orientation))},
          {"center", {p.center[0], p.center[1], p.center[2]}},
          {"positive", p.positive}};
}

struct Patch {
  Planes<float> input;           // 3 x H x W
  Image2D<std::uint8_t> target;  // 1 x H x W, centre slice
  PatchProvenance provenance;
};

struct PatchBatch {
  int size = 0, rows = 0, cols = 0;
  std::vector<float> inputs;          // B x 3 x H x W
  std::vector<std::uint8_t> targets;  // B x H x W
  std::vector<PatchProvenance> provenance;
};

inline nlohmann::json provenance_json(const PatchBatch& b) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : b.provenance) j.push_back(to_json(p));
  return j;
}

inline bool is_border_voxel(const LabelMask& mask, Orientation o, const Index3& v) {
  const auto& g = mask.data;
  if (!g(v[0], v[1], v[2])) return false;
  const PlaneAxes a = plane_axes(o);
  for (int axis : {a.row, a.col})
    for (int step : {-1, 1}) {
      Index3 n = v;
      n[static_cast<std::size_t>(axis)] += step;
      if (!g.contains(n[0], n[1], n[2]) || !g(n[0], n[1], n[2])) return true;
    }
  return false;
}

// Candidate centres for one volume and orientation.
struct SamplingIndex {
  std::vector<std::uint32_t> border;     // flat voxel indices
  std::vector<std::uint32_t> negatives;  // flat voxel indices
};

inline SamplingIndex build_sampling_index(const Volume& volume, const LabelMask& mask, const SamplerConfig& config) {
  require_same_extent(volume.extent(), mask.extent(), "sampling index");
  const Extent3 e = volume.extent();
  const int axis = axis_of(config.orientation);
  std::vector<char> has_target(static_cast<std::size_t>(e[static_cast<std::size_t>(axis)]), 0);
  SamplingIndex idx;
  for (std::size_t f = 0; f < mask.data.size(); ++f) {
    if (!mask.data[f]) continue;
    const Index3 v = mask.data.coordinate(f);
    has_target[static_cast<std::size_t>(v[static_cast<std::size_t>(axis)])] = 1;
    if (is_border_voxel(mask, config.orientation, v)) idx.border.push_back(static_cast<std::uint32_t>(f));
  }
  const bool whole = config.negative_scope == NegativeScope::whole_brain;
  for (std::size_t f = 0; f < volume.data.size(); ++f) {
    if (volume.data[f] < config.brain_threshold) continue;
    const Index3 v = volume.data.coordinate(f);
    if (whole || has_target[static_cast<std::size_t>(v[static_cast<std::size_t>(axis)])]) {
      idx.negatives.push_back(static_cast<std::uint32_t>(f));
    }
  }
  return idx;
}

// Window of the slice triplet and mask slice through `center`, zero outside the slice.
inline Patch extract_patch(const Volume& volume, const LabelMask& mask, Orientation o, const Index3& center, int rows,
                           int cols, EdgeMode edge = EdgeMode::replicate) {
  const PlaneAxes a = plane_axes(o);
  const Extent3& e = volume.extent();
  const int n = e[static_cast<std::size_t>(a.normal)];
  const int srows = e[static_cast<std::size_t>(a.row)], scols = e[static_cast<std::size_t>(a.col)];
  const int index = center[static_cast<std::size_t>(a.normal)];
  const int r0 = center[static_cast<std::size_t>(a.row)] - rows / 2;
  const int c0 = center[static_cast<std::size_t>(a.col)] - cols / 2;
  Patch p{Planes<float>(3, rows, cols, 0.0f), Image2D<std::uint8_t>(1, rows, cols, 0), {}};
  for (int ch = 0; ch < 3; ++ch) {
    int idx = index + ch - 1;
    if (idx < 0 || idx >= n) {
      if (edge == EdgeMode::zero) continue;
      idx = std::clamp(idx, 0, n - 1);
    }
    for (int r = 0; r < rows; ++r) {
      const int sr = r0 + r;
      if (sr < 0 || sr >= srows) continue;
      for (int c = 0; c < cols; ++c) {
        const int sc = c0 + c;
        if (sc < 0 || sc >= scols) continue;
        const Index3 v = voxel_of(o, idx, sr, sc);
        p.input(ch, r, c) = volume.data(v[0], v[1], v[2]);
        if (ch == 1) p.target(0, r, c) = mask.data(v[0], v[1], v[2]);
      }
    }
  }
  p.provenance.orientation = o;
  p.provenance.center = center;
  return p;
}

inline Patch sample_patch(const LabeledVolume& item, const SamplingIndex& index, const SamplerConfig& config, Draw draw,
                          Rng& rng) {
  const auto& pool = draw == Draw::positive ? index.border : index.negatives;
  if (pool.empty()) {
    throw std::invalid_argument(draw == Draw::positive
                                    ? "positive draw on " + item.id + ": mask has no border voxel in the " +
                                          std::string(name_of(config.orientation)) + " plane"
                                    : "negative draw on " + item.id + ": no brain voxel to sample");
  }
  const Index3 center = item.mask.data.coordinate(pool[uniform_index(rng, pool.size())]);
  Patch p = extract_patch(item.volume, item.mask, config.orientation, center, config.patch_rows, config.patch_cols,
                          config.edge);
  p.provenance.volume_id = item.id;
  p.provenance.positive = draw == Draw::positive;
  return p;
}

// Draws batches for one orientation. Every batch has its own generator
// derived from (seed, epoch, batch), so batches can be built in any order.
class PatchSampler {
 public:
  PatchSampler(std::span<const LabeledVolume> dataset, SamplerConfig config)
      : dataset_(dataset), config_(std::move(config)) {
    require_valid(config_);
    if (dataset_.empty()) throw std::invalid_argument("patch sampler: empty dataset");
    for (std::size_t i = 0; i < dataset_.size(); ++i) {
      index_.push_back(build_sampling_index(dataset_[i].volume, dataset_[i].mask, config_));
      if (!index_.back().border.empty()) positive_pool_.push_back(i);
      if (!index_.back().negatives.empty()) negative_pool_.push_back(i);
    }
  }

  const SamplerConfig& config() const noexcept { return config_; }
  const SamplingIndex& index(std::size_t i) const { return index_.at(i); }

  int batches_per_epoch(int batch_size) const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    return (config_.epoch_size + batch_size - 1) / batch_size;
  }

  PatchBatch batch(int epoch, int batch_index, int batch_size) const {
    const int first = batch_index * batch_size;
    const int n = std::min(batch_size, config_.epoch_size - first);
    if (n < 1) throw std::out_of_range("batch index beyond the epoch");
    Rng rng = make_rng(config_.seed, {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batch_index)});
    std::bernoulli_distribution positive(config_.positive_fraction);
    PatchBatch b;
    b.size = n;
    b.rows = config_.patch_rows;
    b.cols = config_.patch_cols;
    const std::size_t plane = static_cast<std::size_t>(b.rows) * b.cols;
    b.inputs.resize(static_cast<std::size_t>(n) * 3 * plane);
    b.targets.resize(static_cast<std::size_t>(n) * plane);
    for (int k = 0; k < n; ++k) {
      Draw draw = positive(rng) ? Draw::positive : Draw::negative;
      if (draw == Draw::positive && positive_pool_.empty()) draw = Draw::negative;
      if (draw == Draw::negative && negative_pool_.empty()) draw = Draw::positive;
      const auto& pool = draw == Draw::positive ? positive_pool_ : negative_pool_;
      if (pool.empty()) throw std::invalid_argument("patch sampler: dataset offers no patch centres");
      const std::size_t v = pool[uniform_index(rng, pool.size())];
      Patch p = sample_patch(dataset_[v], index_[v], config_, draw, rng);
      augment_patch(p.input, p.target, config_.augment, rng);
      std::copy(p.input.values().begin(), p.input.values().end(), b.inputs.begin() + static_cast<std::ptrdiff_t>(k * 3 * plane));
      std::copy(p.target.values().begin(), p.target.values().end(), b.targets.begin() + static_cast<std::ptrdiff_t>(k * plane));
      b.provenance.push_back(std::move(p.provenance));
    }
    return b;
  }

 private:
  std::span<const LabeledVolume> dataset_;
  SamplerConfig config_;
  std::vector<SamplingIndex> index_;
  std::vector<std::size_t> positive_pool_, negative_pool_;
};

inline std::vector<PatchBatch> epoch_stream(std::span<const LabeledVolume> dataset, const SamplerConfig& config,
                                            int batch_size, int epoch = 0) {
  const PatchSampler sampler(dataset, config);
  std::vector<PatchBatch> out;
  const int n = sampler.batches_per_epoch(batch_size);
  for (int b = 0; b < n; ++b) out.push_back(sampler.batch(epoch, b, batch_size));
  return out;
}

}  // namespace hipseg
