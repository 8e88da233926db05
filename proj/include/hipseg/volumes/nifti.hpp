#pragma once

// NIfTI-1 single-file (.nii / .nii.gz) reading and writing.
//
// The 348-byte header is kept verbatim (in host byte order) so that outputs
// derived from an input volume reuse its grid and affine unchanged. Axis
// orientation is derived from the sform when sform_code > 0, else from the
// qform when qform_code > 0; otherwise the volume carries no orientation.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/volumes/volume.hpp"

namespace hipseg::nifti {

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::int16_t kUInt8 = 2;
inline constexpr std::int16_t kInt16 = 4;
inline constexpr std::int16_t kInt32 = 8;
inline constexpr std::int16_t kFloat32 = 16;
inline constexpr std::int16_t kFloat64 = 64;
inline constexpr std::int16_t kInt8 = 256;
inline constexpr std::int16_t kUInt16 = 512;
inline constexpr std::int16_t kUInt32 = 768;

using Matrix3 = std::array<std::array<double, 3>, 3>;

class Header {
 public:
  Header() { bytes_.fill(0); }

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    return v;
  }
  template <typename T>
  void set(std::size_t offset, T v) {
    std::memcpy(bytes_.data() + offset, &v, sizeof(T));
  }

  std::int16_t dim(int i) const { return get<std::int16_t>(40 + 2 * static_cast<std::size_t>(i)); }
  void set_dim(int i, std::int16_t v) { set<std::int16_t>(40 + 2 * static_cast<std::size_t>(i), v); }
  float pixdim(int i) const { return get<float>(76 + 4 * static_cast<std::size_t>(i)); }
  void set_pixdim(int i, float v) { set<float>(76 + 4 * static_cast<std::size_t>(i), v); }
  std::int16_t datatype() const { return get<std::int16_t>(70); }
  std::int16_t bitpix() const { return get<std::int16_t>(72); }
  float vox_offset() const { return get<float>(108); }
  float scl_slope() const { return get<float>(112); }
  float scl_inter() const { return get<float>(116); }
  std::int16_t qform_code() const { return get<std::int16_t>(252); }
  std::int16_t sform_code() const { return get<std::int16_t>(254); }
  float srow(int row, int col) const {
    return get<float>(280 + 16 * static_cast<std::size_t>(row) + 4 * static_cast<std::size_t>(col));
  }
  void set_srow(int row, int col, float v) {
    set<float>(280 + 16 * static_cast<std::size_t>(row) + 4 * static_cast<std::size_t>(col), v);
  }

  Extent3 extent() const { return {dim(1), dim(2), dim(3)}; }

  std::array<std::uint8_t, kHeaderSize>& bytes() noexcept { return bytes_; }
  const std::array<std::uint8_t, kHeaderSize>& bytes() const noexcept { return bytes_; }

  friend bool operator==(const Header&, const Header&) = default;

 private:
  std::array<std::uint8_t, kHeaderSize> bytes_{};
};

namespace detail {

struct GzCloser {
  void operator()(gzFile f) const noexcept {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename T>
T byteswap_value(T v) {
  std::array<std::uint8_t, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

// Swaps every multi-byte numeric field of a foreign-endian header in place.
inline void swap_header(Header& h) {
  auto sw32 = [&](std::size_t off) { h.set<std::uint32_t>(off, byteswap_value(h.get<std::uint32_t>(off))); };
  auto sw16 = [&](std::size_t off) { h.set<std::uint16_t>(off, byteswap_value(h.get<std::uint16_t>(off))); };
  sw32(0);
  sw32(32);
  sw16(36);
  for (std::size_t i = 0; i < 8; ++i) sw16(40 + 2 * i);
  for (std::size_t off : {56, 60, 64}) sw32(off);
  for (std::size_t off : {68, 70, 72, 74}) sw16(off);
  for (std::size_t i = 0; i < 8; ++i) sw32(76 + 4 * i);
  for (std::size_t off : {108, 112, 116}) sw32(off);
  sw16(120);
  for (std::size_t off = 124; off <= 144; off += 4) sw32(off);
  sw16(252);
  sw16(254);
  for (std::size_t off = 256; off < 328; off += 4) sw32(off);
}

inline int bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case kUInt8: case kInt8: return 1;
    case kInt16: case kUInt16: return 2;
    case kInt32: case kUInt32: case kFloat32: return 4;
    case kFloat64: return 8;
    default: return 0;
  }
}

template <typename T>
void convert_block(const std::uint8_t* raw, std::size_t n, bool swap, std::vector<float>& out) {
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw + i * sizeof(T), sizeof(T));
    if (swap) v = byteswap_value(v);
    out[i] = static_cast<float>(v);
  }
}

}  // namespace detail

// Rotation+scaling part of the voxel-to-world affine, columns = array axes.
inline std::optional<Matrix3> orientation_matrix(const Header& h) {
  Matrix3 m{};
  if (h.sform_code() > 0) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m[r][c] = h.srow(r, c);
    return m;
  }
  if (h.qform_code() > 0) {
    double b = h.get<float>(256), c = h.get<float>(260), d = h.get<float>(264);
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1e-7) {
      const double s = 1.0 / std::sqrt(b * b + c * c + d * d);
      b *= s;
      c *= s;
      d *= s;
      a = 0.0;
    } else {
      a = std::sqrt(a);
    }
    const Matrix3 rot{{{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
                       {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
                       {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}}};
    const double qfac = h.pixdim(0) < 0 ? -1.0 : 1.0;
    const std::array<double, 3> scale{h.pixdim(1) > 0 ? h.pixdim(1) : 1.0, h.pixdim(2) > 0 ? h.pixdim(2) : 1.0,
                                      (h.pixdim(3) > 0 ? h.pixdim(3) : 1.0) * qfac};
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) m[r][col] = rot[r][col] * scale[col];
    return m;
  }
  return std::nullopt;
}

// Nearest anatomical direction per array axis. Returns an error message
// instead when a column is degenerate, tied, or duplicates another axis.
inline std::optional<AxisCode> axis_code_from_matrix(const Matrix3& m, std::string* issue = nullptr) {
  AxisCode code;
  std::array<bool, 3> used{false, false, false};
  for (int col = 0; col < 3; ++col) {
    std::array<double, 3> mag{std::abs(m[0][col]), std::abs(m[1][col]), std::abs(m[2][col])};
    const int w = static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
    const double best = mag[static_cast<std::size_t>(w)];
    bool tie = false;
    for (int k = 0; k < 3; ++k) {
      if (k != w && mag[static_cast<std::size_t>(k)] >= best * (1.0 - 1e-6)) tie = true;
    }
    if (!(best > 0.0) || tie || used[static_cast<std::size_t>(w)]) {
      if (issue) *issue = "ambiguous orientation in affine column " + std::to_string(col);
      return std::nullopt;
    }
    used[static_cast<std::size_t>(w)] = true;
    const bool positive = m[w][col] > 0;
    static constexpr char pos[] = {'R', 'A', 'S'};
    static constexpr char neg[] = {'L', 'P', 'I'};
    code.letters[static_cast<std::size_t>(col)] = positive ? pos[w] : neg[w];
  }
  return code;
}

// Quaternion (b, c, d) and qfac for a proper or improper rotation matrix.
inline void rotation_to_quaternion(Matrix3 r, double& qb, double& qc, double& qd, double& qfac) {
  const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  qfac = det < 0 ? -1.0 : 1.0;
  if (det < 0)
    for (auto& row : r) row[2] = -row[2];
  double a = r[0][0] + r[1][1] + r[2][2] + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r[2][1] - r[1][2]) / a;
    c = 0.25 * (r[0][2] - r[2][0]) / a;
    d = 0.25 * (r[1][0] - r[0][1]) / a;
  } else {
    const double xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
    const double yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
    const double zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r[0][1] + r[1][0]) / b;
      d = 0.25 * (r[0][2] + r[2][0]) / b;
      a = 0.25 * (r[2][1] - r[1][2]) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r[0][1] + r[1][0]) / c;
      d = 0.25 * (r[1][2] + r[2][1]) / c;
      a = 0.25 * (r[0][2] - r[2][0]) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r[0][2] + r[2][0]) / d;
      c = 0.25 * (r[1][2] + r[2][1]) / d;
      a = 0.25 * (r[1][0] - r[0][1]) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  qb = b;
  qc = c;
  qd = d;
}

// Fresh header for an axis-aligned grid whose array axes point along `axes`.
inline Header make_header(const Extent3& extent, const Spacing3& spacing, const std::optional<AxisCode>& axes,
                          std::int16_t datatype = kFloat32) {
  Header h;
  h.set<std::int32_t>(0, static_cast<std::int32_t>(kHeaderSize));
  h.set_dim(0, 3);
  for (int i = 0; i < 3; ++i) h.set_dim(i + 1, static_cast<std::int16_t>(extent[static_cast<std::size_t>(i)]));
  for (int i = 4; i < 8; ++i) h.set_dim(i, 1);
  h.set<std::int16_t>(70, datatype);
  h.set<std::int16_t>(72, static_cast<std::int16_t>(8 * detail::bytes_per_voxel(datatype)));
  h.set_pixdim(0, 1.0f);
  for (int i = 0; i < 3; ++i) h.set_pixdim(i + 1, static_cast<float>(spacing[static_cast<std::size_t>(i)]));
  for (int i = 4; i < 8; ++i) h.set_pixdim(i, 1.0f);
  h.set<float>(108, 352.0f);
  h.set<float>(112, 1.0f);
  h.set<std::uint8_t>(123, 2);  // mm
  std::memcpy(h.bytes().data() + 344, "n+1\0", 4);
  if (!axes) return h;

  Matrix3 rot{};
  for (int col = 0; col < 3; ++col) {
    const char letter = axes->letters[static_cast<std::size_t>(col)];
    const int w = (letter == 'R' || letter == 'L') ? 0 : (letter == 'A' || letter == 'P') ? 1 : 2;
    const double sign = (letter == 'L' || letter == 'P' || letter == 'I') ? -1.0 : 1.0;
    rot[w][col] = sign;
  }
  for (int r = 0; r < 3; ++r) {
    double origin = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double v = rot[r][c] * spacing[static_cast<std::size_t>(c)];
      h.set_srow(r, c, static_cast<float>(v));
      if (v < 0) origin -= v * (extent[static_cast<std::size_t>(c)] - 1);
    }
    h.set_srow(r, 3, static_cast<float>(origin));
  }
  double qb, qc, qd, qfac;
  rotation_to_quaternion(rot, qb, qc, qd, qfac);
  h.set<float>(256, static_cast<float>(qb));
  h.set<float>(260, static_cast<float>(qc));
  h.set<float>(264, static_cast<float>(qd));
  h.set<float>(268, h.srow(0, 3));
  h.set<float>(272, h.srow(1, 3));
  h.set<float>(276, h.srow(2, 3));
  h.set_pixdim(0, static_cast<float>(qfac));
  h.set<std::int16_t>(252, 1);
  h.set<std::int16_t>(254, 1);
  return h;
}

struct Image {
  Header header;
  Volume volume;
};

inline Image read(const std::string& path) {
  detail::GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open NIfTI file " + path);
  Image img;
  Header& h = img.header;
  if (gzread(f.get(), h.bytes().data(), static_cast<unsigned>(kHeaderSize)) != static_cast<int>(kHeaderSize)) {
    throw std::runtime_error("truncated NIfTI header in " + path);
  }
  bool swap = false;
  if (h.get<std::int32_t>(0) != static_cast<std::int32_t>(kHeaderSize)) {
    if (detail::byteswap_value(h.get<std::int32_t>(0)) != static_cast<std::int32_t>(kHeaderSize)) {
      throw std::runtime_error("not a NIfTI-1 file (bad sizeof_hdr): " + path);
    }
    swap = true;
    detail::swap_header(h);
  }
  if (std::memcmp(h.bytes().data() + 344, "n+1", 3) != 0) {
    throw std::runtime_error("only single-file NIfTI-1 ('n+1') is supported: " + path);
  }
  const int ndim = h.dim(0);
  if (ndim < 3 || ndim > 7) throw std::runtime_error("unsupported dimensionality in " + path);
  for (int i = 4; i <= ndim; ++i) {
    if (h.dim(i) > 1) throw std::runtime_error("only 3D volumes are supported: " + path);
  }
  const Extent3 extent = h.extent();
  for (int d : extent) {
    if (d < 1) throw std::runtime_error("invalid dimension in " + path);
  }
  const int bpv = detail::bytes_per_voxel(h.datatype());
  if (bpv == 0) throw std::runtime_error("unsupported NIfTI datatype " + std::to_string(h.datatype()) + " in " + path);

  const auto offset = static_cast<z_off_t>(h.vox_offset());
  if (gzseek(f.get(), offset, SEEK_SET) != offset) throw std::runtime_error("cannot seek to voxel data in " + path);
  const std::size_t n = voxel_count(extent);
  std::vector<std::uint8_t> raw(n * static_cast<std::size_t>(bpv));
  std::size_t got = 0;
  while (got < raw.size()) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(raw.size() - got, 1u << 30));
    const int r = gzread(f.get(), raw.data() + got, chunk);
    if (r <= 0) throw std::runtime_error("truncated voxel data in " + path);
    got += static_cast<std::size_t>(r);
  }
  std::vector<float> values(n);
  switch (h.datatype()) {
    case kUInt8: detail::convert_block<std::uint8_t>(raw.data(), n, false, values); break;
    case kInt8: detail::convert_block<std::int8_t>(raw.data(), n, false, values); break;
    case kInt16: detail::convert_block<std::int16_t>(raw.data(), n, swap, values); break;
    case kUInt16: detail::convert_block<std::uint16_t>(raw.data(), n, swap, values); break;
    case kInt32: detail::convert_block<std::int32_t>(raw.data(), n, swap, values); break;
    case kUInt32: detail::convert_block<std::uint32_t>(raw.data(), n, swap, values); break;
    case kFloat32: detail::convert_block<float>(raw.data(), n, swap, values); break;
    case kFloat64: detail::convert_block<double>(raw.data(), n, swap, values); break;
    default: break;
  }
  const float slope = h.scl_slope();
  if (slope != 0.0f && std::isfinite(slope) && (slope != 1.0f || h.scl_inter() != 0.0f)) {
    for (auto& v : values) v = v * slope + h.scl_inter();
  }

  img.volume.data = Grid3<float>(extent, std::move(values));
  for (int i = 0; i < 3; ++i) {
    const float p = h.pixdim(i + 1);
    img.volume.spacing[static_cast<std::size_t>(i)] = p > 0 ? p : 1.0;
  }
  img.volume.source = path;
  if (auto m = orientation_matrix(h)) {
    img.volume.axes = axis_code_from_matrix(*m, &img.volume.orientation_issue);
  } else {
    img.volume.orientation_issue = "neither sform nor qform is set";
  }
  return img;
}

inline LabelMask read_mask(const std::string& path) {
  Image img = read(path);
  Grid3<std::uint8_t> g(img.volume.extent());
  auto src = img.volume.data.values();
  for (std::size_t i = 0; i < src.size(); ++i) g[i] = src[i] > 0.5f ? 1 : 0;
  return LabelMask(std::move(g));
}

namespace detail {

inline void write_bytes(const std::string& path, const Header& header, const std::vector<std::uint8_t>& payload) {
  const bool compress = ends_with(path, ".gz");
  GzHandle f(gzopen(path.c_str(), compress ? "wb6" : "wbT"));
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::array<std::uint8_t, 4> extension{0, 0, 0, 0};
  auto put = [&](const void* p, std::size_t n) {
    if (n > 0 && gzwrite(f.get(), p, static_cast<unsigned>(n)) != static_cast<int>(n)) {
      throw std::runtime_error("write failed for " + path);
    }
  };
  put(header.bytes().data(), kHeaderSize);
  put(extension.data(), extension.size());
  put(payload.data(), payload.size());
  if (gzclose(f.release()) != Z_OK) throw std::runtime_error("close failed for " + path);
}

inline Header retarget(Header h, std::int16_t datatype, const Extent3& extent) {
  if (h.extent() != extent) throw std::invalid_argument("NIfTI header grid does not match data extent");
  h.set<std::int16_t>(70, datatype);
  h.set<std::int16_t>(72, static_cast<std::int16_t>(8 * bytes_per_voxel(datatype)));
  h.set<float>(108, 352.0f);
  h.set<float>(112, 1.0f);
  h.set<float>(116, 0.0f);
  h.set<float>(124, 0.0f);
  h.set<float>(128, 0.0f);
  return h;
}

}  // namespace detail

inline void write_float(const std::string& path, const Grid3<float>& data, const Header& like) {
  const Header h = detail::retarget(like, kFloat32, data.extent());
  std::vector<std::uint8_t> payload(data.size() * sizeof(float));
  std::memcpy(payload.data(), data.values().data(), payload.size());
  detail::write_bytes(path, h, payload);
}

inline void write_mask(const std::string& path, const LabelMask& mask, const Header& like) {
  const Header h = detail::retarget(like, kUInt8, mask.extent());
  std::vector<std::uint8_t> payload(mask.data.values().begin(), mask.data.values().end());
  detail::write_bytes(path, h, payload);
}

inline void write_volume(const std::string& path, const Volume& v) {
  write_float(path, v.data, make_header(v.extent(), v.spacing, v.axes));
}

}  // namespace hipseg::nifti
