// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bnsvp/errors.hpp"

namespace bnsvp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultSegments = 32;

enum class BagLabel : int { kNormal = 0, kAbnormal = 1 };

// One video: n segment feature rows of dimension M and a weak label.
struct Bag {
  std::string id;
  Matrix features;  // n x M
  BagLabel label = BagLabel::kNormal;
  std::optional<std::vector<int>> segment_labels;

  Eigen::Index segments() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool abnormal() const { return label == BagLabel::kAbnormal; }
};

struct Dataset {
  std::string name;
  std::vector<Bag> bags;

  Eigen::Index dim() const { return bags.empty() ? 0 : bags.front().dim(); }
  std::size_t count(BagLabel label) const {
    std::size_t c = 0;
    for (const auto& b : bags) c += (b.label == label);
    return c;
  }
};

// Throws ValidationError when a bag breaks its invariants.
inline void validate_bag(const Bag& bag) {
  if (bag.segments() < 1 || bag.dim() < 1) {
    throw ValidationError("bag '" + bag.id + "' must have at least one segment and one dimension");
  }
  if (!bag.features.allFinite()) {
    throw ValidationError("bag '" + bag.id + "' contains non-finite features");
  }
  if (bag.segment_labels) {
    const auto& labels = *bag.segment_labels;
    if (static_cast<Eigen::Index>(labels.size()) != bag.segments()) {
      throw ValidationError("bag '" + bag.id + "' has " + std::to_string(labels.size()) +
                            " segment labels for " + std::to_string(bag.segments()) + " segments");
    }
    for (int l : labels) {
      if (l != 0 && l != 1) throw ValidationError("bag '" + bag.id + "' has a non-binary segment label");
      if (l == 1 && !bag.abnormal()) {
        throw ValidationError("normal bag '" + bag.id + "' has an abnormal segment label");
      }
    }
  }
}

inline void validate_dataset(const Dataset& ds) {
  std::set<std::string> ids;
  for (const auto& bag : ds.bags) {
    validate_bag(bag);
    if (!ids.insert(bag.id).second) throw ValidationError("duplicate bag id '" + bag.id + "'");
    const auto& first = ds.bags.front();
    if (bag.dim() != first.dim()) {
      throw ValidationError("feature dimension mismatch: bag '" + first.id + "' has " +
                            std::to_string(first.dim()) + ", bag '" + bag.id + "' has " +
                            std::to_string(bag.dim()));
    }
  }
}

// Averages c clip rows into n_segments contiguous groups. Group sizes differ
// by at most one and the earlier groups take the extra clips. With fewer
// clips than segments the trailing segments repeat the last clip.
inline Matrix segment_video(const Matrix& clips, std::size_t n_segments) {
  if (n_segments == 0) throw ArgumentError("n_segments must be positive");
  const auto c = static_cast<std::size_t>(clips.rows());
  if (c == 0) throw ArgumentError("segment_video needs at least one clip");
  Matrix out(static_cast<Eigen::Index>(n_segments), clips.cols());
  if (c < n_segments) {
    for (std::size_t k = 0; k < n_segments; ++k) {
      out.row(static_cast<Eigen::Index>(k)) = clips.row(static_cast<Eigen::Index>(std::min(k, c - 1)));
    }
    return out;
  }
  const std::size_t base = c / n_segments;
  const std::size_t extra = c % n_segments;
  std::size_t start = 0;
  for (std::size_t k = 0; k < n_segments; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    out.row(static_cast<Eigen::Index>(k)) =
        clips.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).colwise().mean();
    start += len;
  }
  return out;
}

// Contiguous group of clip indices feeding segment k, matching segment_video.
inline std::pair<std::size_t, std::size_t> segment_group(std::size_t c, std::size_t n_segments, std::size_t k) {
  if (c < n_segments) {
    const std::size_t i = std::min(k, c - 1);
    return {i, i + 1};
  }
  const std::size_t base = c / n_segments;
  const std::size_t extra = c % n_segments;
  const std::size_t start = k * base + std::min(k, extra);
  return {start, start + base + (k < extra ? 1 : 0)};
}

// ---------------------------------------------------------------------------
// Feature files
//
// Layout: "BSVP", u32 version = 1, u32 n_segments, u32 dim, then
// n_segments * dim little-endian f32 values in row-major order.
// ---------------------------------------------------------------------------

inline constexpr char kFeatureMagic[4] = {'B', 'S', 'V', 'P'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 16;

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::string encode_features(const Matrix& features) {
  if (features.rows() < 1 || features.cols() < 1) {
    throw FormatError("feature matrix must have at least one row and one column");
  }
  if (!features.allFinite()) throw FormatError("feature matrix contains non-finite values");
  std::string buf;
  buf.reserve(kFeatureHeaderBytes + 4 * static_cast<std::size_t>(features.size()));
  buf.append(kFeatureMagic, 4);
  detail::put_u32(buf, kFeatureVersion);
  detail::put_u32(buf, static_cast<std::uint32_t>(features.rows()));
  detail::put_u32(buf, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      detail::put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(features(i, j))));
    }
  }
  return buf;
}

inline Matrix decode_features(const std::string& bytes, const std::string& origin = "<memory>") {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FormatError(origin + ": truncated header: expected " + std::to_string(kFeatureHeaderBytes) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) throw FormatError(origin + ": bad magic, expected BSVP");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::get_u32(p + 4);
  if (version != kFeatureVersion) {
    throw FormatError(origin + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t n = detail::get_u32(p + 8);
  const std::uint32_t dim = detail::get_u32(p + 12);
  if (n < 1 || dim < 1) throw FormatError(origin + ": n_segments and dim must be at least 1");
  const std::size_t expected = kFeatureHeaderBytes + 4ULL * n * dim;
  if (bytes.size() != expected) {
    throw FormatError(origin + ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  Matrix out(n, dim);
  const unsigned char* payload = p + kFeatureHeaderBytes;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) {
      out(i, j) = std::bit_cast<float>(detail::get_u32(payload + 4ULL * (i * dim + j)));
    }
  }
  return out;
}

inline void write_feature_file(const Matrix& features, const std::filesystem::path& path) {
  const std::string buf = encode_features(features);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline Matrix read_feature_file(const std::filesystem::path& path) {
  return decode_features(read_file_bytes(path), path.string());
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file_bytes(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || !doc.contains("videos") || !doc["videos"].is_array()) {
    throw FormatError(manifest_path.string() + ": manifest needs 'version' and 'videos'");
  }
  if (doc["version"] != 1) throw FormatError(manifest_path.string() + ": unsupported manifest version");
  Dataset ds;
  ds.name = manifest_path.stem().string();
  const auto base = manifest_path.parent_path();
  try {
    for (const auto& v : doc["videos"]) {
      Bag bag;
      bag.id = v.at("id").get<std::string>();
      const int label = v.at("bag_label").get<int>();
      if (label != 0 && label != 1) throw FormatError("bag '" + bag.id + "': bag_label must be 0 or 1");
      bag.label = static_cast<BagLabel>(label);
      bag.features = read_feature_file(base / v.at("feature_file").get<std::string>());
      if (v.contains("segment_labels")) bag.segment_labels = v["segment_labels"].get<std::vector<int>>();
      ds.bags.push_back(std::move(bag));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  validate_dataset(ds);
  return ds;
}

// Writes <dir>/<manifest_name> plus one feature file per bag under
// <dir>/<feature_subdir>/.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir, const std::string& manifest_name,
                         const std::string& feature_subdir = "features") {
  validate_dataset(ds);
  std::error_code ec;
  std::filesystem::create_directories(dir / feature_subdir, ec);
  if (ec) throw IoError("cannot create '" + (dir / feature_subdir).string() + "': " + ec.message());
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& bag : ds.bags) {
    const std::string rel = feature_subdir + "/" + bag.id + ".bsvp";
    write_feature_file(bag.features, dir / rel);
    nlohmann::json v = {{"id", bag.id}, {"feature_file", rel}, {"bag_label", static_cast<int>(bag.label)}};
    if (bag.segment_labels) v["segment_labels"] = *bag.segment_labels;
    videos.push_back(std::move(v));
  }
  const nlohmann::json doc = {{"version", 1}, {"videos", videos}};
  std::ofstream out(dir / manifest_name, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + (dir / manifest_name).string() + "' for writing");
  out << doc.dump(2) << "\n";
}

}  // namespace bnsvp
