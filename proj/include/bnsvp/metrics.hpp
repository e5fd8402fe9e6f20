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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bnsvp/errors.hpp"

namespace bnsvp {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

inline double trapezoid_area(const std::vector<RocPoint>& pts) {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) * 0.5;
  }
  return area;
}

// ROC curve with one threshold per distinct score, sweeping from the
// highest score down. Tied scores move along the diagonal of their cell,
// which gives them half credit in the area.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ArgumentError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ArgumentError("ROC needs at least one positive and one negative label");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    r.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                        static_cast<double>(tp) / static_cast<double>(pos)});
  }
  r.auc = trapezoid_area(r.points);
  return r;
}

// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(const std::vector<long>& a, const std::vector<long>& b) {
  if (a.size() != b.size()) throw ArgumentError("labelings differ in length");
  std::map<std::pair<long, long>, double> joint;
  std::map<long, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [k, v] : joint) sum_joint += pairs(v);
  for (const auto& [k, v] : ca) sum_a += pairs(v);
  for (const auto& [k, v] : cb) sum_b += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string roc_svg(const std::string& name, const RocResult& r) {
  constexpr double kSize = 400.0, kPad = 40.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 2 * kPad << "\" height=\""
      << kSize + 2 * kPad << "\">\n";
  svg << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad + kSize << "\" x2=\"" << kPad + kSize << "\" y2=\"" << kPad
      << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : r.points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f ", kPad + p.fpr * kSize, kPad + (1.0 - p.tpr) * kSize);
    svg << buf;
  }
  svg << "\"/>\n";
  char title[160];
  std::snprintf(title, sizeof title, "%s AUC=%.4f", name.c_str(), r.auc);
  svg << "<text x=\"" << kPad << "\" y=\"" << kPad - 10 << "\" font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n";
  svg << "<text x=\"" << kPad + kSize / 2 - 10 << "\" y=\"" << 2 * kPad + kSize - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\">FPR</text>\n";
  svg << "<text x=\"5\" y=\"" << kPad + kSize / 2 << "\" font-family=\"sans-serif\" font-size=\"12\">TPR</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace detail

// Writes metrics.csv (name,auc) and roc_<name>.csv (fpr,tpr) into out_dir,
// plus roc_<name>.svg when `svg` is set.
inline void report(const std::vector<std::pair<std::string, RocResult>>& results, const std::filesystem::path& out_dir,
                   bool svg = false) {
  if (results.empty()) throw ArgumentError("report needs at least one result");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::string metrics = "name,auc\n";
  for (const auto& [name, roc] : results) {
    metrics += name + "," + detail::format_double(roc.auc) + "\n";
    std::string curve = "fpr,tpr\n";
    for (const auto& p : roc.points) curve += detail::format_double(p.fpr) + "," + detail::format_double(p.tpr) + "\n";
    detail::write_text(out_dir / ("roc_" + name + ".csv"), curve);
    if (svg) detail::write_text(out_dir / ("roc_" + name + ".svg"), detail::roc_svg(name, roc));
  }
  detail::write_text(out_dir / "metrics.csv", metrics);
}

// Reads a roc_<name>.csv file back into a RocResult.
inline RocResult read_roc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "fpr,tpr") throw FormatError(path.string() + ": missing fpr,tpr header");
  RocResult r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path.string() + ": malformed row '" + line + "'");
    try {
      r.points.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (r.points.size() < 2) throw FormatError(path.string() + ": ROC curve needs at least two points");
  r.auc = trapezoid_area(r.points);
  return r;
}

}  // namespace bnsvp
