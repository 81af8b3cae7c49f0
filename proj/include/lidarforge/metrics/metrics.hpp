// Copyright 2026 The LidarForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lidarforge/core/error.hpp"
#include "lidarforge/lidar/point_cloud.hpp"

namespace lidarforge {

/// Row = ground truth, column = prediction.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names)
      : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

  std::size_t classes() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }

  std::uint64_t operator()(std::size_t gt, std::size_t pred) const { return counts_[gt * names_.size() + pred]; }
  std::uint64_t& operator()(std::size_t gt, std::size_t pred) { return counts_[gt * names_.size() + pred]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  void accumulate(std::span<const Label> gt, std::span<const Label> pred) {
    if (gt.size() != pred.size()) {
      throw Error("confusion: " + std::to_string(gt.size()) + " ground-truth labels vs " +
                  std::to_string(pred.size()) + " predictions");
    }
    const std::size_t c = names_.size();
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] >= c || pred[i] >= c) {
        throw Error("confusion: label " + std::to_string(std::max(gt[i], pred[i])) + " at point " +
                    std::to_string(i) + " exceeds class count " + std::to_string(c));
      }
      ++counts_[gt[i] * c + pred[i]];
    }
  }

  void merge(const ConfusionMatrix& other) {
    if (other.names_ != names_) throw Error("confusion: merging matrices with different class tables");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

struct IouReport {
  std::vector<std::string> class_names;
  std::vector<std::optional<double>> iou;  // nullopt: class absent from both gt and pred
  double miou = 0.0;                       // NaN when no class is defined
  std::vector<std::string> undefined;      // names of the flagged classes

  bool operator==(const IouReport&) const = default;
};

inline IouReport iou_report(const ConfusionMatrix& cm) {
  const std::size_t c = cm.classes();
  IouReport report;
  report.class_names = cm.class_names();
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const std::uint64_t tp = cm(k, k);
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += cm(j, k);
      fn += cm(k, j);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) {
      report.iou.push_back(std::nullopt);
      report.undefined.push_back(report.class_names[k]);
      continue;
    }
    const double v = static_cast<double>(tp) / static_cast<double>(denom);
    report.iou.push_back(v);
    sum += v;
    ++defined;
  }
  report.miou = defined > 0 ? sum / static_cast<double>(defined) : std::nan("");
  return report;
}

/// Unweighted mean, the way mIoU is tabulated from per-class values.
inline double mean_iou(std::span<const double> class_iou) {
  if (class_iou.empty()) throw Error("mean_iou: no classes");
  double s = 0.0;
  for (double v : class_iou) s += v;
  return s / static_cast<double>(class_iou.size());
}

inline nlohmann::ordered_json report_json(const IouReport& report, const ConfusionMatrix& cm) {
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < report.class_names.size(); ++k) {
    per_class[report.class_names[k]] =
        report.iou[k] ? nlohmann::ordered_json(*report.iou[k]) : nlohmann::ordered_json(nullptr);
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < cm.classes(); ++g) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm(g, p));
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json j;
  j["per_class_iou"] = std::move(per_class);
  j["miou"] = std::isnan(report.miou) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(report.miou);
  j["undefined_classes"] = report.undefined;
  j["confusion"] = {{"classes", cm.class_names()}, {"rows", std::move(rows)}};
  return j;
}

struct ClassDistribution {
  std::vector<std::string> class_names;
  std::vector<std::uint64_t> counts;
  std::vector<double> percent;
  std::uint64_t total = 0;
};

inline ClassDistribution class_distribution(std::span<const std::string> class_names,
                                            std::span<const std::uint64_t> counts) {
  if (class_names.size() != counts.size()) throw Error("class_distribution: histogram size mismatch");
  ClassDistribution d;
  d.class_names.assign(class_names.begin(), class_names.end());
  d.counts.assign(counts.begin(), counts.end());
  for (auto c : counts) d.total += c;
  if (d.total == 0) throw Error("class_distribution: no points");
  for (auto c : counts) d.percent.push_back(100.0 * static_cast<double>(c) / static_cast<double>(d.total));
  return d;
}

inline ClassDistribution class_distribution(std::span<const LabeledPointCloud> clouds) {
  if (clouds.empty()) throw Error("class_distribution: no clouds");
  const auto& names = clouds.front().class_names;
  std::vector<std::uint64_t> counts(names.size(), 0);
  for (const auto& cloud : clouds) {
    if (cloud.class_names != names) throw Error("class_distribution: clouds disagree on class table");
    for (Label l : cloud.labels) {
      if (l >= counts.size()) throw Error("class_distribution: label out of range");
      ++counts[l];
    }
  }
  return class_distribution(names, counts);
}

/// "name: 88.3%" lines, one decimal.
inline std::string distribution_text(const ClassDistribution& d) {
  std::string out;
  char buf[64];
  for (std::size_t k = 0; k < d.class_names.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.1f%%", d.percent[k]);
    out += d.class_names[k] + ": " + buf + " (" + std::to_string(d.counts[k]) + " points)\n";
  }
  return out;
}

}  // namespace lidarforge
