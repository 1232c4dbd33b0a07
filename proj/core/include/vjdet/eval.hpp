#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vjdet/dataset.hpp"
#include "vjdet/detect.hpp"

namespace vjdet {

/// One frame's matching outcome: greedy one-to-one assignment by descending
/// IoU. Detections overlapping only ignore boxes count neither way.
struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  struct Pair {
    int detection = 0;  // index into the input detections
    int truth = 0;      // index into the input truth boxes
    double overlap = 0.0;
  };
  std::vector<Pair> matches;
};

MatchResult match_detections(std::span<const Detection> detections, std::span<const TruthBox> truth,
                             double iou_min = 0.5);

struct Counts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

/// Accuracy = TP/(TP+FP), Completeness = TP/(TP+FN),
/// Quality = TP/(TP+FP+FN). A zero denominator leaves the metric unset.
struct MetricsReport {
  std::string scene;
  Counts counts;
  std::optional<double> accuracy;
  std::optional<double> completeness;
  std::optional<double> quality;
  struct FrameCounts {
    std::string image;
    int tp = 0;
    int fp = 0;
    int fn = 0;
  };
  std::vector<FrameCounts> per_image;
};

MetricsReport compute_metrics(const Counts& totals);

/// Scene metadata rendered alongside the metric columns (frames, frame
/// size, lighting and so on, all free-form).
struct SceneMeta {
  std::string scene;
  std::vector<std::pair<std::string, std::string>> fields;
};

/// Micro-average: counts are summed across frames before the ratios.
MetricsReport scene_report(std::span<const MetricsReport::FrameCounts> frames, const SceneMeta& meta);

std::string render_text(std::span<const MetricsReport> scenes);
std::string render_csv(std::span<const MetricsReport> scenes);
std::string render_json(std::span<const MetricsReport> scenes, std::span<const SceneMeta> metas);

}  // namespace vjdet
