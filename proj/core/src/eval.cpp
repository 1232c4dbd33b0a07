#include "vjdet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vjdet {

MatchResult match_detections(std::span<const Detection> detections, std::span<const TruthBox> truth,
                             double iou_min) {
  if (!(iou_min > 0.0 && iou_min < 1.0)) raise(Errc::InvalidConfig, "iou_min must be in (0, 1)");

  // Canonical detection order makes the greedy result independent of how
  // the detections were listed.
  std::vector<int> det_order(detections.size());
  std::iota(det_order.begin(), det_order.end(), 0);
  std::sort(det_order.begin(), det_order.end(), [&](int a, int b) {
    if (detections[a].box != detections[b].box) return rect_less(detections[a].box, detections[b].box);
    if (detections[a].score != detections[b].score) return detections[a].score < detections[b].score;
    return detections[a].neighbors < detections[b].neighbors;
  });

  struct Candidate {
    double overlap;
    int det_rank;
    int truth_idx;
  };
  std::vector<Candidate> candidates;
  for (int rank = 0; rank < static_cast<int>(det_order.size()); ++rank) {
    for (int t = 0; t < static_cast<int>(truth.size()); ++t) {
      if (truth[t].ignore) continue;
      const double overlap = iou(detections[det_order[rank]].box, truth[t].box);
      if (overlap >= iou_min) candidates.push_back(Candidate{overlap, rank, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.det_rank != b.det_rank) return a.det_rank < b.det_rank;
    return a.truth_idx < b.truth_idx;
  });

  MatchResult result;
  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  for (const Candidate& c : candidates) {
    const int det_idx = det_order[c.det_rank];
    if (det_used[det_idx] || truth_used[c.truth_idx]) continue;
    det_used[det_idx] = true;
    truth_used[c.truth_idx] = true;
    result.matches.push_back(MatchResult::Pair{det_idx, c.truth_idx, c.overlap});
  }

  result.tp = static_cast<int>(result.matches.size());
  for (int t = 0; t < static_cast<int>(truth.size()); ++t)
    if (!truth[t].ignore && !truth_used[t]) ++result.fn;
  for (int d = 0; d < static_cast<int>(detections.size()); ++d) {
    if (det_used[d]) continue;
    bool ignored = false;
    for (const TruthBox& t : truth)
      if (t.ignore && iou(detections[d].box, t.box) >= iou_min) ignored = true;
    if (!ignored) ++result.fp;
  }
  return result;
}

MetricsReport compute_metrics(const Counts& totals) {
  if (totals.tp < 0 || totals.fp < 0 || totals.fn < 0) raise(Errc::InvalidConfig, "counts must be >= 0");
  MetricsReport r;
  r.counts = totals;
  const double tp = static_cast<double>(totals.tp);
  if (totals.tp + totals.fp > 0) r.accuracy = tp / static_cast<double>(totals.tp + totals.fp);
  if (totals.tp + totals.fn > 0) r.completeness = tp / static_cast<double>(totals.tp + totals.fn);
  if (totals.tp + totals.fp + totals.fn > 0)
    r.quality = tp / static_cast<double>(totals.tp + totals.fp + totals.fn);
  return r;
}

MetricsReport scene_report(std::span<const MetricsReport::FrameCounts> frames, const SceneMeta& meta) {
  if (frames.empty()) raise(Errc::InvalidConfig, "scene report needs at least one frame");
  Counts totals;
  for (const auto& f : frames) {
    totals.tp += f.tp;
    totals.fp += f.fp;
    totals.fn += f.fn;
  }
  MetricsReport r = compute_metrics(totals);
  r.scene = meta.scene;
  r.per_image.assign(frames.begin(), frames.end());
  return r;
}

namespace {

std::string metric_cell(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << *v;
  return os.str();
}

}  // namespace

std::string render_text(std::span<const MetricsReport> scenes) {
  std::ostringstream os;
  os << "scene            frames      tp      fp      fn  accuracy  completeness  quality\n";
  for (const auto& s : scenes) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %6zu %7lld %7lld %7lld  %8s  %12s  %7s\n",
                  s.scene.empty() ? "-" : s.scene.c_str(), s.per_image.size(), s.counts.tp, s.counts.fp,
                  s.counts.fn, metric_cell(s.accuracy).c_str(), metric_cell(s.completeness).c_str(),
                  metric_cell(s.quality).c_str());
    os << line;
  }
  return os.str();
}

std::string render_csv(std::span<const MetricsReport> scenes) {
  std::ostringstream os;
  os << "scene,frames,tp,fp,fn,accuracy,completeness,quality\n";
  for (const auto& s : scenes) {
    os << s.scene << ',' << s.per_image.size() << ',' << s.counts.tp << ',' << s.counts.fp << ',' << s.counts.fn
       << ',' << metric_cell(s.accuracy) << ',' << metric_cell(s.completeness) << ',' << metric_cell(s.quality)
       << '\n';
  }
  return os.str();
}

std::string render_json(std::span<const MetricsReport> scenes, std::span<const SceneMeta> metas) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const MetricsReport& s = scenes[i];
    nlohmann::json row;
    row["scene"] = s.scene;
    row["frames"] = s.per_image.size();
    row["tp"] = s.counts.tp;
    row["fp"] = s.counts.fp;
    row["fn"] = s.counts.fn;
    row["accuracy"] = s.accuracy ? nlohmann::json(*s.accuracy) : nlohmann::json(nullptr);
    row["completeness"] = s.completeness ? nlohmann::json(*s.completeness) : nlohmann::json(nullptr);
    row["quality"] = s.quality ? nlohmann::json(*s.quality) : nlohmann::json(nullptr);
    nlohmann::json per_image = nlohmann::json::array();
    for (const auto& f : s.per_image)
      per_image.push_back({{"image", f.image}, {"tp", f.tp}, {"fp", f.fp}, {"fn", f.fn}});
    row["per_image"] = per_image;
    if (i < metas.size()) {
      nlohmann::json meta;
      for (const auto& [k, v] : metas[i].fields) meta[k] = v;
      row["meta"] = meta;
    }
    out.push_back(row);
  }
  return out.dump(2) + "\n";
}

}  // namespace vjdet
