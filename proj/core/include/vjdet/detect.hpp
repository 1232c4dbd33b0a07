#pragma once

#include <span>
#include <vector>

#include "vjdet/cascade.hpp"

namespace vjdet {

/// A grouped detection. score sums the final-stage margins of the merged raw
/// windows; neighbors is how many raw windows the class contained.
struct Detection {
  Rect box;
  double score = 0.0;
  int neighbors = 1;
};

struct DetectParams {
  double scale_step = 1.1;
  int window_stride = 2;  // at base scale; scaled with the window
  int min_size = 0;       // smallest window width; 0 = cascade base width
  int max_size = 0;       // largest window width; 0 = whatever fits the image
  int min_neighbors = 3;  // 0 = return raw windows ungrouped
  int threads = 1;
};

/// One level of the sliding-window pyramid (the detector scales its
/// features, never the image).
struct ScanScale {
  double scale = 1.0;
  int win_w = 0;
  int win_h = 0;
  int stride = 1;
};

std::vector<ScanScale> scan_scales(int base_w, int base_h, int img_w, int img_h, const DetectParams& p);

/// Rescales every stage feature; thresholds are untouched (the features'
/// area correction keeps responses comparable).
Cascade scale_cascade(const Cascade& c, double scale);

/// An accepted window before grouping, with its final-stage margin.
struct RawWindow {
  Rect box;
  double margin = 0.0;
};

/// Full sliding-window scan over every scale; returns accepted windows in
/// deterministic scan order (scale-major, then y, x).
std::vector<RawWindow> scan_windows(const Cascade& c, const IntegralImage& ii, const DetectParams& p);

/// Partitions raw windows into similarity classes (position and size within
/// 20%, transitive closure) and emits the mean box of every class with at
/// least min_neighbors members. min_neighbors == 0 passes everything through.
std::vector<Detection> group_detections(std::span<const RawWindow> raw, int min_neighbors);

/// scan + group; output sorted by (y, x, size).
std::vector<Detection> detect_multiscale(const Cascade& c, const GrayImage& img, const DetectParams& p = {});

}  // namespace vjdet
