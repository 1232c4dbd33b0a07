// Independent reference implementations the tests check the library
// against. Everything here recomputes results the slow, obvious way and
// must stay decoupled from the code paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vjdet/boosting.hpp"
#include "vjdet/cascade.hpp"
#include "vjdet/detect.hpp"
#include "vjdet/haar.hpp"
#include "vjdet/image.hpp"

namespace oracles {

inline vjdet::GrayImage random_image(std::mt19937& rng, int w, int h) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() % 256);
  return vjdet::GrayImage(w, h, std::move(px));
}

inline vjdet::Rect random_rect_within(std::mt19937& rng, int img_w, int img_h) {
  const int w = 1 + static_cast<int>(rng() % static_cast<unsigned>(img_w));
  const int h = 1 + static_cast<int>(rng() % static_cast<unsigned>(img_h));
  const int x = static_cast<int>(rng() % static_cast<unsigned>(img_w - w + 1));
  const int y = static_cast<int>(rng() % static_cast<unsigned>(img_h - h + 1));
  return vjdet::Rect{x, y, w, h};
}

/// Double-loop pixel sum.
inline std::uint64_t naive_rect_sum(const vjdet::GrayImage& img, const vjdet::Rect& r) {
  std::uint64_t acc = 0;
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) acc += img.at(x, y);
  return acc;
}

inline std::pair<double, double> naive_mean_stddev(const vjdet::GrayImage& img, const vjdet::Rect& r) {
  const double n = static_cast<double>(r.area());
  double sum = 0.0, sq = 0.0;
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) {
      const double v = img.at(x, y);
      sum += v;
      sq += v * v;
    }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  return {mean, var <= 0 ? 1.0 : std::sqrt(var)};
}

/// Feature response by accumulating a per-pixel weight mask, an entirely
/// different route from integral-image rectangle sums.
inline double mask_feature_value(const vjdet::HaarFeature& f, const vjdet::GrayImage& img,
                                 const vjdet::Rect& window, double inv_stddev) {
  std::vector<double> mask(static_cast<std::size_t>(window.w) * window.h, 0.0);
  for (const auto& wr : f.rects)
    for (int y = wr.rect.y; y < wr.rect.bottom(); ++y)
      for (int x = wr.rect.x; x < wr.rect.right(); ++x)
        mask[static_cast<std::size_t>(y) * window.w + x] += wr.weight;
  double acc = 0.0;
  for (int y = 0; y < window.h; ++y)
    for (int x = 0; x < window.w; ++x)
      acc += mask[static_cast<std::size_t>(y) * window.w + x] * img.at(window.x + x, window.y + y);
  return acc * f.norm * inv_stddev;
}

/// Closed-form position/size count for the five-kind bank.
inline long long count_bank_features(int base_w, int base_h) {
  const auto positions = [](int base, int span_mul) {
    long long total = 0;
    for (int unit = 1; span_mul * unit <= base; ++unit) total += base - span_mul * unit + 1;
    return total;
  };
  long long count = 0;
  count += positions(base_w, 2) * positions(base_h, 1);  // EdgeH
  count += positions(base_w, 1) * positions(base_h, 2);  // EdgeV
  count += positions(base_w, 3) * positions(base_h, 1);  // LineH
  count += positions(base_w, 1) * positions(base_h, 3);  // LineV
  count += positions(base_w, 2) * positions(base_h, 2);  // Quad
  return count;
}

/// Exhaustive stump search: every midpoint and sentinel threshold, both
/// polarities, error by direct summation.
struct BruteStump {
  double threshold = 0.0;
  int polarity = 1;
  double error = 2.0;
};

inline BruteStump brute_force_stump(const std::vector<double>& values, const std::vector<bool>& positive,
                                    const std::vector<double>& weights) {
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);
  for (std::size_t i = 1; i < sorted.size(); ++i) candidates.push_back((sorted[i - 1] + sorted[i]) / 2.0);
  candidates.push_back(sorted.back() + 1.0);

  BruteStump best;
  for (double t : candidates) {
    for (int p : {+1, -1}) {
      double err = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const bool h = p > 0 ? values[i] < t : values[i] > t;
        if (h != positive[i]) err += weights[i];
      }
      if (err < best.error) best = BruteStump{t, p, err};
    }
  }
  return best;
}

/// Reflexive-transitive closure partition by repeated sweeps (no union-find).
inline std::vector<int> closure_partition(const std::vector<vjdet::Rect>& boxes) {
  const auto similar = [](const vjdet::Rect& a, const vjdet::Rect& b) {
    const double delta = 0.2 * 0.5 * (std::min(a.w, b.w) + std::min(a.h, b.h));
    return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta && std::abs(a.w - b.w) <= delta &&
           std::abs(a.h - b.h) <= delta;
  };
  std::vector<int> label(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) label[i] = static_cast<int>(i);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < boxes.size(); ++i)
      for (std::size_t j = 0; j < boxes.size(); ++j)
        if (similar(boxes[i], boxes[j]) && label[j] != label[i]) {
          const int lo = std::min(label[i], label[j]);
          label[i] = label[j] = lo;
          changed = true;
        }
  }
  return label;
}

/// Maximum-cardinality matching TP count over IoU-eligible pairs (bitmask DP
/// over truth boxes; inputs stay small).
inline int optimal_assignment_tp(const std::vector<vjdet::Rect>& dets, const std::vector<vjdet::Rect>& truths,
                                 double iou_min) {
  const int nt = static_cast<int>(truths.size());
  std::vector<unsigned> eligible(dets.size(), 0);
  for (std::size_t d = 0; d < dets.size(); ++d)
    for (int t = 0; t < nt; ++t)
      if (vjdet::iou(dets[d], truths[t]) >= iou_min) eligible[d] |= 1u << t;

  std::vector<int> best(1u << nt, -1);
  best[0] = 0;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    std::vector<int> next(best);
    for (unsigned mask = 0; mask < (1u << nt); ++mask) {
      if (best[mask] < 0) continue;
      for (int t = 0; t < nt; ++t) {
        if ((eligible[d] >> t & 1u) == 0 || (mask >> t & 1u)) continue;
        next[mask | (1u << t)] = std::max(next[mask | (1u << t)], best[mask] + 1);
      }
    }
    best.swap(next);
  }
  return *std::max_element(best.begin(), best.end());
}

}  // namespace oracles
