#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vjdet/image.hpp"

namespace vjdet {

/// The filter bank: two edge filters, two line filters, one checkerboard.
/// Generic covers features read from external cascade files, whose rect
/// layout does not have to match any bank pattern.
enum class FeatureKind : std::uint8_t { EdgeH, EdgeV, LineH, LineV, Quad, Generic };

const char* feature_kind_name(FeatureKind kind) noexcept;
FeatureKind feature_kind_from_name(const std::string& name);

struct WeightedRect {
  Rect rect;
  double weight = 0.0;

  friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

/// A rectangle-difference filter expressed in base-window coordinates.
/// Bank features are zero-mean: the weighted rect areas cancel, which makes
/// the response invariant to a constant intensity offset.
struct HaarFeature {
  FeatureKind kind = FeatureKind::Generic;
  std::vector<WeightedRect> rects;
  int base_w = 0;
  int base_h = 0;
  /// Area-correction multiplier; 1 at base scale, (base area / scaled area)
  /// after scale_feature so responses stay comparable across scales.
  double norm = 1.0;

  int extent_right() const noexcept;
  int extent_bottom() const noexcept;
  /// Sum of weight * area over all rects (0 for well-formed bank features).
  double weighted_area() const noexcept;

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

/// Response of the feature inside `window`: norm * inv_stddev * sum of
/// weight * rect_sum with rects translated by the window origin.
/// The feature must fit the window and the window the image.
double evaluate(const HaarFeature& feature, const IntegralImage& ii, const Rect& window, double inv_stddev);

/// Every bank feature at every position and integer size that fits the base
/// window, in deterministic kind-major (y, x, h, w ascending) order.
std::vector<HaarFeature> enumerate_features(int base_w, int base_h);

/// Scales rect coordinates by `scale` (>= 1) with rounding, clamps them into
/// the scaled window, and rebalances positive weights if rounding broke the
/// zero-mean property. norm picks up the base/scaled area ratio.
HaarFeature scale_feature(const HaarFeature& feature, double scale);

/// --- offset-compiled evaluation (training/scan inner loop) ---

/// A feature lowered to absolute table offsets for one integral-image
/// stride. Evaluate against a pointer to the window origin inside the sums
/// table; no bounds checks.
struct CompiledFeature {
  struct OffsetRect {
    std::size_t o00, o10, o01, o11;
    double weight;
  };
  std::vector<OffsetRect> rects;
  double norm = 1.0;

  double eval(const std::uint64_t* origin, double inv_stddev) const noexcept {
    double acc = 0.0;
    for (const auto& r : rects) {
      const double s = static_cast<double>(origin[r.o11] - origin[r.o01] - origin[r.o10] + origin[r.o00]);
      acc += r.weight * s;
    }
    return acc * norm * inv_stddev;
  }
};

CompiledFeature compile_feature(const HaarFeature& feature, std::size_t table_stride);

}  // namespace vjdet
