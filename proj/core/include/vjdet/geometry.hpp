#pragma once

#include <algorithm>
#include <cstdint>

namespace vjdet {

/// Axis-aligned pixel rectangle, origin at the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  constexpr long long area() const noexcept { return static_cast<long long>(w) * h; }
  constexpr int right() const noexcept { return x + w; }
  constexpr int bottom() const noexcept { return y + h; }
  constexpr bool empty() const noexcept { return w <= 0 || h <= 0; }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

constexpr Rect intersect(const Rect& a, const Rect& b) noexcept {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return Rect{};
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

/// Intersection over union; 0 for disjoint or degenerate boxes.
inline double iou(const Rect& a, const Rect& b) noexcept {
  if (a.empty() || b.empty()) return 0.0;
  const long long inter = intersect(a, b).area();
  if (inter <= 0) return 0.0;
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Strict ordering by position then size, used wherever output has to be
/// independent of construction order.
constexpr bool rect_less(const Rect& a, const Rect& b) noexcept {
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  if (a.w != b.w) return a.w < b.w;
  return a.h < b.h;
}

}  // namespace vjdet
