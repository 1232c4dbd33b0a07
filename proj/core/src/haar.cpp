#include "vjdet/haar.hpp"

#include <cmath>

namespace vjdet {

const char* feature_kind_name(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::EdgeH: return "edge_h";
    case FeatureKind::EdgeV: return "edge_v";
    case FeatureKind::LineH: return "line_h";
    case FeatureKind::LineV: return "line_v";
    case FeatureKind::Quad: return "quad";
    case FeatureKind::Generic: return "generic";
  }
  return "generic";
}

FeatureKind feature_kind_from_name(const std::string& name) {
  for (FeatureKind k : {FeatureKind::EdgeH, FeatureKind::EdgeV, FeatureKind::LineH, FeatureKind::LineV,
                        FeatureKind::Quad, FeatureKind::Generic}) {
    if (name == feature_kind_name(k)) return k;
  }
  raise(Errc::SchemaViolation, "unknown feature kind: " + name);
}

int HaarFeature::extent_right() const noexcept {
  int e = 0;
  for (const auto& wr : rects) e = std::max(e, wr.rect.right());
  return e;
}

int HaarFeature::extent_bottom() const noexcept {
  int e = 0;
  for (const auto& wr : rects) e = std::max(e, wr.rect.bottom());
  return e;
}

double HaarFeature::weighted_area() const noexcept {
  double acc = 0.0;
  for (const auto& wr : rects) acc += wr.weight * static_cast<double>(wr.rect.area());
  return acc;
}

double evaluate(const HaarFeature& feature, const IntegralImage& ii, const Rect& window, double inv_stddev) {
  if (window.x < 0 || window.y < 0 || window.right() > ii.image_width() || window.bottom() > ii.image_height())
    raise(Errc::FeatureOutOfWindow, "window exceeds image bounds");
  if (feature.extent_right() > window.w || feature.extent_bottom() > window.h)
    raise(Errc::FeatureOutOfWindow, "feature does not fit the window");

  double acc = 0.0;
  for (const auto& wr : feature.rects) {
    const Rect r{window.x + wr.rect.x, window.y + wr.rect.y, wr.rect.w, wr.rect.h};
    acc += wr.weight * static_cast<double>(ii.rect_sum(r));
  }
  return acc * feature.norm * inv_stddev;
}

namespace {

HaarFeature make_feature(FeatureKind kind, int base_w, int base_h, std::initializer_list<WeightedRect> rects) {
  HaarFeature f;
  f.kind = kind;
  f.base_w = base_w;
  f.base_h = base_h;
  f.rects.assign(rects);
  return f;
}

}  // namespace

std::vector<HaarFeature> enumerate_features(int base_w, int base_h) {
  if (base_w < 4 || base_h < 4) raise(Errc::WindowTooSmall, "base window must be at least 4x4");

  std::vector<HaarFeature> pool;
  // Spans per kind: EdgeH 2w x h, EdgeV w x 2h, LineH 3w x h, LineV w x 3h, Quad 2w x 2h.
  const FeatureKind kinds[] = {FeatureKind::EdgeH, FeatureKind::EdgeV, FeatureKind::LineH, FeatureKind::LineV,
                               FeatureKind::Quad};
  for (FeatureKind kind : kinds) {
    int mul_w = 1, mul_h = 1;
    switch (kind) {
      case FeatureKind::EdgeH: mul_w = 2; break;
      case FeatureKind::EdgeV: mul_h = 2; break;
      case FeatureKind::LineH: mul_w = 3; break;
      case FeatureKind::LineV: mul_h = 3; break;
      case FeatureKind::Quad: mul_w = 2; mul_h = 2; break;
      default: break;
    }
    for (int y = 0; y < base_h; ++y) {
      for (int x = 0; x < base_w; ++x) {
        for (int h = 1; y + mul_h * h <= base_h; ++h) {
          for (int w = 1; x + mul_w * w <= base_w; ++w) {
            switch (kind) {
              case FeatureKind::EdgeH:
                pool.push_back(make_feature(kind, base_w, base_h,
                                            {{{x, y, w, h}, -1.0}, {{x + w, y, w, h}, +1.0}}));
                break;
              case FeatureKind::EdgeV:
                pool.push_back(make_feature(kind, base_w, base_h,
                                            {{{x, y, w, h}, -1.0}, {{x, y + h, w, h}, +1.0}}));
                break;
              case FeatureKind::LineH:
                pool.push_back(make_feature(kind, base_w, base_h,
                                            {{{x, y, w, h}, -1.0},
                                             {{x + w, y, w, h}, +2.0},
                                             {{x + 2 * w, y, w, h}, -1.0}}));
                break;
              case FeatureKind::LineV:
                pool.push_back(make_feature(kind, base_w, base_h,
                                            {{{x, y, w, h}, -1.0},
                                             {{x, y + h, w, h}, +2.0},
                                             {{x, y + 2 * h, w, h}, -1.0}}));
                break;
              case FeatureKind::Quad:
                pool.push_back(make_feature(kind, base_w, base_h,
                                            {{{x, y, w, h}, -1.0},
                                             {{x + w, y, w, h}, +1.0},
                                             {{x, y + h, w, h}, +1.0},
                                             {{x + w, y + h, w, h}, -1.0}}));
                break;
              default: break;
            }
          }
        }
      }
    }
  }
  return pool;
}

HaarFeature scale_feature(const HaarFeature& feature, double scale) {
  if (scale < 1.0) raise(Errc::FeatureOutOfWindow, "scale must be >= 1");
  if (scale == 1.0) return feature;

  HaarFeature scaled = feature;
  const int win_w = static_cast<int>(std::lround(feature.base_w * scale));
  const int win_h = static_cast<int>(std::lround(feature.base_h * scale));
  scaled.base_w = win_w;
  scaled.base_h = win_h;

  double base_area = 0.0;
  double scaled_area = 0.0;
  double pos_mass = 0.0;  // positive weight * area after scaling
  double neg_mass = 0.0;
  for (auto& wr : scaled.rects) {
    base_area += static_cast<double>(wr.rect.area());
    Rect r{static_cast<int>(std::lround(wr.rect.x * scale)), static_cast<int>(std::lround(wr.rect.y * scale)),
           static_cast<int>(std::lround(wr.rect.w * scale)), static_cast<int>(std::lround(wr.rect.h * scale))};
    // Rounding can push a rect one pixel past the scaled window; clamp.
    r.x = std::min(r.x, win_w - 1);
    r.y = std::min(r.y, win_h - 1);
    if (r.w < 1) r.w = 1;
    if (r.h < 1) r.h = 1;
    if (r.x + r.w > win_w) r.w = win_w - r.x;
    if (r.y + r.h > win_h) r.h = win_h - r.y;
    wr.rect = r;
    scaled_area += static_cast<double>(r.area());
    (wr.weight > 0 ? pos_mass : neg_mass) += std::abs(wr.weight) * static_cast<double>(r.area());
  }

  // Restore the zero-mean property broken by rounding: rescale the positive
  // weights by neg_mass / pos_mass.
  if (pos_mass > 0.0 && neg_mass > 0.0 && pos_mass != neg_mass) {
    const double fix = neg_mass / pos_mass;
    for (auto& wr : scaled.rects)
      if (wr.weight > 0) wr.weight *= fix;
  }

  scaled.norm = feature.norm * (scaled_area > 0.0 ? base_area / scaled_area : 1.0);
  return scaled;
}

CompiledFeature compile_feature(const HaarFeature& feature, std::size_t table_stride) {
  CompiledFeature out;
  out.norm = feature.norm;
  out.rects.reserve(feature.rects.size());
  for (const auto& wr : feature.rects) {
    CompiledFeature::OffsetRect r{};
    const std::size_t x0 = static_cast<std::size_t>(wr.rect.x);
    const std::size_t y0 = static_cast<std::size_t>(wr.rect.y);
    const std::size_t x1 = x0 + static_cast<std::size_t>(wr.rect.w);
    const std::size_t y1 = y0 + static_cast<std::size_t>(wr.rect.h);
    r.o00 = y0 * table_stride + x0;
    r.o10 = y0 * table_stride + x1;
    r.o01 = y1 * table_stride + x0;
    r.o11 = y1 * table_stride + x1;
    r.weight = wr.weight;
    out.rects.push_back(r);
  }
  return out;
}

}  // namespace vjdet
