#include "vjdet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "vjdet/parallel.hpp"

namespace vjdet {

std::vector<ScanScale> scan_scales(int base_w, int base_h, int img_w, int img_h, const DetectParams& p) {
  if (!(p.scale_step > 1.0)) raise(Errc::InvalidConfig, "scale_step must be > 1");
  if (p.window_stride < 1) raise(Errc::InvalidConfig, "window_stride must be >= 1");
  const int min_size = p.min_size == 0 ? base_w : p.min_size;
  if (min_size < base_w) raise(Errc::InvalidConfig, "min_size below cascade base");

  std::vector<ScanScale> out;
  double scale = static_cast<double>(min_size) / base_w;
  if (scale < 1.0) scale = 1.0;
  while (true) {
    const int win_w = static_cast<int>(std::lround(base_w * scale));
    const int win_h = static_cast<int>(std::lround(base_h * scale));
    if (win_w > img_w || win_h > img_h) break;
    if (p.max_size != 0 && win_w > p.max_size) break;
    const int stride = std::max(1, static_cast<int>(std::lround(p.window_stride * scale)));
    out.push_back(ScanScale{scale, win_w, win_h, stride});
    scale *= p.scale_step;
  }
  return out;
}

Cascade scale_cascade(const Cascade& c, double scale) {
  Cascade out;
  out.base_w = static_cast<int>(std::lround(c.base_w * scale));
  out.base_h = static_cast<int>(std::lround(c.base_h * scale));
  out.stages.reserve(c.stages.size());
  for (const Stage& stage : c.stages) {
    Stage scaled;
    scaled.classifier.stage_threshold = stage.classifier.stage_threshold;
    scaled.classifier.weak.reserve(stage.classifier.weak.size());
    for (const WeakClassifier& weak : stage.classifier.weak) {
      WeakClassifier w = weak;
      w.feature = scale_feature(weak.feature, scale);
      scaled.classifier.weak.push_back(std::move(w));
    }
    out.stages.push_back(std::move(scaled));
  }
  return out;
}

namespace {

/// One stage lowered to table offsets for a fixed stride.
struct CompiledStage {
  struct Weak {
    CompiledFeature feature;
    double threshold;
    int polarity;
    double alpha;
  };
  std::vector<Weak> weak;
  double stage_threshold;
};

std::vector<CompiledStage> compile_cascade(const Cascade& c, std::size_t stride) {
  std::vector<CompiledStage> out;
  out.reserve(c.stages.size());
  for (const Stage& stage : c.stages) {
    CompiledStage cs;
    cs.stage_threshold = stage.classifier.stage_threshold;
    for (const WeakClassifier& weak : stage.classifier.weak)
      cs.weak.push_back(CompiledStage::Weak{compile_feature(weak.feature, stride), weak.threshold, weak.polarity,
                                            weak.alpha});
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace

std::vector<RawWindow> scan_windows(const Cascade& c, const IntegralImage& ii, const DetectParams& p) {
  const int img_w = ii.image_width();
  const int img_h = ii.image_height();
  if (img_w < c.base_w || img_h < c.base_h)
    raise(Errc::ImageSmallerThanWindow, "image smaller than the cascade base window");

  const std::vector<ScanScale> levels = scan_scales(c.base_w, c.base_h, img_w, img_h, p);
  const std::size_t stride = ii.stride();
  const std::uint64_t* sums = ii.sums_data();

  // Per-level results, merged in level order so output is deterministic
  // regardless of thread count.
  std::vector<std::vector<RawWindow>> per_level(levels.size());
  parallel_for(levels.size(), p.threads, [&](std::size_t lb, std::size_t le) {
    for (std::size_t li = lb; li < le; ++li) {
      const ScanScale& level = levels[li];
      const Cascade scaled = level.scale == 1.0 ? Cascade{} : scale_cascade(c, level.scale);
      const std::vector<CompiledStage> stages = compile_cascade(level.scale == 1.0 ? c : scaled, stride);
      auto& hits = per_level[li];
      for (int y = 0; y + level.win_h <= img_h; y += level.stride) {
        for (int x = 0; x + level.win_w <= img_w; x += level.stride) {
          const Rect window{x, y, level.win_w, level.win_h};
          const double inv_stddev = 1.0 / ii.window_stats(window).stddev;
          const std::uint64_t* origin = sums + static_cast<std::size_t>(y) * stride + x;
          bool accepted = true;
          double margin = 0.0;
          for (const CompiledStage& stage : stages) {
            double score = 0.0;
            for (const auto& weak : stage.weak) {
              const double v = weak.feature.eval(origin, inv_stddev);
              if (weak.polarity > 0 ? v < weak.threshold : v > weak.threshold) score += weak.alpha;
            }
            margin = score - stage.stage_threshold;
            if (score < stage.stage_threshold) {
              accepted = false;
              break;
            }
          }
          if (accepted) hits.push_back(RawWindow{window, margin});
        }
      }
    }
  });

  std::vector<RawWindow> out;
  for (auto& level : per_level) out.insert(out.end(), level.begin(), level.end());
  return out;
}

std::vector<Detection> group_detections(std::span<const RawWindow> raw, int min_neighbors) {
  std::vector<Detection> out;
  if (min_neighbors == 0) {
    out.reserve(raw.size());
    for (const RawWindow& r : raw) out.push_back(Detection{r.box, r.margin, 1});
    return out;
  }

  // Canonical order first so sums and means cannot depend on input order.
  std::vector<std::size_t> idx(raw.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (raw[a].box != raw[b].box) return rect_less(raw[a].box, raw[b].box);
    return raw[a].margin < raw[b].margin;
  });

  const auto similar = [](const Rect& a, const Rect& b) {
    const double delta = 0.2 * 0.5 * (std::min(a.w, b.w) + std::min(a.h, b.h));
    return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta && std::abs(a.w - b.w) <= delta &&
           std::abs(a.h - b.h) <= delta;
  };

  // Union-find over the similarity relation's transitive closure.
  std::vector<std::size_t> parent(raw.size());
  std::iota(parent.begin(), parent.end(), 0);
  const std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      if (similar(raw[idx[i]].box, raw[idx[j]].box)) {
        const std::size_t ra = find(i);
        const std::size_t rb = find(j);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }

  struct Class {
    long long x = 0, y = 0, w = 0, h = 0;
    double score = 0.0;
    int count = 0;
  };
  std::map<std::size_t, Class> classes;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Class& cl = classes[find(i)];
    const RawWindow& r = raw[idx[i]];
    cl.x += r.box.x;
    cl.y += r.box.y;
    cl.w += r.box.w;
    cl.h += r.box.h;
    cl.score += r.margin;
    ++cl.count;
  }

  for (const auto& [root, cl] : classes) {
    if (cl.count < min_neighbors) continue;
    Detection det;
    det.box = Rect{static_cast<int>(std::llround(static_cast<double>(cl.x) / cl.count)),
                   static_cast<int>(std::llround(static_cast<double>(cl.y) / cl.count)),
                   static_cast<int>(std::llround(static_cast<double>(cl.w) / cl.count)),
                   static_cast<int>(std::llround(static_cast<double>(cl.h) / cl.count))};
    det.score = cl.score;
    det.neighbors = cl.count;
    out.push_back(det);
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.box != b.box) return rect_less(a.box, b.box);
    return a.neighbors < b.neighbors;
  });
  return out;
}

std::vector<Detection> detect_multiscale(const Cascade& c, const GrayImage& img, const DetectParams& p) {
  const IntegralImage ii(img);
  const std::vector<RawWindow> raw = scan_windows(c, ii, p);
  std::vector<Detection> dets = group_detections(raw, p.min_neighbors);
  // Grouped means can poke past the border by a pixel; keep boxes inside.
  for (Detection& d : dets) {
    d.box.x = std::clamp(d.box.x, 0, std::max(0, img.width() - 1));
    d.box.y = std::clamp(d.box.y, 0, std::max(0, img.height() - 1));
    d.box.w = std::min(d.box.w, img.width() - d.box.x);
    d.box.h = std::min(d.box.h, img.height() - d.box.y);
  }
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.box != b.box) return rect_less(a.box, b.box);
    return a.neighbors < b.neighbors;
  });
  return dets;
}

}  // namespace vjdet
