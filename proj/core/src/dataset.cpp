#include "vjdet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace vjdet {

namespace {

[[noreturn]] void manifest_error(const std::string& path, int line, const std::string& what) {
  raise(Errc::MalformedManifest, path + ":" + std::to_string(line) + ": " + what);
}

void require_file(const std::string& manifest, int line, const std::string& path) {
  if (!std::filesystem::exists(path))
    raise(Errc::MissingFile, manifest + ":" + std::to_string(line) + ": " + path);
}

struct ImageSize {
  int w = 0, h = 0;
};

/// Header-only size probe; avoids decoding full images during validation.
ImageSize peek_image_size(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::MissingFile, path);
  unsigned char magic[24] = {};
  in.read(reinterpret_cast<char*>(magic), sizeof(magic));
  const std::streamsize got = in.gcount();
  if (got >= 8 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G') {
    if (got < 24) raise(Errc::CorruptHeader, path + ": truncated PNG");
    const auto be32 = [&](int o) {
      return (magic[o] << 24) | (magic[o + 1] << 16) | (magic[o + 2] << 8) | magic[o + 3];
    };
    return ImageSize{be32(16), be32(20)};
  }
  if (got >= 2 && magic[0] == 'P') {
    in.clear();
    in.seekg(2);
    auto next_int = [&]() {
      int c = in.get();
      while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
          while (c != EOF && c != '\n') c = in.get();
        c = in.get();
      }
      long v = -1;
      while (c != EOF && std::isdigit(c)) {
        v = (v < 0 ? 0 : v) * 10 + (c - '0');
        c = in.get();
      }
      return v;
    };
    const long w = next_int();
    const long h = next_int();
    if (w < 1 || h < 1) raise(Errc::CorruptHeader, path + ": bad PNM header");
    return ImageSize{static_cast<int>(w), static_cast<int>(h)};
  }
  raise(Errc::UnsupportedFormat, path);
}

}  // namespace

std::vector<PositiveEntry> load_positive_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::MissingFile, path);

  std::vector<PositiveEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string img;
    long count = -1;
    if (!(ls >> img >> count) || count < 0) manifest_error(path, line_no, "expected \"<path> <count> ...\"");
    require_file(path, line_no, img);
    const ImageSize size = peek_image_size(img);
    for (long i = 0; i < count; ++i) {
      Rect r;
      if (!(ls >> r.x >> r.y >> r.w >> r.h))
        manifest_error(path, line_no, "expected " + std::to_string(count) + " rects, found " + std::to_string(i));
      if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.right() > size.w || r.bottom() > size.h)
        raise(Errc::RectOutOfImage,
              path + ":" + std::to_string(line_no) + ": rect outside " + std::to_string(size.w) + "x" +
                  std::to_string(size.h) + " image " + img);
      out.push_back(PositiveEntry{img, r});
    }
    std::string extra;
    if (ls >> extra) manifest_error(path, line_no, "trailing tokens after declared rects");
  }
  return out;
}

std::vector<std::string> load_negative_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::MissingFile, path);
  std::vector<std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string img;
    ls >> img;
    if (img.empty()) continue;
    require_file(path, line_no, img);
    out.push_back(img);
  }
  return out;
}

SampleManifest load_manifest(const std::string& positives_path, const std::string& negatives_path) {
  return SampleManifest{load_positive_manifest(positives_path), load_negative_list(negatives_path)};
}

GroundTruth load_ground_truth(const std::string& path) {
  GroundTruth gt;
  for (const PositiveEntry& e : load_positive_manifest(path)) gt.by_image[e.path].push_back(TruthBox{e.box, false});
  return gt;
}

GrayImage resize_image(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) raise(Errc::OutOfBounds, "target size must be >= 1");
  if (out_w == img.width() && out_h == img.height()) return img;

  GrayImage out(out_w, out_h);
  if (out_w <= img.width() && out_h <= img.height()) {
    // Area average with fractional coverage at the box edges.
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
      const double y0 = oy * sy;
      const double y1 = (oy + 1) * sy;
      for (int ox = 0; ox < out_w; ++ox) {
        const double x0 = ox * sx;
        const double x1 = (ox + 1) * sx;
        double acc = 0.0;
        for (int y = static_cast<int>(y0); y < y1 && y < img.height(); ++y) {
          const double cy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
          if (cy <= 0) continue;
          for (int x = static_cast<int>(x0); x < x1 && x < img.width(); ++x) {
            const double cx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
            if (cx <= 0) continue;
            acc += cx * cy * img.at(x, y);
          }
        }
        const long v = std::lround(acc / (sx * sy));
        out.at(ox, oy) = static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
      }
    }
  } else {
    // Nearest neighbor for any upscale.
    for (int oy = 0; oy < out_h; ++oy) {
      const int y = std::min(img.height() - 1, static_cast<int>(static_cast<double>(oy) * img.height() / out_h));
      for (int ox = 0; ox < out_w; ++ox) {
        const int x = std::min(img.width() - 1, static_cast<int>(static_cast<double>(ox) * img.width() / out_w));
        out.at(ox, oy) = img.at(x, y);
      }
    }
  }
  return out;
}

GrayImage crop_to_window(const GrayImage& img, const Rect& box, int base_w, int base_h) {
  if (!img.contains(box)) raise(Errc::RectOutOfImage, "crop box outside image");
  GrayImage crop(box.w, box.h);
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x) crop.at(x, y) = img.at(box.x + x, box.y + y);
  return resize_image(crop, base_w, base_h);
}

std::vector<GrayImage> load_positive_windows(const std::vector<PositiveEntry>& positives, int base_w, int base_h) {
  std::vector<GrayImage> out;
  out.reserve(positives.size());
  for (const auto& e : positives) {
    const GrayImage img = load_image(e.path);
    out.push_back(crop_to_window(img, e.box, base_w, base_h));
  }
  return out;
}

std::vector<GrayImage> load_images(const std::vector<std::string>& paths) {
  std::vector<GrayImage> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_image(p));
  return out;
}

namespace {

/// Deterministic noise helpers on top of the engine's standardized output
/// stream (distribution classes are implementation-defined, so roll the
/// mappings by hand).
struct SynthRng {
  std::mt19937_64 rng;

  explicit SynthRng(std::uint64_t seed) : rng(seed) {}

  std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : rng() % n; }

  double unit() {  // [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  double gaussian() {  // Box-Muller
    double u1 = unit();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

  std::uint8_t noisy(int level, double stddev) {
    const long v = std::lround(level + gaussian() * stddev);
    return static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
  }
};

void fill_noise(GrayImage& img, SynthRng& rng, int level, double stddev) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) img.at(x, y) = rng.noisy(level, stddev);
}

void draw_square(GrayImage& img, const Rect& r, SynthRng& rng, int level, double stddev) {
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) img.at(x, y) = rng.noisy(level, stddev);
}

}  // namespace

SynthData synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.window < 8 || spec.frame_w < spec.window || spec.frame_h < spec.window ||
      spec.object_min < spec.window || spec.object_max < spec.object_min ||
      spec.object_max > std::min(spec.frame_w, spec.frame_h) || spec.max_objects_per_frame < 0)
    raise(Errc::InvalidConfig, "inconsistent synthetic task parameters");

  SynthData data;
  SynthRng rng(seed);

  // Positives: light window with the dark square filling the central half.
  for (int i = 0; i < spec.positive_count; ++i) {
    GrayImage img(spec.window, spec.window);
    fill_noise(img, rng, spec.background, spec.noise_stddev);
    const int s = spec.window / 2;
    const int off = (spec.window - s) / 2;
    draw_square(img, Rect{off, off, s, s}, rng, spec.foreground, spec.noise_stddev);
    data.positives.push_back(std::move(img));
  }

  // Negatives: background-level noise, no structure.
  for (int i = 0; i < spec.negative_frame_count; ++i) {
    GrayImage img(spec.frame_w, spec.frame_h);
    fill_noise(img, rng, spec.background, spec.noise_stddev);
    data.negative_frames.push_back(std::move(img));
  }

  // Scenes: noise background plus non-overlapping objects. The recorded box
  // is the detector-window analogue: the dark square fills its central half.
  for (int i = 0; i < spec.scene_frame_count; ++i) {
    GrayImage img(spec.frame_w, spec.frame_h);
    fill_noise(img, rng, spec.background, spec.noise_stddev);

    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d.pgm", i);
    data.scene_names.push_back(name);
    auto& boxes = data.truth.by_image[name];

    const int want = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.max_objects_per_frame) + 1));
    for (int k = 0; k < want; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
        const int b =
            spec.object_min + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.object_max - spec.object_min) + 1));
        if (b > spec.frame_w || b > spec.frame_h) continue;
        const int x = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.frame_w - b) + 1));
        const int y = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.frame_h - b) + 1));
        const Rect box{x, y, b, b};
        // Keep objects apart so detections group one class per object.
        const Rect padded{box.x - b / 2, box.y - b / 2, box.w + b, box.h + b};
        bool clear = true;
        for (const TruthBox& t : boxes)
          if (!intersect(padded, t.box).empty()) clear = false;
        if (!clear) continue;
        const int s = b / 2;
        draw_square(img, Rect{box.x + (b - s) / 2, box.y + (b - s) / 2, s, s}, rng, spec.foreground,
                    spec.noise_stddev);
        boxes.push_back(TruthBox{box, false});
        placed = true;
      }
    }
    data.scene_frames.push_back(std::move(img));
  }
  return data;
}

}  // namespace vjdet
