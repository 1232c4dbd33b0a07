#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vjdet/error.hpp"
#include "vjdet/geometry.hpp"

namespace vjdet {

/// 8-bit grayscale raster, row-major. Immutable once constructed except
/// through at(); detector code treats it as read-only.
class GrayImage {
 public:
  GrayImage(int width, int height);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  bool contains(const Rect& r) const noexcept {
    return r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1 && r.right() <= width_ && r.bottom() <= height_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Per-window intensity statistics. A constant window reports stddev 1.0 so
/// that variance normalization degrades to a no-op instead of dividing by zero.
struct WindowStats {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Summed-area tables (plain and squared) with an exclusive-prefix zero
/// border: the tables are (width+1) x (height+1) and row 0 / column 0 are all
/// zeros, so rectangle sums need no edge branches.
class IntegralImage {
 public:
  explicit IntegralImage(const GrayImage& img);

  int image_width() const noexcept { return width_ - 1; }
  int image_height() const noexcept { return height_ - 1; }

  /// Table reads; (x, y) in [0..image_width] x [0..image_height].
  std::uint64_t sum_at(int x, int y) const { return sums_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint64_t sq_sum_at(int x, int y) const { return sq_sums_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Sum of pixel intensities inside r: four table reads.
  std::uint64_t rect_sum(const Rect& r) const;
  /// Sum of squared intensities inside r.
  std::uint64_t rect_sq_sum(const Rect& r) const;

  /// Mean and standard deviation over a window. The variance numerator is
  /// kept in exact integer arithmetic (area*sq_sum - sum^2), which makes the
  /// result invariant under adding a constant to every pixel.
  WindowStats window_stats(const Rect& window) const;

  /// Row stride of the tables, for offset-compiled feature evaluation.
  std::size_t stride() const noexcept { return width_; }
  const std::uint64_t* sums_data() const noexcept { return sums_.data(); }

  bool in_bounds(const Rect& r) const noexcept {
    return r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1 && r.right() < width_ && r.bottom() < height_;
  }

 private:
  int width_;   // table columns = image width + 1
  int height_;  // table rows = image height + 1
  std::vector<std::uint64_t> sums_;
  std::vector<std::uint64_t> sq_sums_;
};

/// Loads a binary PGM (P5, maxval 255) or an 8-bit single-channel PNG.
/// Color or otherwise unsupported inputs are rejected, never converted.
GrayImage load_image(const std::string& path);

/// Decodes an in-memory P5 PGM buffer (header with optional '#' comments).
GrayImage decode_pgm(const std::uint8_t* data, std::size_t size);

void save_pgm(const GrayImage& img, const std::string& path);

/// Writes a binary PPM (P6) with the given boxes drawn as red outlines.
void save_ppm_annotated(const GrayImage& img, const std::vector<Rect>& boxes, const std::string& path);

}  // namespace vjdet
