#include "vjdet/image.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace vjdet {

namespace {

const char* errc_names[] = {
    "FileNotFound",
    "UnsupportedFormat",
    "CorruptHeader",
    "OutOfBounds",
    "FeatureOutOfWindow",
    "WindowTooSmall",
    "DegenerateSamples",
    "EmptyValidationSet",
    "InsufficientNegatives",
    "ImageSmallerThanWindow",
    "MalformedXml",
    "MalformedJson",
    "MalformedManifest",
    "MissingFile",
    "RectOutOfImage",
    "SchemaViolation",
    "UnsupportedFeatureType",
    "UnsupportedTreeShape",
    "InvalidConfig",
    "Internal",
};

}  // namespace

const char* errc_name(Errc code) noexcept {
  return errc_names[static_cast<int>(code)];
}

GrayImage::GrayImage(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) raise(Errc::OutOfBounds, "image dimensions must be >= 1");
  pixels_.assign(static_cast<std::size_t>(width) * height, 0);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) raise(Errc::OutOfBounds, "image dimensions must be >= 1");
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    raise(Errc::CorruptHeader, "pixel count does not match declared dimensions");
}

IntegralImage::IntegralImage(const GrayImage& img) : width_(img.width() + 1), height_(img.height() + 1) {
  const std::size_t total = static_cast<std::size_t>(img.width()) * img.height();
  // 64-bit accumulators hold any image with 255^2 * pixel_count < 2^64.
  if (total > std::numeric_limits<std::uint64_t>::max() / (255ull * 255ull))
    raise(Errc::OutOfBounds, "image too large for 64-bit squared accumulators");

  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  sums_.assign(n, 0);
  sq_sums_.assign(n, 0);

  const std::uint8_t* px = img.pixels().data();
  for (int y = 0; y < img.height(); ++y) {
    std::uint64_t row = 0;
    std::uint64_t row_sq = 0;
    const std::size_t above = static_cast<std::size_t>(y) * width_;
    const std::size_t here = above + width_;
    for (int x = 0; x < img.width(); ++x) {
      const std::uint64_t v = px[static_cast<std::size_t>(y) * img.width() + x];
      row += v;
      row_sq += v * v;
      sums_[here + x + 1] = sums_[above + x + 1] + row;
      sq_sums_[here + x + 1] = sq_sums_[above + x + 1] + row_sq;
    }
  }
}

std::uint64_t IntegralImage::rect_sum(const Rect& r) const {
  if (!in_bounds(r)) raise(Errc::OutOfBounds, "rect exceeds image bounds");
  const std::size_t s = width_;
  const std::uint64_t* t = sums_.data();
  return t[(r.y + r.h) * s + r.x + r.w] - t[r.y * s + r.x + r.w] - t[(r.y + r.h) * s + r.x] + t[r.y * s + r.x];
}

std::uint64_t IntegralImage::rect_sq_sum(const Rect& r) const {
  if (!in_bounds(r)) raise(Errc::OutOfBounds, "rect exceeds image bounds");
  const std::size_t s = width_;
  const std::uint64_t* t = sq_sums_.data();
  return t[(r.y + r.h) * s + r.x + r.w] - t[r.y * s + r.x + r.w] - t[(r.y + r.h) * s + r.x] + t[r.y * s + r.x];
}

WindowStats IntegralImage::window_stats(const Rect& window) const {
  const std::uint64_t sum = rect_sum(window);
  const std::uint64_t sq = rect_sq_sum(window);
  const std::uint64_t area = static_cast<std::uint64_t>(window.area());

  WindowStats stats;
  stats.mean = static_cast<double>(sum) / static_cast<double>(area);
  // area*sq >= sum^2 by Cauchy-Schwarz; equality means a constant window.
  // Exact integer numerator keeps the result invariant under a constant
  // intensity offset. 128-bit fallback for windows past the 64-bit bound.
  double var_num;
  if (area <= 4000000) {
    var_num = static_cast<double>(area * sq - sum * sum);
  } else {
    using u128 = unsigned __int128;
    var_num = static_cast<double>(static_cast<u128>(area) * sq - static_cast<u128>(sum) * sum);
  }
  stats.stddev = var_num == 0 ? 1.0 : std::sqrt(var_num) / static_cast<double>(area);
  return stats;
}

namespace {

// --- PGM ---

struct ByteReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;

  bool eof() const { return pos >= size; }
  int peek() const { return eof() ? -1 : data[pos]; }
  int get() { return eof() ? -1 : data[pos++]; }
};

void skip_pgm_space(ByteReader& r) {
  while (!r.eof()) {
    const int c = r.peek();
    if (c == '#') {
      while (!r.eof() && r.get() != '\n') {
      }
    } else if (std::isspace(c)) {
      r.get();
    } else {
      break;
    }
  }
}

long read_pgm_int(ByteReader& r) {
  skip_pgm_space(r);
  if (r.eof() || !std::isdigit(r.peek())) raise(Errc::CorruptHeader, "expected integer in PGM header");
  long v = 0;
  while (!r.eof() && std::isdigit(r.peek())) {
    v = v * 10 + (r.get() - '0');
    if (v > 1 << 30) raise(Errc::CorruptHeader, "PGM header value out of range");
  }
  return v;
}

// --- PNG ---

struct PngReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* file = nullptr;
  std::string error;

  ~PngReadState() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngReadState*>(png_get_error_ptr(png));
  state->error = msg ? msg : "libpng error";
  longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

GrayImage load_png(const std::string& path) {
  PngReadState state;
  state.file = std::fopen(path.c_str(), "rb");
  if (!state.file) raise(Errc::FileNotFound, path);

  state.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
  if (!state.png) raise(Errc::Internal, "png_create_read_struct failed");
  state.info = png_create_info_struct(state.png);
  if (!state.info) raise(Errc::Internal, "png_create_info_struct failed");

  // libpng reports errors via longjmp; convert to an exception afterwards.
  if (setjmp(png_jmpbuf(state.png))) raise(Errc::CorruptHeader, path + ": " + state.error);

  png_init_io(state.png, state.file);
  png_read_info(state.png, state.info);

  const png_uint_32 w = png_get_image_width(state.png, state.info);
  const png_uint_32 h = png_get_image_height(state.png, state.info);
  const int depth = png_get_bit_depth(state.png, state.info);
  const int color = png_get_color_type(state.png, state.info);

  if (color != PNG_COLOR_TYPE_GRAY)
    raise(Errc::UnsupportedFormat, path + ": PNG must be single-channel grayscale");
  if (depth != 8) raise(Errc::UnsupportedFormat, path + ": PNG must be 8-bit");
  if (w < 1 || h < 1 || w > (1u << 24) || h > (1u << 24))
    raise(Errc::CorruptHeader, path + ": bad PNG dimensions");

  png_set_interlace_handling(state.png);
  png_read_update_info(state.png, state.info);

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w;
  png_read_image(state.png, rows.data());
  png_read_end(state.png, nullptr);

  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::FileNotFound, path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

GrayImage decode_pgm(const std::uint8_t* data, std::size_t size) {
  ByteReader r{data, size};
  if (size < 2 || data[0] != 'P') raise(Errc::UnsupportedFormat, "not a PNM file");
  if (data[1] != '5') {
    if (data[1] == '6' || data[1] == '3' || data[1] == '2' || data[1] == '1' || data[1] == '4')
      raise(Errc::UnsupportedFormat, std::string("unsupported PNM variant P") + static_cast<char>(data[1]));
    raise(Errc::UnsupportedFormat, "not a PNM file");
  }
  r.pos = 2;

  const long w = read_pgm_int(r);
  const long h = read_pgm_int(r);
  const long maxval = read_pgm_int(r);
  if (w < 1 || h < 1) raise(Errc::CorruptHeader, "PGM dimensions must be >= 1");
  if (maxval != 255) raise(Errc::UnsupportedFormat, "PGM maxval must be 255");
  if (r.eof() || !std::isspace(r.peek())) raise(Errc::CorruptHeader, "missing whitespace after PGM header");
  r.get();

  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (size - r.pos < need) raise(Errc::CorruptHeader, "PGM payload shorter than declared size");
  std::vector<std::uint8_t> pixels(data + r.pos, data + r.pos + need);
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

GrayImage load_image(const std::string& path) {
  static const std::uint8_t png_magic[4] = {0x89, 'P', 'N', 'G'};
  std::ifstream probe(path, std::ios::binary);
  if (!probe) raise(Errc::FileNotFound, path);
  std::uint8_t magic[4] = {0, 0, 0, 0};
  probe.read(reinterpret_cast<char*>(magic), 4);
  probe.close();

  if (std::memcmp(magic, png_magic, 4) == 0) return load_png(path);
  if (magic[0] == 'P') {
    const auto bytes = read_file_bytes(path);
    try {
      return decode_pgm(bytes.data(), bytes.size());
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
  }
  raise(Errc::UnsupportedFormat, path + ": expected PGM (P5) or grayscale PNG");
}

void save_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::FileNotFound, "cannot open for writing: " + path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.pixels().size()));
  if (!out) raise(Errc::Internal, "write failed: " + path);
}

void save_ppm_annotated(const GrayImage& img, const std::vector<Rect>& boxes, const std::string& path) {
  const int w = img.width();
  const int h = img.height();
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = img.pixels()[i];
  }
  auto mark = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    rgb[i] = 255;
    rgb[i + 1] = 48;
    rgb[i + 2] = 48;
  };
  for (const Rect& b : boxes) {
    for (int x = b.x; x < b.right(); ++x) {
      mark(x, b.y);
      mark(x, b.bottom() - 1);
    }
    for (int y = b.y; y < b.bottom(); ++y) {
      mark(b.x, y);
      mark(b.right() - 1, y);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::FileNotFound, "cannot open for writing: " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) raise(Errc::Internal, "write failed: " + path);
}

}  // namespace vjdet
