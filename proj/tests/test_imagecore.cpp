#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vjdet/image.hpp"

using namespace vjdet;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "vjdet_imagecore_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_bytes(const std::string& name, const std::string& bytes) {
  const auto path = temp_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  return path.string();
}

}  // namespace

TEST_CASE("pgm decode: 2x2 payload round-trips intensities") {
  const std::string bytes = std::string("P5\n2 2\n255\n") + std::string{10, 20, 30, 40};
  const GrayImage img = load_image(write_bytes("ok.pgm", bytes));
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.at(0, 0) == 10);
  CHECK(img.at(1, 0) == 20);
  CHECK(img.at(0, 1) == 30);
  CHECK(img.at(1, 1) == 40);
}

TEST_CASE("pgm decode: header comments are tolerated") {
  const std::string bytes = std::string("P5\n# a comment\n2 1 # trailing\n255\n") + std::string{1, 2};
  const GrayImage img = load_image(write_bytes("comment.pgm", bytes));
  CHECK(img.width() == 2);
  CHECK(img.at(1, 0) == 2);
}

TEST_CASE("pgm decode: short payload is a corrupt header") {
  const std::string bytes = std::string("P5\n2 2\n255\n") + std::string{1, 2, 3};
  CHECK_THROWS_WITH_AS(load_image(write_bytes("short.pgm", bytes)), doctest::Contains("payload"), Error);
  try {
    load_image(write_bytes("short.pgm", bytes));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorruptHeader);
  }
}

TEST_CASE("pgm decode: color P6 is rejected, not converted") {
  const std::string bytes = std::string("P6\n1 1\n255\n") + std::string{1, 2, 3};
  try {
    load_image(write_bytes("color.ppm", bytes));
    FAIL("expected UnsupportedFormat");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedFormat);
  }
}

TEST_CASE("load_image: missing file") {
  try {
    load_image((temp_dir() / "nope.pgm").string());
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::FileNotFound);
  }
}

TEST_CASE("integral: 3x3 all-ones totals nine") {
  const GrayImage img(3, 3, std::vector<std::uint8_t>(9, 1));
  const IntegralImage ii(img);
  CHECK(ii.sum_at(3, 3) == 9);
  CHECK(ii.rect_sum(Rect{0, 0, 3, 3}) == 9);
}

TEST_CASE("integral: row and column zero stay zero") {
  std::mt19937 rng(7);
  const GrayImage img = oracles::random_image(rng, 9, 5);
  const IntegralImage ii(img);
  for (int k = 0; k <= 9; ++k) CHECK(ii.sum_at(k, 0) == 0);
  for (int k = 0; k <= 5; ++k) {
    CHECK(ii.sum_at(0, k) == 0);
    CHECK(ii.sq_sum_at(0, k) == 0);
  }
}

TEST_CASE("integral: prefix sums match the naive double loop") {
  std::mt19937 rng(11);
  const GrayImage img = oracles::random_image(rng, 64, 64);
  const IntegralImage ii(img);
  for (int trial = 0; trial < 100; ++trial) {
    const int x = static_cast<int>(rng() % 65);
    const int y = static_cast<int>(rng() % 65);
    std::uint64_t expect = 0;
    for (int j = 0; j < y; ++j)
      for (int i = 0; i < x; ++i) expect += img.at(i, j);
    CHECK(ii.sum_at(x, y) == expect);
  }
}

TEST_CASE("integral: monotone along rows and columns") {
  std::mt19937 rng(23);
  const GrayImage img = oracles::random_image(rng, 31, 17);
  const IntegralImage ii(img);
  for (int y = 0; y <= 17; ++y)
    for (int x = 1; x <= 31; ++x) CHECK(ii.sum_at(x, y) >= ii.sum_at(x - 1, y));
  for (int x = 0; x <= 31; ++x)
    for (int y = 1; y <= 17; ++y) CHECK(ii.sum_at(x, y) >= ii.sum_at(x, y - 1));
}

TEST_CASE("rect_sum: 1x1 rects read back single pixels") {
  std::mt19937 rng(31);
  const GrayImage img = oracles::random_image(rng, 16, 16);
  const IntegralImage ii(img);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(ii.rect_sum(Rect{x, y, 1, 1}) == img.at(x, y));
}

TEST_CASE("rect_sum: random rects equal naive summation") {
  std::mt19937 rng(37);
  const GrayImage img = oracles::random_image(rng, 64, 64);
  const IntegralImage ii(img);
  for (int trial = 0; trial < 500; ++trial) {
    const Rect r = oracles::random_rect_within(rng, 64, 64);
    CHECK(ii.rect_sum(r) == oracles::naive_rect_sum(img, r));
  }
}

TEST_CASE("rect_sum: exhaustive on small images") {
  std::mt19937 rng(41);
  for (int size : {1, 2, 5, 8}) {
    const GrayImage img = oracles::random_image(rng, size, size);
    const IntegralImage ii(img);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        for (int h = 1; y + h <= size; ++h)
          for (int w = 1; x + w <= size; ++w) {
            const Rect r{x, y, w, h};
            CHECK(ii.rect_sum(r) == oracles::naive_rect_sum(img, r));
          }
  }
}

TEST_CASE("rect_sum: tiling decomposition") {
  std::mt19937 rng(43);
  const GrayImage img = oracles::random_image(rng, 40, 40);
  const IntegralImage ii(img);
  for (int trial = 0; trial < 50; ++trial) {
    Rect r = oracles::random_rect_within(rng, 40, 40);
    if (r.w < 2 || r.h < 2) continue;
    const int split_x = r.x + 1 + static_cast<int>(rng() % static_cast<unsigned>(r.w - 1));
    const int split_y = r.y + 1 + static_cast<int>(rng() % static_cast<unsigned>(r.h - 1));
    const std::uint64_t whole = ii.rect_sum(r);
    const std::uint64_t tiles = ii.rect_sum(Rect{r.x, r.y, split_x - r.x, split_y - r.y}) +
                                ii.rect_sum(Rect{split_x, r.y, r.right() - split_x, split_y - r.y}) +
                                ii.rect_sum(Rect{r.x, split_y, split_x - r.x, r.bottom() - split_y}) +
                                ii.rect_sum(Rect{split_x, split_y, r.right() - split_x, r.bottom() - split_y});
    CHECK(whole == tiles);
  }
}

TEST_CASE("rect_sum: out-of-bounds rect throws") {
  const GrayImage img(4, 4);
  const IntegralImage ii(img);
  try {
    ii.rect_sum(Rect{2, 2, 3, 1});
    FAIL("expected OutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfBounds);
  }
}

TEST_CASE("window_stats: constant window clamps stddev to 1") {
  const GrayImage img(5, 5, std::vector<std::uint8_t>(25, 7));
  const IntegralImage ii(img);
  const WindowStats s = ii.window_stats(Rect{0, 0, 5, 5});
  CHECK(s.mean == doctest::Approx(7.0));
  CHECK(s.stddev == 1.0);
}

TEST_CASE("window_stats: two-value window") {
  const GrayImage img(2, 2, std::vector<std::uint8_t>{0, 0, 255, 255});
  const IntegralImage ii(img);
  const WindowStats s = ii.window_stats(Rect{0, 0, 2, 2});
  CHECK(s.mean == doctest::Approx(127.5));
  CHECK(s.stddev == doctest::Approx(127.5));
}

TEST_CASE("window_stats: random windows match the naive computation") {
  std::mt19937 rng(53);
  const GrayImage img = oracles::random_image(rng, 24, 24);
  const IntegralImage ii(img);
  for (int trial = 0; trial < 200; ++trial) {
    const Rect r = oracles::random_rect_within(rng, 24, 24);
    const auto [mean, stddev] = oracles::naive_mean_stddev(img, r);
    const WindowStats s = ii.window_stats(r);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(s.stddev == doctest::Approx(stddev).epsilon(1e-9));
  }
}

TEST_CASE("window_stats: exact invariance under constant offset") {
  std::mt19937 rng(59);
  std::vector<std::uint8_t> px(400);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() % 200);
  const GrayImage img(20, 20, px);
  GrayImage shifted = img;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) shifted.at(x, y) = static_cast<std::uint8_t>(img.at(x, y) + 30);
  const IntegralImage a(img), b(shifted);
  for (int trial = 0; trial < 100; ++trial) {
    const Rect r = oracles::random_rect_within(rng, 20, 20);
    CHECK(a.window_stats(r).stddev == b.window_stats(r).stddev);
  }
}

TEST_CASE("pgm write/read round trip") {
  std::mt19937 rng(61);
  const GrayImage img = oracles::random_image(rng, 13, 9);
  const auto path = (temp_dir() / "roundtrip.pgm").string();
  save_pgm(img, path);
  const GrayImage back = load_image(path);
  CHECK(back.width() == img.width());
  CHECK(back.height() == img.height());
  CHECK(back.pixels() == img.pixels());
}

namespace {

// Test-side PNG writer (libpng directly) so the loader is exercised against
// files produced by an independent encoder.
void write_png(const std::string& path, int w, int h, int color_type, const std::vector<std::uint8_t>& data,
               int channels) {
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("png load: 8-bit grayscale round trip") {
  std::mt19937 rng(67);
  std::vector<std::uint8_t> data(6 * 4);
  for (auto& p : data) p = static_cast<std::uint8_t>(rng() % 256);
  const auto path = (temp_dir() / "gray.png").string();
  write_png(path, 6, 4, PNG_COLOR_TYPE_GRAY, data, 1);
  const GrayImage img = load_image(path);
  CHECK(img.width() == 6);
  CHECK(img.height() == 4);
  CHECK(img.pixels() == data);
}

TEST_CASE("png load: RGB is rejected") {
  std::vector<std::uint8_t> data(3 * 2 * 3, 100);
  const auto path = (temp_dir() / "rgb.png").string();
  write_png(path, 3, 2, PNG_COLOR_TYPE_RGB, data, 3);
  try {
    load_image(path);
    FAIL("expected UnsupportedFormat");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedFormat);
  }
}
