#include "fbface/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

namespace fbface {

RasterImage::RasterImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

RasterImage::RasterImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("pixel count does not match raster dimensions");
  }
}

double RasterImage::sample_bilinear(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = std::min(static_cast<int>(x), width_ - 1);
  const int y0 = std::min(static_cast<int>(y), height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
  const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
  return top + fy * (bottom - top);
}

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

PgmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  const auto fail = [&](const std::string& what) {
    return ImageIoError(path.string() + ": " + what);
  };
  if (next_token(in) != "P5") throw fail("not a binary PGM (P5)");
  PgmHeader h;
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw fail("malformed PGM header");
  }
  if (h.width < 1 || h.height < 1) throw fail("invalid PGM dimensions");
  if (h.maxval < 1 || h.maxval > 255) throw fail("only 8-bit PGM is supported");
  return h;
}

}  // namespace

void check_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(path.string() + ": cannot open image");
  read_header(in, path);
}

RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError(path.string() + ": cannot open image");
  const PgmHeader h = read_header(in, path);
  std::vector<unsigned char> raw(static_cast<std::size_t>(h.width) * h.height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw ImageIoError(path.string() + ": truncated pixel data");
  }
  std::vector<double> pixels(raw.begin(), raw.end());
  return RasterImage(h.width, h.height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const RasterImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError(path.string() + ": cannot open for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> raw(image.size());
  std::transform(image.pixels().begin(), image.pixels().end(), raw.begin(), [](double v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
  });
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ImageIoError(path.string() + ": write failed");
}

}  // namespace fbface
