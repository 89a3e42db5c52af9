#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbface {

/// Pixel coordinates: origin at the top-left pixel centre, x right, y down.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Row-major grayscale raster with real-valued intensities.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, double fill = 0.0);
  RasterImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double& at(int x, int y) { return pixels_[index(x, y)]; }
  double at(int x, int y) const { return pixels_[index(x, y)]; }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  /// Bilinear interpolation at a sub-pixel location. Coordinates are clamped
  /// to the outermost pixel centres, so the raster's footprint
  /// [-0.5, width - 0.5] x [-0.5, height - 0.5] is sampled by edge replication.
  double sample_bilinear(double x, double y) const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a binary (P5) PGM with maxval <= 255. Intensities keep their 0..255 scale.
RasterImage read_pgm(const std::filesystem::path& path);

/// Reads only the header; throws ImageIoError when the file is not a usable P5 PGM.
void check_pgm(const std::filesystem::path& path);

/// Writes a P5 PGM, rounding and clamping intensities to 0..255.
void write_pgm(const std::filesystem::path& path, const RasterImage& image);

}  // namespace fbface
