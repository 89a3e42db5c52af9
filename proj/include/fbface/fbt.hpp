#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fbface/bessel.hpp"
#include "fbface/raster.hpp"

namespace fbface {

/// Which numbers a descriptor vector carries: raw A and B coefficients, or
/// the per-(n, i) magnitudes sqrt(A^2 + B^2).
enum class DescriptorVariant { raw, magnitude };

std::string to_string(DescriptorVariant v);
DescriptorVariant parse_descriptor_variant(const std::string& text);

struct FbtConfig {
  int max_order = 30;
  int max_root = 6;
  double angular_step_deg = 3.0;
  /// Quadrature rings across [0, R]; 0 selects ceil(radius).
  int radial_samples = 0;
  /// Disk radius R in pixels.
  double radius = 65.0;
  DescriptorVariant variant = DescriptorVariant::raw;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  int angular_samples() const;
  int rings() const;

  /// Length of the flattened vector for this config's variant
  /// (2 (N+1) M raw, (N+1) M magnitude).
  std::size_t descriptor_length() const;

  /// Stable text identifying every setting that changes descriptor values
  /// except the radius, which callers pick per region.
  std::string fingerprint() const;
};

/// One node of a polar grid.
struct PolarSample {
  double r = 0.0;
  double theta = 0.0;
  double value = 0.0;
};

/**
 * Values on a regular polar grid over a disk of radius R.
 *
 * Rows 0..rings-1 are quadrature rings at the midpoints r_j = (j + 1/2) R / rings;
 * the extra final row is the rim r = R, where the field is held at zero.
 * Columns are the angles theta_k = k * 2 pi / angles.
 */
class PolarGrid {
 public:
  PolarGrid(double radius, int rings, int angles);

  double radius() const { return radius_; }
  int rings() const { return rings_; }
  int angles() const { return angles_; }
  int rows() const { return rings_ + 1; }

  double ring_radius(int j) const;
  double angle(int k) const;
  double ring_width() const { return radius_ / rings_; }

  double& value(int j, int k) { return values_[index(j, k)]; }
  double value(int j, int k) const { return values_[index(j, k)]; }
  PolarSample sample(int j, int k) const { return {ring_radius(j), angle(k), value(j, k)}; }

  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(int j, int k) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(angles_) +
           static_cast<std::size_t>(k);
  }

  double radius_;
  int rings_;
  int angles_;
  std::vector<double> values_;
};

/// Fourier-Bessel coefficients, rows indexed by order n, columns by root i - 1.
struct FbtDescriptor {
  Eigen::MatrixXd a_coeffs;
  Eigen::MatrixXd b_coeffs;
  FbtConfig config;
};

/**
 * Discrete Fourier-Bessel transform over a disk, with basis tables
 * precomputed for one configuration. Instances are immutable and may be
 * shared between threads.
 */
class FbtEngine {
 public:
  explicit FbtEngine(FbtConfig config);

  const FbtConfig& config() const { return config_; }
  const BesselRootTable& roots() const { return *roots_; }

  /// Bilinear resampling of `image` onto this engine's polar grid about `center`.
  /// Throws std::invalid_argument if the disk leaves the raster footprint.
  PolarGrid to_polar(const RasterImage& image, Point center) const;

  /// Midpoint-rule quadrature of the coefficient integrals.
  FbtDescriptor forward(const PolarGrid& grid) const;
  FbtDescriptor forward(const RasterImage& image, Point center) const;

  /// Truncated series synthesis on this engine's polar grid.
  PolarGrid inverse(const FbtDescriptor& descriptor) const;

  /// Truncated series evaluated at an arbitrary (r, theta) with r in [0, R].
  double evaluate(const FbtDescriptor& descriptor, double r, double theta) const;

  PolarGrid empty_grid() const;

 private:
  double radial(int n, int i, int j) const {
    return radial_[(static_cast<std::size_t>(n) * config_.max_root + i) * rows_ + j];
  }
  void check_compatible(const FbtDescriptor& descriptor) const;

  FbtConfig config_;
  std::shared_ptr<const BesselRootTable> roots_;
  int rings_;
  int rows_;
  int angles_;
  std::vector<double> radial_;  // J_n(alpha_{n,i} r_j / R), (n, i, j)
  std::vector<double> norm_;    // (n, i)
  std::vector<double> cos_;     // cos(n theta_k), (n, k)
  std::vector<double> sin_;
};

/// Convenience wrappers that build a throwaway engine for `config`.
PolarGrid to_polar(const RasterImage& image, Point center, const FbtConfig& config);
FbtDescriptor fbt_forward(const RasterImage& image, Point center, const FbtConfig& config);
PolarGrid fbt_inverse(const FbtDescriptor& descriptor);

/// A coefficients n-major then i, followed by the B coefficients in the same order.
std::vector<double> flatten(const FbtDescriptor& descriptor);

/// sqrt(A^2 + B^2) per (n, i), n-major.
std::vector<double> magnitudes(const FbtDescriptor& descriptor);

/// flatten() or magnitudes() according to descriptor.config.variant.
std::vector<double> descriptor_vector(const FbtDescriptor& descriptor);

/// Binary form: the flattened values as little-endian IEEE-754 doubles, nothing else.
void write_descriptor_binary(const std::filesystem::path& path, const FbtDescriptor& descriptor);
std::vector<double> read_descriptor_binary(const std::filesystem::path& path);

/// CSV form: one "# fbt ..." config header line (radial_samples=0 meaning
/// one ring per pixel of radius), then one value per line.
void write_descriptor_csv(const std::filesystem::path& path, const FbtDescriptor& descriptor);
FbtDescriptor read_descriptor_csv(const std::filesystem::path& path);

}  // namespace fbface
