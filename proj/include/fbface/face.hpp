#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbface/fbt.hpp"
#include "fbface/raster.hpp"

namespace fbface {

inline constexpr int kFrameWidth = 130;
inline constexpr int kFrameHeight = 150;

/// Eye centres in source-image pixels, named from the subject's point of view:
/// the right eye normally appears on the viewer's left.
struct EyeCoordinates {
  Point left;
  Point right;

  friend bool operator==(const EyeCoordinates&, const EyeCoordinates&) = default;
};

/// Pixels the eyes are registered to inside the 130x150 frame.
struct EyeTargets {
  Point right{43.0, 60.0};
  Point left{87.0, 60.0};
};

class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum inter-ocular distance accepted by registration, in source pixels.
inline constexpr double kMinEyeDistance = 8.0;

struct NormalizedFace {
  RasterImage image;                  // 130 x 150, zero outside the mask
  std::vector<std::uint8_t> mask;     // 1 where the face is retained
  std::vector<std::uint8_t> occluded; // 1 where an occlusion box was painted
  EyeTargets eye_targets;
};

/// Elliptical face mask for the normalized frame: centre (65, 80), semi-axes (58, 70).
std::vector<std::uint8_t> face_mask();

/// Similarity warp (translation, rotation, uniform scale) taking `eyes` onto
/// `targets`, sampled bilinearly into a 130x150 frame. No intensity changes.
RasterImage warp_to_frame(const RasterImage& image, const EyeCoordinates& eyes,
                          const EyeTargets& targets = {});

/// Maps frame coordinates to source coordinates for the warp above.
Point frame_to_source(Point frame, const EyeCoordinates& eyes, const EyeTargets& targets = {});

/// Histogram equalization restricted to mask pixels; outputs CDF levels in (0, 1].
/// Pixels outside the mask are set to 0.
RasterImage equalize_histogram(const RasterImage& image, std::span<const std::uint8_t> mask,
                               int bins = 256);

/**
 * Full registration and photometric normalization: warp, mask, equalize the
 * unmasked region, then shift and scale it to zero mean and unit standard
 * deviation. Throws RegistrationError for eyes outside the image, eyes closer
 * than kMinEyeDistance, or a flat face region.
 */
NormalizedFace register_face(const RasterImage& image, const EyeCoordinates& eyes);

/// The photometric half of register_face, applied to an already-warped frame.
NormalizedFace normalize_frame(const RasterImage& frame);

enum class RegionName { right_eye, between_eyes, left_eye, whole };
std::string to_string(RegionName name);

struct RegionSpec {
  RegionName name = RegionName::whole;
  Point center;
  double radius = 0.0;
};

RegionSpec whole_face_region();
/// right_eye, between_eyes, left_eye, each a disk of radius 28 on the eye line.
std::vector<RegionSpec> local_regions(const EyeTargets& targets = {}, double radius = 28.0);

enum class AnalysisMode { global, local };
std::string to_string(AnalysisMode mode);
AnalysisMode parse_analysis_mode(const std::string& text);

/// Holds one transform engine per region so repeated extraction reuses the basis tables.
class DescriptorExtractor {
 public:
  /// `base` supplies everything but the radius, which each region overrides.
  DescriptorExtractor(const FbtConfig& base, AnalysisMode mode);
  DescriptorExtractor(const FbtConfig& base, std::vector<RegionSpec> regions);

  std::vector<double> extract(const NormalizedFace& face) const;
  std::size_t length() const;
  const std::vector<RegionSpec>& regions() const { return regions_; }

 private:
  std::vector<RegionSpec> regions_;
  std::vector<FbtEngine> engines_;
};

std::vector<double> extract_descriptor(const NormalizedFace& face, AnalysisMode mode,
                                       const FbtConfig& config);

enum class OcclusionVariant { eye_mouth, mouth_nose };
std::string to_string(OcclusionVariant v);
OcclusionVariant parse_occlusion(const std::string& text);

/// Half-open pixel rectangle [x0, x1) x [y0, y1) in frame coordinates.
struct PixelBox {
  int x0, x1, y0, y1;
};

std::vector<PixelBox> occlusion_boxes(OcclusionVariant v);

/// Share of mask pixels that are occluded.
double occluded_fraction(const NormalizedFace& face);

/// Paints the variant's boxes with 0 (the normalized mean gray) and records
/// them in `occluded`. Throws std::logic_error if the covered share of the
/// face does not exceed one half.
NormalizedFace occlude(const NormalizedFace& face, OcclusionVariant v);

/// Radial displacement statistics for synthetic eye-localization error.
struct EyeErrorModel {
  double mean_px = 0.0;
  double sd_px = 0.0;
};

/// Displaces each eye independently: direction uniform on the circle, length
/// Gamma-distributed with the model's mean and standard deviation.
/// Deterministic for a given seed.
EyeCoordinates perturb_eyes(const EyeCoordinates& eyes, const EyeErrorModel& model,
                            std::uint64_t seed);

}  // namespace fbface
