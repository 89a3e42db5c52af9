#include "fbface/face.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace fbface {
namespace {

using Complex = std::complex<double>;

Complex as_complex(Point p) { return {p.x, p.y}; }

bool inside(const RasterImage& image, Point p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= image.width() - 1 && p.y <= image.height() - 1;
}

void check_eyes(const RasterImage& image, const EyeCoordinates& eyes) {
  if (!inside(image, eyes.left) || !inside(image, eyes.right)) {
    throw RegistrationError("eye coordinates fall outside the image");
  }
  if (std::hypot(eyes.left.x - eyes.right.x, eyes.left.y - eyes.right.y) < kMinEyeDistance) {
    throw RegistrationError("eyes are too close together to register");
  }
}

std::size_t frame_index(int x, int y) { return static_cast<std::size_t>(y) * kFrameWidth + x; }

}  // namespace

std::vector<std::uint8_t> face_mask() {
  constexpr double cx = 65.0, cy = 80.0, ax = 58.0, ay = 70.0;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(kFrameWidth) * kFrameHeight, 0);
  for (int y = 0; y < kFrameHeight; ++y) {
    for (int x = 0; x < kFrameWidth; ++x) {
      const double u = (x - cx) / ax;
      const double v = (y - cy) / ay;
      mask[frame_index(x, y)] = u * u + v * v <= 1.0 ? 1 : 0;
    }
  }
  return mask;
}

Point frame_to_source(Point frame, const EyeCoordinates& eyes, const EyeTargets& targets) {
  const Complex scale_rot = (as_complex(eyes.left) - as_complex(eyes.right)) /
                            (as_complex(targets.left) - as_complex(targets.right));
  const Complex z = as_complex(eyes.right) + scale_rot * (as_complex(frame) - as_complex(targets.right));
  return {z.real(), z.imag()};
}

RasterImage warp_to_frame(const RasterImage& image, const EyeCoordinates& eyes,
                          const EyeTargets& targets) {
  RasterImage frame(kFrameWidth, kFrameHeight);
  for (int y = 0; y < kFrameHeight; ++y) {
    for (int x = 0; x < kFrameWidth; ++x) {
      const Point src = frame_to_source({static_cast<double>(x), static_cast<double>(y)}, eyes, targets);
      frame.at(x, y) = image.sample_bilinear(src.x, src.y);
    }
  }
  return frame;
}

RasterImage equalize_histogram(const RasterImage& image, std::span<const std::uint8_t> mask,
                               int bins) {
  if (mask.size() != image.size()) throw std::invalid_argument("mask size mismatch");
  if (bins < 2) throw std::invalid_argument("histogram needs at least two bins");
  const auto px = image.pixels();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t total = 0;
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (!mask[k]) continue;
    lo = std::min(lo, px[k]);
    hi = std::max(hi, px[k]);
    ++total;
  }
  if (total == 0) throw RegistrationError("empty face mask");
  if (!(hi > lo)) throw RegistrationError("face region has no intensity variation");

  const auto bin_of = [&](double v) {
    const auto b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
  };
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (mask[k]) ++counts[bin_of(px[k])];
  }
  std::vector<double> cdf(bins);
  std::size_t running = 0;
  for (int b = 0; b < bins; ++b) {
    running += counts[b];
    cdf[b] = static_cast<double>(running) / static_cast<double>(total);
  }

  RasterImage out(image.width(), image.height());
  auto dst = out.pixels();
  for (std::size_t k = 0; k < px.size(); ++k) dst[k] = mask[k] ? cdf[bin_of(px[k])] : 0.0;
  return out;
}

NormalizedFace normalize_frame(const RasterImage& frame) {
  if (frame.width() != kFrameWidth || frame.height() != kFrameHeight) {
    throw std::invalid_argument("frame must be 130x150");
  }
  NormalizedFace face;
  face.mask = face_mask();
  face.occluded.assign(face.mask.size(), 0);
  face.image = equalize_histogram(frame, face.mask);

  auto px = face.image.pixels();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (face.mask[k]) {
      sum += px[k];
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (face.mask[k]) ss += (px[k] - mean) * (px[k] - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(count));
  if (!(sd > 1e-12)) throw RegistrationError("face region has no intensity variation");
  for (std::size_t k = 0; k < px.size(); ++k) px[k] = face.mask[k] ? (px[k] - mean) / sd : 0.0;
  return face;
}

NormalizedFace register_face(const RasterImage& image, const EyeCoordinates& eyes) {
  check_eyes(image, eyes);
  return normalize_frame(warp_to_frame(image, eyes));
}

std::string to_string(RegionName name) {
  switch (name) {
    case RegionName::right_eye: return "right_eye";
    case RegionName::between_eyes: return "between_eyes";
    case RegionName::left_eye: return "left_eye";
    case RegionName::whole: return "whole";
  }
  return "unknown";
}

RegionSpec whole_face_region() {
  return {RegionName::whole, {(kFrameWidth - 1) / 2.0, (kFrameHeight - 1) / 2.0},
          std::min(kFrameWidth, kFrameHeight) / 2.0};
}

std::vector<RegionSpec> local_regions(const EyeTargets& targets, double radius) {
  const Point mid{(targets.right.x + targets.left.x) / 2.0, (targets.right.y + targets.left.y) / 2.0};
  return {{RegionName::right_eye, targets.right, radius},
          {RegionName::between_eyes, mid, radius},
          {RegionName::left_eye, targets.left, radius}};
}

std::string to_string(AnalysisMode mode) { return mode == AnalysisMode::global ? "global" : "local"; }

AnalysisMode parse_analysis_mode(const std::string& text) {
  if (text == "global") return AnalysisMode::global;
  if (text == "local") return AnalysisMode::local;
  throw std::invalid_argument("unknown analysis mode '" + text + "'");
}

DescriptorExtractor::DescriptorExtractor(const FbtConfig& base, AnalysisMode mode)
    : DescriptorExtractor(base, mode == AnalysisMode::global ? std::vector{whole_face_region()}
                                                             : local_regions()) {}

DescriptorExtractor::DescriptorExtractor(const FbtConfig& base, std::vector<RegionSpec> regions)
    : regions_(std::move(regions)) {
  if (regions_.empty()) throw std::invalid_argument("at least one region is required");
  engines_.reserve(regions_.size());
  for (const auto& region : regions_) {
    FbtConfig config = base;
    config.radius = region.radius;
    engines_.emplace_back(config);
  }
}

std::size_t DescriptorExtractor::length() const {
  std::size_t total = 0;
  for (const auto& e : engines_) total += e.config().descriptor_length();
  return total;
}

std::vector<double> DescriptorExtractor::extract(const NormalizedFace& face) const {
  std::vector<double> out;
  out.reserve(length());
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    const auto part = descriptor_vector(engines_[r].forward(face.image, regions_[r].center));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<double> extract_descriptor(const NormalizedFace& face, AnalysisMode mode,
                                       const FbtConfig& config) {
  return DescriptorExtractor(config, mode).extract(face);
}

std::string to_string(OcclusionVariant v) {
  return v == OcclusionVariant::eye_mouth ? "eye_mouth" : "mouth_nose";
}

OcclusionVariant parse_occlusion(const std::string& text) {
  if (text == "eye_mouth") return OcclusionVariant::eye_mouth;
  if (text == "mouth_nose") return OcclusionVariant::mouth_nose;
  throw std::invalid_argument("unknown occlusion variant '" + text + "'");
}

std::vector<PixelBox> occlusion_boxes(OcclusionVariant v) {
  constexpr PixelBox right_eye{0, 65, 30, 90};
  constexpr PixelBox mouth{20, 110, 100, 150};
  constexpr PixelBox nose{30, 100, 55, 100};
  if (v == OcclusionVariant::eye_mouth) return {right_eye, mouth};
  return {mouth, nose};
}

double occluded_fraction(const NormalizedFace& face) {
  std::size_t covered = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < face.mask.size(); ++k) {
    if (!face.mask[k]) continue;
    ++total;
    if (face.occluded[k]) ++covered;
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

NormalizedFace occlude(const NormalizedFace& face, OcclusionVariant v) {
  NormalizedFace out = face;
  if (out.occluded.size() != out.mask.size()) out.occluded.assign(out.mask.size(), 0);
  for (const PixelBox& box : occlusion_boxes(v)) {
    for (int y = std::max(box.y0, 0); y < std::min(box.y1, kFrameHeight); ++y) {
      for (int x = std::max(box.x0, 0); x < std::min(box.x1, kFrameWidth); ++x) {
        out.image.at(x, y) = 0.0;
        out.occluded[frame_index(x, y)] = 1;
      }
    }
  }
  if (!(occluded_fraction(out) > 0.5)) {
    throw std::logic_error("occlusion variant " + to_string(v) + " covers no more than half the face");
  }
  return out;
}

EyeCoordinates perturb_eyes(const EyeCoordinates& eyes, const EyeErrorModel& model,
                            std::uint64_t seed) {
  if (!(model.mean_px >= 0.0) || !(model.sd_px >= 0.0) || !std::isfinite(model.mean_px) ||
      !std::isfinite(model.sd_px)) {
    throw std::invalid_argument("eye error model needs finite non-negative mean and sd");
  }
  if (model.mean_px == 0.0) return eyes;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> direction(0.0, 2.0 * std::numbers::pi);
  const auto draw_length = [&]() {
    if (model.sd_px == 0.0) return model.mean_px;
    const double cv = model.sd_px / model.mean_px;
    std::gamma_distribution<double> length(1.0 / (cv * cv), model.sd_px * cv);
    return length(rng);
  };
  const auto shift = [&](Point p) {
    const double len = draw_length();
    const double t = direction(rng);
    return Point{p.x + len * std::cos(t), p.y + len * std::sin(t)};
  };
  EyeCoordinates out;
  out.left = shift(eyes.left);
  out.right = shift(eyes.right);
  return out;
}

}  // namespace fbface
