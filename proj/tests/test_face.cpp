#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fbface/face.hpp"

using namespace fbface;

namespace {

struct Blob {
  double x, y, sigma, amp;
};

// A smooth face-like field in "face" coordinates with eyes at (80, 100) and (120, 100).
const std::vector<Blob>& blobs() {
  static const std::vector<Blob> b{
      {100, 120, 45, 90},  {80, 100, 6, -60},  {120, 100, 6, -60}, {100, 130, 8, 30},
      {100, 160, 10, -45}, {75, 88, 7, -25},   {125, 88, 7, -25},  {88, 140, 12, 20},
      {115, 70, 15, 25},   {100, 110, 20, -15},
  };
  return b;
}

constexpr Point kRightEye{80.0, 100.0};
constexpr Point kLeftEye{120.0, 100.0};

double field(double x, double y) {
  double v = 60.0;
  for (const Blob& b : blobs()) {
    const double dx = x - b.x;
    const double dy = y - b.y;
    v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
  }
  return v;
}

struct Similarity {
  double scale = 1.0, angle = 0.0, tx = 0.0, ty = 0.0;
  Point apply(Point p) const {
    const double c = scale * std::cos(angle);
    const double s = scale * std::sin(angle);
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
  }
  Point invert(Point q) const {
    const double x = q.x - tx;
    const double y = q.y - ty;
    const double c = std::cos(angle) / scale;
    const double s = std::sin(angle) / scale;
    return {c * x + s * y, -s * x + c * y};
  }
};

RasterImage render(const Similarity& t, int w = 200, int h = 240) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point p = t.invert({double(x), double(y)});
      img.at(x, y) = field(p.x, p.y);
    }
  }
  return img;
}

EyeCoordinates eyes_under(const Similarity& t) { return {t.apply(kLeftEye), t.apply(kRightEye)}; }

double mean_abs_diff(const RasterImage& a, const RasterImage& b, const std::vector<std::uint8_t>& mask) {
  double s = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!mask[k]) continue;
    s += std::abs(a.pixels()[k] - b.pixels()[k]);
    ++n;
  }
  return s / n;
}

void expect_normalized(const NormalizedFace& f) {
  ASSERT_EQ(f.image.width(), 130);
  ASSERT_EQ(f.image.height(), 150);
  double sum = 0.0;
  double sq = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < f.image.size(); ++k) {
    const double v = f.image.pixels()[k];
    if (!f.mask[k]) {
      EXPECT_EQ(v, 0.0);
      continue;
    }
    sum += v;
    sq += v * v;
    ++n;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 1.0, 1e-6);
}

}  // namespace

TEST(FaceMask, EllipseGeometry) {
  const auto mask = face_mask();
  ASSERT_EQ(mask.size(), 130u * 150u);
  EXPECT_EQ(mask[80 * 130 + 65], 1);
  EXPECT_EQ(mask[0], 0);
  EXPECT_EQ(mask[80 * 130 + 122], 1);   // 57 px right of centre
  EXPECT_EQ(mask[80 * 130 + 124], 0);   // 59 px
  EXPECT_EQ(mask[149 * 130 + 65], 1);  // 69 px below
  const int count = std::accumulate(mask.begin(), mask.end(), 0);
  EXPECT_NEAR(count, std::numbers::pi * 58 * 70, 60);
}

TEST(Register, IdentityWarpReproducesSourceWindow) {
  // Source eyes already at the targets: frame pixel (x, y) is source pixel (x, y).
  const Similarity t{1.1, 0.0, 43.0 - 1.1 * 80.0, 60.0 - 1.1 * 100.0};
  const RasterImage src = render(t, 130, 150);
  const RasterImage frame = warp_to_frame(src, eyes_under(t));
  for (std::size_t k = 0; k < src.size(); ++k) EXPECT_NEAR(frame.pixels()[k], src.pixels()[k], 1e-6);
}

TEST(Register, OutputContract) {
  const Similarity t{1.3, 0.05, 20.0, 5.0};
  const NormalizedFace f = register_face(render(t), eyes_under(t));
  expect_normalized(f);
  EXPECT_EQ(f.mask, face_mask());
}

TEST(Register, EyesLandOnTargets) {
  const Similarity t{0.9, -0.2, 30.0, 40.0};
  const EyeCoordinates eyes = eyes_under(t);
  const EyeTargets targets;
  const Point r = frame_to_source(targets.right, eyes);
  const Point l = frame_to_source(targets.left, eyes);
  EXPECT_LE(std::hypot(r.x - eyes.right.x, r.y - eyes.right.y), 0.5);
  EXPECT_LE(std::hypot(l.x - eyes.left.x, l.y - eyes.left.y), 0.5);
  EXPECT_NEAR(r.x, eyes.right.x, 1e-9);
  EXPECT_NEAR(l.y, eyes.left.y, 1e-9);
}

TEST(Register, RotationAboutEyeMidpoint) {
  const Similarity base{1.2, 0.0, 0.0, 0.0};
  const Point mid = base.apply({100.0, 100.0});
  const double phi = 10.0 * std::numbers::pi / 180.0;
  // Rotation about the eye midpoint, composed after the base placement.
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const Similarity rotated{1.2, phi, mid.x - (c * mid.x - s * mid.y), mid.y - (s * mid.x + c * mid.y)};
  const auto mask = face_mask();
  const RasterImage a = warp_to_frame(render(base), eyes_under(base));
  const RasterImage b = warp_to_frame(render(rotated), eyes_under(rotated));
  EXPECT_LE(mean_abs_diff(a, b, mask), 2.0);
}

TEST(Register, ConsistentUnderSimilarities) {
  const Similarity base{1.25, 0.0, 0.0, -10.0};
  const RasterImage src = render(base);
  const auto mask = face_mask();
  const RasterImage a = warp_to_frame(src, eyes_under(base));
  for (const Similarity& extra : {Similarity{0.8, 0.3, 40.0, -15.0}, Similarity{1.1, -0.15, -12.0, 8.0}}) {
    // Warp the raster itself (not the field) by `extra`, carrying the eyes along.
    RasterImage moved(220, 260);
    for (int y = 0; y < moved.height(); ++y)
      for (int x = 0; x < moved.width(); ++x) {
        const Point p = extra.invert({double(x), double(y)});
        moved.at(x, y) = src.sample_bilinear(p.x, p.y);
      }
    const EyeCoordinates e = eyes_under(base);
    const EyeCoordinates moved_eyes{extra.apply(e.left), extra.apply(e.right)};
    const RasterImage b = warp_to_frame(moved, moved_eyes);
    EXPECT_LE(mean_abs_diff(a, b, mask), 2.0);
  }
}

TEST(Register, DegenerateEyes) {
  const RasterImage img(200, 240, 10.0);
  EXPECT_THROW(register_face(img, {{100, 100}, {95, 100}}), RegistrationError);
  EXPECT_THROW(register_face(img, {{300, 100}, {80, 100}}), RegistrationError);
  // Flat region cannot be scaled to unit variance.
  EXPECT_THROW(register_face(img, {{120, 100}, {80, 100}}), RegistrationError);
}

TEST(Equalize, MonotoneMap) {
  RasterImage img(40, 30);
  std::vector<std::uint8_t> mask(img.size(), 1);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) img.at(x, y) = std::sin(0.3 * x) * 50 + y * 2.0 + (x * 7 % 11);
  mask[5] = 0;
  const RasterImage eq = equalize_histogram(img, mask);
  EXPECT_EQ(eq.pixels()[5], 0.0);
  for (std::size_t a = 0; a < img.size(); ++a) {
    if (!mask[a]) continue;
    EXPECT_GT(eq.pixels()[a], 0.0);
    EXPECT_LE(eq.pixels()[a], 1.0);
    for (std::size_t b = 0; b < img.size(); b += 7) {
      if (mask[b] && img.pixels()[a] < img.pixels()[b]) {
        EXPECT_LE(eq.pixels()[a], eq.pixels()[b]);
      }
    }
  }
}

TEST(Regions, Geometry) {
  const RegionSpec whole = whole_face_region();
  EXPECT_EQ(whole.center, (Point{64.5, 74.5}));
  EXPECT_EQ(whole.radius, 65.0);
  const auto local = local_regions();
  ASSERT_EQ(local.size(), 3u);
  EXPECT_EQ(local[0].name, RegionName::right_eye);
  EXPECT_EQ(local[0].center, (Point{43.0, 60.0}));
  EXPECT_EQ(local[1].name, RegionName::between_eyes);
  EXPECT_EQ(local[1].center, (Point{65.0, 60.0}));
  EXPECT_EQ(local[2].name, RegionName::left_eye);
  EXPECT_EQ(local[2].center, (Point{87.0, 60.0}));
  for (const auto& r : local) EXPECT_EQ(r.radius, 28.0);
}

TEST(Extract, LengthsAndZeroFace) {
  const Similarity t{1.2, 0.0, 0.0, 0.0};
  const NormalizedFace f = register_face(render(t), eyes_under(t));
  EXPECT_EQ(extract_descriptor(f, AnalysisMode::global, FbtConfig{}).size(), 372u);
  EXPECT_EQ(extract_descriptor(f, AnalysisMode::local, FbtConfig{}).size(), 1116u);
  NormalizedFace zero = f;
  for (double& v : zero.image.pixels()) v = 0.0;
  for (AnalysisMode m : {AnalysisMode::global, AnalysisMode::local}) {
    for (double v : extract_descriptor(zero, m, FbtConfig{})) EXPECT_EQ(v, 0.0);
  }
  FbtConfig mag;
  mag.variant = DescriptorVariant::magnitude;
  EXPECT_EQ(DescriptorExtractor(mag, AnalysisMode::local).length(), 558u);
}

TEST(Occlusion, CoversMoreThanHalf) {
  const Similarity t{1.2, 0.0, 0.0, 0.0};
  const NormalizedFace f = register_face(render(t), eyes_under(t));
  for (OcclusionVariant v : {OcclusionVariant::eye_mouth, OcclusionVariant::mouth_nose}) {
    const NormalizedFace o = occlude(f, v);
    EXPECT_GT(occluded_fraction(o), 0.5) << to_string(v);
    EXPECT_EQ(occluded_fraction(f), 0.0);
    for (std::size_t k = 0; k < o.image.size(); ++k) {
      if (o.occluded[k]) EXPECT_EQ(o.image.pixels()[k], 0.0);
      else EXPECT_EQ(o.image.pixels()[k], f.image.pixels()[k]);
    }
    const NormalizedFace twice = occlude(o, v);
    EXPECT_EQ(twice.image, o.image);
    EXPECT_EQ(twice.occluded, o.occluded);
  }
}

TEST(Occlusion, ZeroFaceUnchanged) {
  NormalizedFace f;
  f.image = RasterImage(130, 150);
  f.mask = face_mask();
  f.occluded.assign(f.mask.size(), 0);
  for (OcclusionVariant v : {OcclusionVariant::eye_mouth, OcclusionVariant::mouth_nose}) {
    EXPECT_EQ(occlude(f, v).image, f.image);
  }
}

TEST(Occlusion, UntouchedRegionsKeepTheirCoefficients) {
  const Similarity t{1.2, 0.0, 0.0, 0.0};
  const NormalizedFace f = register_face(render(t), eyes_under(t));
  // The default regions all meet a box; the extra upper-left disk meets none under eye_mouth.
  std::vector<RegionSpec> regions = local_regions();
  regions.push_back({RegionName::whole, {105.0, 40.0}, 20.0});
  const DescriptorExtractor ex(FbtConfig{}, regions);
  const auto clean = ex.extract(f);
  int untouched = 0;
  for (OcclusionVariant v : {OcclusionVariant::eye_mouth, OcclusionVariant::mouth_nose}) {
    const NormalizedFace o = occlude(f, v);
    const auto occl = ex.extract(o);
    for (std::size_t r = 0; r < ex.regions().size(); ++r) {
      const RegionSpec& reg = ex.regions()[r];
      // Does any occluded pixel fall in the disk's raster footprint (bilinear reach: +1 px)?
      bool touched = false;
      for (int y = 0; y < 150; ++y)
        for (int x = 0; x < 130; ++x)
          if (o.occluded[static_cast<std::size_t>(y) * 130 + x] &&
              std::hypot(x - reg.center.x, y - reg.center.y) <= reg.radius + 1.5)
            touched = true;
      const bool same = std::equal(clean.begin() + r * 372, clean.begin() + (r + 1) * 372,
                                   occl.begin() + r * 372);
      if (!touched) {
        EXPECT_TRUE(same) << to_string(v) << ' ' << r;
        ++untouched;
      } else {
        EXPECT_FALSE(same) << to_string(v) << ' ' << r;
      }
    }
  }
  EXPECT_GE(untouched, 1);
}

TEST(PerturbEyes, ZeroModelIsIdentity) {
  const EyeCoordinates e{{120, 100}, {80, 100}};
  EXPECT_EQ(perturb_eyes(e, {0.0, 0.0}, 9), e);
}

TEST(PerturbEyes, SeedDeterminism) {
  const EyeCoordinates e{{120, 100}, {80, 100}};
  EXPECT_EQ(perturb_eyes(e, {3.6, 5.1}, 42), perturb_eyes(e, {3.6, 5.1}, 42));
  EXPECT_NE(perturb_eyes(e, {3.6, 5.1}, 42), perturb_eyes(e, {3.6, 5.1}, 43));
}

TEST(PerturbEyes, DisplacementStatistics) {
  const EyeCoordinates e{{120, 100}, {80, 100}};
  std::vector<double> d;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const EyeCoordinates p = perturb_eyes(e, {3.6, 5.1}, seed);
    d.push_back(std::hypot(p.left.x - e.left.x, p.left.y - e.left.y));
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (d.size() - 1));
  EXPECT_NEAR(mean, 3.6, 0.36);
  EXPECT_NEAR(sd, 5.1, 0.51);
}

TEST(PerturbEyes, RejectsNegativeModel) {
  EXPECT_THROW(perturb_eyes({{120, 100}, {80, 100}}, {-1.0, 1.0}, 1), std::invalid_argument);
}
